use super::checkpoint::Checkpoint;
use super::config::{hex, PipelineConfig};
use super::cv::{kfold_cv, mean_std, FoldStats};
use crate::autoencoder::{dual_pipeline, read_features, write_features, FeatureRecord};
use crate::corpus::{
    build_vocab, dedup, encode, read_corpus, read_dataset, split, synth_corpus, write_corpus, write_dataset,
    write_vocab, EncodedLog, Label, Origin, SEQ_LEN,
};
use crate::error::{Error, Result};
use crate::gru::{ClassifierHead, GruClassifier, GruParams};
use crate::metrics::{per_label_report, MetricsReport};
use crate::rng::substream_seed;
use crate::seqgan::{oversample, RoundDiagnostics};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

/// File locations inside an output directory.
#[derive(Clone, Debug)]
pub struct OutputLayout {
    pub root: PathBuf,
}

impl OutputLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutputLayout { root: root.into() }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn vocab(&self) -> PathBuf {
        self.file("vocab.tsv")
    }
    pub fn dataset(&self) -> PathBuf {
        self.file("dataset.lbds")
    }
    pub fn oversampled(&self) -> PathBuf {
        self.file("oversampled.lbds")
    }
    pub fn oversample_summary(&self) -> PathBuf {
        self.file("oversample.txt")
    }
    pub fn gan_diagnostics(&self) -> PathBuf {
        self.file("gan_diagnostics.tsv")
    }
    pub fn features(&self) -> PathBuf {
        self.file("features.lbft")
    }
    pub fn test_features(&self) -> PathBuf {
        self.file("test.lbft")
    }
    pub fn folds(&self) -> PathBuf {
        self.file("folds.tsv")
    }
    pub fn report(&self) -> PathBuf {
        self.file("report.tsv")
    }
    pub fn run_info(&self) -> PathBuf {
        self.file("run.txt")
    }
    pub fn checkpoints(&self) -> PathBuf {
        self.file("checkpoints")
    }
    pub fn checkpoint(&self, name: &str) -> PathBuf {
        self.checkpoints().join(format!("{name}.lbal"))
    }

    fn ensure(&self) -> Result<()> {
        fs::create_dir_all(self.checkpoints())?;
        Ok(())
    }
}

fn load_dataset(path: &Path) -> Result<(usize, Vec<EncodedLog>)> {
    let (v, _, records) = read_dataset(&mut BufReader::new(fs::File::open(path)?))?;
    Ok((v, records))
}

fn save_dataset(path: &Path, vocab_size: usize, records: &[EncodedLog]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_dataset(&mut w, vocab_size, SEQ_LEN, records)?;
    w.flush()?;
    Ok(())
}

fn save_features(path: &Path, records: &[FeatureRecord]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_features(&mut w, records)?;
    w.flush()?;
    Ok(())
}

fn load_features(path: &Path) -> Result<Vec<FeatureRecord>> {
    read_features(&mut BufReader::new(fs::File::open(path)?))
}

/// Writes a seeded synthetic corpus to the configured corpus path.
pub fn synth(cfg: &PipelineConfig) -> Result<usize> {
    let corpus = synth_corpus(&cfg.synth, substream_seed(cfg.seed, "corpus"))?;
    if let Some(dir) = cfg.corpus.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_corpus(&cfg.corpus, &corpus)?;
    Ok(corpus.len())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrepareSummary {
    pub raw_records: usize,
    pub unique_records: usize,
    pub vocab_size: usize,
    pub positives: usize,
    pub negatives: usize,
}

/// Tokenizes, builds the vocabulary, encodes and dedups the corpus.
pub fn prepare(cfg: &PipelineConfig, out: &OutputLayout) -> Result<PrepareSummary> {
    out.ensure()?;
    let corpus = read_corpus(&cfg.corpus)?;
    let vocab = build_vocab(&corpus, cfg.min_count)?;
    let encoded: Vec<EncodedLog> = corpus.iter().map(|r| encode(r, &vocab, SEQ_LEN)).collect();
    let unique = dedup(&encoded);
    write_vocab(&out.vocab(), &vocab)?;
    save_dataset(&out.dataset(), vocab.len(), &unique)?;
    let negatives = unique.iter().filter(|r| r.label == Label::Negative).count();
    Ok(PrepareSummary {
        raw_records: corpus.len(),
        unique_records: unique.len(),
        vocab_size: vocab.len(),
        positives: unique.len() - negatives,
        negatives,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OversampleSummary {
    pub negatives_before: usize,
    pub target: usize,
    pub negatives_after: usize,
    pub positives: usize,
    pub drawn: usize,
    pub accepted: usize,
}

/// Grows the negatives to `round(balance_ratio · positives)` with one SeqGAN
/// per chunk.
pub fn oversample_stage(cfg: &PipelineConfig, out: &OutputLayout) -> Result<OversampleSummary> {
    out.ensure()?;
    let (v, records) = load_dataset(&out.dataset())?;
    let (pos, neg): (Vec<EncodedLog>, Vec<EncodedLog>) = records.into_iter().partition(|r| r.label == Label::Positive);
    if neg.is_empty() {
        return Err(Error::argument("corpus has no negative records to oversample"));
    }
    let target = ((cfg.balance_ratio * pos.len() as f64).round() as usize).max(neg.len());
    let result = oversample(&neg, target, v, &cfg.gan, substream_seed(cfg.seed, "gan"))?;

    let mut diag = format!("chunk\t{}\n", RoundDiagnostics::TSV_HEADER);
    for (c, run) in result.chunk_runs.iter().enumerate() {
        for r in &run.rounds {
            diag.push_str(&format!("{}\t{}\n", c + 1, r.tsv_row()));
        }
        Checkpoint::of(&run.generator).save(&out.checkpoint(&format!("gan_chunk{}_generator", c + 1)))?;
        Checkpoint::of(&run.discriminator).save(&out.checkpoint(&format!("gan_chunk{}_discriminator", c + 1)))?;
    }
    fs::write(out.gan_diagnostics(), diag)?;

    let summary = OversampleSummary {
        negatives_before: neg.len(),
        target,
        negatives_after: result.records.len(),
        positives: pos.len(),
        drawn: result.drawn,
        accepted: result.accepted,
    };
    fs::write(
        out.oversample_summary(),
        format!(
            "negatives_before = {}\ntarget = {}\nnegatives_after = {}\npositives = {}\ndrawn = {}\naccepted = {}\nduplicate_fraction = {:.6}\n",
            summary.negatives_before,
            summary.target,
            summary.negatives_after,
            summary.positives,
            summary.drawn,
            summary.accepted,
            result.duplicate_fraction()
        ),
    )?;
    let mut all = pos;
    all.extend(result.records);
    save_dataset(&out.oversampled(), v, &all)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSummary {
    pub records: usize,
    pub pre_noise_count: usize,
    pub stages: Vec<&'static str>,
}

/// Trains the two autoencoders and writes the noisy, shuffled features.
pub fn features_stage(cfg: &PipelineConfig, out: &OutputLayout) -> Result<FeatureSummary> {
    out.ensure()?;
    let source = if cfg.oversample { out.oversampled() } else { out.dataset() };
    let (v, records) = load_dataset(&source)?;
    let (pos, neg): (Vec<EncodedLog>, Vec<EncodedLog>) = records.into_iter().partition(|r| r.label == Label::Positive);
    let dual = dual_pipeline(&pos, &neg, v, &cfg.ae, cfg.noise_variance, substream_seed(cfg.seed, "ae"))?;
    Checkpoint::of(&dual.positive.params).save(&out.checkpoint("ae_positive"))?;
    Checkpoint::of(&dual.negative.params).save(&out.checkpoint("ae_negative"))?;
    save_features(&out.features(), &dual.features)?;
    Ok(FeatureSummary {
        records: dual.features.len(),
        pre_noise_count: dual.pre_noise_count,
        stages: dual.stages,
    })
}

/// Held-out records that count every read, so a run can prove it looked at
/// them exactly once.
#[derive(Debug)]
pub struct SealedTestSet {
    records: Vec<FeatureRecord>,
    reads: AtomicUsize,
}

impl SealedTestSet {
    pub fn seal(records: Vec<FeatureRecord>) -> Self {
        SealedTestSet {
            records,
            reads: AtomicUsize::new(0),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn read(&self) -> &[FeatureRecord] {
        self.reads.fetch_add(1, Ordering::SeqCst);
        &self.records
    }

    pub fn reads(&self) -> usize {
        self.reads.load(Ordering::SeqCst)
    }

    fn persist(&self, path: &Path) -> Result<()> {
        save_features(path, &self.records)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainSummary {
    pub pool: usize,
    pub test: usize,
    pub folds: Vec<FoldStats>,
    pub final_epochs: usize,
}

/// Splits the features, runs cross-validation on the pool and saves the
/// final classifier. The test part is written out untouched.
pub fn train_stage(cfg: &PipelineConfig, out: &OutputLayout) -> Result<TrainSummary> {
    out.ensure()?;
    let features = load_features(&out.features())?;
    let mut spec = cfg.split;
    spec.seed = substream_seed(cfg.seed, "split");
    let parts = split(&features, &spec)?;
    let test = SealedTestSet::seal(parts.test);
    test.persist(&out.test_features())?;
    let mut pool = parts.train;
    pool.extend(parts.validation);

    let cv = kfold_cv(&pool, &cfg.classifier, substream_seed(cfg.seed, "cv"))?;
    let mut tsv = format!("{}\n", FoldStats::TSV_HEADER);
    for f in &cv.folds {
        tsv.push_str(&f.tsv_row());
        tsv.push('\n');
    }
    fs::write(out.folds(), tsv)?;
    Checkpoint::of(&cv.model).save(&out.checkpoint("classifier"))?;
    Ok(TrainSummary {
        pool: pool.len(),
        test: test.len(),
        folds: cv.folds,
        final_epochs: cv.final_epochs,
    })
}

pub fn load_classifier(path: &Path) -> Result<GruClassifier<f32>> {
    let c = Checkpoint::load(path)?;
    let gru = GruParams::from_tensors(|n| c.tensor(&format!("gru.{n}")))?;
    let head = ClassifierHead {
        w_out: c.tensor("head.w_out")?,
        b_out: c.tensor("head.b_out")?,
    };
    if head.w_out.shape() != (gru.hidden_dim, 2) || head.b_out.shape() != (1, 2) {
        return Err(Error::Shape {
            op: "classifier checkpoint",
            left: head.w_out.shape(),
            right: (gru.hidden_dim, 2),
        });
    }
    Ok(GruClassifier { gru, head })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub corpus_hash: String,
    /// Digest of the three fields above.
    pub run_hash: String,
}

/// Git-style content hash: SHA-256 over `blob <len>\0` followed by the bytes.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()));
    h.update(bytes);
    hex(&h.finalize())
}

impl Provenance {
    pub fn new(cfg: &PipelineConfig, corpus_bytes: &[u8]) -> Self {
        let config_hash = cfg.hash();
        let corpus_hash = content_hash(corpus_bytes);
        let mut h = Sha256::new();
        h.update(format!("{config_hash}\n{}\n{corpus_hash}\n", cfg.seed));
        Provenance {
            config_hash,
            seed: cfg.seed,
            corpus_hash,
            run_hash: hex(&h.finalize()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub dataset: String,
    /// `oversampled` or `original`.
    pub phase: String,
    pub folds: Vec<FoldStats>,
    pub test: MetricsReport,
    /// Metrics on real (non-generated) test records, when generated ones exist.
    pub test_real: Option<MetricsReport>,
    pub test_size: usize,
    pub test_reads: usize,
    pub provenance: Provenance,
    pub stages: Vec<String>,
}

fn pct(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

impl RunReport {
    pub const TSV_HEADER: &'static str =
        "dataset\tphase\tavg_train_acc\tavg_val_acc\tavg_train_loss\ttest_acc\tlabel\tprecision\trecall\tf_measure";

    fn column(&self, f: impl Fn(&FoldStats) -> f64) -> (f64, f64) {
        mean_std(&self.folds.iter().map(f).collect::<Vec<_>>())
    }

    /// Per-label rows, one block per phase; standard
    /// deviations in parentheses with two decimals.
    pub fn to_tsv(&self) -> String {
        let (ta, _) = self.column(|f| f.train_acc);
        let (va, vs) = self.column(|f| f.val_acc);
        let (tl, ts) = self.column(|f| f.train_loss);
        let mut out = format!("{}\n", Self::TSV_HEADER);
        let mut block = |phase: &str, m: &MetricsReport| {
            for row in &m.rows {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{} ({:.2})\t{:.2} ({:.2})\t{}\t{}\t{}\t{}\t{}\n",
                    self.dataset,
                    phase,
                    pct(ta),
                    pct(va),
                    vs * 100.0,
                    tl,
                    ts,
                    pct(m.accuracy),
                    row.label.as_u8(),
                    row.precision,
                    row.recall,
                    row.f_measure
                ));
            }
        };
        block(&self.phase, &self.test);
        if let Some(real) = &self.test_real {
            block(&format!("{}-real-only", self.phase), real);
        }
        out
    }

    pub fn run_info(&self) -> String {
        format!(
            "config_hash = {}\nseed = {}\ncorpus_hash = {}\nrun_hash = {}\nstages = {}\ntest_records = {}\ntest_reads = {}\n",
            self.provenance.config_hash,
            self.provenance.seed,
            self.provenance.corpus_hash,
            self.provenance.run_hash,
            self.stages.join(","),
            self.test_size,
            self.test_reads
        )
    }
}

fn read_folds(path: &Path) -> Result<Vec<FoldStats>> {
    fs::read_to_string(path)?
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(FoldStats::parse_tsv_row)
        .collect()
}

/// Scores the saved classifier on the sealed test set, once.
pub fn evaluate_stage(cfg: &PipelineConfig, out: &OutputLayout) -> Result<RunReport> {
    let model = load_classifier(&out.checkpoint("classifier"))?;
    let folds = read_folds(&out.folds())?;
    let test = SealedTestSet::seal(load_features(&out.test_features())?);
    let records = test.read();
    let mut pairs = Vec::with_capacity(records.len());
    let mut real_pairs = Vec::new();
    for r in records {
        let p = (model.predict(&r.features)?, r.label);
        if r.origin == Origin::Real {
            real_pairs.push(p);
        }
        pairs.push(p);
    }
    let test_real = if real_pairs.len() < pairs.len() && !real_pairs.is_empty() {
        Some(per_label_report(&real_pairs)?)
    } else {
        None
    };
    let corpus_bytes = fs::read(&cfg.corpus)?;
    let report = RunReport {
        dataset: cfg.dataset.clone(),
        phase: if cfg.oversample { "oversampled" } else { "original" }.into(),
        folds,
        test: per_label_report(&pairs)?,
        test_real,
        test_size: test.len(),
        test_reads: test.reads(),
        provenance: Provenance::new(cfg, &corpus_bytes),
        stages: vec!["evaluate".into()],
    };
    write_report(&report, out)?;
    Ok(report)
}

pub fn write_report(report: &RunReport, out: &OutputLayout) -> Result<()> {
    fs::write(out.report(), report.to_tsv())?;
    fs::write(out.run_info(), report.run_info())?;
    Ok(())
}

/// Runs every stage in order: ingest, oversample (unless disabled),
/// features, split and classify, evaluate. Each stage leaves its artifacts
/// in `out`, so a failure keeps what came before it.
pub fn run_all(cfg: &PipelineConfig, out: &OutputLayout) -> Result<RunReport> {
    cfg.validate()?;
    let mut stages = Vec::new();
    prepare(cfg, out).map_err(|e| e.in_stage("ingest"))?;
    stages.push("ingest");
    if cfg.oversample {
        oversample_stage(cfg, out).map_err(|e| e.in_stage("oversample"))?;
        stages.push("oversample");
    }
    features_stage(cfg, out).map_err(|e| e.in_stage("features"))?;
    stages.push("features");
    train_stage(cfg, out).map_err(|e| e.in_stage("classify"))?;
    stages.extend(["split", "classify"]);
    let mut report = evaluate_stage(cfg, out).map_err(|e| e.in_stage("evaluate"))?;
    stages.push("evaluate");
    report.stages = stages.into_iter().map(String::from).collect();
    write_report(&report, out)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(dir: &Path, oversample: bool) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        let text = "
            synth.records = 300
            synth.negative_fraction = 0.1
            synth.templates = 8
            split.test_fraction = 0.3
            split.val_fraction = 0.2
            gan.pretrain_gen_epochs = 2
            gan.pretrain_disc_epochs = 1
            gan.adversarial_rounds = 1
            gan.pg_batch_size = 2
            gan.rollouts = 2
            gan.gen_hidden_dim = 8
            gan.gen_embed_dim = 8
            gan.disc_embed_dim = 8
            gan.filters_per_width = 4
            ae.dims = 40,16,8,8,40
            ae.max_epochs = 3
            clf.hidden_dim = 8
            clf.max_epochs = 3
            clf.folds = 3
        ";
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line.split_once('=').unwrap();
            cfg.set(k.trim(), v.trim()).unwrap();
        }
        cfg.corpus = dir.join("corpus.tsv");
        cfg.oversample = oversample;
        cfg.seed = 11;
        cfg
    }

    #[test]
    fn content_hash_matches_git_blob_digest() {
        // `printf 'hello\n' | git hash-object --object-format=sha256 --stdin`
        assert_eq!(
            content_hash(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }

    #[test]
    fn sealed_set_counts_reads() {
        let s = SealedTestSet::seal(Vec::new());
        assert_eq!(s.reads(), 0);
        let _ = s.read();
        let _ = s.read();
        assert_eq!(s.reads(), 2);
    }

    #[test]
    fn full_run_produces_every_artifact_and_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path(), true);
        synth(&cfg).unwrap();
        let a = OutputLayout::new(dir.path().join("a"));
        let b = OutputLayout::new(dir.path().join("b"));
        let ra = run_all(&cfg, &a).unwrap();
        let rb = run_all(&cfg, &b).unwrap();
        assert_eq!(ra.stages, ["ingest", "oversample", "features", "split", "classify", "evaluate"]);
        assert_eq!(ra.test_reads, 1);
        assert!(ra.test_real.is_some());
        assert_eq!(ra.folds.len(), 3);
        for f in ["report.tsv", "run.txt", "folds.tsv", "features.lbft", "test.lbft", "gan_diagnostics.tsv"] {
            assert_eq!(fs::read(a.root.join(f)).unwrap(), fs::read(b.root.join(f)).unwrap(), "{f}");
        }
        assert_eq!(
            fs::read(a.checkpoint("classifier")).unwrap(),
            fs::read(b.checkpoint("classifier")).unwrap()
        );
        assert!(a.checkpoint("gan_chunk2_generator").exists());
        assert_eq!(ra.provenance, rb.provenance);

        // Oversampling balanced the classes before features were built.
        let (_, all) = load_dataset(&a.oversampled()).unwrap();
        let neg = all.iter().filter(|r| r.label == Label::Negative).count();
        assert_eq!(neg, all.len() - neg);
    }

    #[test]
    fn original_phase_skips_oversampling() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path(), false);
        synth(&cfg).unwrap();
        let out = OutputLayout::new(dir.path().join("o"));
        let r = run_all(&cfg, &out).unwrap();
        assert_eq!(r.phase, "original");
        assert!(!r.stages.contains(&"oversample".to_string()));
        assert!(!out.oversampled().exists());
        assert!(r.test_real.is_none());
        let tsv = r.to_tsv();
        assert_eq!(tsv.lines().count(), 3);
        assert!(tsv.lines().nth(1).unwrap().starts_with("synthetic\toriginal\t"));
    }

    #[test]
    fn stage_errors_name_the_stage() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path(), false);
        let err = run_all(&cfg, &OutputLayout::new(dir.path().join("x"))).unwrap_err();
        assert!(err.to_string().contains("ingest"), "{err}");
    }

    #[test]
    fn classifier_checkpoint_reloads_identically() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path(), false);
        synth(&cfg).unwrap();
        let out = OutputLayout::new(dir.path().join("c"));
        prepare(&cfg, &out).unwrap();
        features_stage(&cfg, &out).unwrap();
        train_stage(&cfg, &out).unwrap();
        let m = load_classifier(&out.checkpoint("classifier")).unwrap();
        let test = load_features(&out.test_features()).unwrap();
        let again = load_classifier(&out.checkpoint("classifier")).unwrap();
        for r in &test {
            assert_eq!(m.predict(&r.features).unwrap(), again.predict(&r.features).unwrap());
        }
    }
}
