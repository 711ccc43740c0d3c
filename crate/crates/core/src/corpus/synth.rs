//! Templated stand-in corpus with a configurable minority fraction.

use super::{Label, LogRecord};
use crate::error::{Error, Result};
use crate::rng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_total: usize,
    pub negative_fraction: f64,
    /// Templates in use, split between the classes (positives get the odd one).
    pub n_templates: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_total: 10_000,
            negative_fraction: 0.05,
            n_templates: 24,
        }
    }
}

const POSITIVE_TEMPLATES: &[&str] = &[
    "{svc} service started on {host} in {n} ms",
    "heartbeat received from {host} for {svc} seq {n}",
    "user {user} logged in from {host} via {proto}",
    "request {method} {path} completed with status {okcode} on {host}",
    "scheduled job {job} finished on {host} after {n} seconds",
    "cache {op} for key {key} served by {host}",
    "connection from {host} accepted by {svc} on port {n}",
    "instance {inst} state changed to {goodstate} on {host}",
    "disk usage on {host} at {n} percent for {mount}",
    "configuration reloaded for {svc} by {user}",
    "backup of {mount} on {host} completed successfully",
    "metrics flushed by {svc} to {host} batch {n}",
];

const NEGATIVE_TEMPLATES: &[&str] = &[
    "error {svc} failed to connect to {host} {reason}",
    "kernel panic on {host} {fault} in module {module}",
    "fatal exception in {svc} {fault} while handling {path}",
    "instance {inst} failed to spawn on {host} {reason}",
    "disk failure detected on {host} device {device} {ioerr}",
    "authentication failure for user {user} from {host}",
    "timeout waiting for {svc} response from {host} aborting {job}",
    "segmentation fault in {module} on {host} core dumped",
    "critical {fault} machine check on {host} node board {board}",
    "request {method} {path} failed with status {badcode} on {host}",
    "out of memory killed {svc} on {host} {reason}",
    "cannot mount {mount} on {host} {ioerr}",
];

fn slot_words(slot: &str) -> &'static [&'static str] {
    match slot {
        "svc" => &[
            "nova-api", "nova-compute", "glance", "keystone", "neutron", "cinder", "swift",
            "scheduler", "conductor", "placement", "heat", "horizon", "rabbitmq", "mysql",
            "memcached", "haproxy",
        ],
        "host" => &[
            "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india",
            "juliet", "kilo", "lima", "mike", "november", "oscar", "papa", "quebec", "romeo",
            "sierra", "tango", "uniform", "victor", "whiskey", "yankee",
        ],
        "user" => &[
            "admin", "alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi", "ivan",
            "judy", "mallory", "oscar", "peggy", "trent", "walter",
        ],
        "proto" => &["ssh", "https", "console", "vpn", "api"],
        "method" => &["get", "post", "put", "delete", "patch", "head"],
        "path" => &[
            "/v2/servers", "/v2/images", "/v3/auth/tokens", "/v2/flavors", "/v2/networks",
            "/v2/volumes", "/v1/objects", "/v2/ports", "/v2/keypairs", "/v2/quotas",
        ],
        "okcode" => &["ok", "accepted", "created", "no-content"],
        "badcode" => &["unavailable", "forbidden", "conflict", "internal-error", "gateway-timeout"],
        "job" => &[
            "rotate-logs", "compact-db", "sync-images", "refresh-quotas", "purge-tokens",
            "rebalance", "audit", "reindex", "snapshot", "cleanup",
        ],
        "op" => &["hit", "refresh", "store", "lookup"],
        "key" => &[
            "session", "token", "flavor", "image", "quota", "catalog", "endpoint", "policy",
            "project", "role",
        ],
        "inst" => &[
            "web", "db", "worker", "cache", "gateway", "builder", "runner", "proxy", "batch",
            "indexer", "mailer", "stream",
        ],
        "goodstate" => &["active", "running", "ready", "resumed"],
        "mount" => &["/var", "/home", "/data", "/scratch", "/opt", "/srv", "/tmp", "/backup"],
        "reason" => &[
            "connection refused", "no route to host", "host unreachable", "broken pipe",
            "resource exhausted", "quota exceeded", "permission denied", "invalid state",
            "network down", "lock timeout", "rpc timeout", "bad request",
        ],
        "fault" => &[
            "parity error", "bus error", "double fault", "page fault", "machine check",
            "ecc error", "watchdog reset", "stack overflow", "null dereference", "assertion",
        ],
        "module" => &[
            "ext4", "nfs", "scsi", "ib_core", "mlx5", "kvm", "xfs", "torus", "ciod", "rts",
        ],
        "device" => &["sda", "sdb", "sdc", "nvme0", "nvme1", "md0", "dm-cache", "raid"],
        "ioerr" => &[
            "i/o error", "read only filesystem", "bad superblock", "media error",
            "checksum mismatch", "stale handle",
        ],
        "board" => &["midplane", "linkcard", "nodecard", "servicecard", "iocard", "fanboard"],
        _ => &["unknown"],
    }
}

fn fill(template: &str, rng: &mut impl Rng) -> String {
    let mut out = String::with_capacity(template.len() + 16);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let end = start + rest[start..].find('}').expect("template braces balance");
        let slot = &rest[start + 1..end];
        if slot == "n" {
            out.push_str(&rng.random_range(1..10_000u32).to_string());
        } else {
            out.push_str(slot_words(slot).choose(rng).expect("word lists are non-empty"));
        }
        rest = &rest[end + 1..];
    }
    out.push_str(rest);
    out
}

/// `round(n_total · negative_fraction)` negatives among `n_total` templated
/// messages, in a seeded order.
pub fn synth_corpus(cfg: &SynthConfig, seed: u64) -> Result<Vec<LogRecord>> {
    if !(cfg.negative_fraction > 0.0 && cfg.negative_fraction < 1.0) {
        return Err(Error::argument("negative_fraction must lie in (0, 1)"));
    }
    let max = POSITIVE_TEMPLATES.len() + NEGATIVE_TEMPLATES.len();
    if cfg.n_templates < 2 || cfg.n_templates > max {
        return Err(Error::argument(format!(
            "n_templates must lie in [2, {max}], got {}",
            cfg.n_templates
        )));
    }
    let n_neg_templates = cfg.n_templates / 2;
    let n_pos_templates = cfg.n_templates - n_neg_templates;
    let n_neg = (cfg.n_total as f64 * cfg.negative_fraction).round() as usize;

    let mut rng = rng::from_seed(seed);
    let mut labels: Vec<Label> = (0..cfg.n_total)
        .map(|i| if i < n_neg { Label::Negative } else { Label::Positive })
        .collect();
    labels.shuffle(&mut rng);
    Ok(labels
        .into_iter()
        .map(|label| {
            let bank = match label {
                Label::Positive => &POSITIVE_TEMPLATES[..n_pos_templates],
                Label::Negative => &NEGATIVE_TEMPLATES[..n_neg_templates],
            };
            let template = bank.choose(&mut rng).expect("bank is non-empty");
            LogRecord::new(label, fill(template, &mut rng))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use std::collections::HashMap;

    #[test]
    fn exact_negative_count() {
        let c = synth_corpus(&SynthConfig { n_total: 100, negative_fraction: 0.05, n_templates: 6 }, 1).unwrap();
        assert_eq!(c.len(), 100);
        assert_eq!(c.iter().filter(|r| r.label == Label::Negative).count(), 5);
    }

    #[test]
    fn deterministic() {
        let cfg = SynthConfig { n_total: 300, ..Default::default() };
        assert_eq!(synth_corpus(&cfg, 42).unwrap(), synth_corpus(&cfg, 42).unwrap());
        assert_ne!(synth_corpus(&cfg, 42).unwrap(), synth_corpus(&cfg, 43).unwrap());
    }

    #[test]
    fn argument_checks() {
        let base = SynthConfig::default();
        assert!(synth_corpus(&SynthConfig { n_templates: 1, ..base }, 0).is_err());
        assert!(synth_corpus(&SynthConfig { negative_fraction: 0.0, ..base }, 0).is_err());
        assert!(synth_corpus(&SynthConfig { negative_fraction: 1.0, ..base }, 0).is_err());
    }

    #[test]
    fn all_slots_resolve() {
        for t in POSITIVE_TEMPLATES.iter().chain(NEGATIVE_TEMPLATES) {
            let mut rest = *t;
            while let Some(s) = rest.find('{') {
                let e = s + rest[s..].find('}').unwrap();
                let slot = &rest[s + 1..e];
                assert!(slot == "n" || slot_words(slot) != ["unknown"], "{slot}");
                rest = &rest[e + 1..];
            }
        }
    }

    /// Multinomial naive Bayes on token counts: the labels must be learnable
    /// before any pipeline test relies on them.
    #[test]
    fn bag_of_words_baseline_learns_labels() {
        let corpus = synth_corpus(&SynthConfig { n_total: 10_000, ..Default::default() }, 77).unwrap();
        let (train, test) = corpus.split_at(7_000);
        let mut counts: [HashMap<String, f64>; 2] = [HashMap::new(), HashMap::new()];
        let mut totals = [0.0f64; 2];
        let mut priors = [0.0f64; 2];
        for r in train {
            let k = r.label.index();
            priors[k] += 1.0;
            for t in tokenize(&r.text) {
                *counts[k].entry(t).or_default() += 1.0;
                totals[k] += 1.0;
            }
        }
        let vocab: std::collections::HashSet<&String> = counts[0].keys().chain(counts[1].keys()).collect();
        let v = vocab.len() as f64;
        let correct = test
            .iter()
            .filter(|r| {
                let toks = tokenize(&r.text);
                let score = |k: usize| {
                    priors[k].ln()
                        + toks
                            .iter()
                            .map(|t| ((counts[k].get(t).copied().unwrap_or(0.0) + 1.0) / (totals[k] + v)).ln())
                            .sum::<f64>()
                };
                let pred = if score(1) >= score(0) { 1 } else { 0 };
                pred == r.label.index()
            })
            .count();
        let acc = correct as f64 / test.len() as f64;
        assert!(acc > 0.9, "accuracy {acc}");
    }
}
