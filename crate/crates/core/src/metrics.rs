//! Operation coverage, unique server faults and their trends over a session.

use crate::explorer::OutcomeClass;
use crate::interaction::Interaction;
use crate::oas::ApiModel;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

pub const DEFAULT_SAMPLE_INTERVAL_S: f64 = 5.0;
pub const SIGNATURE_MAX_CHARS: usize = 512;
pub const EMPTY_FAULT_SIGNATURE: &str = "<empty-5xx>";

/// True when `interaction` exercised `op` as documented and got a 2xx. A
/// request sent with a different method tests a different operation.
fn covers(interaction: &Interaction, api: &ApiModel) -> Option<usize> {
    if !interaction.is_success() {
        return None;
    }
    let op = api.operations.get(interaction.request.operation)?;
    (op.method == interaction.request.method).then_some(op.index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub covered: usize,
    pub total: usize,
    pub fraction: f64,
    pub flags: Vec<bool>,
}

pub fn operation_coverage(log: &[Interaction], api: &ApiModel) -> Coverage {
    let mut flags = vec![false; api.len()];
    for i in log {
        if let Some(op) = covers(i, api) {
            flags[op] = true;
        }
    }
    let covered = flags.iter().filter(|f| **f).count();
    Coverage {
        covered,
        total: api.len(),
        fraction: if api.is_empty() { 0.0 } else { covered as f64 / api.len() as f64 },
        flags,
    }
}

fn patterns() -> &'static [(Regex, &'static str)] {
    static P: OnceLock<Vec<(Regex, &'static str)>> = OnceLock::new();
    P.get_or_init(|| {
        [
            (r#""[^"]*"|'[^']*'"#, "$"),
            (r"\b[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}\b", "#"),
            (r"\b0x[0-9a-f]+\b", "#"),
            (r"\b[0-9a-f]{8,}\b", "#"),
            (r"[0-9]+", "#"),
            (r"\s+", " "),
        ]
        .into_iter()
        .map(|(p, r)| (Regex::new(p).expect("static pattern"), r))
        .collect()
    })
}

/// Normalized form of a 5xx body: literals, identifiers and numbers are
/// masked so that bodies differing only in data collapse together.
pub fn fault_signature(body: &str) -> String {
    let mut text = body.to_lowercase();
    for (re, replacement) in patterns() {
        text = re.replace_all(&text, *replacement).into_owned();
    }
    let text = text.trim();
    if text.is_empty() {
        return EMPTY_FAULT_SIGNATURE.to_string();
    }
    text.chars().take(SIGNATURE_MAX_CHARS).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultRecord {
    pub signature: String,
    pub first_seq: u64,
    pub operation_id: String,
    pub status: u16,
}

/// Distinct 5xx signatures in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultRegistry {
    faults: Vec<FaultRecord>,
    index: BTreeMap<String, usize>,
}

impl FaultRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers the interaction if it is a 5xx; true when its signature is new.
    pub fn observe(&mut self, interaction: &Interaction) -> bool {
        if interaction.outcome != OutcomeClass::ServerError5xx {
            return false;
        }
        let signature = fault_signature(&interaction.response_body);
        if self.index.contains_key(&signature) {
            return false;
        }
        self.index.insert(signature.clone(), self.faults.len());
        self.faults.push(FaultRecord {
            signature,
            first_seq: interaction.seq,
            operation_id: interaction.operation_id.clone(),
            status: interaction.status.unwrap_or(500),
        });
        true
    }

    pub fn len(&self) -> usize {
        self.faults.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faults.is_empty()
    }

    pub fn faults(&self) -> &[FaultRecord] {
        &self.faults
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineSample {
    pub elapsed_s: f64,
    pub requests: u64,
    pub ops_covered: usize,
    pub unique_faults: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Coverage,
    Faults,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Abscissa {
    Requests,
    Seconds,
}

/// Samples taken after every request and, while requests are slow, at
/// least every `interval_s` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTimeline {
    pub interval_s: f64,
    pub samples: Vec<TimelineSample>,
}

impl Default for MetricsTimeline {
    fn default() -> Self {
        Self::new(DEFAULT_SAMPLE_INTERVAL_S)
    }
}

impl MetricsTimeline {
    pub fn new(interval_s: f64) -> Self {
        Self {
            interval_s,
            samples: Vec::new(),
        }
    }

    /// Appends a sample; a sample not later than the previous one replaces it.
    pub fn record(&mut self, sample: TimelineSample) {
        match self.samples.last_mut() {
            Some(last) if sample.elapsed_s <= last.elapsed_s => {
                *last = TimelineSample {
                    elapsed_s: last.elapsed_s,
                    ..sample
                }
            }
            _ => self.samples.push(sample),
        }
    }

    /// Fills wall-clock gaps with copies of the latest counts, one per
    /// elapsed interval.
    pub fn heartbeat(&mut self, now_s: f64) {
        let Some(&last) = self.samples.last() else {
            return;
        };
        let mut t = last.elapsed_s + self.interval_s;
        while t <= now_s {
            self.samples.push(TimelineSample { elapsed_s: t, ..last });
            t += self.interval_s;
        }
    }

    /// Step points of `metric` against the chosen abscissa. For requests,
    /// only the last sample per request count is kept.
    pub fn points(&self, metric: Metric, abscissa: Abscissa) -> Vec<(f64, f64)> {
        let y = |s: &TimelineSample| match metric {
            Metric::Coverage => s.ops_covered as f64,
            Metric::Faults => s.unique_faults as f64,
        };
        let mut out: Vec<(f64, f64)> = Vec::new();
        for s in &self.samples {
            let x = match abscissa {
                Abscissa::Requests => s.requests as f64,
                Abscissa::Seconds => s.elapsed_s,
            };
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = y(s),
                _ => out.push((x, y(s))),
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("elapsed_s,requests,ops_covered,unique_faults\n");
        for s in &self.samples {
            let _ = writeln!(out, "{:.3},{},{},{}", s.elapsed_s, s.requests, s.ops_covered, s.unique_faults);
        }
        out
    }
}

/// Area under a right-continuous step function through `points` (sorted by
/// abscissa, value 0 before the first point) over `[0, horizon]`.
pub fn auc(points: &[(f64, f64)], horizon: f64) -> f64 {
    let mut area = 0.0;
    for (k, &(x, y)) in points.iter().enumerate() {
        if x >= horizon {
            break;
        }
        let next = points.get(k + 1).map_or(horizon, |p| p.0.min(horizon));
        area += y * (next - x.max(0.0)).max(0.0);
    }
    area
}

/// Request-indexed timeline rebuilt from a log alone: one sample after each
/// interaction, preceded by the empty state at request 0.
pub fn replay_timeline(log: &[Interaction], api: &ApiModel) -> MetricsTimeline {
    let mut timeline = MetricsTimeline::default();
    let mut flags = vec![false; api.len()];
    let mut faults = FaultRegistry::new();
    let t0 = log.first().map_or(0, |i| i.timestamp_ms);
    timeline.samples.push(TimelineSample {
        elapsed_s: 0.0,
        requests: 0,
        ops_covered: 0,
        unique_faults: 0,
    });
    for (k, i) in log.iter().enumerate() {
        if let Some(op) = covers(i, api) {
            flags[op] = true;
        }
        faults.observe(i);
        timeline.samples.push(TimelineSample {
            elapsed_s: (i.timestamp_ms.saturating_sub(t0)) as f64 / 1000.0,
            requests: k as u64 + 1,
            ops_covered: flags.iter().filter(|f| **f).count(),
            unique_faults: faults.len(),
        });
    }
    timeline
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationSummary {
    pub operation_id: String,
    pub method: String,
    pub path: String,
    pub covered: bool,
    pub first_success_seq: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucSummary {
    pub horizon: u64,
    pub coverage: f64,
    pub faults: f64,
}

/// Everything in here derives from the interaction log; wall-clock data is
/// deliberately absent so that the summary is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub api: String,
    pub operations: usize,
    pub requests: u64,
    pub covered_operations: usize,
    pub coverage: f64,
    pub operation_results: Vec<OperationSummary>,
    pub unique_faults: usize,
    pub faults: Vec<FaultRecord>,
    pub auc: AucSummary,
}

pub fn summarize(log: &[Interaction], api: &ApiModel) -> Summary {
    let coverage = operation_coverage(log, api);
    let mut first_success: BTreeMap<usize, u64> = BTreeMap::new();
    let mut faults = FaultRegistry::new();
    for i in log {
        if let Some(op) = covers(i, api) {
            first_success.entry(op).or_insert(i.seq);
        }
        faults.observe(i);
    }
    let timeline = replay_timeline(log, api);
    let horizon = log.len() as f64;
    Summary {
        api: api.title.clone(),
        operations: api.len(),
        requests: log.len() as u64,
        covered_operations: coverage.covered,
        coverage: coverage.fraction,
        operation_results: api
            .operations
            .iter()
            .map(|op| OperationSummary {
                operation_id: op.operation_id.clone(),
                method: op.method.to_string(),
                path: op.path.clone(),
                covered: coverage.flags[op.index],
                first_success_seq: first_success.get(&op.index).copied(),
            })
            .collect(),
        unique_faults: faults.len(),
        faults: faults.faults().to_vec(),
        auc: AucSummary {
            horizon: log.len() as u64,
            coverage: auc(&timeline.points(Metric::Coverage, Abscissa::Requests), horizon),
            faults: auc(&timeline.points(Metric::Faults, Abscissa::Requests), horizon),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digit_variation_collapses() {
        assert_eq!(
            fault_signature("NullPointerException at line 532"),
            fault_signature("NullPointerException at line 17")
        );
        assert_eq!(fault_signature(""), EMPTY_FAULT_SIGNATURE);
        assert_eq!(fault_signature("  \n "), EMPTY_FAULT_SIGNATURE);
    }

    #[test]
    fn structurally_different_traces_stay_apart() {
        let a = "java.lang.NullPointerException\n  at com.shop.Cart.total(Cart.java:88)";
        let b = "java.lang.IllegalStateException: cart locked\n  at com.shop.Checkout.run(Checkout.java:12)";
        assert_ne!(fault_signature(a), fault_signature(b));
    }

    #[test]
    fn masking_rules() {
        assert_eq!(
            fault_signature("Error 'abc' id 550e8400-e29b-41d4-a716-446655440000 at 0x7ffe12ab   token deadbeefcafe"),
            "error $ id # at # token #"
        );
        assert_eq!(fault_signature("x".repeat(600).as_str()).len(), SIGNATURE_MAX_CHARS);
    }

    #[test]
    fn auc_shapes() {
        assert_eq!(auc(&[(0.0, 3.0)], 10.0), 30.0);
        assert_eq!(auc(&[(0.0, 0.0), (5.0, 1.0)], 10.0), 5.0);
        assert_eq!(auc(&[(2.0, 1.0)], 10.0), 8.0);
        assert_eq!(auc(&[(0.0, 1.0), (20.0, 5.0)], 10.0), 10.0);
        assert_eq!(auc(&[], 10.0), 0.0);
    }

    #[test]
    fn heartbeat_fills_gaps() {
        let mut t = MetricsTimeline::new(5.0);
        let s = TimelineSample {
            elapsed_s: 1.0,
            requests: 1,
            ops_covered: 1,
            unique_faults: 0,
        };
        t.record(s);
        t.heartbeat(3.0);
        assert_eq!(t.samples.len(), 1);
        t.heartbeat(12.0);
        assert_eq!(t.samples.len(), 3);
        assert_eq!(t.samples[2].elapsed_s, 11.0);
        assert_eq!(t.points(Metric::Coverage, Abscissa::Requests), vec![(1.0, 1.0)]);
        assert!(t.to_csv().starts_with("elapsed_s,requests,ops_covered,unique_faults\n1.000,1,1,0\n"));
    }
}
