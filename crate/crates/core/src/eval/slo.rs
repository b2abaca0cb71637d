use serde::{Deserialize, Serialize};

use crate::sim::{Flow, FlowWindow};
use crate::topology::NodeId;

/// Limits on monitored background flows. `None` means unlimited.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SloConfig {
    pub max_p95_latency_ms: Option<f64>,
    pub max_loss_fraction: Option<f64>,
}

impl Default for SloConfig {
    fn default() -> Self {
        SloConfig {
            max_p95_latency_ms: Some(50.0),
            max_loss_fraction: Some(0.01),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SloMetric {
    P95LatencyMs,
    LossFraction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SloViolation {
    pub flow: u64,
    pub src: NodeId,
    pub dst: NodeId,
    /// Window start, virtual ms.
    pub window: u64,
    pub metric: SloMetric,
    pub observed: f64,
    pub limit: f64,
}

/// What the evaluator needs of one monitored flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSeries {
    pub id: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub tag: String,
    pub windows: Vec<FlowWindow>,
}

impl From<&Flow> for FlowSeries {
    fn from(f: &Flow) -> Self {
        FlowSeries {
            id: f.id,
            src: f.spec.src.clone(),
            dst: f.spec.dst.clone(),
            tag: f.spec.tag.clone(),
            windows: f.windows.clone(),
        }
    }
}

/// Nearest-rank percentile of unsorted samples.
pub fn nearest_rank(samples: &mut [f64], pct: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    samples.sort_by(f64::total_cmp);
    let rank = ((pct / 100.0) * samples.len() as f64).ceil().max(1.0) as usize;
    Some(samples[rank.min(samples.len()) - 1])
}

/// Violations over windows starting in `[from, to)`.
pub fn check_slos(flows: &[FlowSeries], cfg: &SloConfig, from: u64, to: u64) -> Vec<SloViolation> {
    let mut out = Vec::new();
    for f in flows {
        for w in f.windows.iter().filter(|w| w.start >= from && w.start < to) {
            let mut v = |metric, observed, limit| {
                out.push(SloViolation {
                    flow: f.id,
                    src: f.src.clone(),
                    dst: f.dst.clone(),
                    window: w.start,
                    metric,
                    observed,
                    limit,
                })
            };
            if let Some(limit) = cfg.max_p95_latency_ms {
                let mut s: Vec<f64> = w.samples().collect();
                if let Some(p95) = nearest_rank(&mut s, 95.0) {
                    if p95 > limit {
                        v(SloMetric::P95LatencyMs, p95, limit);
                    }
                }
            }
            if let Some(limit) = cfg.max_loss_fraction {
                if w.offered > 0 {
                    let loss = w.dropped as f64 / w.offered as f64;
                    if loss > limit {
                        v(SloMetric::LossFraction, loss, limit);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_small() {
        let mut s = vec![5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(nearest_rank(&mut s, 95.0), Some(5.0));
        let mut s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(nearest_rank(&mut s, 95.0), Some(95.0));
        assert_eq!(nearest_rank(&mut [], 95.0), None);
    }

    #[test]
    fn unlimited_never_violates() {
        let f = FlowSeries {
            id: 1,
            src: "a".into(),
            dst: "b".into(),
            tag: String::new(),
            windows: vec![FlowWindow {
                start: 0,
                offered: 10,
                delivered: 0,
                dropped: 10,
                latency: vec![(1e6, 100)],
            }],
        };
        let cfg = SloConfig {
            max_p95_latency_ms: None,
            max_loss_fraction: None,
        };
        assert!(check_slos(std::slice::from_ref(&f), &cfg, 0, 1000).is_empty());
        assert_eq!(check_slos(&[f], &SloConfig::default(), 0, 1000).len(), 2);
    }
}
