use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::incident::{Goal, GroundTruth, RootCause};
use crate::topology::Entity;

/// What the agent claims.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub detected: bool,
    #[serde(default)]
    pub localization: BTreeSet<Entity>,
    #[serde(default)]
    pub root_causes: BTreeSet<RootCause>,
    #[serde(default)]
    pub report_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_metadata: Option<AgentMetadata>,
}

/// Agent-reported usage figures, passed through untouched.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning_tokens: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn from_masks(pred: &[bool], gt: &[bool]) -> Self {
        assert_eq!(pred.len(), gt.len(), "mask lengths differ");
        let mut c = Confusion::default();
        for (&p, &g) in pred.iter().zip(gt) {
            match (p, g) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalResult {
    pub goal: Goal,
    pub exact_match: bool,
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub per_entity_accuracy: f64,
}

/// An undefined ratio (empty denominator) is 1 when nothing was missed or invented, else 0.
fn ratio(num: u64, den: u64, clean: bool) -> f64 {
    if den == 0 {
        if clean {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

pub fn grade_masks(goal: Goal, pred: &[bool], gt: &[bool]) -> GoalResult {
    let c = Confusion::from_masks(pred, gt);
    let clean = c.fp == 0 && c.fn_ == 0;
    GoalResult {
        goal,
        exact_match: clean,
        confusion: c,
        precision: ratio(c.tp, c.tp + c.fp, clean),
        recall: ratio(c.tp, c.tp + c.fn_, clean),
        per_entity_accuracy: ratio(c.tp + c.tn, c.total(), clean),
    }
}

pub fn grade_detection(sub: &Submission, truth: &GroundTruth) -> GoalResult {
    grade_masks(Goal::Detect, &[sub.detected], &[truth.detected_expected])
}

pub fn grade_localization(
    sub: &Submission,
    truth: &GroundTruth,
    universe: &[Entity],
) -> GoalResult {
    let pred: Vec<bool> = universe
        .iter()
        .map(|e| sub.localization.contains(e))
        .collect();
    grade_masks(Goal::Localize, &pred, &truth.entity_mask)
}

pub fn grade_rca(sub: &Submission, truth: &GroundTruth) -> GoalResult {
    let pred: Vec<bool> = RootCause::ALL
        .iter()
        .map(|c| sub.root_causes.contains(c))
        .collect();
    grade_masks(Goal::Rca, &pred, &truth.cause_mask())
}

/// Grade every goal in `goals`, in canonical goal order.
pub fn grade(
    sub: &Submission,
    truth: &GroundTruth,
    universe: &[Entity],
    goals: &[Goal],
) -> Vec<GoalResult> {
    let mut gs: Vec<Goal> = goals.to_vec();
    gs.sort();
    gs.dedup();
    gs.into_iter()
        .map(|g| match g {
            Goal::Detect => grade_detection(sub, truth),
            Goal::Localize => grade_localization(sub, truth, universe),
            Goal::Rca => grade_rca(sub, truth),
        })
        .collect()
}
