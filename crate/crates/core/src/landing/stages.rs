//! Staged terminal guidance: each stage hands over to a shorter-range, more
//! precise sensor.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LandingStage {
    Transit,
    RfApproach,
    VisualAlign,
    FinalDescent,
    Touchdown,
    Secured,
}

impl LandingStage {
    pub const ALL: [LandingStage; 6] = [
        LandingStage::Transit,
        LandingStage::RfApproach,
        LandingStage::VisualAlign,
        LandingStage::FinalDescent,
        LandingStage::Touchdown,
        LandingStage::Secured,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn next(self) -> Option<Self> {
        Self::ALL.get(self.index() + 1).copied()
    }

    pub fn previous(self) -> Option<Self> {
        self.index().checked_sub(1).map(|i| Self::ALL[i])
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LandingStage::Transit => "TRANSIT",
            LandingStage::RfApproach => "RF_APPROACH",
            LandingStage::VisualAlign => "VISUAL_ALIGN",
            LandingStage::FinalDescent => "FINAL_DESCENT",
            LandingStage::Touchdown => "TOUCHDOWN",
            LandingStage::Secured => "SECURED",
        }
    }
}

/// Sensor evidence available in one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct StageEvidence {
    pub rf_fix: bool,
    /// At least two lamps detected.
    pub lamps: bool,
    pub ultrasonic: bool,
    pub touchdown: bool,
    /// Magnet engaged and holding.
    pub secured: bool,
}

impl StageEvidence {
    /// Evidence that supports `stage`.
    pub fn supports(&self, stage: LandingStage) -> bool {
        match stage {
            LandingStage::Transit => true,
            LandingStage::RfApproach => self.rf_fix,
            LandingStage::VisualAlign => self.lamps,
            LandingStage::FinalDescent => self.ultrasonic,
            LandingStage::Touchdown => self.touchdown,
            LandingStage::Secured => self.secured,
        }
    }
}

/// One step of the stage graph.
///
/// Advances one stage when the next stage's evidence is present. Otherwise,
/// if the current stage's evidence is missing, accumulates `lost_for` and
/// drops back one stage once it exceeds `dwell`. SECURED is terminal, so
/// TOUCHDOWN is only ever entered from FINAL_DESCENT. Returns the new stage
/// and the updated loss timer.
pub fn stage_transition<S: Real>(
    stage: LandingStage,
    evidence: &StageEvidence,
    lost_for: S,
    dt: S,
    dwell: S,
) -> (LandingStage, S) {
    if let Some(next) = stage.next() {
        if evidence.supports(next) {
            return (next, S::zero());
        }
    }
    if stage == LandingStage::Secured || evidence.supports(stage) {
        return (stage, S::zero());
    }
    let lost = lost_for + dt;
    match stage.previous() {
        Some(prev) if lost > dwell => (prev, S::zero()),
        _ => (stage, lost),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageMachine<S> {
    pub stage: LandingStage,
    pub lost_for: S,
    pub dwell: S,
}

impl<S: Real> StageMachine<S> {
    pub fn new(dwell: S) -> Self {
        Self { stage: LandingStage::Transit, lost_for: S::zero(), dwell }
    }

    /// Returns the previous stage when the stage changed.
    pub fn step(&mut self, evidence: &StageEvidence, dt: S) -> Option<LandingStage> {
        let before = self.stage;
        (self.stage, self.lost_for) = stage_transition(self.stage, evidence, self.lost_for, dt, self.dwell);
        (before != self.stage).then_some(before)
    }
}
