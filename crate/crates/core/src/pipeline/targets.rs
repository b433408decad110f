use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::graph::SEVERITY_LEVELS;

/// Total score at which a questionnaire counts as positive.
pub const CASE_THRESHOLD: usize = 10;

/// Item score 2 ("half or more days") and above counts as present.
pub fn binarize_symptom(item_score: usize) -> Result<bool, PipelineError> {
    check_item(item_score)?;
    Ok(item_score >= 2)
}

fn check_item(item_score: usize) -> Result<(), PipelineError> {
    if item_score >= SEVERITY_LEVELS {
        return Err(PipelineError::OutOfRange {
            what: "item score",
            value: item_score as f64,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    Phq8,
    Gad7,
}

impl Scale {
    pub fn items(self) -> usize {
        match self {
            Scale::Phq8 => 8,
            Scale::Gad7 => 7,
        }
    }

    pub fn max_total(self) -> usize {
        self.items() * (SEVERITY_LEVELS - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetLabel {
    Present,
    Absent,
    Undefined,
}

impl TargetLabel {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            TargetLabel::Present => Some(true),
            TargetLabel::Absent => Some(false),
            TargetLabel::Undefined => None,
        }
    }
}

/// Present needs a positive screen and a reported diagnosis; absent needs
/// neither. Discordant or unknown cases are undefined.
pub fn condition_target(
    total: usize,
    scale: Scale,
    diagnosis: Option<bool>,
) -> Result<TargetLabel, PipelineError> {
    if total > scale.max_total() {
        return Err(PipelineError::OutOfRange {
            what: "total score",
            value: total as f64,
        });
    }
    Ok(match (total >= CASE_THRESHOLD, diagnosis) {
        (true, Some(true)) => TargetLabel::Present,
        (false, Some(false)) => TargetLabel::Absent,
        _ => TargetLabel::Undefined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsmTargets {
    pub mdd: bool,
    pub other_depression: bool,
    pub gad: bool,
}

/// Symptom-count criteria. Depression items are in questionnaire order
/// (anhedonia, low mood, ..); anxiety items likewise (nervousness,
/// uncontrollable worry, ..).
pub fn dsm_targets(depression: &[usize], anxiety: &[usize]) -> Result<DsmTargets, PipelineError> {
    if depression.len() != Scale::Phq8.items() {
        return Err(PipelineError::LengthMismatch(
            depression.len(),
            Scale::Phq8.items(),
        ));
    }
    if anxiety.len() != Scale::Gad7.items() {
        return Err(PipelineError::LengthMismatch(
            anxiety.len(),
            Scale::Gad7.items(),
        ));
    }
    let dep = depression
        .iter()
        .map(|&s| binarize_symptom(s))
        .collect::<Result<Vec<_>, _>>()?;
    let anx = anxiety
        .iter()
        .map(|&s| binarize_symptom(s))
        .collect::<Result<Vec<_>, _>>()?;
    let n_dep = dep.iter().filter(|&&p| p).count();
    let n_anx = anx.iter().filter(|&&p| p).count();
    Ok(DsmTargets {
        mdd: n_dep >= 5 && (dep[0] || dep[1]),
        other_depression: n_dep >= 4,
        gad: n_anx >= 5 && (anx[0] || anx[1]),
    })
}
