use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::dataset::DatasetTable;
use crate::graph::QUARTILES;

/// Name of the raw-score column feeding surrogate node `surrogate`.
pub fn score_column(surrogate: &str) -> String {
    format!("{surrogate}.score")
}

/// Three non-decreasing cut points; a value equal to a cut falls in the lower bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartileBins {
    pub boundaries: [f64; 3],
}

/// Quantile with linear interpolation between the closest order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn fit_quartile_bins(values: &[f64]) -> Result<QuartileBins, PipelineError> {
    if values.len() < QUARTILES {
        return Err(PipelineError::TooFewValues {
            needed: QUARTILES,
            found: values.len(),
        });
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(PipelineError::NonFinite(bad));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let bins = QuartileBins {
        boundaries: [
            quantile(&sorted, 0.25),
            quantile(&sorted, 0.5),
            quantile(&sorted, 0.75),
        ],
    };
    if sorted[0] == sorted[sorted.len() - 1] {
        log::warn!(
            "constant training scores ({}); every value bins to q0",
            sorted[0]
        );
    }
    Ok(bins)
}

impl QuartileBins {
    pub fn apply(&self, value: f64) -> Result<usize, PipelineError> {
        if !value.is_finite() {
            return Err(PipelineError::NonFinite(value));
        }
        Ok(self.boundaries.iter().take_while(|&&b| value > b).count())
    }
}

/// Cut points per surrogate node.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuartileBinner {
    pub bins: BTreeMap<String, QuartileBins>,
}

impl QuartileBinner {
    /// Learns bins for each surrogate from its `<name>.score` column; missing
    /// cells are ignored.
    pub fn fit<'a>(
        data: &DatasetTable,
        surrogates: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self, PipelineError> {
        let mut bins = BTreeMap::new();
        for s in surrogates {
            let column = data.continuous(&score_column(s))?;
            let observed: Vec<f64> = column
                .values
                .iter()
                .copied()
                .filter(|v| !v.is_nan())
                .collect();
            bins.insert(s.to_string(), fit_quartile_bins(&observed)?);
        }
        Ok(Self { bins })
    }

    pub fn get(&self, surrogate: &str) -> Result<&QuartileBins, PipelineError> {
        self.bins
            .get(surrogate)
            .ok_or_else(|| PipelineError::UnknownSurrogate(surrogate.to_string()))
    }

    pub fn apply(&self, surrogate: &str, value: f64) -> Result<usize, PipelineError> {
        self.get(surrogate)?.apply(value)
    }

    /// Adds (or replaces) one discrete quartile column per surrogate, derived
    /// from its score column. Missing scores stay missing.
    pub fn discretize(&self, data: &mut DatasetTable) -> Result<(), PipelineError> {
        for (name, bins) in &self.bins {
            let scores = &data.continuous(&score_column(name))?.values;
            let values = scores
                .iter()
                .map(|&v| {
                    if v.is_nan() {
                        Ok(None)
                    } else {
                        bins.apply(v).map(Some)
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            let states = (0..QUARTILES).map(|k| k.to_string()).collect();
            data.upsert(crate::dataset::Column::Discrete(
                crate::dataset::DiscreteColumn {
                    name: name.clone(),
                    states,
                    values,
                },
            ))?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
