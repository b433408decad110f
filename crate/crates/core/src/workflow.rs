//! Train / predict / calibrate / evaluate over cohort tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, DatasetTable};
use crate::estimation::{fit_network, EssConfig, EstimationError};
use crate::exec::Execution;
use crate::graph::{BayesianNetwork, Family, Layout, NetworkSpec};
use crate::inference::{node_marginal, EvidenceMap, InferenceError};
use crate::metrics::{pearson_r, roc_auc, MetricsError, MetricsReport, ScoredSet};
use crate::pipeline::{
    binarize_symptom, dsm_targets, fit_calibrator, score_column, CalibratorSet, PipelineError,
    QuartileBinner,
};
use crate::synthgen::{group_column, total_column};

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Invalid(String),
}

/// Learns quartile bins from the raw surrogate scores, discretizes, and fits
/// the network with the BDeu prior.
pub fn train(
    data: &DatasetTable,
    layout: &Layout,
    spec: &NetworkSpec,
    ess: EssConfig,
    exec: Execution,
) -> Result<(BayesianNetwork, QuartileBinner), WorkflowError> {
    let binner = if data.n_rows() == 0 {
        QuartileBinner::default()
    } else {
        QuartileBinner::fit(data, layout.surrogates.iter().map(|s| s.name.as_str()))?
    };
    let mut table = data.clone();
    if data.n_rows() > 0 {
        binner.discretize(&mut table)?;
    }
    Ok((fit_network(spec, &table, ess, exec)?, binner))
}

/// Surrogate evidence for one record of a discretized table.
pub struct EvidenceReader<'a> {
    columns: Vec<(usize, &'a [Option<usize>])>,
}

impl<'a> EvidenceReader<'a> {
    /// Reads the quartile columns of `layout`'s surrogates, optionally only
    /// those of the given families.
    pub fn new(
        net: &BayesianNetwork,
        layout: &Layout,
        data: &'a DatasetTable,
        families: Option<&[Family]>,
    ) -> Result<Self, WorkflowError> {
        let mut columns = Vec::new();
        for s in &layout.surrogates {
            if families.is_some_and(|f| !f.contains(&s.family)) {
                continue;
            }
            let i = net.index_of(&s.name).map_err(InferenceError::from)?;
            columns.push((i, data.discrete(&s.name)?.values.as_slice()));
        }
        Ok(Self { columns })
    }

    pub fn row(&self, r: usize) -> Vec<(usize, usize)> {
        self.columns
            .iter()
            .filter_map(|(i, col)| col[r].map(|s| (*i, s)))
            .collect()
    }

    pub fn evidence_map(&self, net: &BayesianNetwork, r: usize) -> EvidenceMap {
        self.row(r)
            .into_iter()
            .map(|(i, s)| (net.name(i).to_string(), s))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordPrediction {
    /// Uncalibrated `P(condition = present)`.
    pub conditions: BTreeMap<String, f64>,
    /// Severity posterior per symptom; empty unless requested.
    pub symptoms: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
pub struct PredictOptions {
    pub families: Option<Vec<Family>>,
    pub symptoms: bool,
}

pub fn predict_batch(
    net: &BayesianNetwork,
    layout: &Layout,
    data: &DatasetTable,
    options: &PredictOptions,
    exec: Execution,
) -> Result<Vec<RecordPrediction>, WorkflowError> {
    let reader = EvidenceReader::new(net, layout, data, options.families.as_deref())?;
    let conditions: Vec<(String, usize, usize)> = layout
        .condition_names()
        .into_iter()
        .map(|c| {
            let i = net.index_of(c)?;
            let present = net.state_of(i, "present").unwrap_or(net.cardinality(i) - 1);
            Ok((c.to_string(), i, present))
        })
        .collect::<Result<_, crate::graph::GraphError>>()
        .map_err(InferenceError::from)?;
    let symptoms: Vec<(String, usize)> = if options.symptoms {
        layout
            .symptoms()
            .map(|s| Ok((s.to_string(), net.index_of(s)?)))
            .collect::<Result<_, crate::graph::GraphError>>()
            .map_err(InferenceError::from)?
    } else {
        Vec::new()
    };
    let out = exec.try_map_range(data.n_rows(), |r| {
        let ev = reader.row(r);
        let mut pred = RecordPrediction {
            conditions: BTreeMap::new(),
            symptoms: BTreeMap::new(),
        };
        for (name, i, present) in &conditions {
            pred.conditions
                .insert(name.clone(), node_marginal(net, *i, &ev)?[*present]);
        }
        for (name, i) in &symptoms {
            pred.symptoms
                .insert(name.clone(), node_marginal(net, *i, &ev)?);
        }
        Ok::<_, InferenceError>(pred)
    })?;
    Ok(out)
}

/// Discretizes `data` in place when its quartile columns are missing.
pub fn ensure_discretized(
    data: &mut DatasetTable,
    binner: &QuartileBinner,
    layout: &Layout,
) -> Result<(), WorkflowError> {
    let missing = layout
        .surrogates
        .iter()
        .any(|s| data.discrete(&s.name).is_err());
    if missing {
        binner.discretize(data)?;
    }
    Ok(())
}

/// Condition labels of a cohort table: `Some(true)` for present, `None` when undefined.
pub fn condition_labels(
    data: &DatasetTable,
    condition: &str,
) -> Result<Vec<Option<bool>>, WorkflowError> {
    let col = data.discrete(condition)?;
    let present = col
        .states
        .iter()
        .position(|s| s == "present")
        .ok_or_else(|| {
            WorkflowError::Invalid(format!("column `{condition}` has no `present` state"))
        })?;
    Ok(col.values.iter().map(|v| v.map(|s| s == present)).collect())
}

/// Scores and labels restricted to records with a defined label.
fn labelled(scores: &[f64], labels: &[Option<bool>]) -> (Vec<usize>, Vec<f64>, Vec<bool>) {
    let mut idx = Vec::new();
    let mut s = Vec::new();
    let mut l = Vec::new();
    for (r, (&score, label)) in scores.iter().zip(labels).enumerate() {
        if let Some(y) = label {
            idx.push(r);
            s.push(score);
            l.push(*y);
        }
    }
    (idx, s, l)
}

pub fn fit_calibrators(
    predictions: &[RecordPrediction],
    data: &DatasetTable,
    layout: &Layout,
    n_bags: usize,
    seed: u64,
    exec: Execution,
) -> Result<CalibratorSet, WorkflowError> {
    let mut set = CalibratorSet::default();
    for c in layout.condition_names() {
        let scores: Vec<f64> = predictions.iter().map(|p| p.conditions[c]).collect();
        let (_, s, l) = labelled(&scores, &condition_labels(data, c)?);
        set.conditions
            .insert(c.to_string(), fit_calibrator(&s, &l, n_bags, seed, exec)?);
    }
    Ok(set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEvaluation {
    pub labelled: usize,
    pub raw: MetricsReport,
    pub calibrated: Option<MetricsReport>,
    /// AUC against the symptom-count criteria, where computable.
    pub dsm_auc: BTreeMap<String, f64>,
    /// Correlation of the expected severity total with the questionnaire total.
    pub severity_r: Option<f64>,
    /// AUC using only one surrogate family's evidence.
    pub family_auc: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomEvaluation {
    /// AUC of `P(severity >= 2)` against the binarized item score.
    pub network_auc: f64,
    /// Raw-score AUC of each surrogate against the same target.
    pub surrogate_auc: BTreeMap<String, f64>,
    pub best_surrogate: String,
    pub best_surrogate_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub records: usize,
    pub threshold: f64,
    pub conditions: BTreeMap<String, ConditionEvaluation>,
    pub symptoms: BTreeMap<String, SymptomEvaluation>,
    /// `P(second condition | first present)` and the reverse, from the network.
    pub comorbidity: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub threshold: f64,
    pub family_breakdown: bool,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self {
            threshold: crate::metrics::DEFAULT_THRESHOLD,
            family_breakdown: true,
        }
    }
}

fn group_columns(data: &DatasetTable) -> BTreeMap<String, Vec<String>> {
    let mut out = BTreeMap::new();
    for col in data.columns() {
        if let crate::dataset::Column::Discrete(d) = col {
            if let Some(name) = d.name.strip_prefix("group_") {
                debug_assert_eq!(group_column(name), d.name);
                out.insert(
                    name.to_string(),
                    d.values
                        .iter()
                        .map(|v| v.map_or(String::new(), |s| d.states[s].clone()))
                        .collect(),
                );
            }
        }
    }
    out
}

fn metrics_for(
    scores: &[f64],
    labels: &[bool],
    idx: &[usize],
    groups: &BTreeMap<String, Vec<String>>,
    threshold: f64,
) -> Result<MetricsReport, WorkflowError> {
    let mut set = ScoredSet::new(scores.to_vec(), labels.to_vec())?.with_threshold(threshold);
    for (name, values) in groups {
        let g: Vec<String> = idx.iter().map(|&r| values[r].clone()).collect();
        if g.iter().all(|x| !x.is_empty()) {
            set = set.with_group(name.clone(), g)?;
        }
    }
    Ok(set.report()?)
}

type DsmRule = fn(&crate::pipeline::DsmTargets) -> bool;

/// Full evaluation of a discretized cohort table.
pub fn evaluate(
    net: &BayesianNetwork,
    layout: &Layout,
    data: &DatasetTable,
    calibrators: Option<&CalibratorSet>,
    options: &EvaluateOptions,
    exec: Execution,
) -> Result<EvaluationReport, WorkflowError> {
    let predictions = predict_batch(
        net,
        layout,
        data,
        &PredictOptions {
            families: None,
            symptoms: true,
        },
        exec,
    )?;
    let groups = group_columns(data);

    let mut family_predictions = BTreeMap::new();
    if options.family_breakdown {
        for family in Family::ALL {
            if layout.surrogates.iter().any(|s| s.family == family) {
                let p = predict_batch(
                    net,
                    layout,
                    data,
                    &PredictOptions {
                        families: Some(vec![family]),
                        symptoms: false,
                    },
                    exec,
                )?;
                family_predictions.insert(family.label().to_string(), p);
            }
        }
    }

    let has_items = layout.symptoms().all(|s| data.discrete(s).is_ok());
    let dsm = if has_items {
        let item = |s: &str, r: usize| data.discrete(s).ok().and_then(|c| c.values[r]);
        let mut rows = Vec::with_capacity(data.n_rows());
        for r in 0..data.n_rows() {
            let dep: Option<Vec<usize>> = layout.conditions[0]
                .symptoms
                .iter()
                .map(|s| item(s, r))
                .collect();
            let anx: Option<Vec<usize>> = layout.conditions.get(1).map_or(Some(Vec::new()), |c| {
                c.symptoms.iter().map(|s| item(s, r)).collect()
            });
            rows.push(match (dep, anx) {
                (Some(d), Some(a)) => dsm_targets(&d, &a).ok(),
                _ => None,
            });
        }
        Some(rows)
    } else {
        None
    };

    let mut conditions = BTreeMap::new();
    for (c_idx, cond) in layout.conditions.iter().enumerate() {
        let c = cond.name.as_str();
        let raw: Vec<f64> = predictions.iter().map(|p| p.conditions[c]).collect();
        let (idx, s, l) = labelled(&raw, &condition_labels(data, c)?);
        let raw_report = metrics_for(&s, &l, &idx, &groups, options.threshold)?;
        let calibrated = match calibrators {
            Some(set) => {
                let cal = s
                    .iter()
                    .map(|&x| set.calibrate(c, x))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(metrics_for(&cal, &l, &idx, &groups, options.threshold)?)
            }
            None => None,
        };

        let mut dsm_auc = BTreeMap::new();
        if let Some(rows) = &dsm {
            let criteria: Vec<(&str, DsmRule)> = if c_idx == 0 {
                vec![
                    ("mdd", |t| t.mdd),
                    ("other_depression", |t| t.other_depression),
                ]
            } else {
                vec![("gad", |t| t.gad)]
            };
            for (name, f) in criteria {
                let (sc, lb): (Vec<f64>, Vec<bool>) = rows
                    .iter()
                    .zip(&raw)
                    .filter_map(|(t, &p)| t.as_ref().map(|t| (p, f(t))))
                    .unzip();
                if let Ok(a) = roc_auc(&sc, &lb) {
                    dsm_auc.insert(name.to_string(), a);
                }
            }
        }

        let severity_r = match data.continuous(total_column(if c_idx == 0 {
            crate::pipeline::Scale::Phq8
        } else {
            crate::pipeline::Scale::Gad7
        })) {
            Ok(totals) => {
                let expected: Vec<f64> = predictions
                    .iter()
                    .map(|p| {
                        cond.symptoms
                            .iter()
                            .map(|s| {
                                p.symptoms[s]
                                    .iter()
                                    .enumerate()
                                    .map(|(k, x)| k as f64 * x)
                                    .sum::<f64>()
                            })
                            .sum()
                    })
                    .collect();
                pearson_r(&expected, &totals.values).ok()
            }
            Err(_) => None,
        };

        let mut family_auc = BTreeMap::new();
        for (family, preds) in &family_predictions {
            let fs: Vec<f64> = idx.iter().map(|&r| preds[r].conditions[c]).collect();
            family_auc.insert(family.clone(), roc_auc(&fs, &l)?);
        }

        conditions.insert(
            c.to_string(),
            ConditionEvaluation {
                labelled: l.len(),
                raw: raw_report,
                calibrated,
                dsm_auc,
                severity_r,
                family_auc,
            },
        );
    }

    let mut symptoms = BTreeMap::new();
    if has_items {
        for s in layout.symptoms() {
            let truth: Vec<bool> = data
                .discrete(s)?
                .values
                .iter()
                .map(|v| v.map(binarize_symptom).transpose())
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .map(|v| v.unwrap_or(false))
                .collect();
            let present: Vec<f64> = predictions
                .iter()
                .map(|p| p.symptoms[s][2..].iter().sum::<f64>().clamp(0.0, 1.0))
                .collect();
            let network_auc = roc_auc(&present, &truth)?;
            let mut surrogate_auc = BTreeMap::new();
            for sur in layout.surrogates_of(s) {
                if let Ok(col) = data.continuous(&score_column(&sur.name)) {
                    let (sc, lb): (Vec<f64>, Vec<bool>) = col
                        .values
                        .iter()
                        .zip(&truth)
                        .filter(|(v, _)| !v.is_nan())
                        .map(|(&v, &t)| (v, t))
                        .unzip();
                    surrogate_auc.insert(sur.name.clone(), roc_auc(&sc, &lb)?);
                }
            }
            let (best_surrogate, best_surrogate_auc) = surrogate_auc
                .iter()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, v)| (k.clone(), *v))
                .unwrap_or_default();
            symptoms.insert(
                s.to_string(),
                SymptomEvaluation {
                    network_auc,
                    surrogate_auc,
                    best_surrogate,
                    best_surrogate_auc,
                },
            );
        }
    }

    Ok(EvaluationReport {
        records: data.n_rows(),
        threshold: options.threshold,
        conditions,
        symptoms,
        comorbidity: comorbidity(net, layout)?,
    })
}

/// `P(b = present | a = present)` for each ordered pair of conditions.
pub fn comorbidity(
    net: &BayesianNetwork,
    layout: &Layout,
) -> Result<BTreeMap<String, f64>, WorkflowError> {
    let mut out = BTreeMap::new();
    let names = layout.condition_names();
    for &a in &names {
        for &b in &names {
            if a == b {
                continue;
            }
            let (ia, ib) = (
                net.index_of(a).map_err(InferenceError::from)?,
                net.index_of(b).map_err(InferenceError::from)?,
            );
            let sa = net.state_of(ia, "present").map_err(InferenceError::from)?;
            let sb = net.state_of(ib, "present").map_err(InferenceError::from)?;
            let p = node_marginal(net, ib, &[(ia, sa)])?;
            out.insert(format!("{b}|{a}"), p[sb]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::standard_layout;
    use crate::synthgen::{sample_cohort, GeneratorConfig, Split};

    #[test]
    fn small_pipeline_runs_end_to_end() {
        let layout = standard_layout();
        let cfg = GeneratorConfig {
            n: 6000,
            ..GeneratorConfig::default()
        };
        let cohort = sample_cohort(&cfg, &layout, Execution::Parallel).unwrap();
        let spec = layout.network_spec(true);
        let (net, binner) = train(
            &cohort.split(Split::Development),
            &layout,
            &spec,
            EssConfig::default(),
            Execution::Parallel,
        )
        .unwrap();
        let mut cal = cohort.split(Split::Calibration);
        binner.discretize(&mut cal).unwrap();
        let preds = predict_batch(
            &net,
            &layout,
            &cal,
            &PredictOptions::default(),
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(preds.len(), cal.n_rows());
        let set = fit_calibrators(&preds, &cal, &layout, 10, 1, Execution::Parallel).unwrap();
        let mut test = cohort.split(Split::Test);
        binner.discretize(&mut test).unwrap();
        let report = evaluate(
            &net,
            &layout,
            &test,
            Some(&set),
            &EvaluateOptions::default(),
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(report.conditions.len(), 2);
        assert_eq!(report.symptoms.len(), 15);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("roc_auc") && json.contains("ece"));
        for e in report.conditions.values() {
            assert!(e.raw.roc_auc > 0.6);
            // calibration is monotone, so ranking survives up to ties
            assert!(e.calibrated.as_ref().unwrap().roc_auc >= e.raw.roc_auc - 0.005);
        }
    }

    #[test]
    fn empty_training_data_gives_uniform_network() {
        let layout = standard_layout();
        let spec = layout.network_spec(true);
        let (net, binner) = train(
            &DatasetTable::new(0),
            &layout,
            &spec,
            EssConfig::default(),
            Execution::Sequential,
        )
        .unwrap();
        assert!(binner.bins.is_empty());
        assert!(net.cpds().iter().all(|c| {
            let v = 1.0 / c.cardinality() as f64;
            c.values().iter().all(|x| (x - v).abs() < 1e-12)
        }));
    }
}
