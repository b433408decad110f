//! Synthetic cohorts and random networks.
//!
//! A cohort is a set of users, each with latent depression/anxiety states, a
//! diagnosis flag and demographic tags, contributing one or more records of
//! item-level severities, questionnaire totals, derived target labels and raw
//! surrogate scores. The generator is written independently of the inference
//! network: symptoms depend only on the latent conditions and surrogate scores
//! only on their symptom's binarized state.
//!
//! Randomness is drawn from ChaCha8 seeded with the cohort seed, one stream per
//! user (`set_stream(user)`), so the output does not depend on whether users
//! are generated sequentially or in parallel.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::dataset::{DatasetError, DatasetTable};
use crate::exec::Execution;
use crate::graph::{
    BayesianNetwork, Layout, NetworkSpec, NodeSpec, TabularCpd, CONDITION_STATES, SEVERITY_LEVELS,
};
use crate::pipeline::{condition_target, score_column, Scale, TargetLabel};

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error(
        "P(anxiety | depression) = {comorbidity} is infeasible for prevalences {depression} and {anxiety}: must lie in [{lower}, {upper}]"
    )]
    InfeasibleComorbidity {
        depression: f64,
        anxiety: f64,
        comorbidity: f64,
        lower: f64,
        upper: f64,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub levels: Vec<String>,
    pub weights: Vec<f64>,
}

/// Relative sizes of the development, calibration and test splits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitWeights {
    pub development: f64,
    pub calibration: f64,
    pub test: f64,
}

impl Default for SplitWeights {
    fn default() -> Self {
        Self {
            development: 4.0,
            calibration: 1.0,
            test: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    /// Total number of records.
    pub n: usize,
    pub seed: u64,
    pub records_per_user: usize,
    pub depression_prevalence: f64,
    pub anxiety_prevalence: f64,
    /// Target `P(anxiety | depression)`.
    pub comorbidity: f64,
    /// Severity distribution of a symptom whose condition is absent.
    pub absent_profile: [f64; SEVERITY_LEVELS],
    /// Severity distribution of a symptom whose condition is present.
    pub present_profile: [f64; SEVERITY_LEVELS],
    /// Per symptom, weight of the present profile when its own condition is present.
    pub sharpness: BTreeMap<String, f64>,
    /// Weight of the present profile contributed by the other condition.
    pub cross_condition: f64,
    /// Per surrogate node, discrimination against its symptom's binarized state.
    pub surrogate_auc: BTreeMap<String, f64>,
    /// Probability that a surrogate reads another symptom of the same condition.
    pub surrogate_leak: f64,
    /// Probability of flipping the diagnosis flag.
    pub diagnosis_noise: f64,
    pub groups: Vec<GroupSpec>,
    pub splits: SplitWeights,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self::for_layout(&crate::graph::standard_layout())
    }
}

impl GeneratorConfig {
    pub fn for_layout(layout: &Layout) -> Self {
        Self {
            n: 30_000,
            seed: 20_240_611,
            records_per_user: 1,
            depression_prevalence: 0.30,
            anxiety_prevalence: 0.30,
            comorbidity: 0.42,
            absent_profile: [0.50, 0.32, 0.12, 0.06],
            present_profile: [0.08, 0.27, 0.33, 0.32],
            sharpness: layout.symptoms().map(|s| (s.to_string(), 1.0)).collect(),
            cross_condition: 0.15,
            surrogate_auc: layout
                .surrogates
                .iter()
                .map(|s| (s.name.clone(), s.target_auc))
                .collect(),
            surrogate_leak: 0.0,
            diagnosis_noise: 0.10,
            groups: vec![
                GroupSpec {
                    name: "sex".into(),
                    levels: vec!["female".into(), "male".into()],
                    weights: vec![0.6, 0.4],
                },
                GroupSpec {
                    name: "age".into(),
                    levels: vec!["18-34".into(), "35+".into()],
                    weights: vec![0.45, 0.55],
                },
            ],
            splits: SplitWeights::default(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, GeneratorError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, GeneratorError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// `P(anxiety | no depression)` implied by the prevalences and comorbidity.
    pub fn anxiety_without_depression(&self) -> Result<f64, GeneratorError> {
        let (pd, pa, q1) = (
            self.depression_prevalence,
            self.anxiety_prevalence,
            self.comorbidity,
        );
        if pd == 0.0 {
            return Ok(pa);
        }
        let lower = ((pd + pa - 1.0) / pd).max(0.0);
        let upper = (pa / pd).min(1.0);
        if q1 < lower - 1e-12 || q1 > upper + 1e-12 {
            return Err(GeneratorError::InfeasibleComorbidity {
                depression: pd,
                anxiety: pa,
                comorbidity: q1,
                lower,
                upper,
            });
        }
        if pd == 1.0 {
            return Ok(0.0);
        }
        Ok(((pa - pd * q1) / (1.0 - pd)).clamp(0.0, 1.0))
    }

    pub fn validate(&self, layout: &Layout) -> Result<(), GeneratorError> {
        let bad = |m: String| Err(GeneratorError::InvalidConfig(m));
        let probs = [
            ("depression_prevalence", self.depression_prevalence),
            ("anxiety_prevalence", self.anxiety_prevalence),
            ("comorbidity", self.comorbidity),
            ("cross_condition", self.cross_condition),
            ("surrogate_leak", self.surrogate_leak),
            ("diagnosis_noise", self.diagnosis_noise),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if self.records_per_user == 0 {
            return bad("records_per_user must be positive".into());
        }
        for (name, profile) in [
            ("absent_profile", &self.absent_profile),
            ("present_profile", &self.present_profile),
        ] {
            if profile.iter().any(|p| !(0.0..=1.0).contains(p))
                || (profile.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return bad(format!("{name} is not a distribution"));
            }
        }
        for s in layout.symptoms() {
            match self.sharpness.get(s) {
                Some(w) if (0.0..=1.0).contains(w) => {}
                Some(w) => return bad(format!("sharpness for {s} = {w} outside [0, 1]")),
                None => return bad(format!("no sharpness for symptom {s}")),
            }
        }
        for sur in &layout.surrogates {
            match self.surrogate_auc.get(&sur.name) {
                Some(&a) if a > 0.5 && a < 1.0 => {}
                Some(&a) => {
                    return bad(format!(
                        "target AUC for {} = {a} outside (0.5, 1)",
                        sur.name
                    ))
                }
                None => return bad(format!("no target AUC for surrogate {}", sur.name)),
            }
        }
        for g in &self.groups {
            if g.levels.is_empty()
                || g.levels.len() != g.weights.len()
                || g.weights.iter().any(|w| *w < 0.0)
                || g.weights.iter().sum::<f64>() <= 0.0
            {
                return bad(format!(
                    "group `{}` needs one non-negative weight per level",
                    g.name
                ));
            }
        }
        let w = self.splits;
        if [w.development, w.calibration, w.test]
            .iter()
            .any(|x| *x < 0.0)
            || w.development + w.calibration + w.test <= 0.0
        {
            return bad("split weights must be non-negative with a positive sum".into());
        }
        self.anxiety_without_depression()?;
        Ok(())
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Class separation giving ROC-AUC `auc` between two unit-variance Gaussians.
pub fn separation_for_auc(auc: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    std::f64::consts::SQRT_2 * normal.inverse_cdf(auc)
}

/// Raw score in (0, 1) for a surrogate of a symptom that is (or is not) present.
pub fn surrogate_score<R: Rng + ?Sized>(present: bool, target_auc: f64, rng: &mut R) -> f64 {
    let d = separation_for_auc(target_auc);
    let z: f64 = rng.sample(StandardNormal);
    let shift = if present { d / 2.0 } else { -d / 2.0 };
    logistic(z + shift)
}

fn categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // rounding slack: last state with positive mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn record_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Ancestral sampling of `n` records; record `i` uses stream `i` of `seed`.
pub fn forward_sample(net: &BayesianNetwork, n: usize, seed: u64, exec: Execution) -> DatasetTable {
    let rows = exec.map_range(n, |r| {
        let mut rng = record_rng(seed, r as u64);
        let mut a = vec![0usize; net.len()];
        for &i in net.topological() {
            let config = net
                .parents(i)
                .iter()
                .fold(0, |acc, &p| acc * net.cardinality(p) + a[p]);
            a[i] = categorical(&net.cpd(i).column(config), &mut rng);
        }
        a
    });
    let mut table = DatasetTable::new(n);
    for i in 0..net.len() {
        table
            .push_discrete(
                net.name(i),
                net.node(i).states.clone(),
                rows.iter().map(|a| Some(a[i])).collect(),
            )
            .expect("fresh column");
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Development,
    Calibration,
    Test,
}

struct UserDraw {
    depression: bool,
    anxiety: bool,
    diagnosis: bool,
    groups: Vec<usize>,
    records: Vec<RecordDraw>,
}

struct RecordDraw {
    severities: Vec<usize>,
    scores: Vec<f64>,
}

/// Per-condition record of the generated cohort, in layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub table: DatasetTable,
    pub splits: Vec<Split>,
}

pub const USER_COLUMN: &str = "user_id";
pub const DIAGNOSIS_COLUMN: &str = "diagnosis";

pub fn latent_column(condition: &str) -> String {
    format!("{}_latent", condition.to_lowercase())
}

pub fn total_column(scale: Scale) -> &'static str {
    match scale {
        Scale::Phq8 => "phq8_total",
        Scale::Gad7 => "gad7_total",
    }
}

pub fn group_column(group: &str) -> String {
    format!("group_{group}")
}

impl Cohort {
    pub fn split(&self, which: Split) -> DatasetTable {
        let rows: Vec<usize> = (0..self.splits.len())
            .filter(|&r| self.splits[r] == which)
            .collect();
        self.table.select_rows(&rows)
    }
}

fn scale_of(condition_index: usize) -> Scale {
    if condition_index == 0 {
        Scale::Phq8
    } else {
        Scale::Gad7
    }
}

/// Generates the full cohort. The layout must have two conditions, the first
/// scored on the 8-item scale and the second on the 7-item scale.
pub fn sample_cohort(
    config: &GeneratorConfig,
    layout: &Layout,
    exec: Execution,
) -> Result<Cohort, GeneratorError> {
    config.validate(layout)?;
    if layout.conditions.len() != 2 {
        return Err(GeneratorError::InvalidConfig(
            "cohorts need exactly two conditions".into(),
        ));
    }
    for (c, cond) in layout.conditions.iter().enumerate() {
        if cond.symptoms.len() != scale_of(c).items() {
            return Err(GeneratorError::InvalidConfig(format!(
                "condition {} has {} symptoms, its scale has {} items",
                cond.name,
                cond.symptoms.len(),
                scale_of(c).items()
            )));
        }
    }
    let q0 = config.anxiety_without_depression()?;
    let symptoms: Vec<(&str, usize)> = layout
        .conditions
        .iter()
        .enumerate()
        .flat_map(|(c, cond)| cond.symptoms.iter().map(move |s| (s.as_str(), c)))
        .collect();
    let symptom_index: BTreeMap<&str, usize> =
        symptoms.iter().enumerate().map(|(i, s)| (s.0, i)).collect();
    let siblings: Vec<Vec<usize>> = symptoms
        .iter()
        .enumerate()
        .map(|(i, s)| {
            (0..symptoms.len())
                .filter(|&j| j != i && symptoms[j].1 == s.1)
                .collect()
        })
        .collect();
    let surrogates: Vec<(usize, f64)> = layout
        .surrogates
        .iter()
        .map(|s| {
            (
                symptom_index[s.symptom.as_str()],
                separation_for_auc(config.surrogate_auc[&s.name]),
            )
        })
        .collect();

    let n_users = config.n.div_ceil(config.records_per_user);
    let users = exec.map_range(n_users, |u| {
        let mut rng = record_rng(config.seed, u as u64);
        let depression = rng.random_bool(config.depression_prevalence);
        let anxiety = rng.random_bool(if depression { config.comorbidity } else { q0 });
        let flip = rng.random_bool(config.diagnosis_noise);
        let diagnosis = (depression || anxiety) != flip;
        let groups = config
            .groups
            .iter()
            .map(|g| categorical_weights(&g.weights, &mut rng))
            .collect();
        let latent = [depression, anxiety];
        let n_records = config
            .records_per_user
            .min(config.n - u * config.records_per_user);
        let records = (0..n_records)
            .map(|_| {
                let severities: Vec<usize> = symptoms
                    .iter()
                    .map(|&(name, c)| {
                        let own = if latent[c] {
                            config.sharpness[name]
                        } else {
                            0.0
                        };
                        let other = if latent[1 - c] {
                            config.cross_condition
                        } else {
                            0.0
                        };
                        let w = (own + other).min(1.0);
                        let profile: Vec<f64> = (0..SEVERITY_LEVELS)
                            .map(|k| {
                                (1.0 - w) * config.absent_profile[k] + w * config.present_profile[k]
                            })
                            .collect();
                        categorical(&profile, &mut rng)
                    })
                    .collect();
                let scores = surrogates
                    .iter()
                    .map(|&(s, d)| {
                        let leak: f64 = rng.random();
                        let pick: f64 = rng.random();
                        let source = if leak < config.surrogate_leak && !siblings[s].is_empty() {
                            siblings[s][((pick * siblings[s].len() as f64) as usize)
                                .min(siblings[s].len() - 1)]
                        } else {
                            s
                        };
                        let present = severities[source] >= 2;
                        let z: f64 = rng.sample(StandardNormal);
                        logistic(z + if present { d / 2.0 } else { -d / 2.0 })
                    })
                    .collect();
                RecordDraw { severities, scores }
            })
            .collect();
        UserDraw {
            depression,
            anxiety,
            diagnosis,
            groups,
            records,
        }
    });

    let w = config.splits;
    let total_w = w.development + w.calibration + w.test;
    let dev_users = (n_users as f64 * w.development / total_w).round() as usize;
    let cal_users = (n_users as f64 * w.calibration / total_w).round() as usize;

    let n = config.n;
    let mut user_id = Vec::with_capacity(n);
    let mut splits = Vec::with_capacity(n);
    let mut latent = [Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut diagnosis = Vec::with_capacity(n);
    let mut groups: Vec<Vec<Option<usize>>> = vec![Vec::with_capacity(n); config.groups.len()];
    let mut severities: Vec<Vec<Option<usize>>> = vec![Vec::with_capacity(n); symptoms.len()];
    let mut totals = [Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut targets: [Vec<Option<usize>>; 2] = [Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut scores: Vec<Vec<f64>> = vec![Vec::with_capacity(n); surrogates.len()];
    for (u, user) in users.iter().enumerate() {
        let split = if u < dev_users {
            Split::Development
        } else if u < dev_users + cal_users {
            Split::Calibration
        } else {
            Split::Test
        };
        for rec in &user.records {
            user_id.push(u as f64);
            splits.push(split);
            latent[0].push(Some(user.depression as usize));
            latent[1].push(Some(user.anxiety as usize));
            diagnosis.push(Some(user.diagnosis as usize));
            for (g, &level) in user.groups.iter().enumerate() {
                groups[g].push(Some(level));
            }
            let mut sums = [0usize; 2];
            for (i, &sev) in rec.severities.iter().enumerate() {
                severities[i].push(Some(sev));
                sums[symptoms[i].1] += sev;
            }
            for c in 0..2 {
                totals[c].push(sums[c] as f64);
                let label = condition_target(sums[c], scale_of(c), Some(user.diagnosis))
                    .expect("in-range total");
                targets[c].push(match label {
                    TargetLabel::Present => Some(1),
                    TargetLabel::Absent => Some(0),
                    TargetLabel::Undefined => None,
                });
            }
            for (k, &s) in rec.scores.iter().enumerate() {
                scores[k].push(s);
            }
        }
    }

    let condition_states: Vec<String> = CONDITION_STATES.iter().map(|s| s.to_string()).collect();
    let ordinal: Vec<String> = (0..SEVERITY_LEVELS).map(|k| k.to_string()).collect();
    let mut table = DatasetTable::new(n);
    table.push_continuous(USER_COLUMN, user_id)?;
    for (g, spec) in config.groups.iter().enumerate() {
        table.push_discrete(
            group_column(&spec.name),
            spec.levels.clone(),
            std::mem::take(&mut groups[g]),
        )?;
    }
    for (c, cond) in layout.conditions.iter().enumerate() {
        table.push_discrete(
            latent_column(&cond.name),
            condition_states.clone(),
            std::mem::take(&mut latent[c]),
        )?;
    }
    table.push_discrete(DIAGNOSIS_COLUMN, vec!["0".into(), "1".into()], diagnosis)?;
    for (c, values) in totals.iter_mut().enumerate() {
        table.push_continuous(total_column(scale_of(c)), std::mem::take(values))?;
    }
    for (c, cond) in layout.conditions.iter().enumerate() {
        table.push_discrete(
            cond.name.clone(),
            condition_states.clone(),
            std::mem::take(&mut targets[c]),
        )?;
    }
    for (i, (name, _)) in symptoms.iter().enumerate() {
        table.push_discrete(*name, ordinal.clone(), std::mem::take(&mut severities[i]))?;
    }
    for (k, sur) in layout.surrogates.iter().enumerate() {
        table.push_continuous(score_column(&sur.name), std::mem::take(&mut scores[k]))?;
    }
    Ok(Cohort { table, splits })
}

fn categorical_weights<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    categorical(&probs, rng)
}

/// Shape limits for [`random_network`].
#[derive(Debug, Clone, Copy)]
pub struct RandomNetworkShape {
    pub max_nodes: usize,
    pub max_cardinality: usize,
    pub max_parents: usize,
    pub edge_probability: f64,
    /// Cardinalities are reduced until the joint state space fits.
    pub max_joint: u64,
}

impl Default for RandomNetworkShape {
    fn default() -> Self {
        Self {
            max_nodes: 12,
            max_cardinality: 4,
            max_parents: 3,
            edge_probability: 0.35,
            max_joint: 1 << 16,
        }
    }
}

/// A random DAG over nodes `N0..` with random positive tables. Roughly one
/// table in ten has some exact zeros.
pub fn random_network<R: Rng + ?Sized>(shape: RandomNetworkShape, rng: &mut R) -> BayesianNetwork {
    let n = rng.random_range(1..=shape.max_nodes);
    let mut cards: Vec<usize> = (0..n)
        .map(|_| rng.random_range(2..=shape.max_cardinality))
        .collect();
    while cards.iter().map(|&c| c as u64).product::<u64>() > shape.max_joint {
        let i = (0..n).max_by_key(|&i| (cards[i], i)).expect("non-empty");
        cards[i] -= 1;
    }
    // random topological order, edges only forward
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let name = |i: usize| format!("N{i}");
    let mut edges = Vec::new();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, &child) in order.iter().enumerate() {
        for &parent in &order[..pos] {
            if parents[child].len() < shape.max_parents && rng.random_bool(shape.edge_probability) {
                parents[child].push(parent);
                edges.push((name(parent), name(child)));
            }
        }
    }
    let nodes = (0..n)
        .map(|i| NodeSpec::ordinal(name(i), cards[i]))
        .collect();
    let spec = NetworkSpec::new(nodes, edges);
    let cpds = (0..n)
        .map(|i| {
            let ps: Vec<String> = spec
                .parents_of(&name(i))
                .into_iter()
                .map(String::from)
                .collect();
            let configs: usize = ps
                .iter()
                .map(|p| cards[spec.node_index(p).unwrap()])
                .product();
            let sparse = rng.random_bool(0.1);
            let mut values = vec![0.0; cards[i] * configs];
            for c in 0..configs {
                let mut w: Vec<f64> = (0..cards[i])
                    .map(|_| {
                        if sparse && rng.random_bool(0.3) {
                            0.0
                        } else {
                            rng.random::<f64>() + 1e-3
                        }
                    })
                    .collect();
                if w.iter().all(|&x| x == 0.0) {
                    w[0] = 1.0;
                }
                let t: f64 = w.iter().sum();
                for k in 0..cards[i] {
                    values[k * configs + c] = w[k] / t;
                }
            }
            TabularCpd::new(name(i), ps, cards[i], values).expect("shaped")
        })
        .collect();
    BayesianNetwork::new(spec, cpds).expect("random network is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::standard_layout;
    use crate::inference::{brute_force_joint, EvidenceMap};
    use crate::metrics::roc_auc;

    fn small_config(n: usize) -> GeneratorConfig {
        GeneratorConfig {
            n,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn separation_matches_auc() {
        assert!(separation_for_auc(0.5).abs() < 1e-12);
        // Phi(d / sqrt 2) = auc
        let d = separation_for_auc(0.684);
        let normal = Normal::new(0.0, 1.0).unwrap();
        assert!((normal.cdf(d / std::f64::consts::SQRT_2) - 0.684).abs() < 1e-12);
    }

    #[test]
    fn surrogate_score_hits_target_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (target, n, tol) in [(0.684, 50_000, 0.01), (0.99, 10_000, 0.02)] {
            let labels: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
            let scores: Vec<f64> = labels
                .iter()
                .map(|&l| surrogate_score(l, target, &mut rng))
                .collect();
            let auc = roc_auc(&scores, &labels).unwrap();
            assert!((auc - target).abs() < tol, "{target}: {auc}");
            if target > 0.9 {
                assert!(auc >= 0.97);
            }
        }
    }

    #[test]
    fn config_json_round_trip_and_validation() {
        let cfg = GeneratorConfig::default();
        let back = GeneratorConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        let partial = GeneratorConfig::from_json(r#"{"n": 10, "seed": 3}"#).unwrap();
        assert_eq!(partial.n, 10);
        assert_eq!(partial.comorbidity, 0.42);
        let layout = standard_layout();
        let mut bad = cfg.clone();
        bad.surrogate_auc.insert("sleep-mood-audio".into(), 0.5);
        assert!(bad.validate(&layout).is_err());
        let mut infeasible = cfg.clone();
        infeasible.depression_prevalence = 0.6;
        infeasible.anxiety_prevalence = 0.1;
        infeasible.comorbidity = 0.5;
        assert!(matches!(
            infeasible.validate(&layout),
            Err(GeneratorError::InfeasibleComorbidity { .. })
        ));
        assert!(
            (cfg.anxiety_without_depression().unwrap() - (0.3 - 0.3 * 0.42) / 0.7).abs() < 1e-12
        );
    }

    #[test]
    fn cohort_is_deterministic_and_mode_independent() {
        let layout = standard_layout();
        let cfg = small_config(600);
        let a = sample_cohort(&cfg, &layout, Execution::Sequential).unwrap();
        let b = sample_cohort(&cfg, &layout, Execution::Parallel).unwrap();
        assert_eq!(a.table.to_csv_string(), b.table.to_csv_string());
        let c = sample_cohort(
            &GeneratorConfig { seed: 1, ..cfg },
            &layout,
            Execution::Parallel,
        )
        .unwrap();
        assert_ne!(a.table.to_csv_string(), c.table.to_csv_string());
    }

    #[test]
    fn totals_equal_item_sums() {
        let layout = standard_layout();
        let cohort = sample_cohort(&small_config(2000), &layout, Execution::Parallel).unwrap();
        let t = &cohort.table;
        for (c, cond) in layout.conditions.iter().enumerate() {
            let totals = &t.continuous(total_column(scale_of(c))).unwrap().values;
            for (r, &total) in totals.iter().enumerate() {
                let sum: usize = cond
                    .symptoms
                    .iter()
                    .map(|s| t.discrete(s).unwrap().values[r].unwrap())
                    .sum();
                assert_eq!(total, sum as f64);
                assert!(sum <= scale_of(c).max_total());
            }
        }
    }

    #[test]
    fn splits_are_user_disjoint_and_sized() {
        let layout = standard_layout();
        let cfg = GeneratorConfig {
            n: 3000,
            records_per_user: 2,
            ..GeneratorConfig::default()
        };
        let cohort = sample_cohort(&cfg, &layout, Execution::Parallel).unwrap();
        let users = &cohort.table.continuous(USER_COLUMN).unwrap().values;
        let mut owner: BTreeMap<u64, Split> = BTreeMap::new();
        for (r, &u) in users.iter().enumerate() {
            let prev = owner.insert(u as u64, cohort.splits[r]);
            assert!(prev.is_none() || prev == Some(cohort.splits[r]));
        }
        let count = |s| cohort.splits.iter().filter(|&&x| x == s).count();
        assert_eq!(
            (
                count(Split::Development),
                count(Split::Calibration),
                count(Split::Test)
            ),
            (2000, 500, 500)
        );
    }

    #[test]
    fn zero_prevalence_means_no_cases() {
        let layout = standard_layout();
        let cfg = GeneratorConfig {
            n: 500,
            depression_prevalence: 0.0,
            anxiety_prevalence: 0.0,
            ..GeneratorConfig::default()
        };
        let cohort = sample_cohort(&cfg, &layout, Execution::Parallel).unwrap();
        for cond in &layout.conditions {
            let latent = &cohort
                .table
                .discrete(&latent_column(&cond.name))
                .unwrap()
                .values;
            assert!(latent.iter().all(|v| *v == Some(0)));
        }
        // every symptom draws from the absent profile
        let sev = &cohort.table.discrete("Sleep").unwrap().values;
        let share0 = sev.iter().filter(|v| **v == Some(0)).count() as f64 / 500.0;
        assert!((share0 - 0.5).abs() < 0.08);
    }

    #[test]
    fn forward_sample_matches_exact_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let net = random_network(
            RandomNetworkShape {
                max_nodes: 5,
                ..RandomNetworkShape::default()
            },
            &mut rng,
        );
        let n = 50_000;
        let data = forward_sample(&net, n, 4, Execution::Parallel);
        assert_eq!(data, forward_sample(&net, n, 4, Execution::Sequential));
        for i in 0..net.len() {
            let name = net.name(i);
            let exact = brute_force_joint(&net, &[name], &EvidenceMap::new()).unwrap();
            let col = data.discrete(name).unwrap();
            for (k, &p) in exact.get(name).unwrap().iter().enumerate() {
                let freq = col.values.iter().filter(|v| **v == Some(k)).count() as f64 / n as f64;
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!(
                    (freq - p).abs() <= 3.0 * se + 1e-12,
                    "{name}={k}: {freq} vs {p}"
                );
            }
        }
    }

    #[test]
    fn deterministic_tables_give_constant_records() {
        let spec = NetworkSpec::new(
            vec![NodeSpec::ordinal("A", 2), NodeSpec::ordinal("B", 3)],
            vec![("A".into(), "B".into())],
        );
        let net = BayesianNetwork::new(
            spec,
            vec![
                TabularCpd::from_rows("A", vec![], vec![vec![0.0], vec![1.0]]).unwrap(),
                TabularCpd::from_rows(
                    "B",
                    vec!["A".into()],
                    vec![vec![1.0, 0.0], vec![0.0, 0.0], vec![0.0, 1.0]],
                )
                .unwrap(),
            ],
        )
        .unwrap();
        let data = forward_sample(&net, 100, 1, Execution::Sequential);
        assert!(data
            .discrete("A")
            .unwrap()
            .values
            .iter()
            .all(|v| *v == Some(1)));
        assert!(data
            .discrete("B")
            .unwrap()
            .values
            .iter()
            .all(|v| *v == Some(2)));
    }

    #[test]
    fn random_networks_respect_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let net = random_network(RandomNetworkShape::default(), &mut rng);
            assert!(net.len() <= 12);
            let joint: u64 = (0..net.len()).map(|i| net.cardinality(i) as u64).product();
            assert!(joint <= 1 << 16);
            assert!((0..net.len())
                .all(|i| (2..=4).contains(&net.cardinality(i)) && net.parents(i).len() <= 3));
        }
    }
}
