//! Discrimination, calibration, fairness and threshold metrics for binary
//! probabilistic predictions.
//!
//! Calibration bins are equal-width and right-closed: bin `k` of `m` covers
//! `(k/m, (k+1)/m]`, with 0.0 going to the first bin. Classification is
//! `score >= threshold`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("no records")]
    Empty,
    #[error("scores and labels differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("only one class present")]
    SingleClass,
    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("zero variance")]
    ZeroVariance,
    #[error("need exactly two groups, found {0}")]
    GroupCount(usize),
    #[error("group `{0}` lacks a class")]
    GroupMissingClass(String),
    #[error("bin count must be positive")]
    NoBins,
}

fn check(scores: &[f64], labels: &[bool]) -> Result<(), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(MetricsError::ScoreOutOfRange(bad));
    }
    Ok(())
}

fn both_classes(labels: &[bool]) -> Result<(usize, usize), MetricsError> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    Ok((pos, neg))
}

/// Rank AUC with midranks for ties; equals the Mann-Whitney pair statistic.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    check(scores, labels)?;
    let (pos, neg) = both_classes(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub mean_score: f64,
    pub positive_rate: f64,
    pub count: usize,
}

fn bin_index(score: f64, m: usize) -> usize {
    let mf = m as f64;
    let mut k = ((score * mf).ceil() as isize - 1).clamp(0, m as isize - 1) as usize;
    if k > 0 && score <= k as f64 / mf {
        k -= 1;
    } else if k + 1 < m && score > (k + 1) as f64 / mf {
        k += 1;
    }
    k
}

/// Non-empty bins in increasing order.
pub fn calibration_curve(
    scores: &[f64],
    labels: &[bool],
    m: usize,
) -> Result<Vec<CalibrationBin>, MetricsError> {
    check(scores, labels)?;
    if m == 0 {
        return Err(MetricsError::NoBins);
    }
    let mut sums = vec![(0.0f64, 0usize, 0usize); m];
    for (&s, &l) in scores.iter().zip(labels) {
        let b = &mut sums[bin_index(s, m)];
        b.0 += s;
        b.1 += l as usize;
        b.2 += 1;
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .filter(|(_, b)| b.2 > 0)
        .map(|(k, (sum, pos, count))| CalibrationBin {
            lower: k as f64 / m as f64,
            upper: (k + 1) as f64 / m as f64,
            mean_score: sum / count as f64,
            positive_rate: pos as f64 / count as f64,
            count,
        })
        .collect())
}

pub fn ece(scores: &[f64], labels: &[bool], m: usize) -> Result<f64, MetricsError> {
    let n = scores.len() as f64;
    Ok(calibration_curve(scores, labels, m)?
        .iter()
        .map(|b| b.count as f64 / n * (b.mean_score - b.positive_rate).abs())
        .sum())
}

pub fn mce(scores: &[f64], labels: &[bool], m: usize) -> Result<f64, MetricsError> {
    Ok(calibration_curve(scores, labels, m)?
        .iter()
        .map(|b| (b.mean_score - b.positive_rate).abs())
        .fold(0.0, f64::max))
}

pub fn calibration_curve_csv(bins: &[CalibrationBin]) -> String {
    let mut out = String::from("lower,upper,mean_score,positive_rate,count\n");
    for b in bins {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            b.lower, b.upper, b.mean_score, b.positive_rate, b.count
        );
    }
    out
}

pub fn brier(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    check(scores, labels)?;
    let total: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &l)| {
            let d = s - if l { 1.0 } else { 0.0 };
            d * d
        })
        .sum();
    Ok(total / scores.len() as f64)
}

/// A ratio whose denominator may vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    /// Positive numerator over zero.
    Infinite,
    /// Zero over zero.
    Undefined,
}

impl Ratio {
    pub fn of(num: f64, den: f64) -> Ratio {
        if den != 0.0 {
            Ratio::Finite(num / den)
        } else if num != 0.0 {
            Ratio::Infinite
        } else {
            Ratio::Undefined
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Ratio::Finite(v) => Some(v),
            _ => None,
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Ratio::Finite(v) => s.serialize_f64(*v),
            Ratio::Infinite => s.serialize_str("infinite"),
            Ratio::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Flag(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(Ratio::Finite(v)),
            Repr::Flag(f) if f == "infinite" => Ok(Ratio::Infinite),
            Repr::Flag(f) if f == "undefined" => Ok(Ratio::Undefined),
            Repr::Flag(f) => Err(serde::de::Error::custom(format!(
                "unknown ratio flag `{f}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn at(scores: &[f64], labels: &[bool], threshold: f64) -> Confusion {
        let mut c = Confusion::default();
        for (&s, &l) in scores.iter().zip(labels) {
            match (s >= threshold, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn tpr(&self) -> Ratio {
        Ratio::of(self.tp as f64, (self.tp + self.fn_) as f64)
    }

    pub fn fpr(&self) -> Ratio {
        Ratio::of(self.fp as f64, (self.fp + self.tn) as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceMetrics {
    pub confusion: Confusion,
    pub prevalence: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub ppv: Ratio,
    pub npv: Ratio,
    pub lr_plus: Ratio,
    pub lr_minus: Ratio,
}

pub fn prevalence_metrics(
    scores: &[f64],
    labels: &[bool],
    threshold: f64,
) -> Result<PrevalenceMetrics, MetricsError> {
    check(scores, labels)?;
    let (pos, neg) = both_classes(labels)?;
    let c = Confusion::at(scores, labels, threshold);
    let sens = c.tp as f64 / pos as f64;
    let spec = c.tn as f64 / neg as f64;
    Ok(PrevalenceMetrics {
        confusion: c,
        prevalence: pos as f64 / labels.len() as f64,
        sensitivity: sens,
        specificity: spec,
        ppv: Ratio::of(c.tp as f64, (c.tp + c.fp) as f64),
        npv: Ratio::of(c.tn as f64, (c.tn + c.fn_) as f64),
        lr_plus: Ratio::of(sens, 1.0 - spec),
        lr_minus: Ratio::of(1.0 - sens, spec),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizedOdds {
    pub groups: Vec<String>,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
    /// Largest TPR or FPR gap between groups.
    pub difference: f64,
    /// Smallest min/max ratio of TPR or FPR across groups.
    pub ratio: Ratio,
}

/// Group labels per record; groups are compared in sorted order.
pub fn equalized_odds(
    scores: &[f64],
    labels: &[bool],
    groups: &[String],
    threshold: f64,
) -> Result<EqualizedOdds, MetricsError> {
    check(scores, labels)?;
    if groups.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(groups.len(), labels.len()));
    }
    let mut by_group: BTreeMap<&str, Confusion> = BTreeMap::new();
    for ((&s, &l), g) in scores.iter().zip(labels).zip(groups) {
        let c = by_group.entry(g.as_str()).or_default();
        match (s >= threshold, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    if by_group.len() < 2 {
        return Err(MetricsError::GroupCount(by_group.len()));
    }
    let mut tpr = Vec::new();
    let mut fpr = Vec::new();
    for (g, c) in &by_group {
        match (c.tpr().finite(), c.fpr().finite()) {
            (Some(t), Some(f)) => {
                tpr.push(t);
                fpr.push(f);
            }
            _ => return Err(MetricsError::GroupMissingClass(g.to_string())),
        }
    }
    let spread = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo, Ratio::of(lo, hi))
    };
    let (dt, rt) = spread(&tpr);
    let (df, rf) = spread(&fpr);
    let ratio = match (rt, rf) {
        (Ratio::Finite(a), Ratio::Finite(b)) => Ratio::Finite(a.min(b)),
        (Ratio::Finite(a), _) | (_, Ratio::Finite(a)) => Ratio::Finite(a),
        _ => Ratio::Undefined,
    };
    Ok(EqualizedOdds {
        groups: by_group.keys().map(|g| g.to_string()).collect(),
        tpr,
        fpr,
        difference: dt.max(df),
        ratio,
    })
}

pub fn equalized_odds_difference(
    scores: &[f64],
    labels: &[bool],
    groups: &[String],
    threshold: f64,
) -> Result<f64, MetricsError> {
    Ok(equalized_odds(scores, labels, groups, threshold)?.difference)
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricsError::Empty);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub group: String,
    pub n: usize,
    pub roc_auc: Option<f64>,
    pub ece: f64,
    pub brier: f64,
}

/// Per-group metrics and first-minus-second differences for a two-group split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub groups: Vec<GroupMetrics>,
    pub auc_difference: Option<f64>,
    pub ece_difference: f64,
    pub brier_difference: f64,
    pub equalized_odds_difference: Option<f64>,
    pub equalized_odds_ratio: Option<Ratio>,
}

pub fn fairness_report(
    scores: &[f64],
    labels: &[bool],
    groups: &[String],
    threshold: f64,
) -> Result<FairnessReport, MetricsError> {
    check(scores, labels)?;
    if groups.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(groups.len(), labels.len()));
    }
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        members.entry(g).or_default().push(i);
    }
    if members.len() != 2 {
        return Err(MetricsError::GroupCount(members.len()));
    }
    let per_group = members
        .iter()
        .map(|(g, idx)| {
            let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
            let l: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
            Ok(GroupMetrics {
                group: g.to_string(),
                n: idx.len(),
                roc_auc: roc_auc(&s, &l).ok(),
                ece: ece(&s, &l, DEFAULT_BINS)?,
                brier: brier(&s, &l)?,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    let (a, b) = (&per_group[0], &per_group[1]);
    let eo = equalized_odds(scores, labels, groups, threshold).ok();
    Ok(FairnessReport {
        auc_difference: a.roc_auc.zip(b.roc_auc).map(|(x, y)| x - y),
        ece_difference: a.ece - b.ece,
        brier_difference: a.brier - b.brier,
        equalized_odds_difference: eo.as_ref().map(|e| e.difference),
        equalized_odds_ratio: eo.map(|e| e.ratio),
        groups: per_group,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub positives: usize,
    pub roc_auc: f64,
    pub ece: f64,
    pub mce: f64,
    pub brier: f64,
    pub calibration_curve: Vec<CalibrationBin>,
    pub prevalence: PrevalenceMetrics,
    /// Keyed by group column name.
    pub fairness: BTreeMap<String, FairnessReport>,
}

/// Scores, labels, optional group columns and a classification threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    pub scores: Vec<f64>,
    pub labels: Vec<bool>,
    pub groups: BTreeMap<String, Vec<String>>,
    pub threshold: f64,
}

impl ScoredSet {
    pub fn new(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self, MetricsError> {
        check(&scores, &labels)?;
        Ok(Self {
            scores,
            labels,
            groups: BTreeMap::new(),
            threshold: DEFAULT_THRESHOLD,
        })
    }

    pub fn with_group(
        mut self,
        name: impl Into<String>,
        values: Vec<String>,
    ) -> Result<Self, MetricsError> {
        if values.len() != self.labels.len() {
            return Err(MetricsError::LengthMismatch(
                values.len(),
                self.labels.len(),
            ));
        }
        self.groups.insert(name.into(), values);
        Ok(self)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn report(&self) -> Result<MetricsReport, MetricsError> {
        let (s, l) = (&self.scores, &self.labels);
        let mut fairness = BTreeMap::new();
        for (name, g) in &self.groups {
            match fairness_report(s, l, g, self.threshold) {
                Ok(r) => {
                    fairness.insert(name.clone(), r);
                }
                Err(e) => log::warn!("skipping fairness for `{name}`: {e}"),
            }
        }
        Ok(MetricsReport {
            n: l.len(),
            positives: l.iter().filter(|&&x| x).count(),
            roc_auc: roc_auc(s, l)?,
            ece: ece(s, l, DEFAULT_BINS)?,
            mce: mce(s, l, DEFAULT_BINS)?,
            brier: brier(s, l)?,
            calibration_curve: calibration_curve(s, l, DEFAULT_BINS)?,
            prevalence: prevalence_metrics(s, l, self.threshold)?,
            fairness,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair_auc(scores: &[f64], labels: &[bool]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0.0);
        for (i, &si) in scores.iter().enumerate() {
            for (j, &sj) in scores.iter().enumerate() {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    if si > sj {
                        wins += 1.0;
                    } else if si == sj {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_examples() {
        assert_eq!(
            roc_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap(),
            0.75
        );
        assert_eq!(
            roc_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap(),
            1.0
        );
        assert_eq!(
            roc_auc(&[0.3; 5], &[false, true, false, true, true]).unwrap(),
            0.5
        );
        assert_eq!(
            roc_auc(&[0.3, 0.4], &[true, true]),
            Err(MetricsError::SingleClass)
        );
    }

    #[test]
    fn ece_examples() {
        let s = [0.2, 0.4, 0.6, 0.8];
        let l = [false, true, true, true];
        assert!((ece(&s, &l, 2).unwrap() - 0.25).abs() < 1e-12);
        assert!((mce(&s, &l, 2).unwrap() - 0.3).abs() < 1e-12);
        // every score equals its bin's positive rate
        let s = [0.5, 0.5, 1.0, 0.0];
        let l = [true, false, true, false];
        assert_eq!(ece(&s, &l, 10).unwrap(), 0.0);
    }

    #[test]
    fn bins_are_right_closed() {
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 0);
        assert_eq!(bin_index(0.10000001, 10), 1);
        assert_eq!(bin_index(0.3, 10), 2);
        assert_eq!(bin_index(0.7, 10), 6);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.5, 2), 0);
        let curve = calibration_curve(&[0.05, 0.95], &[false, true], 10).unwrap();
        assert_eq!(curve.len(), 2);
        assert_eq!((curve[0].lower, curve[1].upper), (0.0, 1.0));
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier(&[1.0, 0.0], &[true, false]).unwrap(), 0.0);
        assert_eq!(brier(&[0.5; 4], &[true, false, true, true]).unwrap(), 0.25);
    }

    #[test]
    fn prevalence_examples() {
        // TP=3, FP=1, TN=6, FN=2
        let mut s = vec![0.9; 3];
        let mut l = vec![true; 3];
        s.push(0.7);
        l.push(false);
        s.extend([0.1; 6]);
        l.extend([false; 6]);
        s.extend([0.2; 2]);
        l.extend([true; 2]);
        let m = prevalence_metrics(&s, &l, 0.5).unwrap();
        assert_eq!(
            m.confusion,
            Confusion {
                tp: 3,
                fp: 1,
                tn: 6,
                fn_: 2
            }
        );
        assert_eq!(m.ppv, Ratio::Finite(0.75));
        assert_eq!(m.npv, Ratio::Finite(0.75));
        assert!((m.lr_plus.finite().unwrap() - 4.2).abs() < 1e-12);
        assert!((m.lr_minus.finite().unwrap() - 0.4 / (6.0 / 7.0)).abs() < 1e-12);
        assert!((m.lr_minus.finite().unwrap() - 0.467).abs() < 1e-3);

        let m = prevalence_metrics(&[0.9, 0.1], &[true, false], 0.5).unwrap();
        assert_eq!(m.ppv, Ratio::Finite(1.0));
        assert_eq!(m.npv, Ratio::Finite(1.0));
        assert_eq!(m.lr_plus, Ratio::Infinite);
        assert_eq!(m.lr_minus, Ratio::Finite(0.0));
        assert_eq!(serde_json::to_string(&m.lr_plus).unwrap(), "\"infinite\"");
        assert_eq!(
            serde_json::from_str::<Ratio>("\"undefined\"").unwrap(),
            Ratio::Undefined
        );
    }

    #[test]
    fn threshold_ties_classify_positive() {
        let c = Confusion::at(&[0.5], &[true], 0.5);
        assert_eq!(c.tp, 1);
    }

    fn groups(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn equalized_odds_examples() {
        // group a: TPR 0.8, FPR 0.2; group b: TPR 0.6, FPR 0.3
        let mut s = Vec::new();
        let mut l = Vec::new();
        let mut g = Vec::new();
        let mut add = |grp: &str, tp: usize, fn_: usize, fp: usize, tn: usize| {
            for (n, score, label) in [
                (tp, 0.9, true),
                (fn_, 0.1, true),
                (fp, 0.9, false),
                (tn, 0.1, false),
            ] {
                for _ in 0..n {
                    s.push(score);
                    l.push(label);
                    g.push(grp.to_string());
                }
            }
        };
        add("a", 8, 2, 2, 8);
        add("b", 6, 4, 3, 7);
        let eo = equalized_odds(&s, &l, &g, 0.5).unwrap();
        assert!((eo.difference - 0.2).abs() < 1e-12);
        assert!((eo.ratio.finite().unwrap() - 0.2 / 0.3).abs() < 1e-12);

        let same = equalized_odds_difference(
            &[0.9, 0.1, 0.9, 0.1],
            &[true, false, true, false],
            &groups(&["a", "a", "b", "b"]),
            0.5,
        );
        assert_eq!(same.unwrap(), 0.0);
        let missing = equalized_odds(
            &[0.9, 0.1, 0.9],
            &[true, false, true],
            &groups(&["a", "a", "b"]),
            0.5,
        );
        assert_eq!(missing, Err(MetricsError::GroupMissingClass("b".into())));
    }

    #[test]
    fn pearson_examples() {
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap() - 0.9820).abs() < 1e-4);
        assert_eq!(
            pearson_r(&[1.0, 1.0], &[1.0, 2.0]),
            Err(MetricsError::ZeroVariance)
        );
    }

    #[test]
    fn identical_groups_have_zero_differences() {
        let s = [0.2, 0.7, 0.4, 0.9, 0.2, 0.7, 0.4, 0.9];
        let l = [false, true, false, true, false, true, false, true];
        let r = fairness_report(
            &s,
            &l,
            &groups(&["x", "x", "x", "x", "y", "y", "y", "y"]),
            0.5,
        )
        .unwrap();
        assert_eq!(r.auc_difference, Some(0.0));
        assert_eq!(r.ece_difference, 0.0);
        assert_eq!(r.brier_difference, 0.0);
        assert_eq!(r.equalized_odds_difference, Some(0.0));
    }

    fn scored() -> impl Strategy<Value = (Vec<f64>, Vec<bool>, Vec<String>)> {
        proptest::collection::vec((0u16..=100, any::<bool>(), any::<bool>()), 4..120).prop_map(
            |v| {
                let s = v.iter().map(|x| x.0 as f64 / 100.0).collect();
                let l = v.iter().map(|x| x.1).collect();
                let g = v
                    .iter()
                    .map(|x| if x.2 { "f" } else { "m" }.to_string())
                    .collect();
                (s, l, g)
            },
        )
    }

    proptest! {
        #[test]
        fn auc_matches_pair_oracle_and_symmetries((s, l, _) in scored()) {
            prop_assume!(l.iter().any(|&x| x) && l.iter().any(|&x| !x));
            let auc = roc_auc(&s, &l).unwrap();
            prop_assert!((auc - pair_auc(&s, &l)).abs() < 1e-12);
            let flipped: Vec<bool> = l.iter().map(|&x| !x).collect();
            prop_assert!((auc + roc_auc(&s, &flipped).unwrap() - 1.0).abs() < 1e-12);
            let warped: Vec<f64> = s.iter().map(|&x| x.powi(3) * 0.5 + 0.1).collect();
            prop_assert!((auc - roc_auc(&warped, &l).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn calibration_bounds_and_curve_agree((s, l, _) in scored()) {
            let e = ece(&s, &l, 10).unwrap();
            let m = mce(&s, &l, 10).unwrap();
            let b = brier(&s, &l).unwrap();
            prop_assert!((0.0..=1.0).contains(&e) && e <= m + 1e-12 && m <= 1.0);
            prop_assert!((0.0..=1.0).contains(&b));
            let direct: f64 = s.iter().zip(&l).map(|(&x, &y)| (x - y as u8 as f64).powi(2)).sum::<f64>() / s.len() as f64;
            prop_assert!((b - direct).abs() < 1e-12);
            let curve = calibration_curve(&s, &l, 10).unwrap();
            prop_assert_eq!(curve.iter().map(|c| c.count).sum::<usize>(), s.len());
            for c in &curve {
                let members: Vec<usize> = (0..s.len()).filter(|&i| s[i] > c.lower - 1e-12 && s[i] <= c.upper + 1e-12 && bin_index(s[i], 10) == (c.lower * 10.0).round() as usize).collect();
                prop_assert_eq!(members.len(), c.count);
                let pos = members.iter().filter(|&&i| l[i]).count() as f64;
                prop_assert!((c.positive_rate - pos / c.count as f64).abs() < 1e-12);
            }
        }

        #[test]
        fn prevalence_identity((s, l, _) in scored(), t in 0.05f64..0.95) {
            prop_assume!(l.iter().any(|&x| x) && l.iter().any(|&x| !x));
            let m = prevalence_metrics(&s, &l, t).unwrap();
            if let (Ratio::Finite(ppv), Ratio::Finite(lr)) = (m.ppv, m.lr_plus) {
                if ppv < 1.0 {
                    let odds = m.prevalence / (1.0 - m.prevalence);
                    prop_assert!((ppv / (1.0 - ppv) - lr * odds).abs() < 1e-9);
                }
            }
            for r in [m.ppv, m.npv, m.lr_plus, m.lr_minus] {
                if let Ratio::Finite(v) = r { prop_assert!(v.is_finite() && v >= 0.0); }
            }
        }

        #[test]
        fn metrics_ignore_record_order((s, l, g) in scored(), seed in any::<u64>()) {
            prop_assume!(l.iter().any(|&x| x) && l.iter().any(|&x| !x));
            let mut idx: Vec<usize> = (0..s.len()).collect();
            let mut state = seed;
            for i in (1..idx.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                idx.swap(i, (state >> 33) as usize % (i + 1));
            }
            let s2: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
            let l2: Vec<bool> = idx.iter().map(|&i| l[i]).collect();
            let g2: Vec<String> = idx.iter().map(|&i| g[i].clone()).collect();
            prop_assert!((roc_auc(&s, &l).unwrap() - roc_auc(&s2, &l2).unwrap()).abs() < 1e-12);
            prop_assert!((ece(&s, &l, 10).unwrap() - ece(&s2, &l2, 10).unwrap()).abs() < 1e-12);
            prop_assert!((brier(&s, &l).unwrap() - brier(&s2, &l2).unwrap()).abs() < 1e-12);
            prop_assert_eq!(equalized_odds(&s, &l, &g, 0.5).ok().map(|e| e.difference), equalized_odds(&s2, &l2, &g2, 0.5).ok().map(|e| e.difference));
        }

        #[test]
        fn fairness_cells_match_standalone_and_swap((s, l, g) in scored()) {
            let Ok(r) = fairness_report(&s, &l, &g, 0.5) else { return Ok(()); };
            for gm in &r.groups {
                let idx: Vec<usize> = (0..s.len()).filter(|&i| g[i] == gm.group).collect();
                let gs: Vec<f64> = idx.iter().map(|&i| s[i]).collect();
                let gl: Vec<bool> = idx.iter().map(|&i| l[i]).collect();
                prop_assert_eq!(gm.ece, ece(&gs, &gl, 10).unwrap());
                prop_assert_eq!(gm.brier, brier(&gs, &gl).unwrap());
                prop_assert_eq!(gm.roc_auc, roc_auc(&gs, &gl).ok());
            }
            let swapped: Vec<String> = g.iter().map(|x| if x == "f" { "m".to_string() } else { "f".to_string() }).collect();
            let r2 = fairness_report(&s, &l, &swapped, 0.5).unwrap();
            prop_assert!((r.ece_difference.abs() - r2.ece_difference.abs()).abs() < 1e-12);
            prop_assert!((r.brier_difference.abs() - r2.brier_difference.abs()).abs() < 1e-12);
            prop_assert_eq!(r.auc_difference.map(f64::abs), r2.auc_difference.map(f64::abs));
            prop_assert_eq!(r.equalized_odds_difference, r2.equalized_odds_difference);
        }

        #[test]
        fn equalized_odds_matches_confusion_oracle((s, l, g) in scored(), t in 0.0f64..1.0) {
            let Ok(eo) = equalized_odds(&s, &l, &g, t) else { return Ok(()); };
            let mut rates = Vec::new();
            for grp in ["f", "m"] {
                let (mut tp, mut p, mut fp, mut n) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
                for i in 0..s.len() {
                    if g[i] != grp { continue; }
                    if l[i] { p += 1.0; if s[i] >= t { tp += 1.0; } } else { n += 1.0; if s[i] >= t { fp += 1.0; } }
                }
                rates.push((tp / p, fp / n));
            }
            let want = f64::max((rates[0].0 - rates[1].0).abs(), (rates[0].1 - rates[1].1).abs());
            prop_assert!((eo.difference - want).abs() < 1e-12);
        }
    }
}
