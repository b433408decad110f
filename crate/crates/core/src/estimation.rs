//! CPD estimation from fully observed discrete records.
//!
//! Bayesian estimation uses the BDeu prior: every (child state, parent
//! configuration) cell of node `X` receives the pseudo count
//! `ess / (card(X) * prod(card(parents)))` before observed counts are added and
//! each column is normalized. Parent order follows edge declaration order in
//! the [`NetworkSpec`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetError, DatasetTable, DiscreteColumn};
use crate::exec::Execution;
use crate::graph::{config_states, BayesianNetwork, GraphError, NetworkSpec, TabularCpd};

pub const DEFAULT_ESS: f64 = 8000.0;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("column `{column}` has states {found:?} but node expects {expected:?}")]
    DomainMismatch {
        column: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("equivalent sample size must be positive and finite, got {0}")]
    InvalidEss(f64),
    #[error("node `{node}` never observed with parent configuration {config:?}")]
    UnobservedConfiguration {
        node: String,
        config: Vec<(String, String)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssConfig {
    pub equivalent_sample_size: f64,
}

impl EssConfig {
    pub fn new(equivalent_sample_size: f64) -> Result<Self, EstimationError> {
        if !(equivalent_sample_size.is_finite() && equivalent_sample_size > 0.0) {
            return Err(EstimationError::InvalidEss(equivalent_sample_size));
        }
        Ok(Self {
            equivalent_sample_size,
        })
    }
}

impl Default for EssConfig {
    fn default() -> Self {
        Self {
            equivalent_sample_size: DEFAULT_ESS,
        }
    }
}

pub fn bdeu_pseudo_count(ess: f64, cardinality: usize, parent_configs: usize) -> f64 {
    ess / (cardinality * parent_configs) as f64
}

/// Observed counts for one node, laid out like its CPD table.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCounts {
    pub child: String,
    pub parents: Vec<String>,
    pub cardinality: usize,
    pub parent_cards: Vec<usize>,
    pub counts: Vec<f64>,
}

impl NodeCounts {
    pub fn n_configs(&self) -> usize {
        self.parent_cards.iter().product()
    }

    pub fn config_total(&self, config: usize) -> f64 {
        let n = self.n_configs();
        (0..self.cardinality)
            .map(|k| self.counts[k * n + config])
            .sum()
    }
}

fn node_columns<'a>(
    spec: &NetworkSpec,
    data: &'a DatasetTable,
) -> Result<Vec<Option<&'a DiscreteColumn>>, EstimationError> {
    if data.n_rows() == 0 {
        return Ok(vec![None; spec.nodes.len()]);
    }
    spec.nodes
        .iter()
        .map(|n| {
            let col = data.discrete(&n.name)?;
            if col.states != n.states {
                return Err(EstimationError::DomainMismatch {
                    column: n.name.clone(),
                    expected: n.states.clone(),
                    found: col.states.clone(),
                });
            }
            Ok(Some(col))
        })
        .collect()
}

/// Counts each node's (state, parent configuration) cells over the rows in
/// which every network node is observed. Incomplete rows are skipped.
pub fn count_cells(
    spec: &NetworkSpec,
    data: &DatasetTable,
    exec: Execution,
) -> Result<Vec<NodeCounts>, EstimationError> {
    let columns = node_columns(spec, data)?;
    let complete: Vec<usize> = (0..data.n_rows())
        .filter(|&r| {
            columns
                .iter()
                .all(|c| c.is_some_and(|c| c.values[r].is_some()))
        })
        .collect();
    let skipped = data.n_rows() - complete.len();
    if skipped > 0 {
        log::info!(
            "skipping {skipped} of {} rows with unobserved network nodes",
            data.n_rows()
        );
    }
    let counts = exec.map_range(spec.nodes.len(), |i| {
        let node = &spec.nodes[i];
        let parents: Vec<String> = spec
            .parents_of(&node.name)
            .into_iter()
            .map(String::from)
            .collect();
        let parent_idx: Vec<usize> = parents
            .iter()
            .map(|p| spec.node_index(p).unwrap())
            .collect();
        let parent_cards: Vec<usize> = parent_idx
            .iter()
            .map(|&p| spec.nodes[p].cardinality())
            .collect();
        let n_configs: usize = parent_cards.iter().product();
        let mut counts = vec![0.0; node.cardinality() * n_configs];
        if let Some(col) = columns[i] {
            for &r in &complete {
                let config = parent_idx
                    .iter()
                    .zip(&parent_cards)
                    .fold(0, |acc, (&p, &c)| {
                        acc * c + columns[p].unwrap().values[r].unwrap()
                    });
                counts[col.values[r].unwrap() * n_configs + config] += 1.0;
            }
        }
        NodeCounts {
            child: node.name.clone(),
            parents,
            cardinality: node.cardinality(),
            parent_cards,
            counts,
        }
    });
    Ok(counts)
}

pub fn fit_bdeu(
    spec: &NetworkSpec,
    data: &DatasetTable,
    ess: EssConfig,
) -> Result<Vec<TabularCpd>, EstimationError> {
    fit_bdeu_with(spec, data, ess, Execution::Sequential)
}

pub fn fit_bdeu_with(
    spec: &NetworkSpec,
    data: &DatasetTable,
    ess: EssConfig,
    exec: Execution,
) -> Result<Vec<TabularCpd>, EstimationError> {
    let counts = count_cells(spec, data, exec)?;
    Ok(counts
        .into_iter()
        .map(|c| {
            let n = c.n_configs();
            let pseudo = bdeu_pseudo_count(ess.equivalent_sample_size, c.cardinality, n);
            let mut values = vec![0.0; c.counts.len()];
            for config in 0..n {
                let total = c.config_total(config) + pseudo * c.cardinality as f64;
                for k in 0..c.cardinality {
                    values[k * n + config] = (c.counts[k * n + config] + pseudo) / total;
                }
            }
            TabularCpd::new(c.child, c.parents, c.cardinality, values).expect("shape from counts")
        })
        .collect())
}

/// Maximum-likelihood CPDs; every parent configuration must be observed.
pub fn fit_mle(
    spec: &NetworkSpec,
    data: &DatasetTable,
) -> Result<Vec<TabularCpd>, EstimationError> {
    let counts = count_cells(spec, data, Execution::Sequential)?;
    counts
        .into_iter()
        .map(|c| {
            let n = c.n_configs();
            let mut values = vec![0.0; c.counts.len()];
            for config in 0..n {
                let total = c.config_total(config);
                if total == 0.0 {
                    let states = config_states(config, &c.parent_cards);
                    let config = c
                        .parents
                        .iter()
                        .zip(states)
                        .map(|(p, s)| (p.clone(), spec.node(p).unwrap().states[s].clone()))
                        .collect();
                    return Err(EstimationError::UnobservedConfiguration {
                        node: c.child.clone(),
                        config,
                    });
                }
                for k in 0..c.cardinality {
                    values[k * n + config] = c.counts[k * n + config] / total;
                }
            }
            Ok(TabularCpd::new(c.child, c.parents, c.cardinality, values)
                .expect("shape from counts"))
        })
        .collect()
}

/// Fits BDeu parameters and assembles a validated network.
pub fn fit_network(
    spec: &NetworkSpec,
    data: &DatasetTable,
    ess: EssConfig,
    exec: Execution,
) -> Result<BayesianNetwork, EstimationError> {
    let cpds = fit_bdeu_with(spec, data, ess, exec)?;
    Ok(BayesianNetwork::new(spec.clone(), cpds)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{validate_network, NodeSpec};
    use proptest::prelude::*;

    fn pair_spec() -> NetworkSpec {
        NetworkSpec::new(
            vec![NodeSpec::ordinal("P", 2), NodeSpec::ordinal("C", 2)],
            vec![("P".into(), "C".into())],
        )
    }

    fn pair_data(rows: &[(usize, usize)]) -> DatasetTable {
        let mut t = DatasetTable::new(rows.len());
        let states = vec!["0".to_string(), "1".to_string()];
        t.push_discrete(
            "P",
            states.clone(),
            rows.iter().map(|r| Some(r.0)).collect(),
        )
        .unwrap();
        t.push_discrete("C", states, rows.iter().map(|r| Some(r.1)).collect())
            .unwrap();
        t
    }

    #[test]
    fn pseudo_count_for_sixteen_parent_configurations() {
        assert_eq!(bdeu_pseudo_count(8000.0, 2, 16), 250.0);
    }

    #[test]
    fn hand_counted_posterior() {
        // parent=0 rows: child counts [3, 1]; ess 4 gives one pseudo count per cell.
        let data = pair_data(&[(0, 0), (0, 0), (0, 0), (0, 1), (1, 1)]);
        let cpds = fit_bdeu(&pair_spec(), &data, EssConfig::new(4.0).unwrap()).unwrap();
        let c = &cpds[1];
        assert!((c.prob(0, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.prob(1, 0) - 1.0 / 3.0).abs() < 1e-12);
        // parent=1: counts [0, 1] -> (0+1)/3, (1+1)/3
        assert!((c.prob(0, 1) - 1.0 / 3.0).abs() < 1e-12);
        // root P: pseudo 2 per state, counts [4, 1] -> 6/9, 3/9
        assert!((cpds[0].prob(0, 0) - 6.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn empty_data_gives_uniform_cpds() {
        let data = pair_data(&[]);
        let cpds = fit_bdeu(&pair_spec(), &data, EssConfig::new(10.0).unwrap()).unwrap();
        assert!(cpds.iter().all(|c| c.values().iter().all(|&v| v == 0.5)));
        // no columns at all is also fine when there are no rows
        let cpds = fit_bdeu(&pair_spec(), &DatasetTable::new(0), EssConfig::default()).unwrap();
        assert!(validate_network(&pair_spec(), &cpds).is_valid());
    }

    #[test]
    fn mle_ratios_and_deterministic_copy() {
        let data = pair_data(&[(0, 0), (0, 0), (0, 0), (0, 1), (1, 1)]);
        let cpds = fit_mle(&pair_spec(), &data).unwrap();
        assert_eq!(cpds[1].column(0), vec![0.75, 0.25]);
        assert_eq!(cpds[1].column(1), vec![0.0, 1.0]);
    }

    #[test]
    fn mle_rejects_unobserved_configuration() {
        let data = pair_data(&[(0, 0), (0, 1)]);
        match fit_mle(&pair_spec(), &data) {
            Err(EstimationError::UnobservedConfiguration { node, config }) => {
                assert_eq!(node, "C");
                assert_eq!(config, vec![("P".to_string(), "1".to_string())]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_invalid_ess() {
        let mut t = DatasetTable::new(1);
        t.push_discrete("P", vec!["0".into(), "1".into()], vec![Some(0)])
            .unwrap();
        assert!(matches!(
            fit_bdeu(&pair_spec(), &t, EssConfig::default()),
            Err(EstimationError::Dataset(DatasetError::MissingColumn(c))) if c == "C"
        ));
        assert!(EssConfig::new(0.0).is_err());
        assert!(EssConfig::new(f64::NAN).is_err());
    }

    #[test]
    fn incomplete_rows_are_skipped() {
        let mut data = pair_data(&[(0, 0), (1, 1)]);
        let mut p = data.discrete("P").unwrap().clone();
        p.values[1] = None;
        data.upsert(crate::dataset::Column::Discrete(p)).unwrap();
        let counts = count_cells(&pair_spec(), &data, Execution::Sequential).unwrap();
        assert_eq!(counts[1].counts.iter().sum::<f64>(), 1.0);
    }

    fn arb_rows() -> impl Strategy<Value = Vec<(usize, usize)>> {
        prop::collection::vec((0usize..2, 0usize..2), 1..60)
    }

    proptest! {
        #[test]
        fn row_order_does_not_matter(rows in arb_rows(), seed in any::<u64>()) {
            let mut shuffled = rows.clone();
            // deterministic permutation from the seed
            let n = shuffled.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            let ess = EssConfig::new(3.0).unwrap();
            let a = fit_bdeu(&pair_spec(), &pair_data(&rows), ess).unwrap();
            let b = fit_bdeu(&pair_spec(), &pair_data(&shuffled), ess).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn larger_ess_moves_toward_uniform(rows in arb_rows(), lo in 0.01f64..10.0, factor in 1.0f64..100.0) {
            let data = pair_data(&rows);
            let a = fit_bdeu(&pair_spec(), &data, EssConfig::new(lo).unwrap()).unwrap();
            let b = fit_bdeu(&pair_spec(), &data, EssConfig::new(lo * factor).unwrap()).unwrap();
            for (ca, cb) in a.iter().zip(&b) {
                for (pa, pb) in ca.values().iter().zip(cb.values()) {
                    prop_assert!((pb - 0.5).abs() <= (pa - 0.5).abs() + 1e-12);
                }
            }
        }

        #[test]
        fn tiny_ess_approaches_mle(rows in arb_rows()) {
            let mut rows = rows;
            rows.extend([(0, 0), (1, 1)]);
            let data = pair_data(&rows);
            let bdeu = fit_bdeu(&pair_spec(), &data, EssConfig::new(1e-9).unwrap()).unwrap();
            let mle = fit_mle(&pair_spec(), &data).unwrap();
            for (a, b) in bdeu.iter().zip(&mle) {
                for (x, y) in a.values().iter().zip(b.values()) {
                    prop_assert!((x - y).abs() < 1e-6);
                }
            }
        }

        #[test]
        fn parallel_counts_are_identical(rows in arb_rows()) {
            let data = pair_data(&rows);
            let ess = EssConfig::new(5.0).unwrap();
            let a = fit_bdeu_with(&pair_spec(), &data, ess, Execution::Sequential).unwrap();
            let b = fit_bdeu_with(&pair_spec(), &data, ess, Execution::Parallel).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
