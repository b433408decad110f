//! Dense factors over discrete variables.
//!
//! A [`Factor`] stores one non-negative value per joint configuration of its
//! scope, laid out row-major (the last scope variable varies fastest). Scope
//! entries are variable ids; callers map ids to node names.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("factor scope requires {expected} values but {found} were given")]
    SizeMismatch { expected: usize, found: usize },
    #[error("variable {0} appears more than once in the scope")]
    DuplicateVariable(usize),
    #[error(
        "variable {var} has cardinality {cardinality}; factor variables need at least one state"
    )]
    EmptyVariable { var: usize, cardinality: usize },
    #[error("factor values must be finite and non-negative, found {0}")]
    InvalidValue(f64),
    #[error("variable {var} has cardinality {left} in one factor and {right} in the other")]
    CardinalityMismatch {
        var: usize,
        left: usize,
        right: usize,
    },
    #[error("variable {0} is not in the factor scope")]
    NotInScope(usize),
    #[error("state {state} is out of range for variable {var} (cardinality {cardinality})")]
    StateOutOfRange {
        var: usize,
        state: usize,
        cardinality: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    vars: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

fn row_major_strides(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; cards.len()];
    for k in (0..cards.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * cards[k + 1];
    }
    strides
}

/// Visits every assignment of `cards` in row-major order, passing the linear
/// offsets obtained by dotting the assignment with `a` and `b`.
fn walk(cards: &[usize], a: &[usize], b: &[usize], mut visit: impl FnMut(usize, usize)) {
    let total: usize = cards.iter().product();
    let mut assignment = vec![0usize; cards.len()];
    let (mut ia, mut ib) = (0usize, 0usize);
    for _ in 0..total {
        visit(ia, ib);
        for k in (0..cards.len()).rev() {
            assignment[k] += 1;
            ia += a[k];
            ib += b[k];
            if assignment[k] < cards[k] {
                break;
            }
            ia -= a[k] * cards[k];
            ib -= b[k] * cards[k];
            assignment[k] = 0;
        }
    }
}

impl Factor {
    pub fn new(vars: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Result<Self, FactorError> {
        assert_eq!(
            vars.len(),
            cards.len(),
            "scope and cardinality lists differ in length"
        );
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(FactorError::DuplicateVariable(*v));
            }
            if cards[i] == 0 {
                return Err(FactorError::EmptyVariable {
                    var: *v,
                    cardinality: 0,
                });
            }
        }
        let expected: usize = cards.iter().product();
        if values.len() != expected {
            return Err(FactorError::SizeMismatch {
                expected,
                found: values.len(),
            });
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(FactorError::InvalidValue(bad));
        }
        Ok(Self {
            vars,
            cards,
            values,
        })
    }

    /// A factor with empty scope holding a single value.
    pub fn scalar(value: f64) -> Self {
        Self {
            vars: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    pub fn ones(vars: Vec<usize>, cards: Vec<usize>) -> Result<Self, FactorError> {
        let n = cards.iter().product();
        Self::new(vars, cards, vec![1.0; n])
    }

    pub fn scope(&self) -> &[usize] {
        &self.vars
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn contains(&self, var: usize) -> bool {
        self.vars.contains(&var)
    }

    fn position(&self, var: usize) -> Option<usize> {
        self.vars.iter().position(|&v| v == var)
    }

    pub fn cardinality_of(&self, var: usize) -> Option<usize> {
        self.position(var).map(|p| self.cards[p])
    }

    /// Value at a full assignment given in scope order.
    pub fn get(&self, assignment: &[usize]) -> f64 {
        let strides = row_major_strides(&self.cards);
        let idx: usize = assignment.iter().zip(&strides).map(|(a, s)| a * s).sum();
        self.values[idx]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Pointwise product. The result scope is `self`'s scope followed by the
    /// variables only `other` has, in `other`'s order.
    pub fn product(&self, other: &Factor) -> Result<Factor, FactorError> {
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        for (i, &v) in other.vars.iter().enumerate() {
            match self.position(v) {
                Some(p) if self.cards[p] != other.cards[i] => {
                    return Err(FactorError::CardinalityMismatch {
                        var: v,
                        left: self.cards[p],
                        right: other.cards[i],
                    })
                }
                Some(_) => {}
                None => {
                    vars.push(v);
                    cards.push(other.cards[i]);
                }
            }
        }
        let self_strides = row_major_strides(&self.cards);
        let other_strides = row_major_strides(&other.cards);
        let a: Vec<usize> = vars
            .iter()
            .map(|&v| self.position(v).map_or(0, |p| self_strides[p]))
            .collect();
        let b: Vec<usize> = vars
            .iter()
            .map(|&v| other.position(v).map_or(0, |p| other_strides[p]))
            .collect();
        let mut values = Vec::with_capacity(cards.iter().product());
        walk(&cards, &a, &b, |i, j| {
            values.push(self.values[i] * other.values[j])
        });
        Ok(Factor {
            vars,
            cards,
            values,
        })
    }

    /// Sums `var` out of the factor.
    pub fn marginalize(&self, var: usize) -> Result<Factor, FactorError> {
        let p = self.position(var).ok_or(FactorError::NotInScope(var))?;
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(p);
        cards.remove(p);
        let out_strides = row_major_strides(&cards);
        let mut to_out = Vec::with_capacity(self.vars.len());
        let mut k = 0;
        for i in 0..self.vars.len() {
            if i == p {
                to_out.push(0);
            } else {
                to_out.push(out_strides[k]);
                k += 1;
            }
        }
        let mut values = vec![0.0; cards.iter().product()];
        let in_strides = row_major_strides(&self.cards);
        walk(&self.cards, &in_strides, &to_out, |i, o| {
            values[o] += self.values[i]
        });
        Ok(Factor {
            vars,
            cards,
            values,
        })
    }

    /// Slices the factor at `var = state` and drops `var` from the scope.
    pub fn reduce(&self, var: usize, state: usize) -> Result<Factor, FactorError> {
        let p = self.position(var).ok_or(FactorError::NotInScope(var))?;
        if state >= self.cards[p] {
            return Err(FactorError::StateOutOfRange {
                var,
                state,
                cardinality: self.cards[p],
            });
        }
        let in_strides = row_major_strides(&self.cards);
        let base = state * in_strides[p];
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        let mut strides = in_strides;
        vars.remove(p);
        cards.remove(p);
        strides.remove(p);
        let zeros = vec![0; cards.len()];
        let mut values = Vec::with_capacity(cards.iter().product());
        walk(&cards, &strides, &zeros, |i, _| {
            values.push(self.values[base + i])
        });
        Ok(Factor {
            vars,
            cards,
            values,
        })
    }

    /// Returns a copy scaled to sum to one, or `None` when the total mass is zero.
    pub fn normalized(&self) -> Option<Factor> {
        let total = self.sum();
        if !(total.is_finite() && total > 0.0) {
            return None;
        }
        let values = self.values.iter().map(|v| v / total).collect();
        Some(Factor {
            vars: self.vars.clone(),
            cards: self.cards.clone(),
            values,
        })
    }

    /// Reorders the scope, permuting values accordingly.
    pub fn permuted(&self, order: &[usize]) -> Result<Factor, FactorError> {
        if order.len() != self.vars.len() {
            return Err(FactorError::SizeMismatch {
                expected: self.vars.len(),
                found: order.len(),
            });
        }
        for &v in order {
            if !self.contains(v) {
                return Err(FactorError::NotInScope(v));
            }
        }
        let cards: Vec<usize> = order
            .iter()
            .map(|&v| self.cardinality_of(v).unwrap())
            .collect();
        let strides = row_major_strides(&self.cards);
        let map: Vec<usize> = order
            .iter()
            .map(|&v| strides[self.position(v).unwrap()])
            .collect();
        let zeros = vec![0; order.len()];
        let mut values = Vec::with_capacity(self.values.len());
        walk(&cards, &map, &zeros, |i, _| values.push(self.values[i]));
        Ok(Factor {
            vars: order.to_vec(),
            cards,
            values,
        })
    }
}
