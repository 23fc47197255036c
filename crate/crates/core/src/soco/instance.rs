use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decision vector `x_t ∈ ℝⁿ`.
pub type Action = DVector<f64>;
/// Online context `y_t` parameterising the hitting cost.
pub type Context = DVector<f64>;

/// A context sequence with its initial actions; the unit of evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    contexts: Vec<Context>,
    /// `x_{-p+1}, …, x_0`, oldest first.
    initial_actions: Vec<Action>,
    dim: usize,
}

impl ProblemInstance {
    pub fn new(contexts: Vec<Context>, initial_actions: Vec<Action>) -> Result<Self> {
        if contexts.is_empty() {
            return Err(Error::InvalidInput("instance needs at least one context".into()));
        }
        let Some(first) = initial_actions.first() else {
            return Err(Error::InvalidInput("instance needs at least one initial action".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidInput("action dimension must be positive".into()));
        }
        for (i, a) in initial_actions.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "initial action",
                    index: i,
                    expected: dim,
                    found: a.len(),
                });
            }
        }
        let m = contexts[0].len();
        for (i, y) in contexts.iter().enumerate() {
            if y.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "context",
                    index: i + 1,
                    expected: m,
                    found: y.len(),
                });
            }
        }
        Ok(Self {
            contexts,
            initial_actions,
            dim,
        })
    }

    pub fn horizon(&self) -> usize {
        self.contexts.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn context_dim(&self) -> usize {
        self.contexts[0].len()
    }

    pub fn memory(&self) -> usize {
        self.initial_actions.len()
    }

    /// Context `y_t` for `t ∈ 1..=T`.
    pub fn context(&self, t: usize) -> &Context {
        &self.contexts[t - 1]
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn initial_actions(&self) -> &[Action] {
        &self.initial_actions
    }

    /// Same instance with replaced contexts (same horizon and context dim).
    pub fn with_contexts(&self, contexts: Vec<Context>) -> Result<Self> {
        if contexts.len() != self.horizon() {
            return Err(Error::DimensionMismatch {
                what: "context sequence length",
                index: 0,
                expected: self.horizon(),
                found: contexts.len(),
            });
        }
        Self::new(contexts, self.initial_actions.clone())
    }
}

/// Read-only view over `x_{1-p}, …, x_0, x_1, …` addressed by signed time.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    initial: &'a [Action],
    actions: &'a [Action],
}

impl<'a> History<'a> {
    pub fn new(initial: &'a [Action], actions: &'a [Action]) -> Self {
        Self { initial, actions }
    }

    /// `x_t` for `1 - p <= t <= len`.
    pub fn at(&self, t: isize) -> &'a Action {
        if t <= 0 {
            &self.initial[(self.initial.len() as isize - 1 + t) as usize]
        } else {
            &self.actions[(t - 1) as usize]
        }
    }

    /// `[x_{t-1}, x_{t-2}, …, x_{t-p}]`, newest first.
    pub fn lags(&self, t: usize, p: usize) -> Vec<&'a Action> {
        (1..=p).map(|i| self.at(t as isize - i as isize)).collect()
    }
}
