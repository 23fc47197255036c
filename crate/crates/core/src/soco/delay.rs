use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-step sets `D_t` of context indices newly revealed at `t`, with
/// maximum delay `q`. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelaySchedule {
    pub q: usize,
    pub reveal_sets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `τ ∈ D_t` but not in `[t − q, t]`.
    OutOfWindow,
    /// `τ` revealed twice.
    Duplicate,
    /// `τ ≤ t − q` but not yet revealed at `t`.
    Overdue,
    /// Not every index is revealed by the end of the horizon.
    NeverRevealed,
    /// `reveal_sets` does not have one entry per step.
    WrongLength,
}

/// First violated `(t, τ)` found by [`validate_delay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayViolation {
    pub kind: ViolationKind,
    pub t: usize,
    pub tau: usize,
}

impl fmt::Display for DelayViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at t={} (tau={})", self.kind, self.t, self.tau)
    }
}

impl DelaySchedule {
    /// `D_t = {t}`.
    pub fn no_delay(horizon: usize) -> Self {
        Self {
            q: 0,
            reveal_sets: (1..=horizon).map(|t| vec![t]).collect(),
        }
    }

    /// Context `τ` arrives at `min(τ + delays[τ-1], T)`.
    pub fn from_delays(delays: &[usize], q: usize) -> Result<Self> {
        let horizon = delays.len();
        let mut reveal_sets = vec![Vec::new(); horizon];
        for (i, &d) in delays.iter().enumerate() {
            if d > q {
                return Err(Error::InvalidInput(format!(
                    "delay {d} of context {} exceeds q={q}",
                    i + 1
                )));
            }
            let tau = i + 1;
            let at = (tau + d).min(horizon);
            reveal_sets[at - 1].push(tau);
        }
        Ok(Self { q, reveal_sets })
    }

    /// Every context delayed by exactly `q` steps; the tail is revealed at `T`.
    pub fn identical(horizon: usize, q: usize) -> Self {
        Self::from_delays(&vec![q; horizon], q).expect("delays bounded by q")
    }

    /// Independent uniform delays in `0..=q`.
    pub fn random<R: Rng>(horizon: usize, q: usize, rng: &mut R) -> Self {
        let delays: Vec<usize> = (0..horizon).map(|_| rng.random_range(0..=q)).collect();
        Self::from_delays(&delays, q).expect("delays bounded by q")
    }

    pub fn horizon(&self) -> usize {
        self.reveal_sets.len()
    }

    /// `D_t`.
    pub fn revealed_at(&self, t: usize) -> &[usize] {
        &self.reveal_sets[t - 1]
    }

    /// `(A_t, B_t)`: indices revealed by `t`, and `{1..t} \ A_t`.
    pub fn revealed_sets(&self, t: usize) -> (BTreeSet<usize>, BTreeSet<usize>) {
        let a: BTreeSet<usize> = self.reveal_sets[..t].iter().flatten().copied().collect();
        let b = (1..=t).filter(|tau| !a.contains(tau)).collect();
        (a, b)
    }

    /// Step at which each context is revealed (`None` if never).
    pub fn reveal_times(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.horizon()];
        for (i, set) in self.reveal_sets.iter().enumerate() {
            for &tau in set {
                if (1..=out.len()).contains(&tau) && out[tau - 1].is_none() {
                    out[tau - 1] = Some(i + 1);
                }
            }
        }
        out
    }

    /// Whether every `D_t` contains `t`, i.e. the current context is always known.
    pub fn is_immediate(&self) -> bool {
        self.reveal_sets
            .iter()
            .enumerate()
            .all(|(i, s)| s.contains(&(i + 1)))
    }
}

/// Checks the three schedule invariants and reports the first violation.
pub fn validate_delay(schedule: &DelaySchedule, horizon: usize) -> Result<(), DelayViolation> {
    if schedule.reveal_sets.len() != horizon {
        return Err(DelayViolation {
            kind: ViolationKind::WrongLength,
            t: schedule.reveal_sets.len(),
            tau: horizon,
        });
    }
    let q = schedule.q;
    let mut seen = vec![false; horizon + 1];
    for t in 1..=horizon {
        let mut set = schedule.reveal_sets[t - 1].clone();
        set.sort_unstable();
        for tau in set {
            if tau < 1 || tau > t || tau + q < t {
                return Err(DelayViolation {
                    kind: ViolationKind::OutOfWindow,
                    t,
                    tau,
                });
            }
            if seen[tau] {
                return Err(DelayViolation {
                    kind: ViolationKind::Duplicate,
                    t,
                    tau,
                });
            }
            seen[tau] = true;
        }
        if t > q {
            if let Some(tau) = (1..=t - q).find(|&tau| !seen[tau]) {
                return Err(DelayViolation {
                    kind: ViolationKind::Overdue,
                    t,
                    tau,
                });
            }
        }
    }
    if let Some(tau) = (1..=horizon).find(|&tau| !seen[tau]) {
        return Err(DelayViolation {
            kind: ViolationKind::NeverRevealed,
            t: horizon,
            tau,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(q: usize, sets: &[&[usize]]) -> DelaySchedule {
        DelaySchedule {
            q,
            reveal_sets: sets.iter().map(|s| s.to_vec()).collect(),
        }
    }

    #[test]
    fn no_delay_is_valid() {
        assert!(validate_delay(&DelaySchedule::no_delay(5), 5).is_ok());
    }

    #[test]
    fn one_step_catch_up_is_valid() {
        assert!(validate_delay(&sched(1, &[&[], &[1, 2], &[3]]), 3).is_ok());
    }

    #[test]
    fn overdue_context_is_reported() {
        let v = validate_delay(&sched(1, &[&[], &[2], &[3]]), 3).unwrap_err();
        assert_eq!(v.kind, ViolationKind::Overdue);
        assert_eq!((v.t, v.tau), (2, 1));
    }

    #[test]
    fn out_of_window_and_duplicates() {
        let v = validate_delay(&sched(0, &[&[1], &[1, 2]]), 2).unwrap_err();
        assert_eq!(v.kind, ViolationKind::OutOfWindow);
        let v = validate_delay(&sched(1, &[&[1], &[1, 2]]), 2).unwrap_err();
        assert_eq!(v.kind, ViolationKind::Duplicate);
        let v = validate_delay(&sched(2, &[&[], &[1]]), 2).unwrap_err();
        assert_eq!(v.kind, ViolationKind::NeverRevealed);
    }

    #[test]
    fn revealed_sets_examples() {
        let s = sched(1, &[&[], &[1, 2], &[3]]);
        let (a, b) = s.revealed_sets(1);
        assert!(a.is_empty());
        assert_eq!(b.into_iter().collect::<Vec<_>>(), vec![1]);
        let (a, b) = s.revealed_sets(2);
        assert_eq!(a.into_iter().collect::<Vec<_>>(), vec![1, 2]);
        assert!(b.is_empty());
    }

    #[test]
    fn identical_delay_clamps_tail() {
        let s = DelaySchedule::identical(5, 2);
        assert_eq!(s.reveal_sets, vec![vec![], vec![], vec![1], vec![2], vec![3, 4, 5]]);
        assert!(validate_delay(&s, 5).is_ok());
    }
}
