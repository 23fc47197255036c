use std::collections::VecDeque;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tape::{NodeId, Params, Tape};
use crate::rcl::{Advisor, Observation};
use crate::soco::{Action, ActionSpace, Context, DelaySchedule, ProblemInstance};

const W1: usize = 0;
const B1: usize = 1;
const W2: usize = 2;
const B2: usize = 3;
const W3: usize = 4;
const WS: usize = 5;
const B3: usize = 6;

/// Shape of the recurrent advice model.
///
/// The input at step `t` stacks the previous `p` advice actions with
/// `slots` context slots for `τ = t, t−1, …, t−slots+1`; each slot carries
/// the context if it is revealed at `t` (zeros otherwise) plus a presence bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub action_dim: usize,
    pub context_dim: usize,
    pub memory: usize,
    pub slots: usize,
    pub hidden: usize,
}

impl Architecture {
    /// Two tanh layers of 8 units; enough slots for delay `q`.
    pub fn new(action_dim: usize, context_dim: usize, memory: usize, q: usize) -> Self {
        Self {
            action_dim,
            context_dim,
            memory,
            slots: q + 1,
            hidden: 8,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.memory * self.action_dim + self.slots * (self.context_dim + 1)
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        let (h, n, i) = (self.hidden, self.action_dim, self.input_dim());
        vec![(h, i + h), (h, 1), (h, h), (h, 1), (n, h), (n, i), (n, 1)]
    }
}

/// Recurrent predictor: `h¹_t = tanh(W₁[u_t; h¹_{t−1}] + b₁)`,
/// `h²_t = tanh(W₂h¹_t + b₂)`, `x̃_t = clip(W₃h²_t + W_s u_t + b₃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    pub arch: Architecture,
    pub params: Params,
    pub seed: u64,
}

impl Predictor {
    /// Weights drawn from `uniform(−0.5, 0.5)/fan_in`.
    pub fn new(arch: Architecture, seed: u64) -> Self {
        let mut params = Params::zeros(&arch.shapes());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fan_in = [
            arch.input_dim() + arch.hidden,
            arch.input_dim() + arch.hidden,
            arch.hidden,
            arch.hidden,
            arch.hidden + arch.input_dim(),
            arch.hidden + arch.input_dim(),
            arch.hidden + arch.input_dim(),
        ];
        for (block, fan) in fan_in.iter().enumerate() {
            for v in params.block_mut(block) {
                *v = rng.random_range(-0.5..0.5) / *fan as f64;
            }
        }
        Self { arch, params, seed }
    }

    /// As [`Predictor::new`], with the output bias moved to the box centre so
    /// that initial advice is not clipped (a clipped output passes no gradient).
    pub fn centered(arch: Architecture, seed: u64, space: &ActionSpace) -> Self {
        let mut pred = Self::new(arch, seed);
        for (b, c) in pred.params.block_mut(6).iter_mut().zip(space.center().iter()) {
            *b += c;
        }
        pred
    }

    pub fn zeros(arch: Architecture) -> Self {
        Self {
            arch,
            params: Params::zeros(&arch.shapes()),
            seed: 0,
        }
    }

    /// Starts a causal rollout for one episode.
    pub fn rollout<'a>(&'a self, initial_actions: &[Action], space: &'a ActionSpace) -> Rollout<'a> {
        Rollout::new(self, initial_actions, space)
    }

    /// Full advice trace `x̃_{1:T}` with its tape.
    pub fn forward(&self, instance: &ProblemInstance, schedule: &DelaySchedule, space: &ActionSpace) -> Forward {
        let mut r = self.rollout(instance.initial_actions(), space);
        for t in 1..=instance.horizon() {
            let revealed: Vec<(usize, &Context)> = schedule
                .revealed_at(t)
                .iter()
                .map(|&tau| (tau, instance.context(tau)))
                .collect();
            r.step(t, &revealed);
        }
        r.finish()
    }
}

/// Recorded forward pass of one episode.
#[derive(Debug, Clone)]
pub struct Forward {
    pub advice: Vec<Action>,
    pub tape: Tape,
    /// Tape node of each `x̃_t`.
    pub outputs: Vec<NodeId>,
}

/// Step-by-step forward pass, recording onto a tape.
#[derive(Debug, Clone)]
pub struct Rollout<'a> {
    predictor: &'a Predictor,
    space: &'a ActionSpace,
    tape: Tape,
    prev: VecDeque<NodeId>,
    hidden: NodeId,
    outputs: Vec<NodeId>,
}

impl<'a> Rollout<'a> {
    fn new(predictor: &'a Predictor, initial_actions: &[Action], space: &'a ActionSpace) -> Self {
        let arch = predictor.arch;
        let mut tape = Tape::new();
        let prev = initial_actions
            .iter()
            .rev()
            .take(arch.memory)
            .map(|a| tape.leaf(a.clone()))
            .collect();
        let hidden = tape.leaf(DVector::zeros(arch.hidden));
        Self {
            predictor,
            space,
            tape,
            prev,
            hidden,
            outputs: Vec::new(),
        }
    }

    /// Advice for step `t` given the contexts revealed at `t`.
    pub fn step(&mut self, t: usize, revealed: &[(usize, &Context)]) -> Action {
        let arch = self.predictor.arch;
        let p = &self.predictor.params;
        let m = arch.context_dim;
        let mut slots = DVector::zeros(arch.slots * (m + 1));
        for &(tau, y) in revealed {
            if tau <= t && t - tau < arch.slots {
                let off = (t - tau) * (m + 1);
                slots.rows_mut(off, m).copy_from(y);
                slots[off + m] = 1.0;
            }
        }
        let tape = &mut self.tape;
        let ctx = tape.leaf(slots);
        let mut parts: Vec<NodeId> = self.prev.iter().copied().collect();
        parts.push(ctx);
        let u = tape.concat(parts, p);
        let z = tape.concat(vec![u, self.hidden], p);
        let a1 = tape.matvec(W1, z, p);
        let a1 = tape.bias(B1, a1, p);
        let h1 = tape.tanh(a1, p);
        let a2 = tape.matvec(W2, h1, p);
        let a2 = tape.bias(B2, a2, p);
        let h2 = tape.tanh(a2, p);
        let o = tape.matvec(W3, h2, p);
        let skip = tape.matvec(WS, u, p);
        let o = tape.add(o, skip, p);
        let o = tape.bias(B3, o, p);
        let x = tape.clip(o, self.space.lower().clone(), self.space.upper().clone(), p);
        self.hidden = h1;
        if arch.memory > 0 {
            self.prev.pop_back();
            self.prev.push_front(x);
        }
        self.outputs.push(x);
        tape.value(x).clone()
    }

    pub fn finish(self) -> Forward {
        Forward {
            advice: self.outputs.iter().map(|&id| self.tape.value(id).clone()).collect(),
            tape: self.tape,
            outputs: self.outputs,
        }
    }
}

/// Streams predictor advice into an RCL episode.
#[derive(Debug, Clone)]
pub struct PredictorAdvisor<'a> {
    rollout: Rollout<'a>,
}

impl<'a> PredictorAdvisor<'a> {
    pub fn new(predictor: &'a Predictor, instance: &ProblemInstance, space: &'a ActionSpace) -> Self {
        Self {
            rollout: predictor.rollout(instance.initial_actions(), space),
        }
    }
}

impl Advisor for PredictorAdvisor<'_> {
    fn advise(&mut self, obs: &Observation<'_>) -> Action {
        self.rollout.step(obs.t, &obs.revealed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> DVector<f64> {
        DVector::from_vec(vec![v])
    }

    fn instance() -> ProblemInstance {
        ProblemInstance::new(vec![s(0.3), s(-0.6), s(0.9), s(2.0)], vec![s(0.1)]).unwrap()
    }

    #[test]
    fn zero_weights_give_clipped_origin() {
        let space = ActionSpace::uniform(1, 0.2, 1.0).unwrap();
        let pred = Predictor::zeros(Architecture::new(1, 1, 1, 0));
        let f = pred.forward(&instance(), &DelaySchedule::no_delay(4), &space);
        assert!(f.advice.iter().all(|a| a[0] == 0.2));
    }

    #[test]
    fn handcrafted_skip_copies_revealed_context() {
        let space = ActionSpace::uniform(1, -1.0, 1.0).unwrap();
        let mut pred = Predictor::zeros(Architecture::new(1, 1, 1, 0));
        // u = [x̃_{t−1}, y_t, mask]
        pred.params.block_mut(WS)[1] = 1.0;
        let f = pred.forward(&instance(), &DelaySchedule::no_delay(4), &space);
        let got: Vec<f64> = f.advice.iter().map(|a| a[0]).collect();
        assert_eq!(got, vec![0.3, -0.6, 0.9, 1.0]);
    }

    #[test]
    fn future_contexts_do_not_leak() {
        let space = ActionSpace::uniform(1, -1.0, 1.0).unwrap();
        let pred = Predictor::new(Architecture::new(1, 1, 1, 2), 4);
        let sched = DelaySchedule::identical(4, 1);
        let a = pred.forward(&instance(), &sched, &space);
        let mut ctx = instance().contexts().to_vec();
        ctx[3] = s(-5.0);
        let other = instance().with_contexts(ctx).unwrap();
        let b = pred.forward(&other, &sched, &space);
        assert_eq!(a.advice[..3], b.advice[..3]);
    }

    #[test]
    fn streaming_matches_batch_forward() {
        let space = ActionSpace::uniform(1, -1.0, 1.0).unwrap();
        let pred = Predictor::new(Architecture::new(1, 1, 1, 1), 8);
        let inst = instance();
        let sched = DelaySchedule::identical(4, 1);
        let f = pred.forward(&inst, &sched, &space);
        let mut adv = PredictorAdvisor::new(&pred, &inst, &space);
        for t in 1..=4 {
            let obs = Observation {
                t,
                revealed: sched.revealed_at(t).iter().map(|&tau| (tau, inst.context(tau))).collect(),
                space: &space,
            };
            assert_eq!(adv.advise(&obs), f.advice[t - 1]);
        }
    }
}
