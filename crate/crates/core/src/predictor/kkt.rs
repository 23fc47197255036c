//! Implicit differentiation through the robustification step.
//!
//! With the constraint active, the projected action solves
//! `x − x̃ + μ∇g(x) = 0`, `μ·g(x) = 0`, where `g = LHS − RHS`. Differentiating
//! these conditions gives the blocks below.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::rcl::{g_weights, RclContext, StepConstraint};
use crate::soco::{Action, History};

/// Blocks of the differentiated KKT system at one projected step.
#[derive(Debug, Clone, PartialEq)]
pub struct KktBlocks {
    /// `I + μ∇²g(x_t)`.
    pub delta11: DMatrix<f64>,
    /// `∇g(x_t)`.
    pub delta12: DVector<f64>,
    /// `μ∇g(x_t)ᵀ`.
    pub delta21: RowDVector<f64>,
    /// `g(x_t)`.
    pub delta22: f64,
    /// `Δ₂₂ − Δ₂₁Δ₁₁⁻¹Δ₁₂`.
    pub schur: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitGrads {
    /// `∂x_t/∂x̃_t`.
    pub d_x_d_advice: DMatrix<f64>,
    /// `∂x_t/∂c`, where `c` shifts the already-incurred part of the LHS.
    pub d_x_d_prevcost: DVector<f64>,
}

/// `|Sc|` below this is treated as singular and pseudo-inverted to zero.
const SCHUR_EPS: f64 = 1e-12;

fn solve_spd(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.solve(rhs))
        .ok_or_else(|| Error::InvalidInput("KKT block Δ11 is not positive definite".into()))
}

fn assemble(delta11: DMatrix<f64>, delta12: DVector<f64>, delta22: f64, mu: f64) -> Result<KktBlocks> {
    let delta21 = delta12.transpose() * mu;
    let sol = solve_spd(&delta11, &DMatrix::from_column_slice(delta12.len(), 1, delta12.as_slice()))?;
    let schur = delta22 - (&delta21 * &sol)[(0, 0)];
    Ok(KktBlocks {
        delta11,
        delta12,
        delta21,
        delta22,
        schur,
        mu,
    })
}

pub fn kkt_blocks(x_t: &Action, mu: f64, constraint: &StepConstraint<'_>) -> Result<KktBlocks> {
    let n = x_t.len();
    let delta11 = DMatrix::identity(n, n) + constraint.hessian(x_t) * mu;
    assemble(delta11, constraint.gradient(x_t), constraint.value(x_t), mu)
}

/// The blocks on the coordinates with `free[i] = true`; the others sit on
/// an active box bound and are held fixed.
pub fn restrict(blocks: &KktBlocks, free: &[bool]) -> Result<KktBlocks> {
    let idx: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
    let k = idx.len();
    let d11 = DMatrix::from_fn(k, k, |i, j| blocks.delta11[(idx[i], idx[j])]);
    let d12 = DVector::from_fn(k, |i, _| blocks.delta12[idx[i]]);
    assemble(d11, d12, blocks.delta22, blocks.mu)
}

fn pinv(schur: f64) -> f64 {
    if schur.abs() < SCHUR_EPS {
        0.0
    } else {
        1.0 / schur
    }
}

/// `∂x_t/∂x̃_t = Δ₁₁⁻¹[I + Δ₁₂Sc⁻¹Δ₂₁Δ₁₁⁻¹]` and
/// `∂x_t/∂c = Δ₁₁⁻¹Δ₁₂Sc⁻¹μ`.
pub fn implicit_grads(b: &KktBlocks) -> Result<ImplicitGrads> {
    let n = b.delta12.len();
    let inv = solve_spd(&b.delta11, &DMatrix::identity(n, n))?;
    let sc = pinv(b.schur);
    let v = &inv * &b.delta12;
    let d_x_d_advice = &inv + &v * (sc * (&b.delta21 * &inv));
    let d_x_d_prevcost = v * (sc * b.mu);
    Ok(ImplicitGrads {
        d_x_d_advice,
        d_x_d_prevcost,
    })
}

/// Vector–Jacobian product through one projection.
///
/// For an upstream adjoint `x̄` returns `(w, s)` such that for a perturbation
/// `(a, β)` of the KKT right-hand sides (`Δ₁₁dx + Δ₁₂dμ = a`,
/// `Δ₂₁dx + Δ₂₂dμ = β`) we have `x̄ᵀdx = wᵀa − s·β`.
pub fn adjoint(b: &KktBlocks, xbar: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let n = xbar.len();
    let chol = b
        .delta11
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("KKT block Δ11 is not positive definite".into()))?;
    let u = chol.solve(xbar);
    let s = u.dot(&b.delta12) * pinv(b.schur);
    let w = &u + chol.solve(&DVector::from_iterator(n, b.delta21.iter().copied())) * s;
    Ok((w, s))
}

/// `∂g/∂x_s` for every past step `s = 1..t−1`, holding `x_t = actions[t−1]`.
pub fn constraint_past_gradient(ctx: &RclContext<'_>, actions: &[Action], t: usize) -> Vec<DVector<f64>> {
    let model = ctx.model;
    let inst = ctx.instance;
    let n = inst.dim();
    let p = model.p();
    let own = History::new(inst.initial_actions(), &actions[..t]);
    let (a_t, _) = ctx.schedule.revealed_sets(t);
    let h2 = model.beta_h() * (1.0 + 1.0 / ctx.config.lambda0);
    let mut g: Vec<DVector<f64>> = vec![DVector::zeros(n); t.saturating_sub(1)];
    for s in 1..t {
        let xs = &actions[s - 1];
        g[s - 1] += if a_t.contains(&s) {
            model.hitting.gradient(xs, inst.context(s))
        } else {
            (xs - &ctx.expert.actions[s - 1]) * h2
        };
    }
    for tau in 1..=t {
        let lags = own.lags(tau, p);
        let r = own.at(tau as isize) - model.switching.delta(&lags);
        if tau < t {
            g[tau - 1] += &r;
        }
        for slot in 0..p {
            let s = tau as isize - 1 - slot as isize;
            if s >= 1 && (s as usize) < t {
                g[s as usize - 1] -= model.switching.jacobian(&lags, slot).transpose() * &r;
            }
        }
    }
    let w = g_weights(model.switching.lipschitz(), ctx.config.lambda0);
    for (i, wi) in w.iter().enumerate().skip(1) {
        if t > i {
            let s = t - i;
            g[s - 1] += (&actions[s - 1] - &ctx.expert.actions[s - 1]) * (2.0 * wi);
        }
    }
    g
}
