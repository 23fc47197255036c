use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg::{box_qp, BandedSpd};
use crate::optim::{projected_gradient, PgOptions};
use crate::soco::{eval_cost, Action, CostModel, History, HittingKind, ProblemInstance, Trajectory};

const ACTIVE_SET_ROUNDS: usize = 200;
const FALLBACK_ITERS: usize = 100_000;
const FALLBACK_TOL: f64 = 1e-8;

fn stack(actions: &[Action]) -> DVector<f64> {
    let n = actions.first().map_or(0, |a| a.len());
    DVector::from_iterator(actions.len() * n, actions.iter().flat_map(|a| a.iter().copied()))
}

fn unstack(z: &DVector<f64>, n: usize) -> Vec<Action> {
    z.as_slice()
        .chunks(n)
        .map(DVector::from_column_slice)
        .collect()
}

/// Gradient of the total cost `Σ_t f(x_t, y_t) + d(x_t, x_{t-p:t-1})` with
/// respect to the stacked actions `[x_1; …; x_T]`.
pub fn cost_gradient(
    instance: &ProblemInstance,
    model: &CostModel,
    actions: &[Action],
) -> DVector<f64> {
    let n = instance.dim();
    let p = model.p();
    let horizon = actions.len();
    let hist = History::new(instance.initial_actions(), actions);
    let mut g = DVector::zeros(horizon * n);
    for t in 1..=horizon {
        let x = &actions[t - 1];
        let lags = hist.lags(t, p);
        let r = x - model.switching.delta(&lags);
        let hit = model.hitting.gradient(x, instance.context(t)) + &r;
        g.rows_mut((t - 1) * n, n).add_assign(&hit);
        for slot in 0..p {
            let s = t as isize - 1 - slot as isize;
            if s >= 1 {
                let jt = model.switching.jacobian(&lags, slot).transpose();
                let mut rows = g.rows_mut((s as usize - 1) * n, n);
                rows -= jt * &r;
            }
        }
    }
    g
}

trait AddAssignRows {
    fn add_assign(&mut self, v: &DVector<f64>);
}

impl AddAssignRows for nalgebra::DVectorViewMut<'_, f64> {
    fn add_assign(&mut self, v: &DVector<f64>) {
        *self += v;
    }
}

/// Normal equations of the quadratic/linear family as a banded SPD system.
fn banded_system(
    instance: &ProblemInstance,
    weight: &DMatrix<f64>,
    b: f64,
    blocks: &[DMatrix<f64>],
) -> (BandedSpd, DVector<f64>) {
    let n = instance.dim();
    let p = blocks.len();
    let horizon = instance.horizon();
    let init = instance.initial_actions();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut h = BandedSpd::zeros(horizon * n, n * (p + 1) - 1);
    let mut rhs = DVector::zeros(horizon * n);
    let hq = weight * (2.0 / b);

    for t in 1..=horizon {
        let base = (t - 1) * n;
        for a in 0..n {
            for c in 0..=a {
                h.add(base + a, base + c, hq[(a, c)]);
            }
        }
        rhs.rows_mut(base, n).copy_from(&(&hq * instance.context(t)));

        // Row t of E: (t, I) and (t-i, -A_i) for in-horizon lags; the
        // out-of-horizon lags form the constant c_t.
        let mut row: Vec<(usize, DMatrix<f64>)> = vec![(t, eye.clone())];
        let mut c = DVector::zeros(n);
        for (i, a) in blocks.iter().enumerate() {
            let lag = t as isize - 1 - i as isize;
            if lag >= 1 {
                row.push((lag as usize, -a));
            } else {
                c += a * &init[(init.len() as isize - 1 + lag) as usize];
            }
        }
        for (s, ms) in &row {
            rhs.rows_mut((s - 1) * n, n).add_assign(&(ms.transpose() * &c));
            for (u, mu) in &row {
                if u > s {
                    continue;
                }
                let blk = ms.transpose() * mu;
                for a in 0..n {
                    for cc in 0..n {
                        if s == u && cc > a {
                            continue;
                        }
                        h.add((s - 1) * n + a, (u - 1) * n + cc, blk[(a, cc)]);
                    }
                }
            }
        }
    }
    (h, rhs)
}

/// Offline optimum with full knowledge of every context.
///
/// The quadratic hitting cost with linear memory is solved exactly through
/// its banded normal equations; if that minimiser leaves the box, a
/// primal-dual active-set method on the same system takes over. Models outside
/// the family, or an active set that fails to settle, fall back to projected
/// gradient over the stacked actions (at most 10⁵ steps, stationarity 1e-8).
pub fn solve_opt(instance: &ProblemInstance, model: &CostModel) -> Result<Trajectory> {
    model.check(instance)?;
    let n = instance.dim();
    let mut start = None;
    if let (HittingKind::Quadratic { weight, b }, Some(blocks)) =
        (model.hitting.kind(), model.switching.linear_blocks(n))
    {
        let (h, rhs) = banded_system(instance, weight, *b, &blocks);
        let z = h.solve(&rhs)?;
        let actions = unstack(&z, n);
        if actions.iter().all(|a| model.space.contains(a, 0.0)) {
            return eval_cost(instance, model, &actions);
        }
        let clipped: Vec<Action> = actions.iter().map(|a| model.space.clip(a)).collect();
        let horizon = instance.horizon();
        let lo = stack(&vec![model.space.lower().clone(); horizon]);
        let hi = stack(&vec![model.space.upper().clone(); horizon]);
        if let Some(z) = box_qp(&h, &rhs, &lo, &hi, &stack(&clipped), ACTIVE_SET_ROUNDS)? {
            return eval_cost(instance, model, &unstack(&z, n));
        }
        start = Some(clipped);
    }
    let start = start.unwrap_or_else(|| {
        (1..=instance.horizon())
            .map(|t| {
                model
                    .hitting
                    .minimize_over(instance.context(t), &model.space)
                    .unwrap_or_else(|_| model.space.center())
            })
            .collect()
    });
    let project = |z: &DVector<f64>| stack(&unstack(z, n).iter().map(|a| model.space.clip(a)).collect::<Vec<_>>());
    let res = projected_gradient(
        |z| {
            let acts = unstack(z, n);
            let total = eval_cost(instance, model, &acts).map_or(f64::INFINITY, |tr| tr.total);
            (total, cost_gradient(instance, model, &acts))
        },
        project,
        stack(&start),
        PgOptions {
            max_iter: FALLBACK_ITERS,
            tol: FALLBACK_TOL,
        },
    )?;
    eval_cost(instance, model, &unstack(&res.x, n))
}
