use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::cost::sample_in;
use super::space::ActionSpace;
use super::Action;
use crate::error::{Error, Result};
use crate::linalg::spectral_norm;

/// The map `δ(x_{t-p:t-1})` inside the switching cost `½‖x_t − δ(·)‖²`.
#[derive(Debug, Clone, PartialEq)]
pub enum MemoryMap {
    /// `δ = x_{t-1}`.
    Identity,
    /// `δ = A·x_{t-1}`.
    Linear(DMatrix<f64>),
    /// `δ = Σᵢ Aᵢ·x_{t-i}`, `i = 1..=p`.
    MultiLinear(Vec<DMatrix<f64>>),
    /// Drone speed with gravity and drag: `δ = x_{t-1} − C₁ − C₂·|x_{t-1}|·x_{t-1}`
    /// (elementwise).
    Drone { c1: DVector<f64>, c2: f64 },
}

/// Switching cost with memory length `p` and per-slot Lipschitz constants.
#[derive(Debug, Clone)]
pub struct SwitchingMemory {
    map: MemoryMap,
    lipschitz: Vec<f64>,
}

impl SwitchingMemory {
    pub fn identity() -> Self {
        Self {
            map: MemoryMap::Identity,
            lipschitz: vec![1.0],
        }
    }

    pub fn linear(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidInput("memory matrix must be square".into()));
        }
        let l = spectral_norm(&a);
        Ok(Self {
            map: MemoryMap::Linear(a),
            lipschitz: vec![l],
        })
    }

    pub fn multi_linear(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("memory needs at least one block".into()));
        }
        let n = blocks[0].nrows();
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch {
                    what: "memory block",
                    index: i + 1,
                    expected: n,
                    found: b.nrows().max(b.ncols()),
                });
            }
        }
        let lipschitz = blocks.iter().map(spectral_norm).collect();
        Ok(Self {
            map: MemoryMap::MultiLinear(blocks),
            lipschitz,
        })
    }

    /// The drone map; its Lipschitz constant is taken over the action box
    /// since `δ` is only locally Lipschitz.
    pub fn drone(c1: DVector<f64>, c2: f64, space: &ActionSpace) -> Result<Self> {
        if c1.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                what: "drone offset",
                index: 0,
                expected: space.dim(),
                found: c1.len(),
            });
        }
        if !(c2 >= 0.0) {
            return Err(Error::InvalidInput("drag constant must be nonnegative".into()));
        }
        let mut l = 0.0_f64;
        for (lo, hi) in space.lower().iter().zip(space.upper().iter()) {
            let min_abs = if *lo <= 0.0 && *hi >= 0.0 {
                0.0
            } else {
                lo.abs().min(hi.abs())
            };
            let max_abs = lo.abs().max(hi.abs());
            l = l
                .max((1.0 - 2.0 * c2 * min_abs).abs())
                .max((1.0 - 2.0 * c2 * max_abs).abs());
        }
        Ok(Self {
            map: MemoryMap::Drone { c1, c2 },
            lipschitz: vec![l],
        })
    }

    pub fn map(&self) -> &MemoryMap {
        &self.map
    }

    /// Memory length `p`.
    pub fn p(&self) -> usize {
        self.lipschitz.len()
    }

    /// `L₁, …, L_p`.
    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    /// `α = 1 + Σᵢ Lᵢ`.
    pub fn alpha(&self) -> f64 {
        1.0 + self.lipschitz.iter().sum::<f64>()
    }

    /// `δ` evaluated on `lags = [x_{t-1}, …, x_{t-p}]`.
    pub fn delta(&self, lags: &[&Action]) -> Action {
        match &self.map {
            MemoryMap::Identity => lags[0].clone(),
            MemoryMap::Linear(a) => a * lags[0],
            MemoryMap::MultiLinear(blocks) => {
                let mut out = &blocks[0] * lags[0];
                for (a, x) in blocks.iter().zip(lags.iter()).skip(1) {
                    out += a * *x;
                }
                out
            }
            MemoryMap::Drone { c1, c2 } => {
                let x = lags[0];
                DVector::from_iterator(
                    x.len(),
                    x.iter()
                        .zip(c1.iter())
                        .map(|(v, c)| v - c - c2 * v.abs() * v),
                )
            }
        }
    }

    /// `∂δ/∂x_{t-1-slot}`.
    pub fn jacobian(&self, lags: &[&Action], slot: usize) -> DMatrix<f64> {
        let n = lags[0].len();
        match &self.map {
            MemoryMap::Identity => DMatrix::identity(n, n),
            MemoryMap::Linear(a) => a.clone(),
            MemoryMap::MultiLinear(blocks) => blocks[slot].clone(),
            MemoryMap::Drone { c2, .. } => {
                DMatrix::from_diagonal(&lags[0].map(|v| 1.0 - 2.0 * c2 * v.abs()))
            }
        }
    }

    /// `d(x, ·) = ½‖x − δ(lags)‖²`.
    pub fn cost(&self, x: &Action, lags: &[&Action]) -> f64 {
        0.5 * (x - self.delta(lags)).norm_squared()
    }

    /// The blocks `A₁..A_p` when `δ` is linear.
    pub fn linear_blocks(&self, dim: usize) -> Option<Vec<DMatrix<f64>>> {
        match &self.map {
            MemoryMap::Identity => Some(vec![DMatrix::identity(dim, dim)]),
            MemoryMap::Linear(a) => Some(vec![a.clone()]),
            MemoryMap::MultiLinear(b) => Some(b.clone()),
            MemoryMap::Drone { .. } => None,
        }
    }

    /// Perturbs one slot at a time and returns the worst excess of
    /// `‖δ(x + v·eᵢ) − δ(x)‖ − Lᵢ‖v‖` over the samples.
    pub fn spot_check<R: Rng>(&self, space: &ActionSpace, samples: usize, rng: &mut R) -> f64 {
        let p = self.p();
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..samples {
            let base: Vec<Action> = (0..p).map(|_| sample_in(space, rng)).collect();
            let slot = rng.random_range(0..p);
            let moved = sample_in(space, rng);
            let mut other = base.clone();
            other[slot] = moved;
            let lb: Vec<&Action> = base.iter().collect();
            let lo: Vec<&Action> = other.iter().collect();
            let gap = (self.delta(&lb) - self.delta(&lo)).norm()
                - self.lipschitz[slot] * (&base[slot] - &other[slot]).norm();
            worst = worst.max(gap);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alpha_is_one_plus_sum() {
        let m = SwitchingMemory::multi_linear(vec![
            DMatrix::identity(2, 2) * 0.5,
            DMatrix::identity(2, 2) * 0.25,
        ])
        .unwrap();
        assert_eq!(m.p(), 2);
        assert!((m.alpha() - 1.75).abs() < 1e-15);
    }

    #[test]
    fn builtin_lipschitz_constants_hold() {
        let space = ActionSpace::uniform(2, -2.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = DMatrix::from_row_slice(2, 2, &[0.6, 0.3, -0.2, 0.9]);
        let memories = vec![
            SwitchingMemory::identity(),
            SwitchingMemory::linear(a.clone()).unwrap(),
            SwitchingMemory::multi_linear(vec![a.clone(), a.transpose() * 0.3]).unwrap(),
            SwitchingMemory::drone(DVector::from_vec(vec![0.1, 0.1]), 0.2, &space).unwrap(),
        ];
        for m in memories {
            assert!(m.spot_check(&space, 2000, &mut rng) <= 1e-9, "{:?}", m.map());
        }
    }

    #[test]
    fn drone_jacobian_matches_differences() {
        let space = ActionSpace::uniform(1, -2.0, 2.0).unwrap();
        let m = SwitchingMemory::drone(DVector::from_vec(vec![0.3]), 0.1, &space).unwrap();
        let x = DVector::from_vec(vec![0.7]);
        let h = 1e-6;
        let xp = DVector::from_vec(vec![0.7 + h]);
        let xm = DVector::from_vec(vec![0.7 - h]);
        let fd = (m.delta(&[&xp])[0] - m.delta(&[&xm])[0]) / (2.0 * h);
        assert!((m.jacobian(&[&x], 0)[(0, 0)] - fd).abs() < 1e-8);
    }
}
