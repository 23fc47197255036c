//! Dense helpers and a banded Cholesky solver for the block-banded normal
//! equations of the offline optimum.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().svd(false, false).singular_values.max()
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_eig_range(a: &DMatrix<f64>) -> (f64, f64) {
    let eig = a.clone().symmetric_eigen();
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Symmetric positive-definite matrix stored by lower band.
///
/// `band[i][k]` holds `A[i][i-k]` for `k ∈ 0..=bandwidth`.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    band: Vec<Vec<f64>>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bw: bandwidth,
            band: vec![vec![0.0; bandwidth + 1]; n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Adds `v` to `A[i][j]` (and implicitly `A[j][i]`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = r - c;
        assert!(k <= self.bw, "entry ({i},{j}) outside band {}", self.bw);
        self.band[r][k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let k = r - c;
        if k > self.bw {
            0.0
        } else {
            self.band[r][k]
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let hi = (i + self.bw).min(self.n - 1);
            y[i] = (lo..=hi).map(|j| self.get(i, j) * x[j]).sum();
        }
        y
    }

    /// Solves `A x = b` by banded Cholesky, `O(n·bw²)`.
    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n;
        let bw = self.bw;
        // l[i][k] = L[i][i-k]
        let mut l = vec![vec![0.0; bw + 1]; n];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = self.band[i][i - j];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i][i - k] * l[j][j - k];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "banded system not positive definite at row {i}"
                        )));
                    }
                    l[i][0] = s.sqrt();
                } else {
                    l[i][i - j] = s / l[j][0];
                }
            }
        }
        let mut z = DVector::zeros(n);
        for i in 0..n {
            let mut s = b[i];
            for j in i.saturating_sub(bw)..i {
                s -= l[i][i - j] * z[j];
            }
            z[i] = s / l[i][0];
        }
        let mut x = DVector::zeros(n);
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in (i + 1)..=(i + bw).min(n - 1) {
                s -= l[j][j - i] * x[j];
            }
            x[i] = s / l[i][0];
        }
        Ok(x)
    }
}

impl BandedSpd {
    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Full-band copy of the lower triangle of a dense symmetric matrix.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut out = Self::zeros(n, n.saturating_sub(1));
        for i in 0..n {
            for j in 0..=i {
                out.band[i][i - j] = m[(i, j)];
            }
        }
        out
    }

    /// Principal submatrix on the sorted index set `keep`.
    fn restrict(&self, keep: &[usize]) -> Self {
        let mut sub = Self::zeros(keep.len(), self.bw);
        for (a, &i) in keep.iter().enumerate() {
            for (c, &j) in keep.iter().enumerate().take(a + 1).skip(a.saturating_sub(self.bw)) {
                if i - j <= self.bw {
                    sub.band[a][a - c] = self.get(i, j);
                }
            }
        }
        sub
    }
}

/// Minimises `½xᵀAx − bᵀx` over the box `[lo, hi]` by a primal-dual active-set
/// iteration. Returns `None` if the active set has not settled within
/// `max_iter` rounds or the final point fails the KKT check.
pub fn box_qp(
    a: &BandedSpd,
    b: &DVector<f64>,
    lo: &DVector<f64>,
    hi: &DVector<f64>,
    x0: &DVector<f64>,
    max_iter: usize,
) -> Result<Option<DVector<f64>>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Side {
        Free,
        Lower,
        Upper,
    }
    let n = a.size();
    let mut x = x0.clone();
    let mut g = a.mul_vec(&x) - b;
    let mut lam = DVector::zeros(n);
    let mut sides = vec![Side::Free; n];
    for i in 0..n {
        if x[i] <= lo[i] {
            lam[i] = g[i].max(0.0);
        } else if x[i] >= hi[i] {
            lam[i] = g[i].min(0.0);
        }
    }
    for round in 0..max_iter {
        let next: Vec<Side> = (0..n)
            .map(|i| {
                if lam[i] - (x[i] - lo[i]) > 0.0 {
                    Side::Lower
                } else if lam[i] + (hi[i] - x[i]) < 0.0 {
                    Side::Upper
                } else {
                    Side::Free
                }
            })
            .collect();
        if round > 0 && next == sides {
            break;
        }
        sides = next;
        for i in 0..n {
            match sides[i] {
                Side::Lower => x[i] = lo[i],
                Side::Upper => x[i] = hi[i],
                Side::Free => {}
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| sides[i] == Side::Free).collect();
        if !free.is_empty() {
            let mut fixed = x.clone();
            for &i in &free {
                fixed[i] = 0.0;
            }
            let coupling = a.mul_vec(&fixed);
            let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| b[i] - coupling[i]));
            let xf = a.restrict(&free).solve(&rhs)?;
            for (k, &i) in free.iter().enumerate() {
                x[i] = xf[k];
            }
        }
        g = a.mul_vec(&x) - b;
        for i in 0..n {
            lam[i] = if sides[i] == Side::Free { 0.0 } else { g[i] };
        }
        if round + 1 == max_iter {
            return Ok(None);
        }
    }
    let scale = 1.0 + b.amax();
    let kkt = (0..n).all(|i| {
        let tol = 1e-9 * scale;
        let inside = x[i] >= lo[i] - tol && x[i] <= hi[i] + tol;
        inside
            && match sides[i] {
                Side::Free => g[i].abs() <= tol,
                Side::Lower => g[i] >= -tol,
                Side::Upper => g[i] <= tol,
            }
    });
    Ok(kkt.then(|| DVector::from_iterator(n, (0..n).map(|i| x[i].clamp(lo[i], hi[i])))))
}
