use nalgebra::DVector;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::DemandWindow;
use crate::error::{Error, Result};
use crate::soco::ProblemInstance;

/// Indices of the `⌊p_c·count⌋` items to perturb, and the noise law.
fn plan(count: usize, p_c: f64, sigma: f64, rng: &mut ChaCha8Rng) -> Result<(Vec<usize>, Normal<f64>)> {
    if !(0.0..=1.0).contains(&p_c) {
        return Err(Error::InvalidInput(format!("contamination fraction must lie in [0, 1], got {p_c}")));
    }
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidInput(format!("noise standard deviation {sigma}: {e}")))?;
    let k = (p_c * count as f64).floor() as usize;
    let mut picked = sample(rng, count, k).into_vec();
    picked.sort_unstable();
    Ok((picked, noise))
}

fn perturb(v: &DVector<f64>, noise: &Normal<f64>, sigma: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    if sigma == 0.0 {
        return v.map(|x| x.clamp(0.0, 1.0));
    }
    v.map(|x| (x + noise.sample(rng)).clamp(0.0, 1.0))
}

/// Adds `N(0, σ)` noise to the contexts of a random `p_c` fraction of the
/// instances and clips them back to `[0, 1]`.
pub fn contaminate(instances: &[ProblemInstance], p_c: f64, sigma: f64, seed: u64) -> Result<Vec<ProblemInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (picked, noise) = plan(instances.len(), p_c, sigma, &mut rng)?;
    let mut out = instances.to_vec();
    for i in picked {
        let ctx = out[i]
            .contexts()
            .iter()
            .map(|y| perturb(y, &noise, sigma, &mut rng))
            .collect();
        out[i] = out[i].with_contexts(ctx)?;
    }
    Ok(out)
}

/// As [`contaminate`], applied to the demands of demand windows.
pub fn contaminate_windows(windows: &[DemandWindow], p_c: f64, sigma: f64, seed: u64) -> Result<Vec<DemandWindow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (picked, noise) = plan(windows.len(), p_c, sigma, &mut rng)?;
    let mut out = windows.to_vec();
    for i in picked {
        out[i].demands = out[i]
            .demands
            .iter()
            .map(|w| perturb(w, &noise, sigma, &mut rng))
            .collect();
    }
    Ok(out)
}
