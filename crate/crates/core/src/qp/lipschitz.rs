use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{KcmError, Result};

/// Sampled estimates of sup |τ| (λ) and the Lipschitz constant of τ (λ′)
/// over the max-norm ball around a conformation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub bound: f64,
    pub lipschitz: f64,
    pub samples: usize,
    /// Samples where the field could not be evaluated.
    pub singular: usize,
}

/// Evaluates `field` at the center and at `samples − 1` uniform points of
/// the box `|θ − center|_∞ ≤ radius`, then takes the maxima over all
/// sampled values and pairs. Points come from a seeded stream, so a larger
/// sample count only adds points.
pub fn lipschitz_probe<F>(
    mut field: F,
    center: &DVector<f64>,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<LipschitzEstimate>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(KcmError::invalid("radius", "probe radius must be positive"));
    }
    if samples < 2 {
        return Err(KcmError::invalid("samples", "need at least two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<(DVector<f64>, DVector<f64>)> = Vec::with_capacity(samples);
    let mut singular = 0;
    for k in 0..samples {
        let theta = if k == 0 {
            center.clone()
        } else {
            center.map(|c| c + radius * rng.random_range(-1.0..=1.0))
        };
        match field(&theta) {
            Ok(value) => points.push((theta, value)),
            Err(e) if e.is_numerical() => singular += 1,
            Err(e) => return Err(e),
        }
    }
    let bound = points.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
    let mut lipschitz: f64 = 0.0;
    for (a, (ta, va)) in points.iter().enumerate() {
        for (tb, vb) in &points[a + 1..] {
            let dx = (ta - tb).norm();
            if dx > 0.0 {
                lipschitz = lipschitz.max((va - vb).norm() / dx);
            }
        }
    }
    Ok(LipschitzEstimate {
        bound,
        lipschitz,
        samples,
        singular,
    })
}
