//! Factor the target `f = ψ_1` into M maps, each O(1/M)-close to identity,
//! by slicing the generating isotopy.
//!
//! Factors compose left-to-right: `f = factors[M-1] ∘ … ∘ factors[0]` as
//! maps, i.e. `factors[0]` acts first.  Each factor is the single flow map
//! of one time slice, not a composition of two long flows, so no long-time
//! cancellation enters.  For a time-independent generating field all slices
//! coincide, which the measurement step exploits: one slice is measured and
//! the value covers every factor.

use map_core::norms::{norm_cr, GridSpec};
use map_core::{MapExpr, Point};
use serde::{Deserialize, Serialize};

use crate::error::{BuildError, Result};
use crate::generator::IsotopyGenerator;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragmentationResult {
    pub m: usize,
    /// factors[0] acts first
    pub factors: Vec<MapExpr>,
    /// grid C¹ norm of `factor − Id`, one entry per factor
    pub per_factor_norm: Vec<f64>,
    /// Ĉ = M · max_i ‖f_i − Id‖
    pub c_hat: f64,
}

/// ψ_t of the generator.
pub fn flow(gen: &IsotopyGenerator, t: f64) -> Result<MapExpr> {
    gen.flow(t)
}

/// Slice the isotopy into M factors and measure them.
pub fn fragment(gen: &IsotopyGenerator, m: usize, grid_per_dim: usize) -> Result<FragmentationResult> {
    if m == 0 {
        return Err(BuildError::BadParams("fragmentation needs M >= 1".into()));
    }
    let slice = gen.flow(1.0 / m as f64)?;
    let factors: Vec<MapExpr> = (0..m).map(|_| slice.clone()).collect();
    let norm = if slice.is_identity() {
        0.0
    } else {
        let grid = ball_grid(&slice, grid_per_dim);
        norm_cr(&slice, 1.0, &grid)?.value
    };
    let per_factor_norm = vec![norm; m];
    Ok(FragmentationResult { m, factors, per_factor_norm, c_hat: m as f64 * norm })
}

/// Box grid covering the support of a ball self-map (corners outside the
/// ball are skipped by the norm estimator).
pub fn ball_grid(m: &MapExpr, per_dim: usize) -> GridSpec {
    let d = m.source().dim();
    let half = 0.93;
    GridSpec::new(vec![-half; d], vec![2.0 * half; d], vec![per_dim; d])
}

/// Max deviation between the ordered composition of the factors and the
/// time-1 flow over a test grid; the telescoping identity makes this an
/// independent check of the slicing.
pub fn telescoping_deviation(
    gen: &IsotopyGenerator,
    frag: &FragmentationResult,
    per_dim: usize,
) -> Result<f64> {
    let target = gen.flow(1.0)?;
    let amb = gen.ambient();
    let grid = ball_grid(&target, per_dim);
    let mut worst = 0.0f64;
    for coords in grid.points() {
        let r = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r >= 1.0 - 1e-9 {
            continue;
        }
        let p = Point::new(coords, amb)?;
        let direct = target.eval(&p)?;
        let mut q = p.clone();
        for f in &frag.factors {
            q = f.eval(&q)?;
        }
        worst = worst.max(direct.distance(&q));
    }
    Ok(worst)
}

/// Sup over seeded samples of how far the factors move mass: the largest
/// |f(p)| over points with f(p) ≠ p.  Factors must move mass only strictly
/// inside the cutoff ball so the staged map glues smoothly across disc
/// boundaries.
pub fn factor_reach(frag: &FragmentationResult, samples: usize, seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut reach = 0.0f64;
    if let Some(f) = frag.factors.first() {
        if f.is_identity() {
            return Ok(0.0);
        }
        let amb = f.source();
        for _ in 0..samples {
            let p = Point::new(amb.sample(&mut rng, 1e-9), amb)?;
            let q = f.eval(&p)?;
            if p.distance(&q) > 1e-13 {
                let r_in = p.coords.iter().map(|c| c * c).sum::<f64>().sqrt();
                let r_out = q.coords.iter().map(|c| c * c).sum::<f64>().sqrt();
                reach = reach.max(r_in.max(r_out));
            }
        }
    }
    Ok(reach)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{identity_generator, rotation_generator, sample_hamiltonian_2d};
    use map_core::Ambient;

    #[test]
    fn identity_target_fragments_to_identities() {
        let gen = identity_generator(2);
        let frag = fragment(&gen, 8, 9).unwrap();
        assert!(frag.factors.iter().all(|f| f.is_identity()));
        assert_eq!(frag.c_hat, 0.0);
    }

    #[test]
    fn rotation_fragments_telescope() {
        // each factor of a rotation flow is the rotation by ω/M
        let omega = 0.8;
        let gen = rotation_generator(omega, 0.5);
        let frag = fragment(&gen, 4, 9).unwrap();
        let amb = Ambient::Ball { d: 2 };
        let p = Point::new(vec![0.3, 0.1], amb).unwrap();
        let quarter = frag.factors[0].eval(&p).unwrap();
        let (s, c) = (omega / 4.0).sin_cos();
        let expect = [c * 0.3 + s * 0.1, -s * 0.3 + c * 0.1];
        assert!((quarter.coords[0] - expect[0]).abs() < 1e-9);
        assert!((quarter.coords[1] - expect[1]).abs() < 1e-9);
        let dev = telescoping_deviation(&gen, &frag, 9).unwrap();
        assert!(dev <= 1e-8, "telescoping deviation {dev:e}");
    }

    #[test]
    fn c_hat_scales_like_a_constant() {
        let gen = sample_hamiltonian_2d();
        let c16 = fragment(&gen, 16, 9).unwrap().c_hat;
        let c64 = fragment(&gen, 64, 9).unwrap().c_hat;
        let hi = c16.max(c64);
        let lo = c16.min(c64);
        assert!(hi / lo <= 2.0, "c_hat drifted: {c16} vs {c64}");
    }
}
