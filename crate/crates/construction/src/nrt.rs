//! The translation baseline on the torus: realize a ball-supported target
//! on T^{d−1} by hanging rescaled factors on the orbit of discs of the
//! shift S^{1/A}.  Every time is an isometry time here, so the baseline
//! cross-checks the fragmentation and similarity machinery independently
//! of the permutation-map tower.

use map_core::nodes::affine::{similarity, translation};
use map_core::nodes::piecewise::{piecewise_balls, Disc};
use map_core::norms::{norm_cr, GridSpec};
use map_core::{Ambient, Compose, MapExpr, Point};
use nalgebra::DMatrix;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{BuildError, Result};
use crate::fragmentation::fragment;
use crate::generator::IsotopyGenerator;
use crate::rat::{Q, Rat};

#[derive(Debug, Clone)]
pub struct NrtBaseline {
    pub d: usize,
    pub a: u64,
    /// tower height M = A^{d−1}
    pub m: u64,
    pub radius: f64,
    pub shift: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub inners: Vec<MapExpr>,
    pub shift_map: MapExpr,
    pub full_map: MapExpr,
    pub min_center_gap: f64,
}

/// Build the baseline for a target generated on B^{d−1}.
pub fn build_nrt_baseline(d: usize, a: u64, gen: &IsotopyGenerator) -> Result<NrtBaseline> {
    if d < 3 {
        return Err(BuildError::BadParams("the torus baseline needs d >= 3 (T^{d-1} with d-1 >= 2)".into()));
    }
    let n = d - 1;
    if gen.dim() != n {
        return Err(BuildError::BadParams(format!("target generator must live on B^{n}")));
    }
    if a < 8 {
        return Err(BuildError::BadParams("need A >= 8".into()));
    }
    let m = a.pow(n as u32 - 1) * a;
    let amb = Ambient::Torus { n };
    let ball = Ambient::Ball { d: n };
    let rho = 1.0 / (4.0 * a as f64);

    // per-step shift (1/A, 1/A², …, 1/A^{d−1}), exact in rationals
    let step_rat: Vec<Rat> = (0..n).map(|i| Rat(Ratio::new(1, (a as i128).pow(i as u32 + 1)))).collect();
    let shift: Vec<f64> = step_rat.iter().map(|r| r.to_f64()).collect();

    // exact disjointness via the orbit group structure
    let mut min_gap_sq: Option<Rat> = None;
    for k in 1..m {
        let mut s = Rat::from_int(0);
        for r in &step_rat {
            let z = (Rat::from_int(k as i128) * *r).rem_euclid(Q::from_integer(1));
            let dz = Rat::from_int(0).circle_delta(z, Q::from_integer(1));
            s = s + dz * dz;
        }
        if min_gap_sq.map(|g| s < g).unwrap_or(true) {
            min_gap_sq = Some(s);
        }
    }
    let gap = min_gap_sq.expect("m >= 2").to_f64().sqrt();
    if gap <= 2.0 * rho {
        return Err(BuildError::TowerOverlap { min_gap: gap, two_rho: 2.0 * rho, step: 0 });
    }

    let frag = fragment(gen, m as usize, 9)?;
    let mut centers = Vec::with_capacity(m as usize);
    let mut discs = Vec::with_capacity(m as usize);
    let mut inners = Vec::with_capacity(m as usize);
    for k in 0..m {
        let c: Vec<f64> = step_rat
            .iter()
            .map(|r| (Rat::from_int(k as i128) * *r).rem_euclid(Q::from_integer(1)).to_f64())
            .collect();
        let inner = if frag.factors[k as usize].is_identity() {
            map_core::nodes::affine::identity(amb)
        } else {
            let h = similarity(
                amb,
                ball,
                1.0 / rho,
                DMatrix::identity(n, n),
                c.clone(),
                vec![0.0; n],
            )?;
            Compose::new(vec![h.invert()?, frag.factors[k as usize].clone(), h])?
        };
        discs.push(Disc { center: c.clone(), radius: rho });
        centers.push(c);
        inners.push(inner);
    }
    let staged = piecewise_balls(amb, discs, inners.clone())?;
    let shift_map = translation(amb, shift.clone());
    let full_map = Compose::new(vec![shift_map.clone(), staged])?;
    Ok(NrtBaseline {
        d,
        a,
        m,
        radius: rho,
        shift,
        centers,
        inners,
        shift_map,
        full_map,
        min_center_gap: gap,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NrtNorms {
    pub a: u64,
    /// grid C¹ norm of F − Id (disc-local, plus the global shift size)
    pub c1: f64,
    /// fractional norm at r = (d−1) + (1−ε), measured at disc scale
    pub paper: f64,
    /// paper · A^ε — the trend constant c₀
    pub c0_hat: f64,
}

/// Disc-local norm measurement.  All discs carry the same factor conjugated
/// by pure translations, so one disc is exact for all of them.
pub fn nrt_norms(base: &NrtBaseline, epsilon: f64) -> Result<NrtNorms> {
    let n = base.d - 1;
    let rho = base.radius;
    let half = 0.92 * rho / (n as f64).sqrt();
    let mut grid = GridSpec::new(
        base.centers[0].iter().map(|c| c - half).collect(),
        vec![2.0 * half; n],
        vec![9; n],
    );
    grid.h_stencil = rho / 64.0;
    grid.h3 = rho / 2.0;
    let c1_local = norm_cr(&base.full_map, 1.0, &grid)?.value;
    let shift_mag = base.shift.iter().map(|c| c * c).sum::<f64>().sqrt();
    let c1 = c1_local.max(shift_mag);
    let r_b = n as f64 + (1.0 - epsilon);
    let paper = norm_cr(&base.full_map, r_b, &grid)?.value;
    Ok(NrtNorms { a: base.a, c1, paper, c0_hat: paper * (base.a as f64).powf(epsilon) })
}

/// Renormalized return map of the baseline: h₀ F^M h₀⁻¹ vs the target.
pub fn nrt_return_deviation(base: &NrtBaseline, gen: &IsotopyGenerator, grid_per_dim: usize) -> Result<f64> {
    let n = base.d - 1;
    let amb = Ambient::Torus { n };
    let ball = Ambient::Ball { d: n };
    let h0 = similarity(
        amb,
        ball,
        1.0 / base.radius,
        DMatrix::identity(n, n),
        base.centers[0].clone(),
        vec![0.0; n],
    )?;
    let h0_inv = h0.invert()?;
    let f_target = gen.flow(1.0)?;
    let mut worst = 0.0f64;
    let half = 0.93;
    let grid = GridSpec::new(vec![-half; n], vec![2.0 * half; n], vec![grid_per_dim; n]);
    for coords in grid.points() {
        if coords.iter().map(|c| c * c).sum::<f64>().sqrt() >= 1.0 - 1e-6 {
            continue;
        }
        let u = Point::new(coords, ball)?;
        let mut p = h0_inv.eval(&u)?;
        for k in 0..base.m {
            p = base.inners[k as usize].eval(&p)?;
            p = base.shift_map.eval(&p)?;
        }
        let out = h0.eval(&p)?;
        let direct = f_target.eval(&u)?;
        worst = worst.max(out.distance(&direct));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{identity_generator, sample_hamiltonian_2d};

    #[test]
    fn identity_target_gives_the_bare_shift() {
        let gen = identity_generator(2);
        let base = build_nrt_baseline(3, 8, &gen).unwrap();
        // F = S^{1/A} exactly: the staged part collapses
        assert_eq!(base.full_map.kind(), "translation");
        let dev = nrt_return_deviation(&base, &gen, 4).unwrap();
        assert!(dev <= 64.0 * 1e-12, "identity baseline dev {dev:e}");
    }

    #[test]
    fn baseline_return_map_is_exact() {
        let gen = sample_hamiltonian_2d();
        let base = build_nrt_baseline(3, 8, &gen).unwrap();
        assert_eq!(base.m, 64);
        assert!(base.min_center_gap > 2.0 * base.radius);
        let dev = nrt_return_deviation(&base, &gen, 5).unwrap();
        assert!(dev <= 1e-6, "baseline return dev {dev:e}");
    }

    #[test]
    fn d2_is_rejected() {
        assert!(build_nrt_baseline(2, 16, &identity_generator(1)).is_err());
    }
}
