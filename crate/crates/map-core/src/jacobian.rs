//! Derivatives of map trees: closed forms where nodes provide them, chain
//! rule across compositions, central finite differences otherwise.  The
//! volume-defect sweep lives here too.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ambient::Point;
use crate::error::{MapError, Result};
use crate::expr::MapExpr;

/// Default central-difference step; the contract admits steps in (1e-7, 1e-3).
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Derivative matrix of `m` at `p`.
///
/// Compositions are differentiated by the chain rule so each factor can use
/// its own closed form; a node without a closed form falls back to central
/// differences with the given step.
pub fn jacobian(m: &MapExpr, p: &Point, step: f64) -> Result<DMatrix<f64>> {
    if m.kind() == "compose" {
        let children = m.node().children();
        // children[last] acts first
        let mut x = p.clone();
        let n = p.dim();
        let mut acc = DMatrix::identity(n, n);
        for c in children.iter().rev() {
            let j = jacobian(c, &x, step)?;
            acc = j * acc;
            x = c.eval(&x)?;
        }
        return Ok(acc);
    }
    if let Some(j) = m.node().jacobian_closed(p) {
        return Ok(j);
    }
    fd_jacobian(m, p, step)
}

/// Plain central differences, unwrapping output displacements on periodic
/// targets so the stencil never sees a seam jump.
pub fn fd_jacobian(m: &MapExpr, p: &Point, step: f64) -> Result<DMatrix<f64>> {
    let n = p.dim();
    let target = m.target();
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut fwd = p.coords.clone();
        let mut bwd = p.coords.clone();
        fwd[c] += step;
        bwd[c] -= step;
        let pf = Point::new(fwd, p.ambient)?;
        let pb = Point::new(bwd, p.ambient)?;
        let qf = m.eval(&pf)?;
        let qb = m.eval(&pb)?;
        let delta = target.displacement(&qb.coords, &qf.coords);
        for r in 0..n {
            j[(r, c)] = delta[r] / (2.0 * step);
        }
    }
    Ok(j)
}

/// Determinant of the derivative, preferring exact per-node knowledge.
pub fn det_jacobian(m: &MapExpr, p: &Point, step: f64) -> Result<f64> {
    if let Some(det) = m.node().det_jacobian_closed(p) {
        return Ok(det);
    }
    if m.kind() == "compose" {
        let mut x = p.clone();
        let mut acc = 1.0;
        for c in m.node().children().iter().rev() {
            acc *= det_jacobian(c, &x, step)?;
            x = c.eval(&x)?;
        }
        return Ok(acc);
    }
    Ok(jacobian(m, p, step)?.determinant())
}

/// Max of `|det Dm − 1|` over seeded uniform samples.
pub fn volume_defect(m: &MapExpr, samples: usize, seed: u64) -> Result<f64> {
    if samples < 100 {
        return Err(MapError::BadParams("volume defect needs at least 100 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amb = m.source();
    let inset = 4.0 * DEFAULT_FD_STEP;
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let p = Point::new(amb.sample(&mut rng, inset), amb)?;
        let det = det_jacobian(m, &p, DEFAULT_FD_STEP)?;
        worst = worst.max((det - 1.0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::Ambient;
    use crate::expr::Compose;
    use crate::nodes::affine::{identity, translation};
    use crate::nodes::twist::block_twist;
    use crate::nodes::wrap::anisotropic_wrap;

    #[test]
    fn identity_jacobian() {
        let amb = Ambient::Torus { n: 2 };
        let p = Point::new(vec![0.3, 0.7], amb).unwrap();
        let j = jacobian(&identity(amb), &p, DEFAULT_FD_STEP).unwrap();
        assert_eq!(j, DMatrix::identity(2, 2));
    }

    #[test]
    fn chain_rule_matches_direct_fd() {
        let tw = block_twist(2, 4, 0.42, 0.495, 5).unwrap();
        let w = anisotropic_wrap(2, 4).unwrap();
        let hq = Compose::new(vec![w, tw]).unwrap();
        let p = Point::new(vec![0.43, 0.21], Ambient::FatTorus { d: 2 }).unwrap();
        let chained = jacobian(&hq, &p, DEFAULT_FD_STEP).unwrap();
        let direct = fd_jacobian(&hq, &p, 1e-6).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!(
                    (chained[(r, c)] - direct[(r, c)]).abs() <= 1e-5 * (1.0 + chained[(r, c)].abs()),
                    "entry ({r},{c}): {} vs {}",
                    chained[(r, c)],
                    direct[(r, c)]
                );
            }
        }
    }

    #[test]
    fn volume_defect_of_isometries_is_tiny() {
        let amb = Ambient::Torus { n: 2 };
        let t = translation(amb, vec![0.37, 0.21]);
        assert!(volume_defect(&t, 200, 7).unwrap() <= 1e-12);
    }

    #[test]
    fn fd_jacobian_sees_through_the_seam() {
        // translation across y = 0 on the torus must still differentiate to I
        let amb = Ambient::Torus { n: 2 };
        let t = translation(amb, vec![0.0, 0.999]);
        let p = Point::new(vec![0.5, 0.0005], amb).unwrap();
        let j = fd_jacobian(&t, &p, 1e-4).unwrap();
        assert!((j[(1, 1)] - 1.0).abs() < 1e-10);
    }
}
