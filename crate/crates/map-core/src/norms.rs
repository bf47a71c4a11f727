//! Grid estimation of C^k and Hölder C^{k+ε} norms of `m − Id`.
//!
//! Two scales are kept apart on purpose: `h_stencil` drives the
//! finite-difference derivatives, `h3` drives the pair distances of the
//! Hölder quotient (pairs are sampled at distances in `[h3, 2·h3]`).  The
//! estimate is a lower bound of the true norm; the report carries the
//! stencil resolution so readers can judge it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ambient::Point;
use crate::error::{MapError, Result};
use crate::expr::MapExpr;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    /// lower corner of the sampling box
    pub origin: Vec<f64>,
    /// edge lengths of the sampling box
    pub lengths: Vec<f64>,
    /// points per dimension
    pub counts: Vec<usize>,
    /// finite-difference step
    pub h_stencil: f64,
    /// Hölder pair distance scale
    pub h3: f64,
    /// seed for pair directions
    pub pair_seed: u64,
}

impl GridSpec {
    pub fn new(origin: Vec<f64>, lengths: Vec<f64>, counts: Vec<usize>) -> Self {
        GridSpec { origin, lengths, counts, h_stencil: 1e-4, h3: 1e-3, pair_seed: 0 }
    }

    /// Uniform box over the whole ambient, inset enough that every stencil
    /// point stays inside interval coordinates.
    pub fn covering(m: &MapExpr, per_dim: usize) -> Self {
        let amb = m.source();
        let h_stencil = 1e-4;
        let inset = 4.0 * h_stencil + 2.1e-3;
        let mut origin = Vec::new();
        let mut lengths = Vec::new();
        for i in 0..amb.dim() {
            match amb.topology(i) {
                crate::ambient::CoordTopology::Interval { lo, hi } => {
                    origin.push(lo + inset);
                    lengths.push(hi - lo - 2.0 * inset);
                }
                crate::ambient::CoordTopology::Circle { circumference } => {
                    origin.push(0.0);
                    lengths.push(circumference);
                }
            }
        }
        GridSpec { origin, lengths, counts: vec![per_dim; amb.dim()], h_stencil, h3: 1e-3, pair_seed: 0 }
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.lengths
            .iter()
            .zip(&self.counts)
            .map(|(l, n)| if *n > 1 { l / (*n as f64 - 1.0) } else { *l })
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let dim = self.origin.len();
        let mut pts = vec![Vec::new()];
        for i in 0..dim {
            let n = self.counts[i].max(1);
            let mut next = Vec::with_capacity(pts.len() * n);
            for p in &pts {
                for k in 0..n {
                    let mut q = p.clone();
                    let frac = if n > 1 { k as f64 / (n as f64 - 1.0) } else { 0.5 };
                    q.push(self.origin[i] + frac * self.lengths[i]);
                    next.push(q);
                }
            }
            pts = next;
        }
        pts
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormEstimate {
    pub r: f64,
    pub value: f64,
    /// sup of |D^α(m − Id)| per derivative order 0..=k
    pub sup_per_order: Vec<f64>,
    /// Hölder quotient of the top-order derivatives, when ε > 0
    pub hoelder: Option<f64>,
    pub h_stencil: f64,
    pub h3: f64,
}

/// Shortest-arc displacement field `m(x) − x`.
fn displacement(m: &MapExpr, coords: &[f64]) -> Result<Vec<f64>> {
    let p = Point::new(coords.to_vec(), m.source())?;
    let q = m.eval(&p)?;
    Ok(m.source().displacement(&p.coords, &q.coords))
}

/// Central finite difference of the displacement field for a multi-index
/// given as a list of axes (length = derivative order).
fn fd_displacement(m: &MapExpr, coords: &[f64], axes: &[usize], h: f64) -> Result<Vec<f64>> {
    if axes.is_empty() {
        return displacement(m, coords);
    }
    let (first, rest) = axes.split_first().unwrap();
    let mut fwd = coords.to_vec();
    let mut bwd = coords.to_vec();
    fwd[*first] += h;
    bwd[*first] -= h;
    let df = fd_displacement(m, &fwd, rest, h)?;
    let db = fd_displacement(m, &bwd, rest, h)?;
    Ok(df.iter().zip(&db).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// All multi-indices of a given order over `dim` axes, as sorted axis lists
/// (mixed partials are symmetric, so sorted lists enumerate each once).
fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    if order == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    let prev = multi_indices(dim, order - 1);
    for p in prev {
        let start = p.last().copied().unwrap_or(0);
        for axis in start..dim {
            let mut q = p.clone();
            q.push(axis);
            out.push(q);
        }
    }
    out
}

/// Grid estimate of `‖m − Id‖_{k+ε}` with `r = k + ε`, `0 ≤ ε < 1`.
/// With ε = 0 this is the plain grid C^k norm.
pub fn norm_cr(m: &MapExpr, r: f64, grid: &GridSpec) -> Result<NormEstimate> {
    let k = r.floor() as usize;
    let eps = r - k as f64;
    let dim = m.source().dim();
    if k > dim {
        return Err(MapError::BadParams(format!("norm order k = {k} exceeds dimension {dim}")));
    }
    for (i, s) in grid.spacing().iter().enumerate() {
        let limit = grid.lengths[i] / 8.0;
        if *s > limit + 1e-15 {
            return Err(MapError::GridTooCoarse { spacing: *s, limit });
        }
    }

    // box grids may overhang a ball ambient at the corners; those points are
    // skipped, but most of the grid has to be usable
    let pts: Vec<Vec<f64>> = grid
        .points()
        .into_iter()
        .filter(|p| {
            let mut c = p.clone();
            m.source().normalize(&mut c).is_ok()
        })
        .collect();
    let total = grid.counts.iter().product::<usize>().max(1);
    if pts.len() * 2 < total {
        return Err(MapError::BadParams("grid mostly outside the ambient".into()));
    }

    let mut sup_per_order = vec![0.0f64; k + 1];
    for order in 0..=k {
        let idxs = multi_indices(dim, order);
        let mut sup = 0.0f64;
        for p in &pts {
            for axes in &idxs {
                let v = match fd_displacement(m, p, axes, grid.h_stencil) {
                    Ok(v) => v,
                    Err(MapError::DomainEscape { .. }) => continue,
                    Err(e) => return Err(e),
                };
                sup = sup.max(euclid(&v));
            }
        }
        sup_per_order[order] = sup;
    }

    let hoelder = if eps > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(grid.pair_seed);
        let idxs = multi_indices(dim, k);
        let mut sup = 0.0f64;
        for p in &pts {
            for _ in 0..3 {
                let delta = grid.h3 * (1.0 + rng.random_range(0.0..1.0));
                let mut dir: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let n = euclid(&dir).max(1e-12);
                dir.iter_mut().for_each(|c| *c *= delta / n);
                let q: Vec<f64> = p.iter().zip(&dir).map(|(a, b)| a + b).collect();
                for axes in &idxs {
                    let va = match fd_displacement(m, p, axes, grid.h_stencil) {
                        Ok(v) => v,
                        Err(MapError::DomainEscape { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    let vb = match fd_displacement(m, &q, axes, grid.h_stencil) {
                        Ok(v) => v,
                        // pair fell off an interval edge: skip it
                        Err(MapError::DomainEscape { .. }) => continue,
                        Err(e) => return Err(e),
                    };
                    let diff: Vec<f64> = va.iter().zip(&vb).map(|(a, b)| a - b).collect();
                    sup = sup.max(euclid(&diff) / delta.powf(eps));
                }
            }
        }
        Some(sup)
    } else {
        None
    };

    let mut value = sup_per_order.iter().cloned().fold(0.0, f64::max);
    if let Some(h) = hoelder {
        value = value.max(h);
    }
    Ok(NormEstimate { r, value, sup_per_order, hoelder, h_stencil: grid.h_stencil, h3: grid.h3 })
}

/// Plain grid C^1 norm: `max(sup|m − Id|, sup|D(m − Id)|)`.
pub fn norm_c1_grid(m: &MapExpr, grid: &GridSpec) -> Result<f64> {
    Ok(norm_cr(m, 1.0, grid)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::Ambient;
    use crate::nodes::affine::identity;
    use crate::nodes::shear::shear;
    use crate::smoothstep::Profile;

    #[test]
    fn identity_norm_is_exactly_zero() {
        let amb = Ambient::FatTorus { d: 2 };
        let grid = GridSpec::covering(&identity(amb), 9);
        for r in [1.0, 2.01, 2.5] {
            let est = norm_cr(&identity(amb), r, &grid).unwrap();
            assert_eq!(est.value, 0.0, "r = {r}");
        }
    }

    #[test]
    fn linear_shear_c1_norm_is_its_slope() {
        // (x, y) ↦ (x, y + c·x): sup|m − Id| = c·max x, sup|D(m−Id)| = c
        let c = 0.3;
        let amb = Ambient::FatTorus { d: 2 };
        let s = shear(amb, Profile::Linear { slope: c }, 0, vec![0.0, 1.0]).unwrap();
        let grid = GridSpec::covering(&s, 9);
        let est = norm_cr(&s, 1.0, &grid).unwrap();
        assert!((est.value - c).abs() <= 1e-8, "value {}", est.value);
        assert!((est.sup_per_order[1] - c).abs() <= 1e-8);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let amb = Ambient::FatTorus { d: 2 };
        let m = identity(amb);
        let mut grid = GridSpec::covering(&m, 9);
        grid.counts = vec![3, 3];
        assert!(matches!(norm_cr(&m, 1.0, &grid), Err(MapError::GridTooCoarse { .. })));
    }

    #[test]
    fn multi_index_count() {
        // order-2 indices over 2 axes: xx, xy, yy
        assert_eq!(multi_indices(2, 2).len(), 3);
        assert_eq!(multi_indices(3, 2).len(), 6);
    }
}
