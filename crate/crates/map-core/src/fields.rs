//! Divergence-free vector fields used to generate conservative isotopies.
//!
//! Two families, both with closed-form Jacobians and compact support inside
//! the unit ball:
//!
//! * `Hamiltonian2d`: the symplectic gradient of a cutoff-modulated sum of
//!   polynomial and Fourier terms (d = 2), divergence free identically;
//! * `Rotational`: a sum of planar rotation fields with radial amplitude
//!   profiles (any d ≥ 2).  `div(g(ρ)(w_j e_i − w_i e_j)) = 0` for every
//!   radial profile g, so cutting off never breaks incompressibility.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::smoothstep::SmoothStep;

/// Radial plateau window: 1 on `[0, plateau]`, smoothstep down to 0 at `cut`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialCutoff {
    pub plateau: f64,
    pub cut: f64,
    pub order: usize,
}

impl RadialCutoff {
    fn deriv(&self, rho: f64, k: usize) -> f64 {
        if rho <= self.plateau {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        if rho >= self.cut {
            return 0.0;
        }
        let w = self.cut - self.plateau;
        let s = SmoothStep::new(self.order);
        s.deriv((self.cut - rho) / w, k) / (-w).powi(k as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum HamTerm {
    /// `c · x^px · y^py`
    Poly { c: f64, px: u32, py: u32 },
    /// `c · sin(2π(kx·x + ky·y) + phase)`
    Fourier { c: f64, kx: i32, ky: i32, phase: f64 },
}

impl HamTerm {
    /// (value, gradient, hessian)
    fn eval(&self, x: f64, y: f64) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        match *self {
            HamTerm::Poly { c, px, py } => {
                let p = px as i32;
                let q = py as i32;
                let xp = |k: i32| if p - k < 0 { 0.0 } else { x.powi(p - k) };
                let yq = |k: i32| if q - k < 0 { 0.0 } else { y.powi(q - k) };
                let v = c * xp(0) * yq(0);
                let gx = c * p as f64 * xp(1) * yq(0);
                let gy = c * q as f64 * xp(0) * yq(1);
                let hxx = c * (p * (p - 1)) as f64 * xp(2) * yq(0);
                let hyy = c * (q * (q - 1)) as f64 * xp(0) * yq(2);
                let hxy = c * (p * q) as f64 * xp(1) * yq(1);
                (v, [gx, gy], [[hxx, hxy], [hxy, hyy]])
            }
            HamTerm::Fourier { c, kx, ky, phase } => {
                let tau = std::f64::consts::TAU;
                let arg = tau * (kx as f64 * x + ky as f64 * y) + phase;
                let (s, co) = arg.sin_cos();
                let (ax, ay) = (tau * kx as f64, tau * ky as f64);
                (
                    c * s,
                    [c * co * ax, c * co * ay],
                    [[-c * s * ax * ax, -c * s * ax * ay], [-c * s * ax * ay, -c * s * ay * ay]],
                )
            }
        }
    }
}

/// Planar rotation component `c · g(|p − center|) · (w_j e_i − w_i e_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotTerm {
    pub c: f64,
    pub plane: (usize, usize),
    pub center: Vec<f64>,
    pub cutoff: RadialCutoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero { d: usize },
    /// Symplectic gradient of `cutoff(|p|) · Σ terms`, d = 2.
    Hamiltonian2d { terms: Vec<HamTerm>, cutoff: RadialCutoff },
    /// Σ of planar rotations, any d ≥ 2.
    Rotational { d: usize, terms: Vec<RotTerm> },
}

impl FieldSpec {
    pub fn dim(&self) -> usize {
        match self {
            FieldSpec::Zero { d } => *d,
            FieldSpec::Hamiltonian2d { .. } => 2,
            FieldSpec::Rotational { d, .. } => *d,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldSpec::Zero { .. } => true,
            FieldSpec::Hamiltonian2d { terms, .. } => terms.is_empty(),
            FieldSpec::Rotational { terms, .. } => terms.is_empty(),
        }
    }

    /// Radius outside of which the field vanishes identically.
    pub fn support_radius(&self) -> f64 {
        match self {
            FieldSpec::Zero { .. } => 0.0,
            FieldSpec::Hamiltonian2d { cutoff, .. } => cutoff.cut,
            FieldSpec::Rotational { terms, .. } => terms
                .iter()
                .map(|t| t.cutoff.cut + t.center.iter().map(|c| c * c).sum::<f64>().sqrt())
                .fold(0.0, f64::max),
        }
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        match self {
            FieldSpec::Zero { d } => vec![0.0; *d],
            FieldSpec::Hamiltonian2d { terms, cutoff } => {
                let (gx, gy) = cutoff_gradient(terms, cutoff, p[0], p[1]);
                vec![gy, -gx]
            }
            FieldSpec::Rotational { d, terms } => {
                let mut out = vec![0.0; *d];
                for t in terms {
                    let w: Vec<f64> = p.iter().zip(&t.center).map(|(a, b)| a - b).collect();
                    let rho = w.iter().map(|c| c * c).sum::<f64>().sqrt();
                    let g = t.c * t.cutoff.deriv(rho, 0);
                    if g != 0.0 {
                        let (i, j) = t.plane;
                        out[i] += g * w[j];
                        out[j] -= g * w[i];
                    }
                }
                out
            }
        }
    }

    pub fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        match self {
            FieldSpec::Zero { d } => DMatrix::zeros(*d, *d),
            FieldSpec::Hamiltonian2d { terms, cutoff } => {
                let h = cutoff_hessian(terms, cutoff, p[0], p[1]);
                // D(J∇H): rows of (H_yx, H_yy; -H_xx, -H_xy)
                DMatrix::from_row_slice(2, 2, &[h[0][1], h[1][1], -h[0][0], -h[0][1]])
            }
            FieldSpec::Rotational { d, terms } => {
                let mut m = DMatrix::zeros(*d, *d);
                for t in terms {
                    let w: Vec<f64> = p.iter().zip(&t.center).map(|(a, b)| a - b).collect();
                    let rho = w.iter().map(|c| c * c).sum::<f64>().sqrt();
                    let g = t.c * t.cutoff.deriv(rho, 0);
                    let gp = t.c * t.cutoff.deriv(rho, 1);
                    let (i, j) = t.plane;
                    if g != 0.0 {
                        m[(i, j)] += g;
                        m[(j, i)] -= g;
                    }
                    if gp != 0.0 && rho > 0.0 {
                        for k in 0..*d {
                            let dk = w[k] / rho;
                            m[(i, k)] += gp * w[j] * dk;
                            m[(j, k)] -= gp * w[i] * dk;
                        }
                    }
                }
                m
            }
        }
    }

    /// Divergence by closed form (identically zero for both families; kept
    /// as a measurable check on the construction).
    pub fn divergence(&self, p: &[f64]) -> f64 {
        let j = self.jacobian(p);
        (0..self.dim()).map(|i| j[(i, i)]).sum()
    }
}

fn cutoff_gradient(terms: &[HamTerm], cutoff: &RadialCutoff, x: f64, y: f64) -> (f64, f64) {
    let rho = (x * x + y * y).sqrt();
    if rho >= cutoff.cut {
        return (0.0, 0.0);
    }
    let mut v = 0.0;
    let mut g = [0.0, 0.0];
    for t in terms {
        let (tv, tg, _) = t.eval(x, y);
        v += tv;
        g[0] += tg[0];
        g[1] += tg[1];
    }
    let chi = cutoff.deriv(rho, 0);
    let chi1 = cutoff.deriv(rho, 1);
    if rho == 0.0 {
        return (chi * g[0], chi * g[1]);
    }
    (chi * g[0] + chi1 * x / rho * v, chi * g[1] + chi1 * y / rho * v)
}

fn cutoff_hessian(terms: &[HamTerm], cutoff: &RadialCutoff, x: f64, y: f64) -> [[f64; 2]; 2] {
    let rho = (x * x + y * y).sqrt();
    if rho >= cutoff.cut {
        return [[0.0; 2]; 2];
    }
    let mut v = 0.0;
    let mut g = [0.0, 0.0];
    let mut h = [[0.0; 2]; 2];
    for t in terms {
        let (tv, tg, th) = t.eval(x, y);
        v += tv;
        g[0] += tg[0];
        g[1] += tg[1];
        for r in 0..2 {
            for c in 0..2 {
                h[r][c] += th[r][c];
            }
        }
    }
    let chi = cutoff.deriv(rho, 0);
    let chi1 = cutoff.deriv(rho, 1);
    let chi2 = cutoff.deriv(rho, 2);
    let mut out = [[0.0; 2]; 2];
    let p = [x, y];
    for r in 0..2 {
        for c in 0..2 {
            let mut s = chi * h[r][c];
            if rho > 0.0 {
                let nr = p[r] / rho;
                let nc = p[c] / rho;
                let delta = if r == c { 1.0 } else { 0.0 };
                s += chi2 * nr * nc * v;
                s += chi1 * ((delta / rho - p[r] * p[c] / (rho * rho * rho)) * v + nr * g[c] + nc * g[r]);
            }
            out[r][c] = s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> FieldSpec {
        FieldSpec::Hamiltonian2d {
            terms: vec![
                HamTerm::Poly { c: 0.12, px: 1, py: 1 },
                HamTerm::Fourier { c: 0.05, kx: 1, ky: 1, phase: 0.3 },
            ],
            cutoff: RadialCutoff { plateau: 0.6, cut: 0.9, order: 5 },
        }
    }

    #[test]
    fn vanishes_outside_cutoff() {
        let f = sample_field();
        for p in [[0.95, 0.0], [0.7, 0.7], [0.0, -0.91]] {
            assert_eq!(f.eval(&p), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn divergence_free_at_samples() {
        let f = sample_field();
        for i in 0..100 {
            let x = -0.85 + 1.7 * (i as f64 * 0.617) % 1.7 - 0.0;
            let y = -0.85 + (i as f64 * 0.389) % 1.7;
            let p = [x.clamp(-0.88, 0.88), y.clamp(-0.88, 0.88)];
            assert!(f.divergence(&p).abs() <= 1e-10, "divergence at {p:?}");
        }
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        let f = sample_field();
        let p = [0.31, -0.44];
        let j = f.jacobian(&p);
        let h = 1e-6;
        for c in 0..2 {
            let mut pp = p;
            let mut pm = p;
            pp[c] += h;
            pm[c] -= h;
            let fp = f.eval(&pp);
            let fm = f.eval(&pm);
            for r in 0..2 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                assert!((fd - j[(r, c)]).abs() < 1e-7, "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn rotational_term_divergence_free() {
        let f = FieldSpec::Rotational {
            d: 3,
            terms: vec![RotTerm {
                c: 0.4,
                plane: (0, 2),
                center: vec![0.1, 0.0, -0.1],
                cutoff: RadialCutoff { plateau: 0.3, cut: 0.6, order: 4 },
            }],
        };
        for i in 0..50 {
            let p = [0.35 * ((i * 7 % 10) as f64 / 10.0 - 0.5), 0.3 * ((i * 3 % 10) as f64 / 10.0), 0.4 * ((i % 10) as f64 / 10.0 - 0.4)];
            assert!(f.divergence(&p).abs() <= 1e-10);
        }
    }
}
