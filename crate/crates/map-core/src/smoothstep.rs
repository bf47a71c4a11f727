//! Polynomial smoothsteps and the plateau bump profiles built from them.
//!
//! `SmoothStep::new(m)` is the degree `2m+1` polynomial with `S(0)=0`,
//! `S(1)=1` and vanishing derivatives of orders `1..=m` at both ends, so a
//! piecewise profile glued from constants and smoothstep ramps is globally
//! `C^m` with closed-form derivatives of every order.

use serde::{Deserialize, Serialize};

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Monotone `C^m` step on `[0,1]` in the power basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothStep {
    pub order: usize,
    coeffs: Vec<f64>,
}

impl SmoothStep {
    pub fn new(order: usize) -> Self {
        // S_m(t) = sum_k binom(m+k,k) binom(2m+1,m-k) (-1)^k t^{m+1+k}
        let m = order as u64;
        let mut coeffs = vec![0.0; 2 * order + 2];
        for k in 0..=m {
            let c = binomial(m + k, k) as f64 * binomial(2 * m + 1, m - k) as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[(m + 1 + k) as usize] = sign * c;
        }
        SmoothStep { order, coeffs }
    }

    /// k-th derivative at `t`, clamped to the constant extensions outside [0,1].
    pub fn deriv(&self, t: f64, k: usize) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return if k == 0 {
                if t < 0.0 {
                    0.0
                } else {
                    1.0
                }
            } else {
                0.0
            };
        }
        // differentiate the power basis k times, then Horner
        let mut acc = 0.0;
        for (j, &c) in self.coeffs.iter().enumerate().rev() {
            if j < k || c == 0.0 {
                continue;
            }
            let mut fall = 1.0;
            for i in 0..k {
                fall *= (j - i) as f64;
            }
            acc += c * fall * t.powi((j - k) as i32);
        }
        acc
    }

    pub fn value(&self, t: f64) -> f64 {
        self.deriv(t, 0)
    }

    /// Sup of |S^{(k)}| over [0,1], by dense sampling.  Used to freeze
    /// profile norm constants in tests and reports.
    pub fn deriv_sup(&self, k: usize) -> f64 {
        let n = 4001;
        (0..n)
            .map(|i| self.deriv(i as f64 / (n - 1) as f64, k).abs())
            .fold(0.0, f64::max)
    }
}

/// A shear amplitude profile: either the compactly supported plateau bump or
/// a plain linear ramp (handy as an analytically trivial reference shear).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Profile {
    /// Zero on `(0, z0] ∪ [z3, width)`, equal to `amplitude` on `[z1, z2]`,
    /// `C^order` smoothstep ramps in between.
    PlateauBump {
        amplitude: f64,
        /// breakpoints 0 < z0 < z1 < z2 < z3 < width
        z0: f64,
        z1: f64,
        z2: f64,
        z3: f64,
        width: f64,
        order: usize,
    },
    /// `x ↦ slope · x`.
    Linear { slope: f64 },
}

impl Profile {
    /// k-th derivative of the profile at `x`.
    pub fn deriv(&self, x: f64, k: usize) -> f64 {
        match self {
            Profile::Linear { slope } => match k {
                0 => slope * x,
                1 => *slope,
                _ => 0.0,
            },
            Profile::PlateauBump { amplitude, z0, z1, z2, z3, width, order } => {
                if x <= *z0 || x >= *z3 {
                    return 0.0;
                }
                if x >= *z1 && x <= *z2 {
                    return if k == 0 { *amplitude } else { 0.0 };
                }
                let step = SmoothStep::new(*order);
                debug_assert!(*width > 0.0);
                if x < *z1 {
                    let w = z1 - z0;
                    amplitude * step.deriv((x - z0) / w, k) / w.powi(k as i32)
                } else {
                    let w = z3 - z2;
                    amplitude * step.deriv((z3 - x) / w, k) / (-w).powi(k as i32)
                }
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.deriv(x, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_smoothstep_values() {
        // m = 1 is 3t^2 - 2t^3, m = 2 is 6t^5 - 15t^4 + 10t^3
        let s1 = SmoothStep::new(1);
        assert!((s1.value(0.5) - 0.5).abs() < 1e-15);
        assert!((s1.deriv(0.5, 1) - 1.5).abs() < 1e-15);
        let s2 = SmoothStep::new(2);
        assert!((s2.value(0.5) - 0.5).abs() < 1e-15);
        assert!((s2.value(0.25) - (6.0 * 0.25f64.powi(5) - 15.0 * 0.25f64.powi(4) + 10.0 * 0.25f64.powi(3))).abs() < 1e-14);
    }

    #[test]
    fn flat_ends() {
        let s = SmoothStep::new(5);
        for k in 1..=5 {
            assert!(s.deriv(0.0, k).abs() < 1e-12, "order {k} at 0");
            assert!(s.deriv(1.0, k).abs() < 1e-9, "order {k} at 1");
        }
        assert_eq!(s.value(0.0), 0.0);
        assert!((s.value(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = SmoothStep::new(4);
        let h = 1e-6;
        for &t in &[0.2, 0.5, 0.8] {
            let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
            assert!((fd - s.deriv(t, 1)).abs() < 1e-8);
        }
    }

    #[test]
    fn bump_plateau_and_zeros() {
        let p = Profile::PlateauBump {
            amplitude: 1.0 / 32.0,
            z0: 0.05,
            z1: 0.075,
            z2: 0.175,
            z3: 0.2,
            width: 0.25,
            order: 5,
        };
        assert_eq!(p.value(0.125), 1.0 / 32.0);
        assert_eq!(p.value(0.01), 0.0);
        assert_eq!(p.value(0.24), 0.0);
        assert!(p.value(0.06) > 0.0 && p.value(0.06) < 1.0 / 32.0);
    }
}
