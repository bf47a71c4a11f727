//! Target maps are specified by their generating field, not as black boxes:
//! the time-1 flow of a compactly supported divergence-free field is the
//! target `f`, which supplies the Lipschitz isotopy to the identity
//! constructively and keeps every factor measure preserving.

use map_core::fields::{FieldSpec, HamTerm, RadialCutoff, RotTerm};
use map_core::nodes::flow::flow_map;
use map_core::{Ambient, MapExpr, Point};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BuildError, Result};

pub const DEFAULT_CUTOFF: f64 = 0.9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsotopyGenerator {
    pub field: FieldSpec,
    /// per-unit-time integration tolerance
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    map_core::nodes::flow::DEFAULT_FLOW_TOL
}

impl IsotopyGenerator {
    pub fn new(field: FieldSpec) -> Self {
        IsotopyGenerator { field, tol: default_tol() }
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn ambient(&self) -> Ambient {
        Ambient::Ball { d: self.dim() }
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.field.support_radius()
    }

    /// ψ_t as a flow node; ψ_0 is the identity exactly.
    pub fn flow(&self, t: f64) -> Result<MapExpr> {
        if !(-1.0..=1.0).contains(&t) {
            return Err(BuildError::BadParams(format!("flow time {t} outside [-1, 1]")));
        }
        Ok(flow_map(self.field.clone(), t, self.tol)?)
    }

    /// Sampled construction checks: the field must vanish outside its cutoff
    /// radius and be divergence free.
    pub fn validate(&self, seed: u64) -> Result<GeneratorChecks> {
        if self.cutoff_radius() >= 1.0 && !self.field.is_zero() {
            return Err(BuildError::BadParams(format!(
                "cutoff radius {} must stay below 1",
                self.cutoff_radius()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim();
        let mut max_div = 0.0f64;
        let mut outside_leak = 0.0f64;
        for _ in 0..500 {
            let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
            if r >= 1.0 {
                continue;
            }
            max_div = max_div.max(self.field.divergence(&p).abs());
            if r >= self.cutoff_radius() {
                let v = self.field.eval(&p);
                outside_leak = outside_leak.max(v.iter().map(|c| c * c).sum::<f64>().sqrt());
            }
        }
        if max_div > 1e-10 {
            return Err(BuildError::ConstructionFailure(format!(
                "field divergence {max_div:.3e} exceeds 1e-10"
            )));
        }
        if outside_leak > 0.0 {
            return Err(BuildError::ConstructionFailure(format!(
                "field leaks {outside_leak:.3e} outside its cutoff radius"
            )));
        }
        Ok(GeneratorChecks { max_divergence: max_div, support_radius: self.cutoff_radius() })
    }

    /// Sup of |X| and |DX| over seeded samples; handy for norm budgeting.
    pub fn field_magnitude(&self, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim();
        let mut sup = 0.0f64;
        let mut sup_d = 0.0f64;
        for _ in 0..800 {
            let p = Ambient::Ball { d }.sample(&mut rng, 1e-6);
            let v = self.field.eval(&p);
            sup = sup.max(v.iter().map(|c| c * c).sum::<f64>().sqrt());
            sup_d = sup_d.max(self.field.jacobian(&p).norm());
        }
        (sup, sup_d)
    }

    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Point {
        let amb = self.ambient();
        Point::new(amb.sample(rng, 1e-9), amb).expect("ball sample")
    }
}

/// Zero field: generates the identity target.
pub fn identity_generator(d: usize) -> IsotopyGenerator {
    IsotopyGenerator::new(FieldSpec::Zero { d })
}

/// The planar test target used throughout: a mildly nonlinear Hamiltonian
/// with polynomial and Fourier terms under the standard cutoff.
pub fn sample_hamiltonian_2d() -> IsotopyGenerator {
    IsotopyGenerator::new(FieldSpec::Hamiltonian2d {
        terms: vec![
            HamTerm::Poly { c: 0.12, px: 1, py: 1 },
            HamTerm::Poly { c: -0.05, px: 2, py: 0 },
            HamTerm::Fourier { c: 0.04, kx: 1, ky: 1, phase: 0.4 },
        ],
        cutoff: RadialCutoff { plateau: 0.55, cut: DEFAULT_CUTOFF, order: 5 },
    })
}

/// Rigid-rotation Hamiltonian `ω(x² + y²)/2`, cut off beyond `plateau`; the
/// flow is an exact rotation on the plateau disc.
pub fn rotation_generator(omega: f64, plateau: f64) -> IsotopyGenerator {
    IsotopyGenerator::new(FieldSpec::Hamiltonian2d {
        terms: vec![
            HamTerm::Poly { c: omega / 2.0, px: 2, py: 0 },
            HamTerm::Poly { c: omega / 2.0, px: 0, py: 2 },
        ],
        cutoff: RadialCutoff { plateau, cut: DEFAULT_CUTOFF, order: 5 },
    })
}

/// A d ≥ 3 target from planar rotation components.
pub fn sample_rotational(d: usize) -> IsotopyGenerator {
    IsotopyGenerator::new(FieldSpec::Rotational {
        d,
        terms: vec![
            RotTerm {
                c: 0.35,
                plane: (0, 1),
                center: vec![0.0; d],
                cutoff: RadialCutoff { plateau: 0.4, cut: 0.7, order: 5 },
            },
            RotTerm {
                c: -0.2,
                plane: (1, d - 1),
                center: {
                    let mut c = vec![0.0; d];
                    c[0] = 0.15;
                    c
                },
                cutoff: RadialCutoff { plateau: 0.3, cut: 0.6, order: 5 },
            },
        ],
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorChecks {
    pub max_divergence: f64,
    pub support_radius: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_sample_generators() {
        sample_hamiltonian_2d().validate(1).unwrap();
        rotation_generator(0.8, 0.5).validate(2).unwrap();
        sample_rotational(3).validate(3).unwrap();
        identity_generator(2).validate(4).unwrap();
    }

    #[test]
    fn flow_zero_is_identity() {
        let gen = sample_hamiltonian_2d();
        assert!(gen.flow(0.0).unwrap().is_identity());
    }

    #[test]
    fn generator_spec_round_trips_as_json() {
        let gen = sample_hamiltonian_2d();
        let js = serde_json::to_string(&gen).unwrap();
        let back: IsotopyGenerator = serde_json::from_str(&js).unwrap();
        assert_eq!(back.field, gen.field);
    }
}
