//! Phase spaces: the unit ball, fat tori and flat tori, with their
//! wrap-around rules and metrics.
//!
//! Periodic coordinates are always stored reduced to `[0, c)`; distances on
//! circle factors use the shorter arc.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MapError, Result};

/// How much an interval coordinate may overshoot before evaluation errors out.
pub const ESCAPE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum Ambient {
    /// Closed unit ball in R^d.
    Ball { d: usize },
    /// Fat torus `[0,1] x T^{d-1}`, coordinates (x, y, z_1..z_{d-2}).
    FatTorus { d: usize },
    /// Long fat torus `[0,1/q] x (R/qZ) x T^{d-2}`.
    LongFatTorus { d: usize, q: u32 },
    /// Flat torus `T^n`.
    Torus { n: usize },
}

/// Per-coordinate topology of an ambient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoordTopology {
    Interval { lo: f64, hi: f64 },
    Circle { circumference: f64 },
}

impl std::fmt::Display for Ambient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ambient::Ball { d } => write!(f, "B^{d}"),
            Ambient::FatTorus { d } => write!(f, "F({d})"),
            Ambient::LongFatTorus { d, q } => write!(f, "F~({d},q={q})"),
            Ambient::Torus { n } => write!(f, "T^{n}"),
        }
    }
}

impl Ambient {
    pub fn dim(&self) -> usize {
        match *self {
            Ambient::Ball { d } => d,
            Ambient::FatTorus { d } => d,
            Ambient::LongFatTorus { d, .. } => d,
            Ambient::Torus { n } => n,
        }
    }

    pub fn topology(&self, i: usize) -> CoordTopology {
        match *self {
            Ambient::Ball { .. } => CoordTopology::Interval { lo: -1.0, hi: 1.0 },
            Ambient::FatTorus { .. } => {
                if i == 0 {
                    CoordTopology::Interval { lo: 0.0, hi: 1.0 }
                } else {
                    CoordTopology::Circle { circumference: 1.0 }
                }
            }
            Ambient::LongFatTorus { q, .. } => {
                if i == 0 {
                    CoordTopology::Interval { lo: 0.0, hi: 1.0 / q as f64 }
                } else if i == 1 {
                    CoordTopology::Circle { circumference: q as f64 }
                } else {
                    CoordTopology::Circle { circumference: 1.0 }
                }
            }
            Ambient::Torus { .. } => CoordTopology::Circle { circumference: 1.0 },
        }
    }

    /// Reduce coordinates into the fundamental domain.  Interval coordinates
    /// may overshoot by up to [`ESCAPE_TOL`] and are clamped; beyond that the
    /// point is considered to have escaped.
    pub fn normalize(&self, coords: &mut [f64]) -> Result<()> {
        if coords.len() != self.dim() {
            return Err(MapError::BadParams(format!(
                "point has {} coordinates, ambient {} needs {}",
                coords.len(),
                self,
                self.dim()
            )));
        }
        for (i, c) in coords.iter_mut().enumerate() {
            match self.topology(i) {
                CoordTopology::Interval { lo, hi } => {
                    if *c < lo {
                        let excess = lo - *c;
                        if excess > ESCAPE_TOL {
                            return Err(MapError::DomainEscape { index: i, excess });
                        }
                        *c = lo;
                    } else if *c > hi {
                        let excess = *c - hi;
                        if excess > ESCAPE_TOL {
                            return Err(MapError::DomainEscape { index: i, excess });
                        }
                        *c = hi;
                    }
                }
                CoordTopology::Circle { circumference } => {
                    *c = c.rem_euclid(circumference);
                    // rem_euclid can return the modulus itself for tiny negatives
                    if *c >= circumference {
                        *c -= circumference;
                    }
                }
            }
        }
        if let Ambient::Ball { .. } = self {
            let r = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
            if r > 1.0 + ESCAPE_TOL {
                return Err(MapError::DomainEscape { index: 0, excess: r - 1.0 });
            }
        }
        Ok(())
    }

    /// Shortest representative of a coordinate difference `b - a`.
    pub fn wrap_delta(&self, i: usize, delta: f64) -> f64 {
        match self.topology(i) {
            CoordTopology::Interval { .. } => delta,
            CoordTopology::Circle { circumference } => {
                let mut d = delta.rem_euclid(circumference);
                if d > circumference / 2.0 {
                    d -= circumference;
                }
                d
            }
        }
    }

    /// Shortest-arc displacement vector `b - a`.
    pub fn displacement(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| self.wrap_delta(i, y - x))
            .collect()
    }

    /// Euclidean distance with the shorter arc on circle factors.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.displacement(a, b).iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    /// Uniform sample, used by seeded verification sweeps.  Interval
    /// coordinates are inset by `inset` so finite-difference stencils stay
    /// inside the domain.
    pub fn sample<R: Rng>(&self, rng: &mut R, inset: f64) -> Vec<f64> {
        match *self {
            Ambient::Ball { d } => loop {
                let p: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0 + inset..1.0 - inset)).collect();
                if p.iter().map(|c| c * c).sum::<f64>().sqrt() < 1.0 - inset {
                    return p;
                }
            },
            _ => (0..self.dim())
                .map(|i| match self.topology(i) {
                    CoordTopology::Interval { lo, hi } => rng.random_range(lo + inset..hi - inset),
                    CoordTopology::Circle { circumference } => rng.random_range(0.0..circumference),
                })
                .collect(),
        }
    }
}

/// A point tagged with its ambient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<f64>,
    pub ambient: Ambient,
}

impl Point {
    pub fn new(coords: Vec<f64>, ambient: Ambient) -> Result<Self> {
        let mut coords = coords;
        ambient.normalize(&mut coords)?;
        Ok(Point { coords, ambient })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.ambient.distance(&self.coords, &other.coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_reduction() {
        let amb = Ambient::FatTorus { d: 2 };
        let p = Point::new(vec![0.5, 1.75], amb).unwrap();
        assert!((p.coords[1] - 0.75).abs() < 1e-15);
        let p = Point::new(vec![0.5, -0.25], amb).unwrap();
        assert!((p.coords[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn interval_escape() {
        let amb = Ambient::FatTorus { d: 2 };
        assert!(Point::new(vec![1.5, 0.0], amb).is_err());
        // within clamp tolerance
        let p = Point::new(vec![1.0 + 1e-12, 0.0], amb).unwrap();
        assert_eq!(p.coords[0], 1.0);
    }

    #[test]
    fn shorter_arc_distance() {
        let amb = Ambient::Torus { n: 2 };
        let d = amb.distance(&[0.05, 0.5], &[0.95, 0.5]);
        assert!((d - 0.1).abs() < 1e-15);
    }

    #[test]
    fn long_fat_torus_ranges() {
        let amb = Ambient::LongFatTorus { d: 3, q: 4 };
        assert_eq!(amb.topology(0), CoordTopology::Interval { lo: 0.0, hi: 0.25 });
        assert_eq!(amb.topology(1), CoordTopology::Circle { circumference: 4.0 });
        assert_eq!(amb.topology(2), CoordTopology::Circle { circumference: 1.0 });
        // fat torus and long fat torus enclose the same volume
        let vol_long = 0.25 * 4.0 * 1.0;
        assert_eq!(vol_long, 1.0);
    }
}
