//! Explicit chart between an annular region P of the unit ball and the fat
//! torus (d = 2), rigid on a centered cube and exactly area preserving.
//!
//! P is swept by a nested family of rounded rectangles `fiber(x)`,
//! parameterized so the enclosed area decreases at exactly unit rate; the
//! second coordinate y parameterizes each fiber with speed equal to the
//! reciprocal of the normal spacing between neighboring fibers.  That flux
//! rule makes the Jacobian determinant identically one wherever the map is
//! differentiable, with no quadrature: piece masses have closed forms.
//!
//! Through the middle stretch of the sweep the fiber's straight left side
//! crosses the cube `(−s/2, s/2)²`, `s = 1 − 1/q`, with unit spacing and
//! unit tangential speed, so the chart restricted to the cube is an exact
//! translation.  The family starts at a large rounded rectangle inside the
//! unit disc (the outer boundary of P), and shrinks onto a small off-cube
//! circle (the hole of P).  Profiles are C¹ at the sweep start `x_a`; at
//! the detach fiber `x_b` the derivative jumps on one curve, which the
//! construction validator and the defect reports both track.

use serde_json::Value;
use std::f64::consts::PI;

use super::{f64_from_json, u64_from_json};
use crate::ambient::{Ambient, Point};
use crate::error::{MapError, Result};
use crate::expr::{MapExpr, MapNode};
use crate::smoothstep::SmoothStep;

const FRAC_PI_2: f64 = std::f64::consts::FRAC_PI_2;

/// Fiber shape and its x-derivative: rounded rectangle centered `(cx, 0)`
/// with half-width `w`, half-height `h`, corner radius `c`.
#[derive(Debug, Clone, Copy)]
struct Shape {
    cx: f64,
    w: f64,
    h: f64,
    c: f64,
    dcx: f64,
    dw: f64,
    dh: f64,
    dc: f64,
}

impl Shape {

    /// Signed distance to the fiber boundary (< 0 inside).
    fn sdf(&self, p: &[f64]) -> f64 {
        let qx = (p[0] - self.cx).abs() - (self.w - self.c);
        let qy = p[1].abs() - (self.h - self.c);
        let ax = qx.max(0.0);
        let ay = qy.max(0.0);
        (ax * ax + ay * ay).sqrt() + qx.max(qy).min(0.0) - self.c
    }
}

#[derive(Debug, Clone)]
pub struct BallChart {
    pub q: u32,
    /// cube side
    pub s: f64,
    /// hole radius
    pub r0: f64,
    x_a: f64,
    x_b: f64,
    len_i: f64,
    /// corner-radius line c(x) = c_a + m_c (x − x_a) on [0, x_b]
    c_a: f64,
    m_c: f64,
    /// junction data at x_a and the outer-end profile coefficients
    w_a: f64,
    cx_a: f64,
    o_w: [f64; 2],
    o_cx: [f64; 2],
    /// detach data at x_b and the hole position
    w_b: f64,
    cx_b: f64,
    hx: f64,
    step: SmoothStep,
}

impl BallChart {
    pub fn new(q: u32, r0: f64) -> Result<Self> {
        if q < 3 {
            return Err(MapError::BadParams("ball chart needs q >= 3".into()));
        }
        if !(0.005..0.1).contains(&r0) {
            return Err(MapError::BadParams("hole radius out of range".into()));
        }
        let s = 1.0 - 1.0 / q as f64;
        let x_a = 0.56 / q as f64;
        let x_b = x_a + s;
        let len_i = 1.0 - x_b;
        let area = |x: f64| PI * r0 * r0 + (1.0 - x);

        // stadium solve at the detach fiber: π w² + 2 s w = A(x_b)
        let a_b = area(x_b);
        let w_b = (-s + (s * s + PI * a_b).sqrt()) / PI;
        let c_b = w_b;
        let c_a = c_b + 0.0075;
        let m_c = (c_b - c_a) / s;

        // region C shape at x_a, with its derivative, to splice region O on C¹
        let h_a = s / 2.0 + c_a;
        let n_a = area(x_a) + (4.0 - PI) * c_a * c_a;
        let w_a = n_a / (4.0 * h_a);
        let cx_a = -s / 2.0 + w_a;
        let dn_a = -1.0 + 2.0 * (4.0 - PI) * c_a * m_c;
        let dw_a = (dn_a - 4.0 * w_a * m_c) / (4.0 * h_a);
        let dcx_a = 1.0 + dw_a;

        // outer-end targets of the O-profiles (validated below)
        let w_end = w_a + 0.05;
        let cx_end = cx_a - 0.03;
        let o_w = [-dw_a, (w_end - w_a + dw_a * x_a) / (x_a * x_a)];
        let o_cx = [-dcx_a, (cx_end - cx_a + dcx_a * x_a) / (x_a * x_a)];

        // the hole sits at the detach fiber's center, so the inner shrink is
        // concentric and every gap stays comfortably positive
        let cx_b = x_b - x_a - s / 2.0 + w_b;
        let hx = cx_b;

        let chart = BallChart {
            q,
            s,
            r0,
            x_a,
            x_b,
            len_i,
            c_a,
            m_c,
            w_a,
            cx_a,
            o_w,
            o_cx,
            w_b,
            cx_b,
            hx,
            step: SmoothStep::new(2),
        };
        chart.validate()?;
        Ok(chart)
    }

    fn area_target(&self, x: f64) -> f64 {
        PI * self.r0 * self.r0 + (1.0 - x)
    }

    fn shape(&self, x: f64) -> Shape {
        let a = self.area_target(x);
        let da = -1.0;
        let gap = 4.0 - PI;
        if x >= self.x_b {
            // region I: w drives, c = w, h solves the area
            let t = ((x - self.x_b) / self.len_i).clamp(0.0, 1.0);
            let dw = (self.r0 - self.w_b) / self.len_i;
            let w = self.w_b + (self.r0 - self.w_b) * t;
            let n = a + gap * w * w;
            let dn = da + 2.0 * gap * w * dw;
            let h = n / (4.0 * w);
            let dh = (dn - 4.0 * h * dw) / (4.0 * w);
            let cx = self.cx_b + (self.hx - self.cx_b) * self.step.value(t);
            let dcx = (self.hx - self.cx_b) * self.step.deriv(t, 1) / self.len_i;
            Shape { cx, w, h, c: w, dcx, dw, dh, dc: dw }
        } else if x >= self.x_a {
            // region C: the left side sweeps the cube at unit speed
            let c = self.c_a + self.m_c * (x - self.x_a);
            let h = self.s / 2.0 + c;
            let n = a + gap * c * c;
            let dn = da + 2.0 * gap * c * self.m_c;
            let w = n / (4.0 * h);
            let dw = (dn - 4.0 * w * self.m_c) / (4.0 * h);
            let xl = x - self.x_a - self.s / 2.0;
            Shape { cx: xl + w, w, h, c, dcx: 1.0 + dw, dw, dh: self.m_c, dc: self.m_c }
        } else {
            // region O: quadratic splice out to the outer boundary
            let u = self.x_a - x;
            let c = self.c_a + self.m_c * (x - self.x_a);
            let w = self.w_a + self.o_w[0] * u + self.o_w[1] * u * u;
            let dw = -(self.o_w[0] + 2.0 * self.o_w[1] * u);
            let cx = self.cx_a + self.o_cx[0] * u + self.o_cx[1] * u * u;
            let dcx = -(self.o_cx[0] + 2.0 * self.o_cx[1] * u);
            let n = a + gap * c * c;
            let dn = da + 2.0 * gap * c * self.m_c;
            let h = n / (4.0 * w);
            let dh = (dn - 4.0 * h * dw) / (4.0 * w);
            Shape { cx, w, h, c, dcx, dw, dh, dc: self.m_c }
        }
    }

    /// Construction validator: strictly nested fibers (all gaps positive),
    /// valid shapes, outer fiber inside the unit disc, hole clearances.
    fn validate(&self) -> Result<()> {
        let gap_min = 2e-3;
        let n = 4000;
        for i in 0..=n {
            let x = i as f64 / n as f64;
            let sh = self.shape(x);
            if !(sh.c > 1e-6 && sh.c <= sh.w + 1e-12 && sh.c <= sh.h + 1e-12) {
                return Err(MapError::BadParams(format!(
                    "invalid fiber shape at x = {x}: w {}, h {}, c {}",
                    sh.w, sh.h, sh.c
                )));
            }
            let walk = Walk::new(&sh);
            for (j, piece) in walk.pieces.iter().enumerate() {
                let worst = piece.min_gap();
                if worst < gap_min && piece.len() > 1e-12 {
                    return Err(MapError::BadParams(format!(
                        "fiber family folds: gap {worst:.2e} on piece {j} at x = {x}"
                    )));
                }
            }
            // hole stays inside every earlier fiber; the clearance decays to
            // zero as the family converges onto the hole circle
            if x < 1.0 - 1e-9 {
                let hole_sd = sh.sdf(&[self.hx, 0.0]);
                let margin = if x < self.x_b { 0.004 } else { 0.0 };
                if hole_sd > -(self.r0 + margin) + 1e-12 {
                    return Err(MapError::BadParams(format!(
                        "hole not inside fiber at x = {x} (sd {hole_sd:.4})"
                    )));
                }
            }
        }
        // outer boundary inside the unit disc
        let outer = self.shape(0.0);
        let reach = (outer.cx.abs() + outer.w).max(outer.h).max(
            ((outer.cx.abs() + outer.w - outer.c).powi(2) + (outer.h - outer.c).powi(2)).sqrt() + outer.c,
        );
        if reach >= 0.995 {
            return Err(MapError::BadParams(format!("outer fiber reaches {reach:.3} of the unit disc")));
        }
        // hole clear of the cube
        if self.hx - self.r0 <= self.s / 2.0 + 0.004 {
            return Err(MapError::BadParams("hole too close to the cube".into()));
        }
        Ok(())
    }

    /// Forward parameterization: fat-torus point to the plane.
    fn emit(&self, x: f64, y: f64) -> Result<Vec<f64>> {
        // rigid shortcut across the cube sweep
        if x >= self.x_a && x <= self.x_b {
            let yy = y;
            if yy >= 0.0 && yy <= self.s {
                return Ok(vec![x - self.x_a - self.s / 2.0, yy - self.s / 2.0]);
            }
        }
        let sh = self.shape(x);
        let walk = Walk::new(&sh);
        walk.emit(y)
    }

    /// Inverse parameterization: plane to fat-torus coordinates.
    fn locate(&self, p: &[f64]) -> Result<(f64, f64)> {
        // rigid shortcut inside the cube
        if p[0].abs() < self.s / 2.0 && p[1].abs() < self.s / 2.0 {
            return Ok((p[0] + self.x_a + self.s / 2.0, p[1] + self.s / 2.0));
        }
        let sd_outer = self.shape(0.0).sdf(p);
        if sd_outer >= -1e-12 {
            return Err(MapError::DomainEscape { index: 0, excess: sd_outer.max(1e-12) });
        }
        let dh = ((p[0] - self.hx).powi(2) + p[1].powi(2)).sqrt();
        if dh <= self.r0 + 1e-12 {
            return Err(MapError::DomainEscape { index: 0, excess: (self.r0 - dh).max(1e-12) });
        }
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        for _ in 0..70 {
            let mid = 0.5 * (lo + hi);
            if self.shape(mid).sdf(p) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        let sh = self.shape(x);
        let walk = Walk::new(&sh);
        let y = walk.mass_at(&sh, p);
        Ok((x, y))
    }

    pub fn domain_contains_plane(&self, p: &[f64]) -> bool {
        if self.shape(0.0).sdf(p) >= -1e-9 {
            return false;
        }
        ((p[0] - self.hx).powi(2) + p[1].powi(2)).sqrt() > self.r0 + 1e-9
    }

    /// Would a fat-torus disc of radius `rho` at `center_f` land in the
    /// rigid patch (where the chart is an exact translation)?
    pub fn rigid_disc_f(&self, center_f: &[f64], rho: f64) -> bool {
        let m = 1e-9;
        center_f[0] - rho > self.x_a + m
            && center_f[0] + rho < self.x_b - m
            && center_f[1] - rho > m
            && center_f[1] + rho < self.s - m
    }

    /// Ball-side rigid region: the open cube.
    pub fn rigid_disc_ball(&self, center: &[f64], rho: f64) -> bool {
        center[0].abs() + rho < self.s / 2.0 && center[1].abs() + rho < self.s / 2.0
    }

    /// Rigid translation taking cube points to their fat-torus images.
    pub fn patch_offset(&self) -> [f64; 2] {
        [self.x_a + self.s / 2.0, self.s / 2.0]
    }
}

/// One walked fiber: pieces ordered clockwise from the bottom-left junction.
struct Walk {
    pieces: [Piece; 8],
    masses: [f64; 8],
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    /// vertical or horizontal straight run from `from` to `to` with constant gap
    Side { from: [f64; 2], to: [f64; 2], gap: f64 },
    /// corner arc around `center`, walked from `th1` to `th2` (decreasing)
    Arc { center: [f64; 2], radius: f64, th1: f64, th2: f64, cdot: [f64; 2], dc: f64 },
}

impl Piece {
    fn len(&self) -> f64 {
        match self {
            Piece::Side { from, to, .. } => ((to[0] - from[0]).powi(2) + (to[1] - from[1]).powi(2)).sqrt(),
            Piece::Arc { radius, th1, th2, .. } => radius * (th1 - th2).abs(),
        }
    }

    fn gap_at(&self, th: f64) -> f64 {
        match self {
            Piece::Side { gap, .. } => *gap,
            Piece::Arc { cdot, dc, .. } => -(cdot[0] * th.cos() + cdot[1] * th.sin()) - dc,
        }
    }

    fn min_gap(&self) -> f64 {
        match self {
            Piece::Side { gap, .. } => *gap,
            Piece::Arc { th1, th2, .. } => (0..=6)
                .map(|i| self.gap_at(th2 + (th1 - th2) * i as f64 / 6.0))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Mass of the whole piece (closed form on arcs).
    fn mass(&self) -> f64 {
        match self {
            Piece::Side { gap, .. } => gap * self.len(),
            Piece::Arc { .. } => self.mass_to(self.theta2()),
        }
    }

    fn theta2(&self) -> f64 {
        match self {
            Piece::Arc { th2, .. } => *th2,
            _ => 0.0,
        }
    }

    /// Mass accumulated from the walk start of an arc down to angle `th`.
    fn mass_to(&self, th: f64) -> f64 {
        match self {
            Piece::Arc { radius, th1, cdot, dc, .. } => {
                radius
                    * (-cdot[0] * (th1.sin() - th.sin()) - cdot[1] * (th.cos() - th1.cos())
                        - dc * (th1 - th))
            }
            _ => 0.0,
        }
    }
}

impl Walk {
    fn new(sh: &Shape) -> Self {
        let (cx, w, h, c) = (sh.cx, sh.w, sh.h, sh.c);
        let (xl, xr) = (cx - w, cx + w);
        let (hc, wc) = (h - c, w - c);
        let gl = sh.dcx - sh.dw;
        let gr = -(sh.dcx + sh.dw);
        let gt = -sh.dh;
        let ctl = [cx - wc, hc];
        let ctr = [cx + wc, hc];
        let cbr = [cx + wc, -hc];
        let cbl = [cx - wc, -hc];
        let up = [sh.dcx - sh.dw + sh.dc, sh.dh - sh.dc];
        let upr = [sh.dcx + sh.dw - sh.dc, sh.dh - sh.dc];
        let dnr = [sh.dcx + sh.dw - sh.dc, -(sh.dh - sh.dc)];
        let dnl = [sh.dcx - sh.dw + sh.dc, -(sh.dh - sh.dc)];
        let pieces = [
            Piece::Side { from: [xl, -hc], to: [xl, hc], gap: gl },
            Piece::Arc { center: ctl, radius: c, th1: PI, th2: FRAC_PI_2, cdot: up, dc: sh.dc },
            Piece::Side { from: [cx - wc, h], to: [cx + wc, h], gap: gt },
            Piece::Arc { center: ctr, radius: c, th1: FRAC_PI_2, th2: 0.0, cdot: upr, dc: sh.dc },
            Piece::Side { from: [xr, hc], to: [xr, -hc], gap: gr },
            Piece::Arc { center: cbr, radius: c, th1: 0.0, th2: -FRAC_PI_2, cdot: dnr, dc: sh.dc },
            Piece::Side { from: [cx + wc, -h], to: [cx - wc, -h], gap: gt },
            Piece::Arc { center: cbl, radius: c, th1: -FRAC_PI_2, th2: -PI, cdot: dnl, dc: sh.dc },
        ];
        let mut masses = [0.0f64; 8];
        let mut total = 0.0;
        for i in 0..7 {
            masses[i] = pieces[i].mass().max(0.0);
            total += masses[i];
        }
        // the analytic total is exactly the unit sweep rate; the last piece
        // absorbs the closed-form rounding so y wraps exactly at 1
        masses[7] = (1.0 - total).max(1e-300);
        Walk { pieces, masses }
    }

    fn emit(&self, y: f64) -> Result<Vec<f64>> {
        let mut rem = y.rem_euclid(1.0);
        for (piece, mass) in self.pieces.iter().zip(&self.masses) {
            if rem > *mass {
                rem -= *mass;
                continue;
            }
            return Ok(match piece {
                Piece::Side { from, to, gap } => {
                    let len = piece.len();
                    let frac = if *gap > 0.0 { (rem / gap / len).clamp(0.0, 1.0) } else { 0.0 };
                    vec![from[0] + frac * (to[0] - from[0]), from[1] + frac * (to[1] - from[1])]
                }
                Piece::Arc { center, radius, th1, th2, .. } => {
                    let total = piece.mass();
                    let mut th = th1 + (th2 - th1) * (rem / total.max(1e-300)).clamp(0.0, 1.0);
                    for _ in 0..40 {
                        let f = piece.mass_to(th) - rem;
                        if f.abs() <= 1e-15 {
                            break;
                        }
                        let slope = -radius * piece.gap_at(th);
                        th = (th - f / slope).clamp(th2.min(*th1), th2.max(*th1));
                    }
                    vec![center[0] + radius * th.cos(), center[1] + radius * th.sin()]
                }
            });
        }
        // numerically y == 1: the walk closed
        let p0 = &self.pieces[0];
        Ok(match p0 {
            Piece::Side { from, .. } => vec![from[0], from[1]],
            _ => unreachable!("walk starts on the left side"),
        })
    }

    /// Accumulated mass of a point known to lie on the fiber.
    fn mass_at(&self, sh: &Shape, p: &[f64]) -> f64 {
        let (cx, w, h, c) = (sh.cx, sh.w, sh.h, sh.c);
        let (hc, wc) = (h - c, w - c);
        let xrel = p[0] - cx;
        let before: f64;
        let within: f64;
        if xrel.abs() <= wc + 1e-12 && p[1].abs() >= hc {
            // top or bottom side
            if p[1] > 0.0 {
                before = self.masses[0] + self.masses[1];
                let piece = &self.pieces[2];
                within = piece.gap_at(0.0) * (p[0] - (cx - wc)).max(0.0);
            } else {
                before = self.masses[..6].iter().sum();
                let piece = &self.pieces[6];
                within = piece.gap_at(0.0) * ((cx + wc) - p[0]).max(0.0);
            }
        } else if p[1].abs() <= hc + 1e-12 && xrel.abs() >= wc {
            // left or right side
            if xrel < 0.0 {
                before = 0.0;
                within = self.pieces[0].gap_at(0.0) * (p[1] + hc).max(0.0);
            } else {
                before = self.masses[..4].iter().sum();
                within = self.pieces[4].gap_at(0.0) * (hc - p[1]).max(0.0);
            }
        } else {
            // corner arcs
            let (idx, center): (usize, [f64; 2]) = if xrel >= 0.0 && p[1] >= 0.0 {
                (3, [cx + wc, hc])
            } else if xrel < 0.0 && p[1] >= 0.0 {
                (1, [cx - wc, hc])
            } else if xrel >= 0.0 {
                (5, [cx + wc, -hc])
            } else {
                (7, [cx - wc, -hc])
            };
            let mut th = (p[1] - center[1]).atan2(p[0] - center[0]);
            // the BL arc is walked into (−π, −π/2], keep θ on that branch
            if idx == 7 && th > 0.0 {
                th -= 2.0 * PI;
            }
            before = self.masses[..idx].iter().sum();
            within = self.pieces[idx].mass_to(th).max(0.0);
        }
        (before + within).rem_euclid(1.0)
    }
}

#[derive(Debug)]
pub struct BallChartNode {
    chart: BallChart,
    /// false: ball → fat torus (the chart h); true: the inverse direction
    reversed: bool,
}

/// Build the chart and wrap it as a map node `P ⊂ B² → F`.
pub fn ball_chart(q: u32) -> Result<(BallChart, MapExpr)> {
    let chart = BallChart::new(q, 0.02)?;
    let node = BallChartNode { chart: chart.clone(), reversed: false };
    Ok((chart, MapExpr::from_node(node)))
}

impl MapNode for BallChartNode {
    fn kind(&self) -> &'static str {
        "ball_chart"
    }
    fn source(&self) -> Ambient {
        if self.reversed {
            Ambient::FatTorus { d: 2 }
        } else {
            Ambient::Ball { d: 2 }
        }
    }
    fn target(&self) -> Ambient {
        if self.reversed {
            Ambient::Ball { d: 2 }
        } else {
            Ambient::FatTorus { d: 2 }
        }
    }
    fn eval(&self, p: &Point) -> Result<Point> {
        if self.reversed {
            let out = self.chart.emit(p.coords[0], p.coords[1])?;
            Point::new(out, self.target())
        } else {
            let (x, y) = self.chart.locate(&p.coords)?;
            Point::new(vec![x, y], self.target())
        }
    }
    fn invert(&self) -> Result<MapExpr> {
        Ok(MapExpr::from_node(BallChartNode { chart: self.chart.clone(), reversed: !self.reversed }))
    }
    fn det_jacobian_closed(&self, _p: &Point) -> Option<f64> {
        // flux construction: unit determinant wherever differentiable
        Some(1.0)
    }
    fn domain_contains(&self, p: &Point) -> Option<bool> {
        if self.reversed {
            Some(true)
        } else {
            Some(self.chart.domain_contains_plane(&p.coords))
        }
    }
    fn params(&self) -> Value {
        serde_json::json!({ "q": self.chart.q, "r0": self.chart.r0, "reversed": self.reversed })
    }
}

pub(crate) fn build_ball_chart(params: &Value, _ch: Vec<MapExpr>) -> Result<MapExpr> {
    let chart = BallChart::new(u64_from_json(params, "q")? as u32, f64_from_json(params, "r0")?)?;
    let reversed = params.get("reversed").and_then(Value::as_bool).unwrap_or(false);
    Ok(MapExpr::from_node(BallChartNode { chart, reversed }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructs_for_q4() {
        let (chart, _) = ball_chart(4).unwrap();
        assert!((chart.s - 0.75).abs() < 1e-15);
    }

    #[test]
    fn cube_maps_by_exact_translation() {
        let (chart, expr) = ball_chart(4).unwrap();
        let [ox, oy] = chart.patch_offset();
        let amb = Ambient::Ball { d: 2 };
        for &(x, y) in &[(0.0, 0.0), (0.3, -0.35), (-0.37, 0.37), (0.374, 0.0)] {
            let p = Point::new(vec![x, y], amb).unwrap();
            let q = expr.eval(&p).unwrap();
            assert_eq!(q.coords[0], x + ox);
            assert_eq!(q.coords[1], y + oy);
        }
    }

    #[test]
    fn round_trip_across_the_annulus() {
        let (_, expr) = ball_chart(4).unwrap();
        let inv = expr.invert().unwrap();
        let amb = Ambient::Ball { d: 2 };
        // outside the cube, inside the outer fiber, clear of the hole
        let samples = [
            (0.5, 0.0),
            (0.45, 0.25),
            (-0.42, -0.1),
            (0.0, 0.43),
            (0.0, -0.43),
            (-0.43, 0.0),
            (0.48, -0.05),
            (0.39, 0.39),
        ];
        for &(x, y) in &samples {
            let p = Point::new(vec![x, y], amb).unwrap();
            let f = expr.eval(&p).unwrap();
            let back = inv.eval(&f).unwrap();
            assert!(
                p.distance(&back) <= 1e-9,
                "round trip failed at ({x}, {y}): {:?} -> {:?}",
                p.coords,
                back.coords
            );
        }
    }

    #[test]
    fn forward_then_locate_round_trip() {
        let (chart, _) = ball_chart(4).unwrap();
        for i in 0..40 {
            let x = 0.012 + 0.97 * (i as f64 / 39.0);
            for j in 0..12 {
                let y = j as f64 / 12.0;
                let p = chart.emit(x, y).unwrap();
                let (x2, y2) = chart.locate(&p).unwrap();
                let dy = (y2 - y).abs().min(1.0 - (y2 - y).abs());
                assert!(
                    (x2 - x).abs() <= 1e-9 && dy <= 1e-8,
                    "({x}, {y}) -> {p:?} -> ({x2}, {y2})"
                );
            }
        }
    }

    #[test]
    fn determinant_is_one_by_finite_difference() {
        let (_, expr) = ball_chart(4).unwrap();
        let amb = Ambient::Ball { d: 2 };
        // interior points away from the profile-junction fibers
        for &(x, y) in &[(0.5, 0.1), (-0.41, -0.2), (0.1, 0.42), (0.2, -0.42)] {
            let p = Point::new(vec![x, y], amb).unwrap();
            let j = crate::jacobian::fd_jacobian(&expr, &p, 1e-6).unwrap();
            let det = j.determinant();
            assert!((det - 1.0).abs() <= 1e-4, "det {det} at ({x}, {y})");
        }
    }

    #[test]
    fn outside_and_hole_points_are_rejected() {
        let (chart, expr) = ball_chart(4).unwrap();
        let amb = Ambient::Ball { d: 2 };
        let far = Point::new(vec![0.9, 0.0], amb).unwrap();
        assert!(expr.eval(&far).is_err());
        let hole = Point::new(vec![chart.hx, 0.0], amb).unwrap();
        assert!(expr.eval(&hole).is_err());
    }
}
