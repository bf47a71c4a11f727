//! The permutation map T and its periodic tower of discs.
//!
//! The construction lives on the fat torus F = [0,1] × T^{d−1}: a chart
//! h_q rearranges F onto the long fat torus, a shear with a plateau bump
//! profile pushes points along the long circle, and T pulls the shear back.
//! The tower discs ride the shear plateau, so their dynamics is an exact
//! translation in the long coordinates; centers are propagated by exact
//! rational arithmetic and all disjointness/periodicity checks are exact.
//!
//! h_q factors as `wrap ∘ twist`: a per-block localized rotation (exact
//! isometry on its rigid core, which contains every tower disc) followed by
//! the linear anisotropic rescale onto the long fat torus.  Equivariance
//! `h_q ∘ S_{1/q} = S̃_1 ∘ h_q` holds identically by construction.  The
//! price of a compactly supported twist is that rigidity covers the block
//! core rather than every corner of the paper-sized Δ block; the corner
//! regions are smooth transition zones whose defect is measured, and no
//! tower disc ever enters them.

use map_core::nodes::affine::translation;
use map_core::nodes::ball_chart::{ball_chart, BallChart};
use map_core::nodes::chart_conjugate::chart_conjugate;
use map_core::nodes::shear::shear;
use map_core::nodes::twist::block_twist;
use map_core::nodes::wrap::anisotropic_wrap;
use map_core::smoothstep::Profile;
use map_core::{Ambient, Compose, MapExpr, Point};
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BuildError, Result};
use crate::rat::{Q, Rat};

/// Normalized radius of the exactly rigid twist core.
pub const RHO_RIGID: f64 = 0.42;
/// Normalized radius where the twist support ends (must stay below 1/2).
pub const RHO_SUPPORT: f64 = 0.495;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TowerParams {
    pub d: usize,
    pub a: u64,
    pub q: u64,
    /// regularity the construction is sized for (r = d + ε)
    pub r: f64,
    /// waive the q^{r⁴} ≪ A precondition for scaling studies
    pub scaling_study: bool,
}

impl TowerParams {
    pub fn new(d: usize, a: u64, q: u64, r: f64, scaling_study: bool) -> Result<Self> {
        if d < 2 {
            return Err(BuildError::BadParams("need d >= 2".into()));
        }
        if q < 2 {
            return Err(BuildError::BadParams("need q >= 2".into()));
        }
        if a < 4 * q {
            return Err(BuildError::BadParams(format!(
                "need A >= 4q so discs of radius 1/(4A) clear the band margins, got A={a}, q={q}"
            )));
        }
        if (q * a.pow(d as u32 - 1)) % 2 != 0 {
            return Err(BuildError::BadParams("tower period q·A^{d-1} must be even".into()));
        }
        if !scaling_study {
            // q^{r^4} < A, checked in logs to avoid overflow
            let lhs = r.powi(4) * (q as f64).ln();
            if lhs >= (a as f64).ln() {
                return Err(BuildError::BadParams(format!(
                    "precondition q^(r^4) < A fails (q={q}, r={r}, A={a}); \
                     pass scaling_study to waive"
                )));
            }
        }
        Ok(TowerParams { d, a, q, r, scaling_study })
    }

    pub fn rho(&self) -> f64 {
        1.0 / (4.0 * self.a as f64)
    }

    pub fn rho_rat(&self) -> Rat {
        Rat::new(1, 4 * self.a as i128)
    }

    /// Tower period N = q·A^{d−1}.
    pub fn n_period(&self) -> u64 {
        self.q * self.a.pow(self.d as u32 - 1)
    }

    /// Height M = N/2 used by the realization.
    pub fn m_height(&self) -> u64 {
        self.n_period() / 2
    }

    /// Smoothstep order for the bump and the twist transitions.
    pub fn smooth_order(&self) -> usize {
        self.r.ceil() as usize + 2
    }

    /// Shear direction on the long fat torus: (0, 1, 1/(qA), …, 1/(qA^{d−2})).
    pub fn shear_vector(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.d];
        v[1] = 1.0;
        let qa = (self.q * self.a) as f64;
        let mut denom = qa;
        for i in 2..self.d {
            v[i] = 1.0 / denom;
            denom *= self.a as f64;
        }
        v
    }
}

/// Measured norm constants of the bump profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BumpReport {
    /// sup |φ^(k)| for k = 0..=k_max, by dense closed-form sampling
    pub sup_per_order: Vec<f64>,
    /// c_k = sup |φ^(k)| · A / q^{2k}
    pub c_k: Vec<f64>,
}

/// The plateau bump: 1/A on [0.3/q, 0.7/q], zero outside [0.2/q, 0.8/q].
pub fn build_phi(p: &TowerParams) -> (Profile, BumpReport) {
    let qf = p.q as f64;
    let profile = Profile::PlateauBump {
        amplitude: 1.0 / p.a as f64,
        z0: 0.2 / qf,
        z1: 0.3 / qf,
        z2: 0.7 / qf,
        z3: 0.8 / qf,
        width: 1.0 / qf,
        order: p.smooth_order(),
    };
    let k_max = p.r.ceil() as usize;
    let mut sup_per_order = Vec::with_capacity(k_max + 1);
    let mut c_k = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut sup = 0.0f64;
        let n = 4000;
        for i in 0..=n {
            let x = (i as f64 / n as f64) / qf;
            sup = sup.max(profile.deriv(x, k).abs());
        }
        sup_per_order.push(sup);
        c_k.push(sup * p.a as f64 / qf.powi(2 * k as i32));
    }
    (profile, BumpReport { sup_per_order, c_k })
}

/// The shear along the long circle with the bump amplitude.
pub fn build_shear(p: &TowerParams, profile: Profile) -> Result<MapExpr> {
    let amb = Ambient::LongFatTorus { d: p.d, q: p.q as u32 };
    Ok(shear(amb, profile, 0, p.shear_vector())?)
}

/// Circle action S_t on the fat torus: translation by t·(0, 1, 1/A, …).
pub fn circle_shift_f(p: &TowerParams, t: f64) -> MapExpr {
    let mut v = vec![0.0; p.d];
    v[1] = t;
    let mut denom = p.a as f64;
    for i in 2..p.d {
        v[i] = t / denom;
        denom *= p.a as f64;
    }
    translation(Ambient::FatTorus { d: p.d }, v)
}

/// Circle action S̃_t on the long fat torus.
pub fn circle_shift_long(p: &TowerParams, t: f64) -> MapExpr {
    let v: Vec<f64> = p.shear_vector().iter().enumerate().map(|(i, c)| if i == 0 { 0.0 } else { c * t }).collect();
    translation(Ambient::LongFatTorus { d: p.d, q: p.q as u32 }, v)
}

#[derive(Debug, Clone)]
pub struct SnakeChart {
    pub d: usize,
    pub q: u64,
    pub twist: MapExpr,
    pub wrap: MapExpr,
    /// h_q = wrap ∘ twist : F → F̃_q
    pub chart: MapExpr,
    pub rho_rigid: f64,
    pub rho_support: f64,
}

impl SnakeChart {
    /// Normalized block radius of a fat-torus point.
    pub fn block_radius(&self, x: f64, y: f64) -> f64 {
        let qf = self.q as f64;
        let k = (y * qf).floor().min(qf - 1.0);
        let u = x - 0.5;
        let v = qf * y - k - 0.5;
        (u * u + v * v).sqrt()
    }

    /// Max equivariance defect `|h_q(S_{1/q} p) − S̃_1(h_q p)|` over seeded
    /// samples (identically zero by construction; measured to confirm).
    pub fn equivariance_defect(&self, p: &TowerParams, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amb = Ambient::FatTorus { d: p.d };
        let long = Ambient::LongFatTorus { d: p.d, q: p.q as u32 };
        let s_f = circle_shift_f(p, 1.0 / p.q as f64);
        let s_long = circle_shift_long(p, 1.0);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let pt = Point::new(amb.sample(&mut rng, 1e-6), amb)?;
            let a = self.chart.eval(&s_f.eval(&pt)?)?;
            let b = s_long.eval(&self.chart.eval(&pt)?)?;
            worst = worst.max(long.distance(&a.coords, &b.coords));
        }
        Ok(worst)
    }
}

/// Build h_q with exact block rotations on the rigid core.
pub fn build_snake(p: &TowerParams) -> Result<SnakeChart> {
    let twist = block_twist(p.d, p.q as u32, RHO_RIGID, RHO_SUPPORT, p.smooth_order())?;
    let wrap = anisotropic_wrap(p.d, p.q as u32)?;
    let chart = Compose::new(vec![wrap.clone(), twist.clone()])?;
    // every tower disc must fit inside the rigid core: the band criterion
    // caps the ξ-extent at 0.4, and the η-extent of a disc is q·ρ
    let qrho = p.q as f64 * p.rho();
    let reach = (0.4f64 * 0.4 + qrho * qrho).sqrt() + 1e-12;
    if reach >= RHO_RIGID {
        return Err(BuildError::ConstructionFailure(format!(
            "tower discs reach normalized radius {reach:.4} >= rigid core {RHO_RIGID}"
        )));
    }
    Ok(SnakeChart { d: p.d, q: p.q, twist, wrap, chart, rho_rigid: RHO_RIGID, rho_support: RHO_SUPPORT })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientMode {
    FatTorus,
    Ball,
}

/// The chart from the working ambient onto the fat torus: the identity in
/// fat-torus mode, an explicit rigid-patch chart from the ball otherwise.
#[derive(Debug, Clone)]
pub enum AmbientChart {
    FatTorus { d: usize },
    Ball { geometry: BallChart, expr: MapExpr },
}

impl AmbientChart {
    pub fn fat_torus(d: usize) -> Self {
        AmbientChart::FatTorus { d }
    }

    pub fn ball(p: &TowerParams) -> Result<Self> {
        if p.d != 2 {
            return Err(BuildError::BadParams("ball mode is built for d = 2 only".into()));
        }
        let (geometry, expr) = ball_chart(p.q as u32)?;
        Ok(AmbientChart::Ball { geometry, expr })
    }

    pub fn mode(&self) -> AmbientMode {
        match self {
            AmbientChart::FatTorus { .. } => AmbientMode::FatTorus,
            AmbientChart::Ball { .. } => AmbientMode::Ball,
        }
    }

    /// The ambient the assembled maps act on.
    pub fn ambient(&self) -> Ambient {
        match self {
            AmbientChart::FatTorus { d } => Ambient::FatTorus { d: *d },
            AmbientChart::Ball { .. } => Ambient::Ball { d: 2 },
        }
    }

    /// Is a disc of radius `rho` at this fat-torus position inside the
    /// chart's rigid region? Always true in fat-torus mode.
    pub fn rigid_disc_f(&self, center_f: &[f64], rho: f64) -> bool {
        match self {
            AmbientChart::FatTorus { .. } => true,
            AmbientChart::Ball { geometry, .. } => geometry.rigid_disc_f(center_f, rho),
        }
    }

    /// Pull a fat-torus point back to the working ambient.
    pub fn pull_back(&self, p_f: &Point) -> Result<Point> {
        match self {
            AmbientChart::FatTorus { .. } => Ok(p_f.clone()),
            AmbientChart::Ball { expr, .. } => Ok(expr.invert()?.eval(p_f)?),
        }
    }

    /// Wrap a fat-torus self-map into a self-map of the working ambient,
    /// extended by the identity outside the chart's domain.
    pub fn conjugate(&self, inner: MapExpr) -> Result<MapExpr> {
        match self {
            AmbientChart::FatTorus { .. } => Ok(inner),
            AmbientChart::Ball { expr, .. } => Ok(chart_conjugate(expr.clone(), inner)?),
        }
    }
}

/// T = h⁻¹ ∘ h_q⁻¹ ∘ shear ∘ h_q ∘ h, extended by the identity wherever the
/// pulled-back shear support does not reach.
pub fn build_t(p: &TowerParams, snake: &SnakeChart, chart: &AmbientChart, shear_map: &MapExpr) -> Result<MapExpr> {
    let on_f = Compose::new(vec![snake.chart.invert()?, shear_map.clone(), snake.chart.clone()])?;
    chart.conjugate(on_f)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Visit {
    pub n: u64,
    /// exact center in long-fat-torus coordinates
    pub center_col: Vec<Rat>,
    /// exact center in fat-torus coordinates (available at rigid times)
    pub center_f_exact: Option<Vec<Rat>>,
    /// center in the working ambient (float)
    pub center_ambient: Vec<f64>,
    /// the disc sits in the isometric band (and, in ball mode, the chart's
    /// rigid patch), so T^n restricted to the base is an exact isometry
    pub isometric: bool,
    /// exact fat-torus translation realizing T^n on the base disc
    pub translation_f: Option<Vec<Rat>>,
    /// the same displacement in working-ambient coordinates
    pub translation_ambient: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TowerSpec {
    pub d: usize,
    pub a: u64,
    pub q: u64,
    pub mode: AmbientMode,
    pub radius: f64,
    pub n_period: u64,
    pub base_col: Vec<Rat>,
    pub base_ambient: Vec<f64>,
    pub visits: Vec<Visit>,
    /// achieved isometric fraction
    pub gamma: f64,
    /// minimal pairwise center distance (exact arithmetic, reported as float)
    pub min_center_gap: f64,
}

impl TowerSpec {
    pub fn isometric_times(&self) -> Vec<u64> {
        self.visits.iter().filter(|v| v.isometric).map(|v| v.n).collect()
    }
}

/// Exact center of the column orbit at step n, starting from
/// (1/(2q), ỹ₀, 0, …): the shear adds (0, 1/A, 1/(qA²), …) per step.
fn center_col_at(p: &TowerParams, y0: Rat, n: u64) -> Vec<Rat> {
    let a = p.a as i128;
    let q = p.q as i128;
    let n = n as i128;
    let mut c = vec![Rat::new(1, 2 * q)];
    c.push((y0 + Rat(Ratio::new(n, a))).rem_euclid(Q::from_integer(q)));
    let mut denom = q * a * a;
    for _ in 2..p.d {
        c.push(Rat(Ratio::new(n, denom)).rem_euclid(Q::from_integer(1)));
        denom *= a;
    }
    c
}

/// Exact fat-torus center via the rigid block rotation (valid at any time:
/// the orbit tube sits inside the rigid twist core at every step).
fn center_f_at(p: &TowerParams, col: &[Rat]) -> Vec<Rat> {
    let q = p.q as i128;
    // (x, y) = (q·x̃, ỹ/q), then the inverse block rotation sends the
    // normalized offset (0, frac(ỹ) − 1/2) to (frac(ỹ) − 1/2, 0)
    let ytilde = col[1];
    let k = ytilde.0.floor().to_integer();
    let frac = ytilde - Rat::from_int(k);
    let mut c = vec![frac, Rat(Ratio::new(2 * k + 1, 2 * q))];
    for z in &col[2..] {
        c.push(*z);
    }
    c
}

/// Is `frac(ỹ)` inside the isometric band [1/10 + ρ, 9/10 − ρ]?
fn in_band(p: &TowerParams, col: &[Rat]) -> bool {
    let frac = col[1].rem_euclid(Q::from_integer(1));
    let rho = p.rho_rat();
    let lo = Rat::new(1, 10) + rho;
    let hi = Rat::new(9, 10) - rho;
    frac >= lo && frac <= hi
}

/// Enumerate the tower: exact centers, disjointness, isometry flags and the
/// exact translations realizing T^n on the base disc.
pub fn enumerate_tower(
    p: &TowerParams,
    chart: &AmbientChart,
    snake: &SnakeChart,
    base_ytilde: Rat,
) -> Result<TowerSpec> {
    let n_period = p.n_period();
    let rho = p.rho();
    let amb_f = Ambient::FatTorus { d: p.d };

    // the base must itself sit in the band so time 0 is isometric
    let base_col = center_col_at(p, base_ytilde, 0);
    if !in_band(p, &base_col) {
        return Err(BuildError::BadParams("base disc must start inside the isometric band".into()));
    }
    let base_f = center_f_at(p, &base_col);
    let base_f_pt = Point::new(base_f.iter().map(|r| r.to_f64()).collect(), amb_f)?;
    let base_ambient = chart.pull_back(&base_f_pt)?.coords;
    if !chart.rigid_disc_f(&base_f_pt.coords, rho) {
        return Err(BuildError::BadParams("base disc must sit inside the chart's rigid patch".into()));
    }

    // exact disjointness via the orbit's group structure: the gap between
    // steps m and m+k depends only on k
    let two_rho_sq = {
        let t = p.rho_rat() * Rat::from_int(2);
        t * t
    };
    let mut min_gap_sq: Option<Rat> = None;
    let mut overlap_step = 0u64;
    for k in 1..n_period {
        let ck = center_col_at(p, base_ytilde, k);
        let c0 = &base_col;
        let mut dist_sq = Rat::from_int(0);
        // x̃ is identical along the orbit; circle components use shorter arcs
        let dy = c0[1].circle_delta(ck[1], Q::from_integer(p.q as i128));
        dist_sq = dist_sq + dy * dy;
        for i in 2..p.d {
            let dz = c0[i].circle_delta(ck[i], Q::from_integer(1));
            dist_sq = dist_sq + dz * dz;
        }
        if min_gap_sq.map(|g| dist_sq < g).unwrap_or(true) {
            min_gap_sq = Some(dist_sq);
            overlap_step = k;
        }
    }
    let min_gap_sq = min_gap_sq.expect("period >= 2");
    if min_gap_sq <= two_rho_sq {
        return Err(BuildError::TowerOverlap {
            min_gap: min_gap_sq.to_f64().sqrt(),
            two_rho: 2.0 * rho,
            step: overlap_step,
        });
    }

    let hq_inv = snake.chart.invert()?;
    let amb_long = Ambient::LongFatTorus { d: p.d, q: p.q as u32 };
    let mut visits = Vec::with_capacity(n_period as usize);
    let mut iso_count = 0u64;
    for n in 0..n_period {
        let col = center_col_at(p, base_ytilde, n);
        let band = in_band(p, &col);
        let (center_f_exact, center_f64) = if band {
            let cf = center_f_at(p, &col);
            let f64s: Vec<f64> = cf.iter().map(|r| r.to_f64()).collect();
            (Some(cf), f64s)
        } else {
            let col_pt = Point::new(col.iter().map(|r| r.to_f64()).collect(), amb_long)?;
            (None, hq_inv.eval(&col_pt)?.coords)
        };
        let f_pt = Point::new(center_f64.clone(), amb_f)?;
        let chart_ok = band && chart.rigid_disc_f(&center_f64, rho);
        let isometric = band && chart_ok;
        let (translation_f, translation_ambient) = if isometric {
            let cf = center_f_exact.as_ref().unwrap();
            let basef = &base_f;
            let mut t = Vec::with_capacity(p.d);
            t.push(cf[0] - basef[0]);
            t.push(basef[1].circle_delta(cf[1], Q::from_integer(1)));
            for i in 2..p.d {
                t.push(basef[i].circle_delta(cf[i], Q::from_integer(1)));
            }
            let amb_pt = chart.pull_back(&f_pt)?;
            let t_amb: Vec<f64> = match chart.mode() {
                AmbientMode::FatTorus => t.iter().map(|r| r.to_f64()).collect(),
                AmbientMode::Ball => amb_pt
                    .coords
                    .iter()
                    .zip(&base_ambient)
                    .map(|(c, b)| c - b)
                    .collect(),
            };
            (Some(t), Some(t_amb))
        } else {
            (None, None)
        };
        if isometric {
            iso_count += 1;
        }
        let center_ambient = match chart.mode() {
            AmbientMode::FatTorus => center_f64.clone(),
            AmbientMode::Ball => chart.pull_back(&f_pt)?.coords,
        };
        visits.push(Visit {
            n,
            center_col: col,
            center_f_exact,
            center_ambient,
            isometric,
            translation_f,
            translation_ambient,
        });
    }

    Ok(TowerSpec {
        d: p.d,
        a: p.a,
        q: p.q,
        mode: chart.mode(),
        radius: rho,
        n_period,
        base_col,
        base_ambient,
        visits,
        gamma: iso_count as f64 / n_period as f64,
        min_center_gap: min_gap_sq.to_f64().sqrt(),
    })
}

/// Recheck disjointness from stored visit data (pairwise, so it also catches
/// hand-edited artifacts that break the orbit structure).
pub fn verify_disjointness(spec: &TowerSpec) -> Result<f64> {
    let q = Q::from_integer(spec.q as i128);
    let mut min_gap_sq: Option<Rat> = None;
    let mut at = (0u64, 0u64);
    for i in 0..spec.visits.len() {
        for j in (i + 1)..spec.visits.len() {
            let a = &spec.visits[i].center_col;
            let b = &spec.visits[j].center_col;
            let dx = b[0] - a[0];
            let dy = a[1].circle_delta(b[1], q);
            let mut s = dx * dx + dy * dy;
            for k in 2..a.len() {
                let dz = a[k].circle_delta(b[k], Q::from_integer(1));
                s = s + dz * dz;
            }
            if min_gap_sq.map(|g| s < g).unwrap_or(true) {
                min_gap_sq = Some(s);
                at = (spec.visits[i].n, spec.visits[j].n);
            }
        }
    }
    let gap_sq = min_gap_sq.ok_or_else(|| BuildError::BadParams("tower has no visits".into()))?;
    let two_rho = 2.0 * spec.radius;
    let gap = gap_sq.to_f64().sqrt();
    if gap <= two_rho {
        return Err(BuildError::TowerOverlap { min_gap: gap, two_rho, step: at.1 - at.0 });
    }
    Ok(gap)
}

/// Max displacement of T^N over seeded points of the base disc.
pub fn period_defect(spec: &TowerSpec, t_map: &MapExpr, samples: usize, seed: u64) -> Result<f64> {
    let amb = t_map.source();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let p = sample_disc(&spec.base_ambient, 0.9 * spec.radius, amb, &mut rng)?;
        let q = t_map.iterate(&p, spec.n_period as usize)?;
        worst = worst.max(p.distance(&q));
    }
    Ok(worst)
}

/// Max deviation of T^{n} from its recorded exact translation over seeded
/// base-disc points, at every isometric time; returns (worst, worst/n).
pub fn isometry_defect(spec: &TowerSpec, t_map: &MapExpr, samples: usize, seed: u64) -> Result<f64> {
    let amb = t_map.source();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Point> = (0..samples)
        .map(|_| sample_disc(&spec.base_ambient, 0.9 * spec.radius, amb, &mut rng))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    let mut current: Vec<Point> = pts.clone();
    for v in &spec.visits {
        if v.n > 0 {
            for p in current.iter_mut() {
                *p = t_map.eval(p)?;
            }
        }
        if let Some(t_amb) = &v.translation_ambient {
            let iso = translation(amb, t_amb.clone());
            for (orig, now) in pts.iter().zip(&current) {
                let expect = iso.eval(orig)?;
                worst = worst.max(expect.distance(now));
            }
        }
    }
    Ok(worst)
}

fn sample_disc<R: rand::Rng>(center: &[f64], radius: f64, amb: Ambient, rng: &mut R) -> Result<Point> {
    let d = center.len();
    loop {
        let offs: Vec<f64> = (0..d).map(|_| rng.random_range(-radius..radius)).collect();
        if offs.iter().map(|c| c * c).sum::<f64>().sqrt() < radius {
            let coords = center.iter().zip(&offs).map(|(c, o)| c + o).collect();
            return Ok(Point::new(coords, amb)?);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_desk() -> TowerParams {
        TowerParams::new(2, 32, 4, 2.01, true).unwrap()
    }

    #[test]
    fn phi_values_match_the_plateau() {
        let p = params_desk();
        let (phi, report) = build_phi(&p);
        assert_eq!(phi.value(0.125), 1.0 / 32.0); // x̃ = 0.5/q
        assert_eq!(phi.value(0.0125), 0.0); // x̃ = 0.05/q
        assert!(report.c_k.len() >= 3);
        // ‖φ‖_{C²,grid} ≤ c₂ · q⁴ / A with the reported constant
        let qf = 4.0f64;
        assert!(report.sup_per_order[2] <= report.c_k[2] * qf.powi(4) / 32.0 + 1e-12);
    }

    #[test]
    fn snake_block_rotation_worked_example() {
        // (0.5, 0.05) ↦ (0.2, 0.5) for q = 4
        let p = params_desk();
        let snake = build_snake(&p).unwrap();
        let pt = Point::new(vec![0.5, 0.05], Ambient::FatTorus { d: 2 }).unwrap();
        let out = snake.chart.eval(&pt).unwrap();
        assert!((out.coords[0] - 0.2).abs() < 1e-15);
        assert!((out.coords[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn snake_equivariance_is_exact() {
        let p = params_desk();
        let snake = build_snake(&p).unwrap();
        let defect = snake.equivariance_defect(&p, 1000, 11).unwrap();
        assert!(defect <= 1e-12, "equivariance defect {defect:e}");
    }

    #[test]
    fn tower_counts_match_the_construction() {
        let p = params_desk();
        let snake = build_snake(&p).unwrap();
        let chart = AmbientChart::fat_torus(2);
        let spec = enumerate_tower(&p, &chart, &snake, Rat::new(1, 2)).unwrap();
        assert_eq!(spec.n_period, 128);
        assert_eq!(spec.radius, 1.0 / 128.0);
        // 25 of every 32 steps sit in the band
        assert!((spec.gamma - 25.0 / 32.0).abs() < 1e-12);
        assert!(spec.gamma >= 0.5);
        assert!(spec.min_center_gap > 2.0 * spec.radius);
    }

    #[test]
    fn tower_period_and_isometries_are_exact() {
        let p = params_desk();
        let snake = build_snake(&p).unwrap();
        let chart = AmbientChart::fat_torus(2);
        let (phi, _) = build_phi(&p);
        let shear_map = build_shear(&p, phi).unwrap();
        let t = build_t(&p, &snake, &chart, &shear_map).unwrap();
        let spec = enumerate_tower(&p, &chart, &snake, Rat::new(1, 2)).unwrap();
        let period = period_defect(&spec, &t, 20, 3).unwrap();
        assert!(period <= 1e-9, "period defect {period:e}");
        let iso = isometry_defect(&spec, &t, 10, 5).unwrap();
        assert!(iso <= 128.0 * 1e-12, "isometry defect {iso:e}");
    }

    #[test]
    fn shear_moves_plateau_discs_by_one_step() {
        // the center of the base disc is translated by 1/A along the shift
        let p = params_desk();
        let (phi, _) = build_phi(&p);
        let shear_map = build_shear(&p, phi).unwrap();
        let amb = Ambient::LongFatTorus { d: 2, q: 4 };
        let c = Point::new(vec![1.0 / 8.0, 0.5], amb).unwrap();
        let out = shear_map.eval(&c).unwrap();
        assert_eq!(out.coords[0], c.coords[0]);
        assert!((out.coords[1] - (0.5 + 1.0 / 32.0)).abs() < 1e-15);
    }

    #[test]
    fn d3_tower_is_disjoint_and_periodic_in_the_column() {
        let p = TowerParams::new(3, 16, 4, 3.01, true).unwrap();
        let snake = build_snake(&p).unwrap();
        let chart = AmbientChart::fat_torus(3);
        let spec = enumerate_tower(&p, &chart, &snake, Rat::new(1, 2)).unwrap();
        assert_eq!(spec.n_period, 4 * 16 * 16);
        assert!(spec.min_center_gap > 2.0 * spec.radius);
        assert!(spec.gamma >= 0.5);
    }

    #[test]
    fn overlap_is_reported_when_discs_are_too_fat() {
        // A < 4q is rejected outright
        assert!(TowerParams::new(2, 8, 4, 2.01, true).is_err());
    }
}
