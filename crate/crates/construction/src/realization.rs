//! Assembly of the full construction: pick (A, q) from the budget, carry the
//! fragmented target onto the first M isometric discs of a period-2M tower,
//! compose with the permutation map, and verify that the renormalized
//! return map reproduces the target exactly.
//!
//! The return-map identity holds for every admissible (A, q) — smallness of
//! the full map is a separate, budget-driven question — which is what makes
//! the identity testable at desk scale.

use map_core::nodes::affine::{similarity, translation};
use map_core::nodes::piecewise::{piecewise_balls, Disc};
use map_core::norms::{norm_cr, GridSpec};
use map_core::{Ambient, Compose, MapExpr, Point};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{BuildError, Result};
use crate::fragmentation::{factor_reach, fragment, FragmentationResult};
use crate::generator::IsotopyGenerator;
use crate::rat::Rat;
use crate::tower::{
    build_phi, build_shear, build_snake, build_t, enumerate_tower, AmbientChart, AmbientMode,
    BumpReport, TowerParams, TowerSpec,
};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RealizationParams {
    pub d: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// r = d + ε
    pub r: f64,
    pub a: u64,
    pub q: u64,
    /// M = ½ q A^{d−1}
    pub m: u64,
    pub rho: f64,
    /// budget split constants, c1 + c2 = 1
    pub c1: f64,
    pub c2: f64,
    /// measured fragmentation constant Ĉ
    pub c_hat: f64,
    /// measured permutation-map norm constant Ĉ₁
    pub c1_hat: f64,
}

impl RealizationParams {
    pub fn desk(d: usize, a: u64, q: u64, epsilon: f64, delta: f64) -> Result<Self> {
        let tower = TowerParams::new(d, a, q, d as f64 + epsilon, true)?;
        Ok(RealizationParams {
            d,
            epsilon,
            delta,
            r: d as f64 + epsilon,
            a,
            q,
            m: tower.m_height(),
            rho: tower.rho(),
            c1: 0.5,
            c2: 0.5,
            c_hat: 0.0,
            c1_hat: 0.0,
        })
    }

    pub fn tower_params(&self) -> Result<TowerParams> {
        TowerParams::new(self.d, self.a, self.q, self.r, true)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SelectOptions {
    pub c1: f64,
    pub c2: f64,
    /// scan A over powers of two up to 2^ceiling_log2
    pub ceiling_log2: u32,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions { c1: 0.5, c2: 0.5, ceiling_log2: 63 }
    }
}

/// The budget window at a given A: the fragmentation term wants
/// `Ĉ q⁻¹ A^ε ≤ c1 δ` and the permutation term wants
/// `Ĉ₁ q^{r⁴}/A ≤ c2 δ`, so q must land in the open interval
/// `(Ĉ A^ε/(c1 δ), (c2 δ A/Ĉ₁)^{1/r⁴})`.
pub fn budget_window(
    a: f64,
    r: f64,
    epsilon: f64,
    delta: f64,
    c_hat: f64,
    c1_hat: f64,
    opts: &SelectOptions,
) -> (f64, f64) {
    let lo = if c_hat == 0.0 { 0.0 } else { c_hat * a.powf(epsilon) / (opts.c1 * delta) };
    let hi = if c1_hat == 0.0 {
        f64::INFINITY
    } else {
        (opts.c2 * delta * a / c1_hat).powf(1.0 / r.powi(4))
    };
    (lo, hi)
}

/// Smallest A on the geometric schedule whose window contains an admissible
/// integer q, together with the smallest such q.
pub fn select_parameters(
    d: usize,
    epsilon: f64,
    delta: f64,
    c_hat: f64,
    c1_hat: f64,
    opts: SelectOptions,
) -> Result<(u64, u64)> {
    let r = d as f64 + epsilon;
    let eps0 = 1.0 / r.powi(4);
    if epsilon >= eps0 {
        return Err(BuildError::BadParams(format!(
            "epsilon {epsilon} >= 1/(d+epsilon)^4 = {eps0:.6e}; no budget window can open"
        )));
    }
    if delta <= 0.0 {
        return Err(BuildError::BadParams("delta must be positive".into()));
    }
    for k in 3..=opts.ceiling_log2 {
        let a = 1u64 << k;
        let (lo, hi) = budget_window(a as f64, r, epsilon, delta, c_hat, c1_hat, &opts);
        let q_min = (lo.floor() as i64 + 1).max(2) as u64;
        // tower feasibility caps q at A/4
        if (q_min as f64) < hi && 4 * q_min <= a {
            return Ok((a, q_min));
        }
    }
    // crossing point of the two sides, in logs
    let inv_r4 = 1.0 / r.powi(4);
    let log10_a_star = if c_hat == 0.0 || inv_r4 <= epsilon {
        f64::INFINITY
    } else {
        let c1h = if c1_hat == 0.0 { 1.0 } else { c1_hat };
        let num = c_hat.ln() - (opts.c1 * delta).ln() - inv_r4 * (opts.c2 * delta / c1h).ln();
        (num / (inv_r4 - epsilon)) / std::f64::consts::LN_10
    };
    Err(BuildError::InfeasibleBudget {
        log10_a_star,
        ceiling_log2: opts.ceiling_log2,
        formula: "c_hat*A^eps/(c1*delta) = (c2*delta*A/c1_hat)^(1/r^4)".into(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragSummary {
    pub m: u64,
    pub factor_norm: f64,
    pub c_hat: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub flow_tol: f64,
    pub base_ytilde: Rat,
    pub version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationArtifact {
    pub params: RealizationParams,
    pub mode: AmbientMode,
    pub generator: IsotopyGenerator,
    pub tower: TowerSpec,
    /// the M isometric times used, n_0 = 0 < … < n_{M−1}; n_M = N implied
    pub visit_times: Vec<u64>,
    pub fragmentation: FragSummary,
    pub bump: BumpReport,
    pub t_map: MapExpr,
    /// the map acting disc-by-disc (identity off the tower)
    pub disc_action: MapExpr,
    /// F = T ∘ disc_action
    pub full_map: MapExpr,
    pub provenance: Provenance,
}

impl RealizationArtifact {
    pub fn ambient(&self) -> Ambient {
        self.full_map.source()
    }

    /// Similarity sending the base disc onto the unit ball.
    pub fn base_similarity(&self) -> Result<MapExpr> {
        let amb = self.ambient();
        Ok(similarity(
            amb,
            Ambient::Ball { d: self.params.d },
            1.0 / self.params.rho,
            DMatrix::identity(self.params.d, self.params.d),
            self.tower.base_ambient.clone(),
            vec![0.0; self.params.d],
        )?)
    }

    /// Similarity for the i-th used disc, h_i = h_0 ∘ (T^{n_i}|_B)⁻¹.
    pub fn disc_similarity(&self, i: usize) -> Result<MapExpr> {
        let n = self.visit_times[i];
        let v = &self.tower.visits[n as usize];
        let amb = self.ambient();
        Ok(similarity(
            amb,
            Ambient::Ball { d: self.params.d },
            1.0 / self.params.rho,
            DMatrix::identity(self.params.d, self.params.d),
            v.center_ambient.clone(),
            vec![0.0; self.params.d],
        )?)
    }
}

/// Carry the factors onto the tower: on disc i the map is
/// `h_i⁻¹ ∘ f_i ∘ h_i`, identity elsewhere.
pub fn assemble_disc_action(
    params: &RealizationParams,
    frag: &FragmentationResult,
    tower: &TowerSpec,
    visit_times: &[u64],
    cutoff: f64,
) -> Result<MapExpr> {
    if frag.m as u64 != params.m || visit_times.len() as u64 != params.m {
        return Err(BuildError::BadParams(format!(
            "need exactly M = {} factors and visit times, got {} and {}",
            params.m,
            frag.m,
            visit_times.len()
        )));
    }
    let reach = factor_reach(frag, 400, 17)?;
    if reach > cutoff + 1e-9 {
        return Err(BuildError::SupportViolation { index: 0, reach, limit: cutoff });
    }
    let amb = match tower.mode {
        AmbientMode::FatTorus => Ambient::FatTorus { d: params.d },
        AmbientMode::Ball => Ambient::Ball { d: params.d },
    };
    let ball = Ambient::Ball { d: params.d };
    let mut discs = Vec::with_capacity(visit_times.len());
    let mut inners = Vec::with_capacity(visit_times.len());
    for (i, &n) in visit_times.iter().enumerate() {
        let v = &tower.visits[n as usize];
        if !v.isometric {
            return Err(BuildError::BadParams(format!("visit time {n} is not isometric")));
        }
        let inner = if frag.factors[i].is_identity() {
            map_core::nodes::affine::identity(amb)
        } else {
            let h_i = similarity(
                amb,
                ball,
                1.0 / params.rho,
                DMatrix::identity(params.d, params.d),
                v.center_ambient.clone(),
                vec![0.0; params.d],
            )?;
            Compose::new(vec![h_i.invert()?, frag.factors[i].clone(), h_i])?
        };
        discs.push(Disc { center: v.center_ambient.clone(), radius: tower.radius });
        inners.push(inner);
    }
    Ok(piecewise_balls(amb, discs, inners)?)
}

/// F = T ∘ disc_action.
pub fn assemble_full(t_map: &MapExpr, disc_action: &MapExpr) -> Result<MapExpr> {
    Ok(Compose::new(vec![t_map.clone(), disc_action.clone()])?)
}

/// End-to-end build for one parameter set.
pub fn assemble(
    params: &RealizationParams,
    mode: AmbientMode,
    gen: &IsotopyGenerator,
    seed: u64,
) -> Result<RealizationArtifact> {
    gen.validate(seed)?;
    if gen.dim() != params.d {
        return Err(BuildError::BadParams("generator dimension must match d".into()));
    }
    let tp = params.tower_params()?;
    let chart = match mode {
        AmbientMode::FatTorus => AmbientChart::fat_torus(params.d),
        AmbientMode::Ball => AmbientChart::ball(&tp)?,
    };
    let (phi, bump) = build_phi(&tp);
    let shear_map = build_shear(&tp, phi)?;
    let snake = build_snake(&tp)?;
    let t_map = build_t(&tp, &snake, &chart, &shear_map)?;
    let base_ytilde = Rat::new(1, 2);
    let tower = enumerate_tower(&tp, &chart, &snake, base_ytilde)?;

    let iso_times = tower.isometric_times();
    if (iso_times.len() as u64) < params.m {
        return Err(BuildError::ConstructionFailure(format!(
            "tower offers {} isometric times, need M = {}",
            iso_times.len(),
            params.m
        )));
    }
    let visit_times: Vec<u64> = iso_times.into_iter().take(params.m as usize).collect();
    if visit_times[0] != 0 {
        return Err(BuildError::ConstructionFailure("time 0 must be isometric".into()));
    }

    let frag = fragment(gen, params.m as usize, 9)?;
    let disc_action =
        assemble_disc_action(params, &frag, &tower, &visit_times, gen.cutoff_radius().max(0.5))?;
    let full_map = assemble_full(&t_map, &disc_action)?;

    Ok(RealizationArtifact {
        params: *params,
        mode,
        generator: gen.clone(),
        tower,
        visit_times,
        fragmentation: FragSummary {
            m: params.m,
            factor_norm: frag.per_factor_norm[0],
            c_hat: frag.c_hat,
        },
        bump,
        t_map,
        disc_action,
        full_map,
        provenance: Provenance {
            seed,
            flow_tol: gen.tol,
            base_ytilde,
            version: env!("CARGO_PKG_VERSION").into(),
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReturnMapReport {
    pub grid_points: usize,
    /// max over the grid of |h₀ F^{n_M} h₀⁻¹(u) − f(u)|
    pub max_dev: f64,
    pub mean_dev: f64,
    /// same against the independent factor-composition oracle
    pub max_dev_composition: f64,
    /// worst deviation of the base-center orbit from the recorded tower
    /// centers; stays below the disc radius since the factors move points
    /// only within their disc
    pub center_dev: f64,
    /// worst partial-composition deviation at sampled intermediate
    /// isometric times
    pub partial_dev: f64,
}

/// Per-step orbit iteration with exact disc-membership bookkeeping.
pub fn return_map(
    art: &RealizationArtifact,
    gen: &IsotopyGenerator,
    grid_per_dim: usize,
) -> Result<ReturnMapReport> {
    let amb = art.ambient();
    let ball = Ambient::Ball { d: art.params.d };
    let h0 = art.base_similarity()?;
    let h0_inv = h0.invert()?;
    let f_target = gen.flow(1.0)?;
    let n_period = art.tower.n_period;
    let rho = art.tower.radius;

    // membership schedule: step n -> used-disc index
    let mut disc_at_time = vec![usize::MAX; n_period as usize];
    for (i, &n) in art.visit_times.iter().enumerate() {
        disc_at_time[n as usize] = i;
    }
    let centers: Vec<Vec<f64>> = art
        .visit_times
        .iter()
        .map(|&n| art.tower.visits[n as usize].center_ambient.clone())
        .collect();
    let inners: Vec<MapExpr> = art.disc_action.node().children();

    // the base-center orbit must land on the recorded tower centers
    let mut center_dev = 0.0f64;
    {
        let mut c = Point::new(art.tower.base_ambient.clone(), amb)?;
        for n in 0..n_period {
            let v = &art.tower.visits[n as usize];
            center_dev = center_dev.max(amb.distance(&c.coords, &v.center_ambient));
            c = art.full_map.eval(&c)?;
        }
        center_dev = center_dev.max(amb.distance(&c.coords, &art.tower.base_ambient));
    }

    // sampled intermediate identities h_i ∘ F^{n_i} ∘ h₀⁻¹ = f_{i−1} ∘ … ∘ f₀
    let m = art.params.m as usize;
    let probe_idx: Vec<usize> = [m / 4, m / 2, (3 * m) / 4]
        .into_iter()
        .filter(|&i| i > 0 && i < m)
        .collect();
    let frag = fragment(gen, m, 9)?;

    let mut max_dev = 0.0f64;
    let mut max_dev_comp = 0.0f64;
    let mut partial_dev = 0.0f64;
    let mut sum_dev = 0.0;
    let mut count = 0usize;

    let half = 0.93;
    let grid = GridSpec::new(
        vec![-half; art.params.d],
        vec![2.0 * half; art.params.d],
        vec![grid_per_dim; art.params.d],
    );
    for coords in grid.points() {
        if coords.iter().map(|c| c * c).sum::<f64>().sqrt() >= 1.0 - 1e-6 {
            continue;
        }
        let u = Point::new(coords, ball)?;
        let mut p = h0_inv.eval(&u)?;
        for n in 0..n_period {
            // exact membership audit: the orbit must sit in the scheduled
            // disc and only there
            let mut found = usize::MAX;
            for (i, c) in centers.iter().enumerate() {
                if amb.distance(c, &p.coords) < rho {
                    found = i;
                    break;
                }
            }
            let expect = disc_at_time[n as usize];
            if found != expect {
                return Err(BuildError::OrbitEscape {
                    step: n,
                    detail: format!("expected disc {expect:?}, found {found:?}"),
                });
            }
            if expect != usize::MAX && !inners.is_empty() {
                p = inners[expect].eval(&p)?;
            }
            p = art.t_map.eval(&p)?;
            if expect != usize::MAX && expect + 1 < m {
                // nothing extra: partial identities are probed below
            }
            if let Ok(k) = probe_idx.binary_search_by(|&pi| art.visit_times[pi].cmp(&(n + 1))) {
                // reached time n_i for a probed i: compare against the
                // partial composition
                let i = probe_idx[k];
                let h_i = art.disc_similarity(i)?;
                let lhs = h_i.eval(&p)?;
                let mut rhs = u.clone();
                for f in frag.factors.iter().take(i) {
                    rhs = f.eval(&rhs)?;
                }
                partial_dev = partial_dev.max(lhs.distance(&rhs));
            }
        }
        let out = h0.eval(&p)?;
        let direct = f_target.eval(&u)?;
        let dev = out.distance(&direct);
        max_dev = max_dev.max(dev);
        sum_dev += dev;
        count += 1;

        let mut comp = u.clone();
        for f in frag.factors.iter() {
            comp = f.eval(&comp)?;
        }
        max_dev_comp = max_dev_comp.max(out.distance(&comp));
    }
    Ok(ReturnMapReport {
        grid_points: count,
        max_dev,
        mean_dev: if count > 0 { sum_dev / count as f64 } else { 0.0 },
        max_dev_composition: max_dev_comp,
        center_dev,
        partial_dev,
    })
}

/// C⁰-grid subadditivity of the assembly: `sup|F − Id|` never exceeds
/// `sup|disc_action − Id| + sup|T − Id|` on the same grid.
pub fn norm_decomposition(art: &RealizationArtifact, per_dim: usize) -> Result<(f64, f64, f64)> {
    let grid = GridSpec::covering(&art.full_map, per_dim);
    let f = norm_cr(&art.full_map, 0.0, &grid)?.value;
    let fbar = norm_cr(&art.disc_action, 0.0, &grid)?.value;
    let t = norm_cr(&art.t_map, 0.0, &grid)?.value;
    Ok((f, fbar, t))
}

/// Exact-similarity coherence: h_{i+1} = h_i ∘ (step isometry)⁻¹ around the
/// whole tower returns h₀.  Orthogonal parts are identities by construction,
/// so the check compares the recorded disc centers against the recorded
/// step translations, link by link and around the closing step.
pub fn similarity_coherence(art: &RealizationArtifact) -> Result<f64> {
    let amb = art.ambient();
    let d = art.params.d;
    let mut worst = 0.0f64;
    let base = &art.tower.base_ambient;
    let mut prev_center = base.clone();
    let mut prev_t = vec![0.0; d];
    for &n in art.visit_times.iter().skip(1) {
        let v = &art.tower.visits[n as usize];
        let t_now = v.translation_ambient.as_ref().expect("isometric");
        for i in 0..d {
            let step = t_now[i] - prev_t[i];
            let gap = amb.wrap_delta(i, v.center_ambient[i] - prev_center[i] - step);
            worst = worst.max(gap.abs());
        }
        prev_center = v.center_ambient.clone();
        prev_t = t_now.clone();
    }
    // closing step: time n_M = N carries the identity, so the last link
    // returns exactly to the base
    for i in 0..d {
        let gap = amb.wrap_delta(i, base[i] - prev_center[i] - (0.0 - prev_t[i]));
        worst = worst.max(gap.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{identity_generator, sample_hamiltonian_2d};

    #[test]
    fn epsilon_gate_rejects_large_epsilon() {
        // for d = 2 the gate sits at ε = 1/(2+ε)⁴ ≈ 0.0555
        let err = select_parameters(2, 0.06, 0.1, 1.0, 1.0, SelectOptions::default());
        assert!(matches!(err, Err(BuildError::BadParams(_))));
        assert!(select_parameters(2, 0.05, 0.1, 0.0, 0.0, SelectOptions::default()).is_ok());
    }

    #[test]
    fn vacuous_constraints_give_first_grid_point() {
        let (a, q) = select_parameters(2, 0.01, 0.1, 0.0, 0.0, SelectOptions::default()).unwrap();
        assert_eq!((a, q), (8, 2));
    }

    #[test]
    fn realistic_budget_is_infeasible_with_symbolic_a() {
        let err = select_parameters(2, 0.01, 0.1, 3.0, 1.0, SelectOptions::default());
        match err {
            Err(BuildError::InfeasibleBudget { log10_a_star, .. }) => {
                assert!(log10_a_star > 19.0, "A* should dwarf 2^63, got 10^{log10_a_star:.1}");
            }
            other => panic!("expected InfeasibleBudget, got {other:?}"),
        }
    }

    #[test]
    fn identity_target_realizes_as_the_permutation_map() {
        let params = RealizationParams::desk(2, 16, 2, 0.01, 0.1).unwrap();
        let gen = identity_generator(2);
        let art = assemble(&params, AmbientMode::FatTorus, &gen, 7).unwrap();
        // all factors are the identity, so F = T
        assert!(art.disc_action.is_identity());
        assert_eq!(art.full_map.kind(), art.t_map.kind());
        let rep = return_map(&art, &gen, 6).unwrap();
        assert!(rep.max_dev <= 128.0 * 1e-12, "identity return dev {:e}", rep.max_dev);
    }

    #[test]
    fn desk_scale_return_map_is_exact() {
        let params = RealizationParams::desk(2, 16, 2, 0.01, 0.1).unwrap();
        let gen = sample_hamiltonian_2d();
        let art = assemble(&params, AmbientMode::FatTorus, &gen, 7).unwrap();
        let rep = return_map(&art, &gen, 6).unwrap();
        assert!(rep.max_dev <= 1e-6, "return dev {:e}", rep.max_dev);
        assert!(rep.max_dev_composition <= 1e-6);
        assert!(rep.center_dev < art.tower.radius, "center orbit left its disc");
        assert!(rep.partial_dev <= 1e-8, "partial dev {:e}", rep.partial_dev);
    }

    #[test]
    fn coherence_and_subadditivity() {
        let params = RealizationParams::desk(2, 16, 2, 0.01, 0.1).unwrap();
        let gen = sample_hamiltonian_2d();
        let art = assemble(&params, AmbientMode::FatTorus, &gen, 7).unwrap();
        let coh = similarity_coherence(&art).unwrap();
        assert!(coh <= 1e-12, "similarity coherence {coh:e}");
        let (f, fbar, t) = norm_decomposition(&art, 9).unwrap();
        assert!(f <= fbar + t + 1e-12, "C0 subadditivity: {f} vs {fbar} + {t}");
    }
}
