//! Stable and unstable holonomies as certified truncated limits.
//!
//! For a pair `z ∈ W^s(y)` the holonomy is `lim γ_n` with
//! `γ_n = α^{(n)}(z)⁻¹ ∘ α^{(n)}(y)`. Each `γ_n` is evaluated inside out,
//! `E ← α(z_j)⁻¹ ∘ E ∘ α(y_j)` for `j = n-1, …, 0`, so that every
//! intermediate map is itself a truncated holonomy between nearby points and
//! stays close to the identity. Unstable holonomies use the same scheme with
//! the backward generator `w ↦ α(F⁻¹w)⁻¹`.

use serde::{Deserialize, Serialize};

use crate::base::{BasePoint, BaseSystem, Leaf, LeafPair};
use crate::cocycle::{check_domination_with, Cocycle};
use crate::error::{Error, Result};
use crate::exec;
use crate::fiber::{d0, dk_components, dk_surrogate, CircleDiffeo};

/// Iteration cap for the truncated limit.
pub const MAX_ITER: usize = 200;
/// Increments entering the running decay estimate.
const RATIO_WINDOW: usize = 8;
/// Extra iterations granted to the jets once the `C^0` part has converged.
const JET_GRACE: usize = 40;
/// Samples used when an engine has to check domination itself.
const QUICK_RHO_SAMPLES: usize = 256;

/// Tunables for holonomy computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Highest jet order to certify; defaults to `r - 1`.
    pub certify_order: Option<usize>,
    /// Known domination verdict; checked on a quick sample when absent.
    pub dominated: Option<bool>,
}

impl Default for HolonomyOptions {
    fn default() -> Self {
        HolonomyOptions {
            tol: 1e-9,
            max_iter: MAX_ITER,
            certify_order: None,
            dominated: None,
        }
    }
}

impl HolonomyOptions {
    pub fn with_tol(tol: f64) -> Self {
        HolonomyOptions {
            tol,
            ..Default::default()
        }
    }
}

/// A computed holonomy with its convergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyResult {
    pub map: CircleDiffeo,
    /// Truncation index `n*` of the local limit.
    pub iterations: usize,
    /// Iterates used to bring the pair into its local set.
    pub pushed: usize,
    /// Jet increments `dk(γ_{n+1}, γ_n)` at the certified target order.
    pub increments: Vec<f64>,
    /// `d0(γ_{n+1}, γ_n)`.
    pub c0_increments: Vec<f64>,
    /// Decay rate of `increments`, fitted to their running tail maximum
    /// above the noise floor.
    pub ratio: f64,
    /// Same for `c0_increments`.
    pub c0_ratio: f64,
    pub tail_bound: f64,
    pub certified_order: usize,
    /// Set when jets could not be certified and the result is only `C^0`.
    pub degraded: bool,
    pub leaf: Leaf,
    pub endpoints: (BasePoint, BasePoint),
}

/// Serializable summary of a [`HolonomyResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomyDiagnostics {
    pub leaf: Leaf,
    pub from: String,
    pub to: String,
    pub iterations: usize,
    pub pushed: usize,
    pub increments: Vec<f64>,
    pub c0_increments: Vec<f64>,
    pub ratio: f64,
    pub c0_ratio: f64,
    pub tail_bound: f64,
    pub certified_order: usize,
    pub degraded: bool,
}

impl HolonomyResult {
    pub fn diagnostics(&self) -> HolonomyDiagnostics {
        HolonomyDiagnostics {
            leaf: self.leaf,
            from: self.endpoints.0.label(),
            to: self.endpoints.1.label(),
            iterations: self.iterations,
            pushed: self.pushed,
            increments: self.increments.clone(),
            c0_increments: self.c0_increments.clone(),
            ratio: self.ratio,
            c0_ratio: self.c0_ratio,
            tail_bound: self.tail_bound,
            certified_order: self.certified_order,
            degraded: self.degraded,
        }
    }
}

/// One level of the inside-out product.
struct Level {
    right: CircleDiffeo,
    left: CircleDiffeo,
    /// Both generator values coincide bitwise, so an identity passes through.
    trivial: bool,
}

/// Late-stage decay rate: exponential of the least-squares slope of
/// `ln inc` over the last few increments above `floor`.
fn ratio_estimate(incs: &[f64], floor: f64) -> Option<f64> {
    let recent = incs.len().saturating_sub(RATIO_WINDOW);
    ratio_fit(
        incs.iter()
            .enumerate()
            .skip(recent)
            .filter(|(_, &v)| v > floor),
    )
}

/// Decay rate of the whole run: the same fit applied to the running tail
/// maximum `max_{j >= n} inc_j` over its later two thirds, up to the last
/// increment above `floor`. The tail maximum irons out oscillating
/// increments that a short window mistakes for slow decay.
fn decay_rate(incs: &[f64], floor: f64) -> Option<f64> {
    let end = incs.iter().rposition(|&v| v > floor)? + 1;
    let mut env = incs[..end].to_vec();
    for i in (0..end.saturating_sub(1)).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    let start = (end / 3).min(end.saturating_sub(3));
    ratio_fit(env.iter().enumerate().skip(start))
}

fn ratio_fit<'a>(incs: impl Iterator<Item = (usize, &'a f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = incs.map(|(i, &v)| (i as f64, v.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}

/// Largest of the last few increments.
fn envelope(incs: &[f64]) -> f64 {
    incs.iter().rev().take(3).cloned().fold(0.0, f64::max)
}

/// Noise level of spectral derivatives of order `k` on an `m`-point grid.
fn jet_floor(k: usize, m: usize) -> f64 {
    // roundoff of 1e-16 amplified by the largest retained wavenumber
    let kmax = std::f64::consts::PI * m as f64;
    (4e-16 * kmax.powi(k as i32)).max(1e-15)
}

/// Holonomy computations for one cocycle over one base system.
#[derive(Debug, Clone)]
pub struct HolonomyEngine<'a> {
    a: &'a Cocycle,
    sys: &'a BaseSystem,
    opts: HolonomyOptions,
    target: usize,
    dominated: bool,
}

impl<'a> HolonomyEngine<'a> {
    pub fn new(a: &'a Cocycle, sys: &'a BaseSystem, opts: HolonomyOptions) -> Result<Self> {
        let r = a.grid().jet_order;
        let target = opts.certify_order.unwrap_or(r.saturating_sub(1)).min(r);
        let dominated = match opts.dominated {
            Some(d) => d,
            None => {
                let t = (2 * r - 1) as f64;
                check_domination_with(a, sys, t, QUICK_RHO_SAMPLES, 8)?.satisfied
            }
        };
        Ok(HolonomyEngine {
            a,
            sys,
            opts,
            target,
            dominated,
        })
    }

    pub fn options(&self) -> &HolonomyOptions {
        &self.opts
    }

    pub fn is_dominated(&self) -> bool {
        self.dominated
    }

    pub fn cocycle(&self) -> &Cocycle {
        self.a
    }

    pub fn system(&self) -> &BaseSystem {
        self.sys
    }

    fn level(&self, pair: &LeafPair) -> Result<Level> {
        match pair.leaf {
            Leaf::Stable => {
                let gy = self.a.generator(self.sys, &pair.y)?;
                let gz = self.a.generator(self.sys, &pair.z)?;
                let trivial = gy == gz;
                Ok(Level {
                    left: gz.inverse(),
                    right: gy,
                    trivial,
                })
            }
            Leaf::Unstable => {
                // backward generator w ↦ α(F⁻¹w)⁻¹, with F⁻¹ taken along the pair
                let next = self.sys.advance(pair, 1);
                let gy = self.a.generator(self.sys, &next.y)?;
                let gz = self.a.generator(self.sys, &next.z)?;
                let trivial = gy == gz;
                Ok(Level {
                    right: gy.inverse(),
                    left: gz,
                    trivial,
                })
            }
        }
    }

    fn fold(&self, levels: &[Level], inner: Option<&CircleDiffeo>) -> Result<CircleDiffeo> {
        let mut e = inner.cloned();
        for lv in levels.iter().rev() {
            if e.is_none() && lv.trivial {
                continue;
            }
            e = Some(match e {
                None => lv.left.compose(&lv.right)?,
                Some(m) => lv.left.compose(&m.compose(&lv.right)?)?,
            });
        }
        Ok(e.unwrap_or_else(|| CircleDiffeo::identity(self.a.grid())))
    }

    /// Holonomy along a leaf pair `y → z`.
    pub fn along(&self, pair: &LeafPair) -> Result<HolonomyResult> {
        let endpoints = (pair.y.clone(), pair.z.clone());
        let grid = self.a.grid();
        if pair.is_trivial() {
            return Ok(HolonomyResult {
                map: CircleDiffeo::identity(grid),
                iterations: 0,
                pushed: 0,
                increments: Vec::new(),
                c0_increments: Vec::new(),
                ratio: 0.0,
                c0_ratio: 0.0,
                tail_bound: 0.0,
                certified_order: self.target,
                degraded: !self.dominated && self.target > 0,
                leaf: pair.leaf,
                endpoints,
            });
        }
        let m = self.sys.steps_to_local(pair)?;
        let to_nc = |e: Error| match e {
            Error::MonotonicityLost { min_step } => Error::NoConvergence(format!(
                "composition lost monotonicity (min step {min_step:e})"
            )),
            other => other,
        };
        let mut outer = Vec::with_capacity(m);
        let mut cur = pair.clone();
        for _ in 0..m {
            outer.push(self.level(&cur)?);
            cur = self.sys.advance(&cur, 1);
        }
        let local = self.local_limit(cur).map_err(to_nc)?;
        let map = if outer.is_empty() {
            local.map.clone()
        } else {
            self.fold(&outer, Some(&local.map)).map_err(to_nc)?
        };
        Ok(HolonomyResult {
            map,
            pushed: m,
            leaf: pair.leaf,
            endpoints,
            ..local
        })
    }

    fn local_limit(&self, pair: LeafPair) -> Result<HolonomyResult> {
        let grid = self.a.grid();
        let tol = self.opts.tol;
        let target = if self.dominated { self.target } else { 0 };
        let floor = jet_floor(target, grid.grid_size);
        let tol_k = tol.max(4.0 * floor);
        let mut levels: Vec<Level> = Vec::new();
        let mut cur = pair.clone();
        let mut prev = CircleDiffeo::identity(grid);
        let mut inc0: Vec<f64> = Vec::new();
        let mut inck: Vec<f64> = Vec::new();
        let mut c0_done_at: Option<usize> = None;
        for n in 1..=self.opts.max_iter {
            levels.push(self.level(&cur)?);
            cur = self.sys.advance(&cur, 1);
            let g = self.fold(&levels, None)?;
            let comps = dk_components(&g, &prev, target);
            let e0 = comps[0];
            let ek = comps.iter().cloned().fold(0.0, f64::max);
            inc0.push(e0);
            inck.push(ek);
            prev = g;

            let q0 = ratio_estimate(&inc0, 1e-300);
            let env0 = envelope(&inc0);
            let c0_ok = env0 == 0.0 && n >= 2
                || q0.is_some_and(|q| q < 1.0 && env0 <= tol * (1.0 - q) / q.max(1e-300));
            if c0_ok && c0_done_at.is_none() {
                c0_done_at = Some(n);
            }
            let qk = ratio_estimate(&inck, floor);
            let envk = envelope(&inck);
            let jets_ok = target == 0
                || envk <= 2.0 * floor && n >= 3
                || qk.is_some_and(|q| q < 1.0 && envk <= tol_k * (1.0 - q) / q.max(1e-300));
            if c0_ok && jets_ok {
                let q0v = q0.unwrap_or(0.0);
                let qkv = qk.unwrap_or(0.0);
                let tail0 = if q0v > 0.0 {
                    env0 * q0v / (1.0 - q0v)
                } else {
                    0.0
                };
                let tailk = if qkv > 0.0 {
                    envk * qkv / (1.0 - qkv)
                } else {
                    envk.min(2.0 * floor)
                };
                let qkv = decay_rate(&inck, floor).or(qk).unwrap_or(0.0);
                let q0v = decay_rate(&inc0, 1e-300).unwrap_or(q0v);
                return Ok(HolonomyResult {
                    map: prev,
                    iterations: n,
                    pushed: 0,
                    increments: inck,
                    c0_increments: inc0,
                    ratio: qkv,
                    c0_ratio: q0v,
                    tail_bound: if target > 0 { tail0.max(tailk) } else { tail0 },
                    certified_order: target,
                    degraded: target < self.target,
                    leaf: pair.leaf,
                    endpoints: (pair.y.clone(), pair.z.clone()),
                });
            }
            if c0_done_at.is_some_and(|c| n >= c + JET_GRACE) {
                break;
            }
        }
        // iteration cap: fall back to a C^0 certificate if the C^0 part converged
        let n = inc0.len();
        let q0 = ratio_estimate(&inc0, 1e-300);
        match (c0_done_at, q0) {
            (Some(_), Some(q)) if q < 1.0 => {
                let e0 = envelope(&inc0);
                Ok(HolonomyResult {
                    map: prev,
                    iterations: n,
                    pushed: 0,
                    ratio: decay_rate(&inck, floor).unwrap_or(f64::INFINITY),
                    increments: inck,
                    c0_ratio: decay_rate(&inc0, 1e-300).unwrap_or(q),
                    c0_increments: inc0,
                    tail_bound: e0 * q / (1.0 - q),
                    certified_order: 0,
                    degraded: true,
                    leaf: pair.leaf,
                    endpoints: (pair.y.clone(), pair.z.clone()),
                })
            }
            _ => Err(Error::NoConvergence(format!(
                "C^0 increments did not reach geometric decay within {n} iterations (last {:e})",
                inc0.last().copied().unwrap_or(f64::NAN)
            ))),
        }
    }

    /// Holonomy between two points classified as a `leaf` pair.
    pub fn between(&self, y: &BasePoint, z: &BasePoint, leaf: Leaf) -> Result<HolonomyResult> {
        let pair = self.sys.leaf_pair(y, z, leaf)?;
        self.along(&pair)
    }

    pub fn stable(&self, y: &BasePoint, z: &BasePoint) -> Result<HolonomyResult> {
        self.between(y, z, Leaf::Stable)
    }

    pub fn unstable(&self, y: &BasePoint, z: &BasePoint) -> Result<HolonomyResult> {
        self.between(y, z, Leaf::Unstable)
    }

    /// Holonomies for many pairs, fanned out over the worker pool.
    pub fn batch(&self, pairs: &[LeafPair]) -> Vec<Result<HolonomyResult>> {
        exec::map(pairs, |p| self.along(p))
    }
}

/// `H^{s,α}_{yz}` with default options.
pub fn stable_holonomy(
    a: &Cocycle,
    sys: &BaseSystem,
    y: &BasePoint,
    z: &BasePoint,
    tol: f64,
) -> Result<HolonomyResult> {
    HolonomyEngine::new(a, sys, HolonomyOptions::with_tol(tol))?.stable(y, z)
}

/// `H^{u,α}_{yz}` with default options.
pub fn unstable_holonomy(
    a: &Cocycle,
    sys: &BaseSystem,
    y: &BasePoint,
    z: &BasePoint,
    tol: f64,
) -> Result<HolonomyResult> {
    HolonomyEngine::new(a, sys, HolonomyOptions::with_tol(tol))?.unstable(y, z)
}

/// Outcome of an identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub deviation: f64,
    pub tol: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(deviation: f64, tol: f64) -> Self {
        IdentityCheck {
            deviation,
            tol,
            passed: deviation <= tol,
        }
    }
}

/// `d0(H_yz, H_xz ∘ H_yx)` for three points on one `leaf` set.
pub fn verify_composition(
    engine: &HolonomyEngine<'_>,
    x: &BasePoint,
    y: &BasePoint,
    z: &BasePoint,
    leaf: Leaf,
    tol: f64,
) -> Result<IdentityCheck> {
    let h_yz = engine.between(y, z, leaf)?;
    let h_xz = engine.between(x, z, leaf)?;
    let h_yx = engine.between(y, x, leaf)?;
    let rhs = h_xz.map.compose(&h_yx.map)?;
    Ok(IdentityCheck::new(d0(&h_yz.map, &rhs), tol))
}

/// `d0(H_{F^n y, F^n z} ∘ α^{(n)}(y), α^{(n)}(z) ∘ H_yz)` for a leaf pair.
pub fn verify_equivariance(
    engine: &HolonomyEngine<'_>,
    pair: &LeafPair,
    n: i64,
    tol: f64,
) -> Result<IdentityCheck> {
    if n == 0 {
        return Ok(IdentityCheck::new(0.0, tol));
    }
    let (a, sys) = (engine.cocycle(), engine.system());
    let h = engine.along(pair)?;
    let moved = sys.flow_pair(pair, n);
    let h_n = engine.along(&moved)?;
    let lhs = h_n.map.compose(&a.iterate(sys, &pair.y, n)?)?;
    let rhs = a.iterate(sys, &pair.z, n)?.compose(&h.map)?;
    Ok(IdentityCheck::new(d0(&lhs, &rhs), tol))
}

/// One row of a Hölder ratio scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderScanRow {
    pub scale: usize,
    pub dist: f64,
    pub dk: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderScan {
    pub leaf: Leaf,
    pub order: usize,
    pub rows: Vec<HolderScanRow>,
    pub sup: f64,
    /// Largest ratio between successive scales.
    pub max_step_growth: f64,
    pub passed: bool,
}

/// `dk(H_yz, Id)/d(y,z)` over pairs at geometrically shrinking separation
/// inside the local `leaf` set of `x`.
pub fn holder_ratio_scan(
    engine: &HolonomyEngine<'_>,
    x: &BasePoint,
    leaf: Leaf,
    pair_count: usize,
    k: usize,
) -> Result<HolderScan> {
    let sys = engine.system();
    let pairs = sys.local_leaf_pairs(x, leaf, pair_count)?;
    let id = CircleDiffeo::identity(engine.cocycle().grid());
    let rows = exec::try_map(&pairs, |p| {
        let h = engine.along(p)?;
        let kk = k.min(h.certified_order);
        let d = sys.pair_dist(p);
        let dk = dk_surrogate(&h.map, &id, kk);
        Ok::<_, Error>((d, dk))
    })?;
    let rows: Vec<HolderScanRow> = rows
        .into_iter()
        .enumerate()
        .map(|(i, (dist, dk))| HolderScanRow {
            scale: i,
            dist,
            dk,
            ratio: dk / dist,
        })
        .collect();
    let sup = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let max_step_growth = rows
        .windows(2)
        .filter(|w| w[0].ratio > 0.0)
        .map(|w| w[1].ratio / w[0].ratio)
        .fold(0.0, f64::max);
    Ok(HolderScan {
        leaf,
        order: k,
        rows,
        sup,
        max_step_growth,
        passed: max_step_growth <= 1.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{DiffeoField, Family, FieldSpec, Mode, Observable};
    use crate::fiber::FiberGrid;

    fn grid() -> FiberGrid {
        FiberGrid::new(256, 3).unwrap()
    }

    #[test]
    fn trivial_and_constant_cases() {
        let sys = BaseSystem::cat_map();
        let g = Cocycle::constant(crate::fiber::sine_bump(0.02, grid()).unwrap());
        let eng = HolonomyEngine::new(
            &g,
            &sys,
            HolonomyOptions {
                dominated: Some(true),
                ..Default::default()
            },
        )
        .unwrap();
        let y = BasePoint::torus(0.2, 0.3);
        let pair = sys
            .toral_pair(y.as_torus().unwrap(), 0.05, Leaf::Stable)
            .unwrap();
        let h = eng.along(&pair).unwrap();
        assert_eq!(h.map, CircleDiffeo::identity(grid()));
        let same = sys
            .toral_pair(y.as_torus().unwrap(), 0.0, Leaf::Stable)
            .unwrap();
        assert_eq!(
            eng.along(&same).unwrap().map,
            CircleDiffeo::identity(grid())
        );
    }

    #[test]
    fn rotation_series_oracle() {
        let sys = BaseSystem::cat_map();
        let phi = Observable::cos(0.05, [1, 0]);
        let a = Cocycle::rotation(phi.clone(), grid());
        let eng = HolonomyEngine::new(&a, &sys, HolonomyOptions::with_tol(1e-12)).unwrap();
        let y = BasePoint::torus(0.37, 0.61);
        let pair = sys
            .toral_pair(y.as_torus().unwrap(), 0.08, Leaf::Stable)
            .unwrap();
        let h = eng.along(&pair).unwrap();
        let mut c = 0.0;
        let mut p = pair.clone();
        loop {
            let term = phi.eval(&sys, &p.y) - phi.eval(&sys, &p.z);
            c += term;
            if term.abs() < 1e-15 && sys.pair_dist(&p) < 1e-14 {
                break;
            }
            p = sys.advance(&p, 1);
        }
        assert!(d0(&h.map, &CircleDiffeo::rotation(c, grid())) < 1e-9);
        let hu = eng
            .along(
                &sys.toral_pair(y.as_torus().unwrap(), 0.08, Leaf::Unstable)
                    .unwrap(),
            )
            .unwrap();
        assert!(hu.map.is_rotation());
    }

    fn bump(sys: &BaseSystem, g: FiberGrid) -> Cocycle {
        Cocycle::from_family(
            Family::Bump {
                angle: Observable::cos(0.05, [1, 0]),
                weight: Observable::constant(0.01),
                modes: vec![Mode {
                    k: 1,
                    sin: 1.0,
                    cos: 0.0,
                }],
            },
            sys,
            g,
        )
        .unwrap()
    }

    #[test]
    fn coboundary_matches_transfer_oracle() {
        let sys = BaseSystem::cat_map();
        let spec = FieldSpec {
            angle: Observable::sin(0.1, [0, 1]),
            weight: Observable::constant(0.03),
            modes: vec![Mode {
                k: 1,
                sin: 1.0,
                cos: 0.5,
            }],
            inverse: false,
        };
        let p0 = DiffeoField::new(spec.clone(), grid());
        let a = Cocycle::from_family(Family::Coboundary { p: spec }, &sys, grid()).unwrap();
        let eng = HolonomyEngine::new(&a, &sys, HolonomyOptions::with_tol(1e-11)).unwrap();
        for (i, leaf) in [Leaf::Stable, Leaf::Unstable, Leaf::Stable]
            .into_iter()
            .enumerate()
        {
            let y = crate::base::TorusPoint::new(0.11 + 0.3 * i as f64, 0.42);
            let pair = sys.toral_pair(&y, 0.07 - 0.05 * i as f64, leaf).unwrap();
            let h = eng.along(&pair).unwrap();
            let oracle = p0
                .eval(&sys, &pair.z)
                .unwrap()
                .compose(&p0.eval(&sys, &pair.y).unwrap().inverse())
                .unwrap();
            assert!(
                d0(&h.map, &oracle) < 1e-9,
                "{leaf:?}: {}",
                d0(&h.map, &oracle)
            );
        }
    }

    #[test]
    fn bump_identities_and_rate() {
        let sys = BaseSystem::cat_map();
        let a = bump(&sys, grid());
        let eng = HolonomyEngine::new(&a, &sys, HolonomyOptions::with_tol(1e-10)).unwrap();
        assert!(eng.is_dominated());
        let y = crate::base::TorusPoint::new(0.3, 0.8);
        let x = BasePoint::Torus(y.clone());
        for leaf in [Leaf::Stable, Leaf::Unstable] {
            let p1 = sys.toral_pair(&y, 0.04, leaf).unwrap();
            let p2 = sys.toral_pair(&y, -0.06, leaf).unwrap();
            let c = verify_composition(&eng, &x, &p1.z, &p2.z, leaf, 1e-8).unwrap();
            assert!(c.passed, "{c:?}");
            for n in [-2, 1, 3] {
                let e = verify_equivariance(&eng, &p1, n, 1e-8).unwrap();
                assert!(e.passed, "{n}: {e:?}");
            }
            let h = eng.along(&p2).unwrap();
            assert!(h.ratio < 0.7, "ratio {}", h.ratio);
            assert_eq!(h.certified_order, 2);
        }
        let scan = holder_ratio_scan(&eng, &x, Leaf::Stable, 5, 0).unwrap();
        assert!(scan.passed, "{scan:?}");
    }

    #[test]
    fn symbolic_pairs_are_exact_after_merging() {
        let sys = BaseSystem::sft(vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]], 0.5).unwrap();
        let obs = Observable::Symbols {
            terms: vec![
                crate::cocycle::SymbolTerm {
                    index: 0,
                    values: vec![0.0, 0.01, -0.02],
                },
                crate::cocycle::SymbolTerm {
                    index: -1,
                    values: vec![0.005, 0.0, 0.01],
                },
            ],
        };
        let a = Cocycle::from_family(
            Family::Bump {
                angle: obs,
                weight: Observable::constant(0.01),
                modes: vec![Mode {
                    k: 1,
                    sin: 1.0,
                    cos: 0.0,
                }],
            },
            &sys,
            grid(),
        )
        .unwrap();
        let eng = HolonomyEngine::new(&a, &sys, HolonomyOptions::default()).unwrap();
        let x = sys.sample_points(1, 5).remove(0);
        for leaf in [Leaf::Stable, Leaf::Unstable] {
            let pairs = sys.local_leaf_pairs(&x, leaf, 4).unwrap();
            assert_eq!(pairs.len(), 4);
            for p in &pairs {
                let h = eng.along(p).unwrap();
                assert_eq!(h.tail_bound, 0.0);
                assert!(verify_equivariance(&eng, p, 2, 1e-12).unwrap().passed);
            }
            let back = eng.along(&pairs[1].reversed()).unwrap().map;
            let fwd = eng.along(&pairs[1]).unwrap().map;
            assert!(
                d0(
                    &back.compose(&fwd).unwrap(),
                    &CircleDiffeo::identity(grid())
                ) < 1e-12
            );
        }
    }

    #[test]
    fn non_dominated_degrades() {
        let sys = BaseSystem::cat_map();
        let a = Cocycle::from_family(
            Family::Bump {
                angle: Observable::cos(0.1, [1, 0]),
                weight: Observable::cos(0.13, [0, 1]),
                modes: vec![Mode {
                    k: 1,
                    sin: 1.0,
                    cos: 0.0,
                }],
            },
            &sys,
            grid(),
        )
        .unwrap();
        let eng = HolonomyEngine::new(&a, &sys, HolonomyOptions::default()).unwrap();
        assert!(!eng.is_dominated());
        let pair = sys
            .toral_pair(&crate::base::TorusPoint::new(0.1, 0.2), 0.05, Leaf::Stable)
            .unwrap();
        let h = eng.along(&pair).unwrap();
        assert!(h.degraded);
        assert_eq!(h.certified_order, 0);
    }
}
