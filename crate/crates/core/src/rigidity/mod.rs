//! Transfer maps built from holonomies, the cohomology equation, period
//! reduction for bases without fixed points, and regularity probes.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::base::{BasePoint, BaseSystem, Homoclinic, Leaf, LeafPair, PointKey, ToralAutomorphism};
use crate::cocycle::{check_domination_with, poc_check, Cocycle};
use crate::error::{Error, Result};
use crate::exec;
use crate::fiber::{d0, dk_surrogate, CircleDiffeo};
use crate::holonomy::{HolonomyEngine, HolonomyOptions};

/// Samples used for the domination check behind a transfer map.
const DOMINATION_SAMPLES: usize = 1024;
/// Points receiving the `n = 2, 3` spot checks of the cohomology equation.
const SPOT_CHECKS: usize = 10;
/// Low-discrepancy witnesses added to the su-path midpoints.
pub const DEFAULT_WITNESSES: usize = 8;
/// Longest period searched when reducing a periodic anchor.
const MAX_ANCHOR_PERIOD: u32 = 64;

fn fill_domination(
    a: &Cocycle,
    sys: &BaseSystem,
    opts: HolonomyOptions,
) -> Result<HolonomyOptions> {
    if opts.dominated.is_some() {
        return Ok(opts);
    }
    let t = (2 * a.grid().jet_order - 1) as f64;
    let rep = check_domination_with(a, sys, t, DOMINATION_SAMPLES, 32)?;
    Ok(HolonomyOptions {
        dominated: Some(rep.satisfied),
        ..opts
    })
}

/// Holonomy engines for a pair of cocycles over one base.
#[derive(Debug, Clone)]
pub struct CocyclePair<'a> {
    pub alpha: HolonomyEngine<'a>,
    pub beta: HolonomyEngine<'a>,
}

impl<'a> CocyclePair<'a> {
    pub fn new(
        alpha: &'a Cocycle,
        beta: &'a Cocycle,
        sys: &'a BaseSystem,
        opts: HolonomyOptions,
    ) -> Result<Self> {
        Ok(CocyclePair {
            alpha: HolonomyEngine::new(alpha, sys, fill_domination(alpha, sys, opts)?)?,
            beta: HolonomyEngine::new(beta, sys, fill_domination(beta, sys, opts)?)?,
        })
    }

    pub fn system(&self) -> &BaseSystem {
        self.alpha.system()
    }

    /// `H^α_{yz} ∘ p ∘ H^β_{zy}` for the leg `y → z`.
    pub fn transport(&self, leg: &LeafPair, p: &CircleDiffeo) -> Result<CircleDiffeo> {
        let ha = self.alpha.along(leg)?;
        let hb = self.beta.along(&leg.reversed())?;
        ha.map.compose(&p.compose(&hb.map)?)
    }
}

/// Stable and unstable leaf pairs `x → y` for a homoclinic point `y`.
pub fn homoclinic_pairs(sys: &BaseSystem, x: &BasePoint, y: &BasePoint) -> Result<Homoclinic> {
    let stable = sys
        .leaf_pair(x, y, Leaf::Stable)
        .map_err(|e| Error::NotHomoclinic(e.to_string()))?;
    let unstable = sys
        .leaf_pair(x, y, Leaf::Unstable)
        .map_err(|e| Error::NotHomoclinic(e.to_string()))?;
    Ok(Homoclinic {
        point: y.clone(),
        stable,
        unstable,
    })
}

fn check_homoclinic(sys: &BaseSystem, x: &BasePoint, h: &Homoclinic) -> Result<()> {
    let ends =
        h.stable.y == *x && h.unstable.y == *x && h.stable.z == h.point && h.unstable.z == h.point;
    let leaves = h.stable.leaf == Leaf::Stable && h.unstable.leaf == Leaf::Unstable;
    if !ends
        || !leaves
        || sys.steps_to_local(&h.stable).is_err()
        || sys.steps_to_local(&h.unstable).is_err()
    {
        return Err(Error::NotHomoclinic(h.point.label()));
    }
    if !sys.is_fixed_exact(x, 1) && sys.dist(&sys.apply(x, 1), x) > 1e-12 {
        return Err(Error::NotPeriodic(1));
    }
    Ok(())
}

/// `P(y)` computed along the stable and along the unstable route.
#[derive(Debug, Clone, PartialEq)]
pub struct HomoclinicTransfer {
    pub stable: CircleDiffeo,
    pub unstable: CircleDiffeo,
}

/// `H^{σ,α}_{xy} ∘ H^{σ,β}_{yx}` for `σ = s, u`.
pub fn transfer_routes(
    pair: &CocyclePair<'_>,
    x: &BasePoint,
    h: &Homoclinic,
) -> Result<HomoclinicTransfer> {
    check_homoclinic(pair.system(), x, h)?;
    let id = CircleDiffeo::identity(pair.alpha.cocycle().grid());
    Ok(HomoclinicTransfer {
        stable: pair.transport(&h.stable, &id)?,
        unstable: pair.transport(&h.unstable, &id)?,
    })
}

/// `P(y) = H^{s,α}_{xy} ∘ H^{s,β}_{yx}` at a point homoclinic to the fixed point `x`.
pub fn transfer_at_homoclinic(
    pair: &CocyclePair<'_>,
    x: &BasePoint,
    h: &Homoclinic,
) -> Result<CircleDiffeo> {
    check_homoclinic(pair.system(), x, h)?;
    let id = CircleDiffeo::identity(pair.alpha.cocycle().grid());
    pair.transport(&h.stable, &id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuConsistency {
    pub point: String,
    pub deviation: f64,
    pub tol: f64,
    pub passed: bool,
}

/// `d0` between the stable-route and unstable-route values of `P(y)`.
///
/// With `poc = Some((n_max, poc_tol))` the periodic orbit condition is
/// checked first and a violation is an error.
pub fn su_consistency(
    pair: &CocyclePair<'_>,
    x: &BasePoint,
    h: &Homoclinic,
    tol: f64,
    poc: Option<(u32, f64)>,
) -> Result<SuConsistency> {
    if let Some((n_max, poc_tol)) = poc {
        let rep = poc_check(
            pair.alpha.cocycle(),
            pair.beta.cocycle(),
            pair.system(),
            n_max,
            poc_tol,
        )?;
        if !rep.passed {
            return Err(Error::PocViolated {
                max_deviation: rep.max_deviation,
                tol: poc_tol,
            });
        }
    }
    let t = transfer_routes(pair, x, h)?;
    let deviation = d0(&t.stable, &t.unstable);
    Ok(SuConsistency {
        point: h.point.label(),
        deviation,
        tol,
        passed: deviation <= tol,
    })
}

/// `d0(α^{(n)}(y)⁻¹∘β^{(n)}(y), α^{(-n)}(y)⁻¹∘β^{(-n)}(y))` for `n = 1..=n_max`.
pub fn homoclinic_gap_sequence(
    a: &Cocycle,
    b: &Cocycle,
    sys: &BaseSystem,
    y: &BasePoint,
    n_max: usize,
) -> Result<Vec<f64>> {
    (1..=n_max as i64)
        .map(|n| {
            let s = a
                .iterate(sys, y, n)?
                .inverse()
                .compose(&b.iterate(sys, y, n)?)?;
            let u = a
                .iterate(sys, y, -n)?
                .inverse()
                .compose(&b.iterate(sys, y, -n)?)?;
            Ok(d0(&s, &u))
        })
        .collect()
}

/// A transfer map `P` with `α(x) = P(Fx) ∘ β(x) ∘ P(x)⁻¹`, normalized at an
/// anchor fixed by the base system and extended along su-paths.
#[derive(Debug)]
pub struct TransferMap {
    anchor: BasePoint,
    anchor_period: u32,
    anchor_value: CircleDiffeo,
    alpha: Cocycle,
    beta: Cocycle,
    sys: BaseSystem,
    opts_alpha: HolonomyOptions,
    opts_beta: HolonomyOptions,
    first_leg: Option<Leaf>,
    cache: RwLock<HashMap<PointKey, CircleDiffeo>>,
}

impl TransferMap {
    /// `anchor_value` defaults to the identity.
    pub fn new(
        alpha: Cocycle,
        beta: Cocycle,
        sys: BaseSystem,
        anchor: BasePoint,
        anchor_value: Option<CircleDiffeo>,
        opts: HolonomyOptions,
    ) -> Result<Self> {
        sys.validate(&anchor)?;
        if !sys.is_fixed_exact(&anchor, 1) {
            return Err(Error::NotPeriodic(1));
        }
        let anchor_value = anchor_value.unwrap_or_else(|| CircleDiffeo::identity(alpha.grid()));
        let opts_alpha = fill_domination(&alpha, &sys, opts)?;
        let opts_beta = fill_domination(&beta, &sys, opts)?;
        Ok(TransferMap {
            anchor,
            anchor_period: sys.step().unsigned_abs() as u32,
            anchor_value,
            alpha,
            beta,
            sys,
            opts_alpha,
            opts_beta,
            first_leg: None,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// Fixes the leaf type of the first su-path leg.
    pub fn with_first_leg(mut self, leaf: Leaf) -> Self {
        self.first_leg = Some(leaf);
        self
    }

    pub fn anchor(&self) -> &BasePoint {
        &self.anchor
    }

    pub fn anchor_period(&self) -> u32 {
        self.anchor_period
    }

    pub fn anchor_value(&self) -> &CircleDiffeo {
        &self.anchor_value
    }

    pub fn alpha(&self) -> &Cocycle {
        &self.alpha
    }

    pub fn beta(&self) -> &Cocycle {
        &self.beta
    }

    pub fn system(&self) -> &BaseSystem {
        &self.sys
    }

    pub fn dominated(&self) -> (bool, bool) {
        (
            self.opts_alpha.dominated == Some(true),
            self.opts_beta.dominated == Some(true),
        )
    }

    pub fn cached_points(&self) -> usize {
        self.cache.read().map(|c| c.len()).unwrap_or(0)
    }

    pub fn engines(&self) -> Result<CocyclePair<'_>> {
        Ok(CocyclePair {
            alpha: HolonomyEngine::new(&self.alpha, &self.sys, self.opts_alpha)?,
            beta: HolonomyEngine::new(&self.beta, &self.sys, self.opts_beta)?,
        })
    }

    /// `P(z)`, transported from the anchor along an su-path.
    pub fn evaluate(&self, z: &BasePoint) -> Result<CircleDiffeo> {
        if *z == self.anchor {
            return Ok(self.anchor_value.clone());
        }
        let key = z.key();
        if let Some(v) = self.cache.read().ok().and_then(|c| c.get(&key).cloned()) {
            return Ok(v);
        }
        let path = match self.first_leg {
            Some(first) => self.sys.su_path_ordered(&self.anchor, z, first)?,
            None => self.sys.su_path(&self.anchor, z)?,
        };
        let v = self.transport_along(&path.legs)?;
        if let Ok(mut c) = self.cache.write() {
            c.insert(key, v.clone());
        }
        Ok(v)
    }

    /// `P(z)` along the su-path whose first leg is a `first` leg; not cached.
    pub fn evaluate_along(&self, z: &BasePoint, first: Leaf) -> Result<CircleDiffeo> {
        if *z == self.anchor {
            return Ok(self.anchor_value.clone());
        }
        let path = self.sys.su_path_ordered(&self.anchor, z, first)?;
        self.transport_along(&path.legs)
    }

    fn transport_along(&self, legs: &[LeafPair]) -> Result<CircleDiffeo> {
        let pair = self.engines()?;
        let mut p = self.anchor_value.clone();
        for leg in legs {
            p = pair.transport(leg, &p)?;
        }
        Ok(p)
    }

    pub fn evaluate_many(&self, zs: &[BasePoint]) -> Result<Vec<CircleDiffeo>> {
        exec::try_map(zs, |z| self.evaluate(z))
    }

    /// `d0(α^{(n)}(x), P(F^n x) ∘ β^{(n)}(x) ∘ P(x)⁻¹)`.
    pub fn residual(&self, x: &BasePoint, n: i64) -> Result<f64> {
        let px = self.evaluate(x)?;
        let pfx = self.evaluate(&self.sys.apply(x, n))?;
        let rhs = pfx.compose(&self.beta.iterate(&self.sys, x, n)?.compose(&px.inverse())?)?;
        Ok(d0(&self.alpha.iterate(&self.sys, x, n)?, &rhs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub point: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotCheck {
    pub n: u32,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub samples: Vec<ResidualSample>,
    pub max_residual: f64,
    pub mean_residual: f64,
    /// Maximal residuals of the `n = 2, 3` equations on the first points.
    pub spot_checks: Vec<SpotCheck>,
}

/// The one-step cohomology equation on `sample_count` sample points, with
/// spot checks of the two- and three-step equations.
pub fn cohomology_residual(p: &TransferMap, sample_count: usize) -> Result<ResidualReport> {
    let pts = p.system().sample_points(sample_count, 0);
    let res = exec::try_map(&pts, |x| p.residual(x, 1))?;
    let samples: Vec<ResidualSample> = pts
        .iter()
        .zip(&res)
        .map(|(x, &r)| ResidualSample {
            point: x.label(),
            residual: r,
        })
        .collect();
    let max_residual = res.iter().cloned().fold(0.0, f64::max);
    let mean_residual = if res.is_empty() {
        0.0
    } else {
        res.iter().sum::<f64>() / res.len() as f64
    };
    let spot = &pts[..pts.len().min(SPOT_CHECKS)];
    let spot_checks = [2u32, 3]
        .iter()
        .map(|&n| {
            let r = exec::try_map(spot, |x| p.residual(x, n as i64))?;
            Ok(SpotCheck {
                n,
                max_residual: r.into_iter().fold(0.0, f64::max),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport {
        samples,
        max_residual,
        mean_residual,
        spot_checks,
    })
}

/// Cocycles over `F = f^{n0}` for a periodic anchor of minimal period `n0`.
#[derive(Debug, Clone)]
pub struct PeriodReduction {
    pub n0: u32,
    pub alpha: Cocycle,
    pub beta: Cocycle,
    pub sys: BaseSystem,
}

pub fn period_reduce(
    alpha: &Cocycle,
    beta: &Cocycle,
    sys: &BaseSystem,
    x0: &BasePoint,
) -> Result<PeriodReduction> {
    sys.validate(x0)?;
    let n0 = sys
        .exact_period(x0, MAX_ANCHOR_PERIOD)
        .ok_or(Error::NotPeriodic(MAX_ANCHOR_PERIOD as u64))?;
    if n0 == 1 {
        return Ok(PeriodReduction {
            n0,
            alpha: alpha.clone(),
            beta: beta.clone(),
            sys: sys.clone(),
        });
    }
    let (a, powered) = alpha.power(sys, n0)?;
    let (b, _) = beta.power(sys, n0)?;
    Ok(PeriodReduction {
        n0,
        alpha: a,
        beta: b,
        sys: powered,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromotionReport {
    pub n0: u32,
    pub tol: f64,
    pub witnesses: Vec<ResidualSample>,
    /// Index of the first witness satisfying the one-step equation.
    pub witness: Option<usize>,
    pub global: Vec<ResidualSample>,
    pub global_max: f64,
    pub passed: bool,
}

/// Midpoints of the su-path legs from the anchor to a few sample points,
/// followed by `extra` low-discrepancy points.
pub fn witness_points(p: &TransferMap, extra: usize) -> Result<Vec<BasePoint>> {
    let sys = p.system();
    let samples = sys.sample_points(extra, 3);
    let mut out = Vec::new();
    for z in samples.iter().take(2) {
        let path = sys.su_path(p.anchor(), z)?;
        for leg in &path.legs {
            let mid = match (&leg.y, leg.offset()) {
                (BasePoint::Torus(y), Some(t)) => {
                    let half = sys.toral_pair(y, 0.5 * t, leg.leaf)?;
                    half.z
                }
                _ => leg.z.clone(),
            };
            out.push(mid);
        }
    }
    out.extend(samples);
    Ok(out)
}

/// Checks the one-step equation for `P` built over `F = f^{n0}` against the
/// original cocycles over `f`. One passing witness suffices; the equation is
/// then verified on `global_samples` points.
pub fn promote(
    p: &TransferMap,
    alpha: &Cocycle,
    beta: &Cocycle,
    sys: &BaseSystem,
    witnesses: &[BasePoint],
    tol: f64,
    global_samples: usize,
) -> Result<PromotionReport> {
    let n0 = p.system().step().unsigned_abs() as u32 / sys.step().unsigned_abs().max(1) as u32;
    let one_step = |y: &BasePoint| -> Result<f64> {
        let py = p.evaluate(y)?;
        let pfy = p.evaluate(&sys.apply(y, 1))?;
        let rhs = pfy.compose(&beta.generator(sys, y)?.compose(&py.inverse())?)?;
        Ok(d0(&alpha.generator(sys, y)?, &rhs))
    };
    let score = |pts: &[BasePoint]| -> Result<Vec<ResidualSample>> {
        let r = exec::try_map(pts, one_step)?;
        Ok(pts
            .iter()
            .zip(r)
            .map(|(y, residual)| ResidualSample {
                point: y.label(),
                residual,
            })
            .collect())
    };
    if n0 <= 1 {
        return Ok(PromotionReport {
            n0,
            tol,
            witnesses: Vec::new(),
            witness: None,
            global: Vec::new(),
            global_max: 0.0,
            passed: true,
        });
    }
    let wit = score(witnesses)?;
    let Some(witness) = wit.iter().position(|w| w.residual <= tol) else {
        let best_residual = wit.iter().map(|w| w.residual).fold(f64::INFINITY, f64::min);
        return Err(Error::WitnessFailed { best_residual });
    };
    let global = score(&sys.sample_points(global_samples, 0))?;
    let global_max = global.iter().map(|g| g.residual).fold(0.0, f64::max);
    Ok(PromotionReport {
        n0,
        tol,
        witnesses: wit,
        witness: Some(witness),
        global,
        global_max,
        passed: global_max <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub scale: usize,
    pub dist: f64,
    /// `dk(P(y), P(z))` for `k = 0..=max_order`.
    pub dk: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFamily {
    /// `"s"`, `"u"` or `"generic"`.
    pub family: String,
    pub rows: Vec<ProbeRow>,
    /// Fitted exponent per jet order; `None` when `P` does not vary.
    pub exponents: Vec<Option<f64>>,
    /// `sup d0(P(y), P(z)) / d(y, z)`.
    pub lipschitz_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub scales: usize,
    pub max_order: usize,
    pub families: Vec<ProbeFamily>,
}

impl RegularityReport {
    /// Fitted `C^0` exponents of the families where `P` varies.
    pub fn c0_exponents(&self) -> Vec<f64> {
        self.families
            .iter()
            .filter_map(|f| f.exponents.first().copied().flatten())
            .collect()
    }
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 1e-14)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Empirical Hölder exponents of `P` along stable and unstable leaves and
/// along generic directions, over `scales` geometric separations.
pub fn regularity_probe(p: &TransferMap, scales: usize) -> Result<RegularityReport> {
    let sys = p.system();
    let max_order = p.alpha().grid().jet_order.saturating_sub(2);
    let x = sys.sample_points(1, 5).remove(0);
    let mut families: Vec<(String, Vec<(BasePoint, f64)>)> = Vec::new();
    for leaf in [Leaf::Stable, Leaf::Unstable] {
        let pairs = sys.local_leaf_pairs(&x, leaf, scales)?;
        families.push((
            leaf.tag().to_string(),
            pairs
                .iter()
                .map(|q| (q.z.clone(), sys.pair_dist(q)))
                .collect(),
        ));
    }
    if let BasePoint::Torus(t) = &x {
        let eps = 0.5 * sys.constants().epsilon;
        let dir = [0.6, 0.8];
        let generic = (0..scales)
            .map(|j| {
                let d = eps * 0.5f64.powi(j as i32);
                (BasePoint::Torus(ToralAutomorphism::along(t, d, dir)), d)
            })
            .collect();
        families.push(("generic".into(), generic));
    }
    let px = p.evaluate(&x)?;
    let mut out = Vec::new();
    for (family, pts) in families {
        let zs: Vec<BasePoint> = pts.iter().map(|q| q.0.clone()).collect();
        let vals = p.evaluate_many(&zs)?;
        let rows: Vec<ProbeRow> = pts
            .iter()
            .zip(&vals)
            .enumerate()
            .map(|(i, ((_, d), pz))| ProbeRow {
                scale: i,
                dist: *d,
                dk: (0..=max_order).map(|k| dk_surrogate(&px, pz, k)).collect(),
            })
            .collect();
        let dists: Vec<f64> = rows.iter().map(|r| r.dist).collect();
        let exponents = (0..=max_order)
            .map(|k| fit_slope(&dists, &rows.iter().map(|r| r.dk[k]).collect::<Vec<_>>()))
            .collect();
        let lipschitz_sup = rows.iter().map(|r| r.dk[0] / r.dist).fold(0.0, f64::max);
        out.push(ProbeFamily {
            family,
            rows,
            exponents,
            lipschitz_sup,
        });
    }
    Ok(RegularityReport {
        scales,
        max_order,
        families: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::{DiffeoField, Family, FieldSpec, Mode, Observable, SymbolTerm};
    use crate::fiber::FiberGrid;

    fn grid() -> FiberGrid {
        FiberGrid::new(256, 3).unwrap()
    }

    fn origin() -> BasePoint {
        BasePoint::Torus(crate::base::TorusPoint::rational(0.into(), 0.into()))
    }

    fn livsic_pair(sys: &BaseSystem) -> (Cocycle, Cocycle, Observable) {
        let phi = Observable::cos(0.05, [1, 0]);
        let psi = Observable::sin(0.03, [0, 1]);
        let a = Cocycle::rotation(phi.clone(), grid());
        let b = Cocycle::rotation(Observable::cohomologous(phi, psi.clone(), 0.0), grid());
        let _ = sys;
        (a, b, psi)
    }

    #[test]
    fn livsic_transfer_matches_closed_form() {
        let sys = BaseSystem::cat_map();
        let (a, b, psi) = livsic_pair(&sys);
        let pair = CocyclePair::new(&a, &b, &sys, HolonomyOptions::with_tol(1e-12)).unwrap();
        let x = origin();
        for h in sys.homoclinic_points(&x, 5).unwrap() {
            let t = transfer_routes(&pair, &x, &h).unwrap();
            // β = R_{φ - ψ∘f + ψ} and ψ(x) = 0 give P(y) = R_{ψ(y)}
            let oracle = CircleDiffeo::rotation(psi.eval(&sys, &h.point), grid());
            assert!(d0(&t.stable, &oracle) < 1e-9, "{}", d0(&t.stable, &oracle));
            assert!(d0(&t.unstable, &oracle) < 1e-9);
            assert!(
                su_consistency(&pair, &x, &h, 1e-7, Some((3, 1e-10)))
                    .unwrap()
                    .passed
            );
        }
        let same = CocyclePair::new(&a, &a, &sys, HolonomyOptions::default()).unwrap();
        let h = &sys.homoclinic_points(&x, 1).unwrap()[0];
        assert!(
            d0(
                &transfer_at_homoclinic(&same, &x, h).unwrap(),
                &CircleDiffeo::identity(grid())
            ) < 1e-14
        );
    }

    #[test]
    fn conjugate_pair_needs_poc() {
        let sys = BaseSystem::cat_map();
        let a = Cocycle::from_family(
            Family::Bump {
                angle: Observable::cos(0.1, [1, 0]),
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
        let p0 = DiffeoField::new(
            FieldSpec {
                angle: Observable::constant(0.3),
                weight: Observable::constant(0.03),
                modes: vec![Mode {
                    k: 2,
                    sin: 1.0,
                    cos: 0.0,
                }],
                inverse: false,
            },
            grid(),
        );
        let b = a.conjugate(&p0);
        let pair = CocyclePair::new(&a, &b, &sys, HolonomyOptions::with_tol(1e-11)).unwrap();
        let x = origin();
        let hs = sys.homoclinic_points(&x, 6).unwrap();
        assert!(matches!(
            su_consistency(&pair, &x, &hs[0], 1e-6, Some((2, 1e-9))),
            Err(Error::PocViolated { .. })
        ));
        let worst = hs
            .iter()
            .map(|h| su_consistency(&pair, &x, h, 1e-6, None).unwrap().deviation)
            .fold(0.0, f64::max);
        assert!(worst > 1e-3, "worst {worst}");
    }

    #[test]
    fn transfer_map_reconstructs_conjugacy() {
        let sys = BaseSystem::cat_map();
        let a = Cocycle::from_family(
            Family::Bump {
                angle: Observable::cos(0.05, [1, 0]),
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
        let p0 = DiffeoField::new(
            FieldSpec {
                angle: Observable::sin(0.1, [1, 1]),
                weight: Observable::constant(0.02),
                modes: vec![Mode {
                    k: 1,
                    sin: 0.0,
                    cos: 1.0,
                }],
                inverse: false,
            },
            grid(),
        );
        let b = a.conjugate(&p0);
        let x = origin();
        let anchor = p0.eval(&sys, &x).unwrap();
        let tm = TransferMap::new(
            a,
            b,
            sys.clone(),
            x.clone(),
            Some(anchor.clone()),
            HolonomyOptions::with_tol(1e-10),
        )
        .unwrap();
        assert_eq!(tm.evaluate(&x).unwrap(), anchor);
        for z in sys.sample_points(6, 2) {
            let pz = tm.evaluate(&z).unwrap();
            assert!(d0(&pz, &p0.eval(&sys, &z).unwrap()) < 1e-7);
            let other = tm.evaluate_along(&z, Leaf::Unstable).unwrap();
            assert!(d0(&pz, &other) < 1e-7);
        }
        let rep = cohomology_residual(&tm, 4).unwrap();
        assert!(rep.max_residual < 1e-7 && rep.max_residual >= rep.mean_residual);
        assert!(rep.spot_checks.iter().all(|s| s.max_residual < 1e-6));
    }

    fn sft() -> BaseSystem {
        BaseSystem::sft(vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]], 0.5).unwrap()
    }

    fn sym(terms: Vec<(i64, Vec<f64>)>) -> Observable {
        Observable::Symbols {
            terms: terms
                .into_iter()
                .map(|(index, values)| SymbolTerm { index, values })
                .collect(),
        }
    }

    #[test]
    fn period_reduction_and_promotion() {
        let sys = sft();
        let phi = sym(vec![
            (0, vec![0.01, -0.02, 0.03]),
            (1, vec![0.0, 0.015, -0.01]),
        ]);
        let psi = sym(vec![(0, vec![0.02, 0.0, -0.01])]);
        let a = Cocycle::rotation(phi.clone(), grid());
        let b = Cocycle::rotation(Observable::cohomologous(phi.clone(), psi, 0.0), grid());
        let x0 = BasePoint::Symbol(crate::base::SymbolPoint::periodic(&[0, 1], 3).unwrap());
        assert!(matches!(
            period_reduce(
                &a,
                &b,
                &sys,
                &BasePoint::Symbol(sys.sample_points(1, 1)[0].as_symbol().unwrap().clone())
            ),
            Err(Error::NotPeriodic(_))
        ));
        let red = period_reduce(&a, &b, &sys, &x0).unwrap();
        assert_eq!(red.n0, 2);
        assert!((red.sys.lambda() - sys.lambda().powi(2)).abs() < 1e-15);
        let tm = TransferMap::new(
            red.alpha.clone(),
            red.beta.clone(),
            red.sys.clone(),
            x0.clone(),
            None,
            HolonomyOptions::default(),
        )
        .unwrap();
        assert!(cohomology_residual(&tm, 6).unwrap().max_residual < 1e-9);
        let w = witness_points(&tm, DEFAULT_WITNESSES).unwrap();
        let rep = promote(&tm, &a, &b, &sys, &w, 1e-8, 6).unwrap();
        assert!(rep.passed, "{rep:?}");

        let half = Cocycle::rotation(
            Observable::cohomologous(phi, Observable::zero(), 0.5),
            grid(),
        );
        let red = period_reduce(&a, &half, &sys, &x0).unwrap();
        let tm = TransferMap::new(
            red.alpha,
            red.beta,
            red.sys,
            x0,
            None,
            HolonomyOptions::default(),
        )
        .unwrap();
        assert!(cohomology_residual(&tm, 6).unwrap().max_residual < 1e-9);
        let w = witness_points(&tm, DEFAULT_WITNESSES).unwrap();
        assert!(matches!(
            promote(&tm, &a, &half, &sys, &w, 1e-8, 6),
            Err(Error::WitnessFailed { .. })
        ));
    }

    #[test]
    fn probe_of_constant_and_abelian_transfer() {
        let sys = BaseSystem::cat_map();
        let (a, b, _) = livsic_pair(&sys);
        let tm = TransferMap::new(
            a.clone(),
            a.clone(),
            sys.clone(),
            origin(),
            None,
            HolonomyOptions::default(),
        )
        .unwrap();
        let rep = regularity_probe(&tm, 4).unwrap();
        assert!(rep.c0_exponents().is_empty());
        let tm =
            TransferMap::new(a, b, sys, origin(), None, HolonomyOptions::with_tol(1e-12)).unwrap();
        let rep = regularity_probe(&tm, 6).unwrap();
        assert_eq!(rep.families.len(), 3);
        for e in rep.c0_exponents() {
            assert!((e - 1.0).abs() < 0.15, "{rep:?}");
        }
    }
}
