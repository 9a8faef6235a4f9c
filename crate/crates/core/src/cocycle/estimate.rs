//! Norm, Hölder and domination estimators, and periodic-data comparison.

use serde::{Deserialize, Serialize};

use super::Cocycle;
use crate::base::{BasePoint, BaseSystem, Leaf};
use crate::error::{Error, Result};
use crate::exec;
use crate::fiber::{d0, dk_surrogate, CircleDiffeo};

/// Base points used by default for `ρ` estimation.
pub const DEFAULT_RHO_SAMPLES: usize = 4096;
/// Periodic points up to this period are added to every `ρ` sample.
pub const RHO_PERIODIC_MAX: u32 = 6;
/// Periodic points are skipped once a period has more than this many.
const RHO_PERIODIC_CAP: usize = 2048;
/// Pairs used by default for the Hölder constant.
pub const DEFAULT_HOLDER_PAIRS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoEstimate {
    /// `max ‖Dα‖, ‖Dα⁻¹‖` over the sample.
    pub rho: f64,
    /// `max d0(α(x), Id)` over the sample.
    pub rho0: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub rho: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub holder_c2: f64,
    pub lambda: f64,
    pub nu: f64,
    pub t: f64,
    /// `ρ^t λ^ν`.
    pub product: f64,
    pub satisfied: bool,
    /// `1 - ρ^t λ^ν`.
    pub margin: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocEntry {
    pub period: u32,
    pub point: String,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocReport {
    pub n_max: u32,
    pub tol: f64,
    pub max_deviation: f64,
    /// Maximal deviation per period `1..=n_max`.
    pub per_period: Vec<f64>,
    pub entries: Vec<PocEntry>,
    pub passed: bool,
}

fn rho_points(sys: &BaseSystem, samples: usize) -> Vec<BasePoint> {
    let mut pts = sys.sample_points(samples, 0);
    for n in 1..=RHO_PERIODIC_MAX {
        match sys.periodic_points(n) {
            Ok(p) if p.len() <= RHO_PERIODIC_CAP => pts.extend(p),
            _ => break,
        }
    }
    pts
}

/// `ρ` and `ρ0` over a low-discrepancy sample plus low-period periodic points.
pub fn estimate_rho_full(a: &Cocycle, sys: &BaseSystem, samples: usize) -> Result<RhoEstimate> {
    let pts = rho_points(sys, samples.max(1));
    let id = CircleDiffeo::identity(a.grid());
    let vals = exec::try_map(&pts, |x| {
        let g = a.generator(sys, x)?;
        let j = g.jet_norms(1);
        Ok::<_, Error>((j.d_norms[0].max(j.inv_d_norm), d0(&g, &id)))
    })?;
    let rho = vals.iter().map(|v| v.0).fold(1.0, f64::max);
    let rho0 = vals.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(RhoEstimate {
        rho,
        rho0,
        points: pts.len(),
    })
}

/// Empirical `ρ = max_x max(‖Dα(x)‖, ‖Dα(x)⁻¹‖)`.
pub fn estimate_rho(a: &Cocycle, sys: &BaseSystem, samples: usize) -> Result<f64> {
    estimate_rho_full(a, sys, samples).map(|r| r.rho)
}

fn holder_pairs(sys: &BaseSystem, count: usize) -> Vec<(BasePoint, BasePoint, f64)> {
    let xs = sys.sample_points(count + 1, 11);
    if sys.is_toral() {
        (0..count)
            .filter_map(|i| {
                let delta = 10f64.powi(-(1 + (i % 3) as i32));
                let theta = std::f64::consts::TAU * ((i as f64 * 0.618_033_988_749_895) % 1.0);
                let c = xs[i].as_torus()?.coords();
                let y = BasePoint::torus(c[0] + delta * theta.cos(), c[1] + delta * theta.sin());
                Some((xs[i].clone(), y, delta))
            })
            .collect()
    } else {
        let mut out = Vec::with_capacity(2 * count);
        for i in 0..count {
            let (x, y) = (&xs[i], &xs[i + 1]);
            out.push((x.clone(), y.clone(), sys.dist(x, y)));
            if let Ok(z) = sys.bracket(x, y) {
                if let Ok(pair) = sys.leaf_pair(x, &z, Leaf::Stable) {
                    let d = sys.pair_dist(&pair);
                    out.push((x.clone(), z, d));
                }
            }
        }
        out.retain(|p| p.2 > 0.0);
        out
    }
}

/// Empirical Hölder constant `sup dk(α(x), α(y)) / d(x,y)^ν`.
pub fn estimate_holder(
    a: &Cocycle,
    sys: &BaseSystem,
    pair_samples: usize,
    k: usize,
) -> Result<f64> {
    let pairs = holder_pairs(sys, pair_samples.max(1));
    let nu = a.nu();
    let ratios = exec::try_map(&pairs, |(x, y, d)| {
        let gx = a.generator(sys, x)?;
        let gy = a.generator(sys, y)?;
        Ok::<_, Error>(dk_surrogate(&gx, &gy, k) / d.powf(nu))
    })?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// Domination test `ρ^t λ^ν < 1` with the default sample sizes.
pub fn check_domination(a: &Cocycle, sys: &BaseSystem, t: f64) -> Result<DominationReport> {
    check_domination_with(a, sys, t, DEFAULT_RHO_SAMPLES, DEFAULT_HOLDER_PAIRS)
}

pub fn check_domination_with(
    a: &Cocycle,
    sys: &BaseSystem,
    t: f64,
    samples: usize,
    holder_pairs: usize,
) -> Result<DominationReport> {
    if !(t > 0.0) {
        return Err(Error::config("t", "domination order must be positive"));
    }
    let est = estimate_rho_full(a, sys, samples)?;
    let holder_c2 = estimate_holder(a, sys, holder_pairs, 0)?;
    let lambda = sys.lambda();
    let nu = a.nu();
    let product = est.rho.powf(t) * lambda.powf(nu);
    let margin = 1.0 - product;
    Ok(DominationReport {
        rho: est.rho,
        rho0: est.rho0,
        rho1: est.rho,
        holder_c2,
        lambda,
        nu,
        t,
        product,
        satisfied: margin > 0.0,
        margin,
        samples: est.points,
    })
}

/// Compares `α^{(n)}(p)` and `β^{(n)}(p)` in `d0` over `Fix(F^n)`, `n ≤ n_max`.
pub fn poc_check(
    a: &Cocycle,
    b: &Cocycle,
    sys: &BaseSystem,
    n_max: u32,
    tol: f64,
) -> Result<PocReport> {
    let mut work = Vec::new();
    for n in 1..=n_max {
        for p in sys.periodic_points(n)? {
            work.push((n, p));
        }
    }
    let devs = exec::try_map(&work, |(n, p)| {
        let an = a.iterate(sys, p, *n as i64)?;
        let bn = b.iterate(sys, p, *n as i64)?;
        Ok::<_, Error>(d0(&an, &bn))
    })?;
    let mut per_period = vec![0.0f64; n_max as usize];
    let entries: Vec<PocEntry> = work
        .iter()
        .zip(&devs)
        .map(|((n, p), &d)| {
            let slot = &mut per_period[*n as usize - 1];
            *slot = slot.max(d);
            PocEntry {
                period: *n,
                point: p.label(),
                deviation: d,
            }
        })
        .collect();
    let max_deviation = devs.iter().cloned().fold(0.0, f64::max);
    Ok(PocReport {
        n_max,
        tol,
        max_deviation,
        per_period,
        entries,
        passed: max_deviation <= tol,
    })
}
