//! Orientation-preserving circle diffeomorphisms.
//!
//! A diffeomorphism is stored through a lift `h: R -> R` with
//! `h(t + 1) = h(t) + 1`, sampled on a uniform grid of the unit interval as
//! the periodic displacement `u(t) = h(t) - t`. Values between grid nodes
//! come from a local degree-7 periodic interpolant; every operation
//! resamples onto the grid of its output.
//!
//! Two distances are provided: [`d0`], the sup of the circle distance between
//! images, and [`dk_surrogate`], the max of `d0` and the sup norms of the
//! first `k` derivatives of the difference of lifts. The latter is the
//! computable stand-in for the `C^k` path-length distance.

pub mod interp;
pub mod spectral;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use spectral::DerivativeMethod;

/// Grid size used when nothing else is configured.
pub const DEFAULT_GRID: usize = 2048;
/// Highest derivative tracked by default.
pub const DEFAULT_JET_ORDER: usize = 3;

/// Sampling parameters shared by all diffeomorphisms of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberGrid {
    pub grid_size: usize,
    pub jet_order: usize,
}

impl Default for FiberGrid {
    fn default() -> Self {
        FiberGrid {
            grid_size: DEFAULT_GRID,
            jet_order: DEFAULT_JET_ORDER,
        }
    }
}

impl FiberGrid {
    pub fn new(grid_size: usize, jet_order: usize) -> Result<Self> {
        if !grid_size.is_power_of_two() || grid_size < 16 {
            return Err(Error::config(
                "fiber.grid_size",
                "must be a power of two >= 16",
            ));
        }
        if jet_order < 1 {
            return Err(Error::config("fiber.jet_order", "must be >= 1"));
        }
        Ok(FiberGrid {
            grid_size,
            jet_order,
        })
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.grid_size as f64
    }
}

/// Circle distance between two real numbers read modulo 1.
#[inline]
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = a - b;
    (d - d.round()).abs()
}

/// An orientation-preserving circle diffeomorphism sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleDiffeo {
    disp: Vec<f64>,
    jet_order: usize,
}

/// Sup norms of derivatives of a diffeomorphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetNorms {
    /// `[‖Dh‖, ‖D²h‖, …, ‖D^k h‖]`.
    pub d_norms: Vec<f64>,
    /// `‖D(h⁻¹)‖`.
    pub inv_d_norm: f64,
    pub method: DerivativeMethod,
}

/// Flat serialisation used in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleDiffeoRecord {
    pub grid_size: usize,
    pub jet_order: usize,
    pub lift_samples: Vec<f64>,
}

impl CircleDiffeo {
    pub fn identity(grid: FiberGrid) -> Self {
        CircleDiffeo {
            disp: vec![0.0; grid.grid_size],
            jet_order: grid.jet_order,
        }
    }

    /// Rotation `t ↦ t + a`.
    pub fn rotation(a: f64, grid: FiberGrid) -> Self {
        let mut d = CircleDiffeo {
            disp: vec![a; grid.grid_size],
            jet_order: grid.jet_order,
        };
        d.normalize();
        d
    }

    /// Builds `t ↦ t + u(t)` from a 1-periodic displacement function.
    pub fn from_displacement_fn(grid: FiberGrid, u: impl Fn(f64) -> f64) -> Result<Self> {
        let disp = (0..grid.grid_size).map(|i| u(grid.node(i))).collect();
        Self::from_displacement(disp, grid.jet_order)
    }

    /// Builds a diffeomorphism from displacement samples `h(i/m) - i/m`.
    pub fn from_displacement(disp: Vec<f64>, jet_order: usize) -> Result<Self> {
        let mut d = CircleDiffeo { disp, jet_order };
        d.check_monotone()?;
        d.normalize();
        Ok(d)
    }

    /// Builds a diffeomorphism from lift samples `h(i/m)`.
    pub fn from_lift_samples(lift: &[f64], jet_order: usize) -> Result<Self> {
        let m = lift.len() as f64;
        let disp = lift
            .iter()
            .enumerate()
            .map(|(i, &h)| h - i as f64 / m)
            .collect();
        Self::from_displacement(disp, jet_order)
    }

    pub fn grid_size(&self) -> usize {
        self.disp.len()
    }

    pub fn jet_order(&self) -> usize {
        self.jet_order
    }

    pub fn grid(&self) -> FiberGrid {
        FiberGrid {
            grid_size: self.disp.len(),
            jet_order: self.jet_order,
        }
    }

    /// Displacement samples `u(i/m)`.
    pub fn displacement(&self) -> &[f64] {
        &self.disp
    }

    /// Lift samples `h(i/m)`.
    pub fn lift_samples(&self) -> Vec<f64> {
        let m = self.disp.len() as f64;
        self.disp
            .iter()
            .enumerate()
            .map(|(i, &u)| i as f64 / m + u)
            .collect()
    }

    pub fn to_record(&self) -> CircleDiffeoRecord {
        CircleDiffeoRecord {
            grid_size: self.grid_size(),
            jet_order: self.jet_order,
            lift_samples: self.lift_samples(),
        }
    }

    pub fn from_record(rec: &CircleDiffeoRecord) -> Result<Self> {
        if rec.lift_samples.len() != rec.grid_size {
            return Err(Error::config(
                "grid_size",
                "does not match number of lift samples",
            ));
        }
        Self::from_lift_samples(&rec.lift_samples, rec.jet_order)
    }

    /// Evaluates the lift at any real `x`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        x + interp::eval_periodic(&self.disp, x)
    }

    /// Whether the map is a rotation (constant displacement).
    pub fn is_rotation(&self) -> bool {
        let u0 = self.disp[0];
        self.disp.iter().all(|&u| u == u0)
    }

    fn normalize(&mut self) {
        let shift = (self.disp[0] + 0.5).floor();
        if shift != 0.0 {
            for u in &mut self.disp {
                *u -= shift;
            }
        }
    }

    /// Smallest lift increment between neighbouring grid nodes.
    pub fn min_step(&self) -> f64 {
        let m = self.disp.len();
        let h = 1.0 / m as f64;
        (0..m)
            .map(|i| h + self.disp[(i + 1) % m] - self.disp[i])
            .fold(f64::INFINITY, f64::min)
    }

    fn check_monotone(&self) -> Result<()> {
        let min_step = self.min_step();
        if !(min_step > 0.0) || self.disp.iter().any(|u| !u.is_finite()) {
            return Err(Error::MonotonicityLost { min_step });
        }
        Ok(())
    }

    /// `self ∘ inner`, sampled on the grid of `inner`.
    pub fn compose(&self, inner: &CircleDiffeo) -> Result<CircleDiffeo> {
        let m = inner.disp.len();
        let disp: Vec<f64> = if self.is_rotation() {
            let c = self.disp[0];
            inner.disp.iter().map(|&u| u + c).collect()
        } else {
            inner
                .disp
                .iter()
                .enumerate()
                .map(|(i, &u)| u + interp::eval_periodic(&self.disp, i as f64 / m as f64 + u))
                .collect()
        };
        let mut out = CircleDiffeo {
            disp,
            jet_order: inner.jet_order.max(self.jet_order),
        };
        out.check_monotone()?;
        out.normalize();
        Ok(out)
    }

    /// The inverse diffeomorphism, found node by node with a bracketed
    /// Newton iteration on the interpolated lift.
    pub fn inverse(&self) -> CircleDiffeo {
        if self.is_rotation() {
            let mut out = CircleDiffeo {
                disp: vec![-self.disp[0]; self.disp.len()],
                jet_order: self.jet_order,
            };
            out.normalize();
            return out;
        }
        let m = self.disp.len();
        let umin = self.disp.iter().cloned().fold(f64::INFINITY, f64::min);
        let umax = self.disp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let slope = spectral::finite_differences(&self.disp, 1)
            .pop()
            .unwrap_or_default();
        let pad = 4.0 / m as f64;
        let mut prev: Option<f64> = None;
        let disp = (0..m)
            .map(|i| {
                let t = i as f64 / m as f64;
                let s = self.solve(t, t - umax - pad, t - umin + pad, prev, &slope);
                prev = Some(s - t);
                s - t
            })
            .collect();
        let mut out = CircleDiffeo {
            disp,
            jet_order: self.jet_order,
        };
        out.normalize();
        out
    }

    /// Solves `eval(s) = target` for `s` in `[lo, hi]`.
    fn solve(
        &self,
        target: f64,
        mut lo: f64,
        mut hi: f64,
        guess: Option<f64>,
        slope: &[f64],
    ) -> f64 {
        let f = |s: f64| self.eval(s) - target;
        let mut s = match guess {
            Some(v) => (target + v).clamp(lo, hi),
            None => 0.5 * (lo + hi),
        };
        // a few bisection steps only when no warm start is available
        if guess.is_none() {
            for _ in 0..8 {
                if f(s) > 0.0 {
                    hi = s;
                } else {
                    lo = s;
                }
                s = 0.5 * (lo + hi);
            }
        }
        for _ in 0..100 {
            let fs = f(s);
            if fs.abs() <= 1e-15 {
                return s;
            }
            if fs > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let deriv = 1.0 + interp::eval_periodic(slope, s);
            let mut next = s - fs / deriv;
            if !(next > lo && next < hi) || !deriv.is_finite() || deriv <= 0.0 {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-16 * (1.0 + s.abs()) || hi - lo <= 1e-15 {
                return next;
            }
            s = next;
        }
        s
    }

    /// Derivative samples of the lift: element `j-1` is `D^j h` on the grid.
    pub fn lift_derivatives(&self, k: usize) -> (Vec<Vec<f64>>, DerivativeMethod) {
        let (mut d, method) = spectral::derivatives(&self.disp, k);
        if let Some(first) = d.first_mut() {
            for v in first.iter_mut() {
                *v += 1.0;
            }
        }
        (d, method)
    }

    /// Sup norms of `D^1 h … D^k h` and of `D(h⁻¹)`.
    ///
    /// # Panics
    /// If `k` exceeds the tracked jet order.
    pub fn jet_norms(&self, k: usize) -> JetNorms {
        assert!(
            k <= self.jet_order,
            "jet order {k} exceeds tracked order {}",
            self.jet_order
        );
        let (d, method) = self.lift_derivatives(k.max(1));
        let d_norms = d
            .iter()
            .take(k)
            .map(|s| interp::refined_max(s, f64::abs))
            .collect();
        let min_slope = -interp::refined_max(&d[0], |v| -v);
        JetNorms {
            d_norms,
            inv_d_norm: 1.0 / min_slope,
            method,
        }
    }
}

/// `sup_t dist_{S¹}(g(t), h(t))`.
pub fn d0(g: &CircleDiffeo, h: &CircleDiffeo) -> f64 {
    let diff = lift_difference(g, h);
    interp::refined_max(&diff, |v| (v - v.round()).abs())
}

fn lift_difference(g: &CircleDiffeo, h: &CircleDiffeo) -> Vec<f64> {
    let m = g.grid_size().max(h.grid_size());
    let a = interp::resample(&g.disp, m);
    let b = interp::resample(&h.disp, m);
    a.iter().zip(&b).map(|(x, y)| x - y).collect()
}

/// Jet sup-metric: max over `j = 0..=k` of the sup norm of the `j`-th
/// derivative of `g - h` (circle distance for `j = 0`).
///
/// # Panics
/// If `k` exceeds the jet order tracked by either argument.
pub fn dk_surrogate(g: &CircleDiffeo, h: &CircleDiffeo, k: usize) -> f64 {
    dk_components(g, h, k).into_iter().fold(0.0, f64::max)
}

/// The individual terms of [`dk_surrogate`], indexed by derivative order.
pub fn dk_components(g: &CircleDiffeo, h: &CircleDiffeo, k: usize) -> Vec<f64> {
    assert!(
        k <= g.jet_order.min(h.jet_order),
        "order {k} exceeds tracked jet order"
    );
    let diff = lift_difference(g, h);
    let mut out = vec![interp::refined_max(&diff, |v| (v - v.round()).abs())];
    if k > 0 {
        let (d, _) = spectral::derivatives(&diff, k);
        out.extend(d.iter().map(|s| interp::refined_max(s, f64::abs)));
    }
    out
}

/// Free-function form of [`CircleDiffeo::compose`]: `g ∘ h`.
pub fn compose(g: &CircleDiffeo, h: &CircleDiffeo) -> Result<CircleDiffeo> {
    g.compose(h)
}

/// Free-function form of [`CircleDiffeo::inverse`].
pub fn invert(h: &CircleDiffeo) -> CircleDiffeo {
    h.inverse()
}

/// Convenience: `t + amplitude * sin(2π t)` (monotone for `|amplitude| < 1/2π`).
pub fn sine_bump(amplitude: f64, grid: FiberGrid) -> Result<CircleDiffeo> {
    CircleDiffeo::from_displacement_fn(grid, |t| amplitude * (std::f64::consts::TAU * t).sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn grid() -> FiberGrid {
        FiberGrid::default()
    }

    fn newton_inverse(amp: f64, t: f64) -> f64 {
        let mut s = t;
        for _ in 0..100 {
            let f = s + amp * (TAU * s).sin() - t;
            let df = 1.0 + amp * TAU * (TAU * s).cos();
            s -= f / df;
        }
        s
    }

    #[test]
    fn rotations_add() {
        let a = CircleDiffeo::rotation(0.25, grid());
        let b = CircleDiffeo::rotation(0.5, grid());
        let c = a.compose(&b).unwrap();
        assert!(d0(&c, &CircleDiffeo::rotation(0.75, grid())) < 1e-15);
        assert!(c.is_rotation());
    }

    #[test]
    fn identity_is_neutral_exactly() {
        let h = sine_bump(0.1, grid()).unwrap();
        let id = CircleDiffeo::identity(grid());
        assert_eq!(h.compose(&id).unwrap(), h);
        assert_eq!(id.compose(&h).unwrap(), h);
    }

    #[test]
    fn inverse_round_trip() {
        let h = sine_bump(0.1, grid()).unwrap();
        let hi = h.inverse();
        let id = CircleDiffeo::identity(grid());
        assert!(d0(&h.compose(&hi).unwrap(), &id) < 1e-9);
        assert!(d0(&hi.compose(&h).unwrap(), &id) < 1e-9);
        // against an independent per-point Newton solve
        for k in 0..10 {
            let t = 0.0731 + 0.0977 * k as f64;
            assert!((hi.eval(t) - newton_inverse(0.1, t)).abs() < 1e-10);
        }
        assert_eq!(id.inverse(), id);
        let r = CircleDiffeo::rotation(0.3, grid()).inverse();
        assert!(d0(&r, &CircleDiffeo::rotation(-0.3, grid())) < 1e-15);
    }

    #[test]
    fn jet_norms_of_sine_bump() {
        let h = sine_bump(0.1, grid()).unwrap();
        let j = h.jet_norms(3);
        assert!((j.d_norms[0] - (1.0 + 0.2 * PI)).abs() < 1e-9);
        assert!((j.d_norms[1] - 0.1 * TAU * TAU).abs() < 1e-6);
        assert!((j.inv_d_norm - 1.0 / (1.0 - 0.2 * PI)).abs() < 1e-8);
        assert!(j.d_norms[0] * j.inv_d_norm >= 1.0);
        let id = CircleDiffeo::identity(grid()).jet_norms(3);
        assert_eq!(id.d_norms[0], 1.0);
        assert!(id.d_norms[1..].iter().all(|&v| v == 0.0));
        let r = CircleDiffeo::rotation(0.4, grid()).jet_norms(3);
        assert!((r.d_norms[0] - 1.0).abs() < 1e-14);
        assert!(r.d_norms[1..].iter().all(|&v| v < 1e-12));
    }

    #[test]
    fn distances() {
        let a = CircleDiffeo::rotation(0.1, grid());
        let b = CircleDiffeo::rotation(0.3, grid());
        assert!((d0(&a, &b) - 0.2).abs() < 1e-15);
        assert_eq!(d0(&a, &a), 0.0);
        let c = CircleDiffeo::rotation(0.95, grid());
        assert!((d0(&a, &c) - 0.15).abs() < 1e-14);
        let id = CircleDiffeo::identity(grid());
        for k in 0..=3 {
            assert_eq!(dk_surrogate(&id, &id, k), 0.0);
            assert!((dk_surrogate(&b, &id, k) - 0.3).abs() < 1e-14);
        }
        let eps = 1e-3;
        let h = sine_bump(eps, grid()).unwrap();
        assert!((dk_surrogate(&h, &id, 1) - TAU * eps).abs() < 1e-12);
        assert!((dk_surrogate(&h, &id, 0) - eps).abs() < 1e-15);
    }

    #[test]
    fn monotonicity_is_enforced() {
        let bad = CircleDiffeo::from_displacement_fn(grid(), |t| 0.3 * (TAU * t).sin());
        assert!(matches!(bad, Err(Error::MonotonicityLost { .. })));
    }

    #[test]
    fn record_round_trip() {
        let h = sine_bump(0.05, FiberGrid::new(64, 2).unwrap()).unwrap();
        let rec = h.to_record();
        let json = serde_json::to_string(&rec).unwrap();
        let back: CircleDiffeoRecord = serde_json::from_str(&json).unwrap();
        let h2 = CircleDiffeo::from_record(&back).unwrap();
        assert!(d0(&h, &h2) < 1e-15);
    }
}
