//! Derivatives of periodic sample vectors.

use std::cell::RefCell;
use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// How derivative samples were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMethod {
    Spectral,
    FiniteDifference,
}

/// Relative spectral mass allowed in the top eighth of the spectrum before
/// falling back to finite differences.
const RESOLUTION_THRESHOLD: f64 = 1e-9;

fn filter(k: usize, half: usize) -> f64 {
    // exponential filter, order 16; leaves the lower ~60% of modes untouched
    let eta = k as f64 / half as f64;
    (-36.0 * eta.powi(16)).exp()
}

fn wavenumber(i: usize, m: usize) -> isize {
    if i <= m / 2 {
        i as isize
    } else {
        i as isize - m as isize
    }
}

fn forward(samples: &[f64]) -> Vec<Complex<f64>> {
    let m = samples.len();
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(m).process(&mut buf));
    buf
}

fn inverse(mut buf: Vec<Complex<f64>>) -> Vec<f64> {
    let m = buf.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(m).process(&mut buf));
    let scale = 1.0 / m as f64;
    buf.into_iter().map(|c| c.re * scale).collect()
}

/// Whether the spectrum of `samples` has decayed enough for spectral
/// differentiation to be trusted.
pub fn is_resolved(samples: &[f64]) -> bool {
    let m = samples.len();
    if m < 16 {
        return false;
    }
    let coeffs = forward(samples);
    resolved_from(&coeffs)
}

fn resolved_from(coeffs: &[Complex<f64>]) -> bool {
    let m = coeffs.len();
    let half = m / 2;
    let mut peak: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for (i, c) in coeffs.iter().enumerate().skip(1) {
        let k = wavenumber(i, m).unsigned_abs();
        let a = c.norm();
        peak = peak.max(a);
        if k * 8 >= half * 7 {
            tail = tail.max(a);
        }
    }
    if peak <= 1e-14 * m as f64 {
        return true;
    }
    tail <= RESOLUTION_THRESHOLD * peak
}

/// Derivatives of orders `1..=order` of the periodic function sampled by
/// `samples` on `[0,1)`. Element `j-1` holds the `j`-th derivative samples.
pub fn derivatives(samples: &[f64], order: usize) -> (Vec<Vec<f64>>, DerivativeMethod) {
    if order == 0 {
        return (Vec::new(), DerivativeMethod::Spectral);
    }
    let m = samples.len();
    if m >= 16 {
        let coeffs = forward(samples);
        if resolved_from(&coeffs) {
            let half = m / 2;
            let out = (1..=order)
                .map(|j| {
                    let buf = coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| {
                            let k = wavenumber(i, m);
                            if j % 2 == 1 && m.is_multiple_of(2) && i == half {
                                return Complex::new(0.0, 0.0);
                            }
                            let ik = Complex::new(0.0, TAU * k as f64);
                            c * ik.powu(j as u32) * filter(k.unsigned_abs(), half)
                        })
                        .collect();
                    inverse(buf)
                })
                .collect();
            return (out, DerivativeMethod::Spectral);
        }
    }
    (
        finite_differences(samples, order),
        DerivativeMethod::FiniteDifference,
    )
}

/// Fourth-order central differences; orders above three are obtained by
/// repeated first differences.
pub fn finite_differences(samples: &[f64], order: usize) -> Vec<Vec<f64>> {
    let m = samples.len();
    let h = 1.0 / m as f64;
    let at = |v: &[f64], i: usize, o: isize| v[(i as isize + o).rem_euclid(m as isize) as usize];
    let d1 = |v: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|i| {
                (-at(v, i, 2) + 8.0 * at(v, i, 1) - 8.0 * at(v, i, -1) + at(v, i, -2)) / (12.0 * h)
            })
            .collect()
    };
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(order);
    for j in 1..=order {
        let next = match j {
            1 => d1(samples),
            2 => (0..m)
                .map(|i| {
                    (-at(samples, i, 2) + 16.0 * at(samples, i, 1) - 30.0 * at(samples, i, 0)
                        + 16.0 * at(samples, i, -1)
                        - at(samples, i, -2))
                        / (12.0 * h * h)
                })
                .collect(),
            3 => (0..m)
                .map(|i| {
                    (-at(samples, i, 3) + 8.0 * at(samples, i, 2) - 13.0 * at(samples, i, 1)
                        + 13.0 * at(samples, i, -1)
                        - 8.0 * at(samples, i, -2)
                        + at(samples, i, -3))
                        / (8.0 * h * h * h)
                })
                .collect(),
            _ => d1(&out[j - 2]),
        };
        out.push(next);
    }
    out
}
