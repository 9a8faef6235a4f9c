//! Local high-order interpolation of 1-periodic functions sampled on a
//! uniform grid, plus refined extremum search on the interpolant.

/// Stencil width of the local interpolant (degree `STENCIL - 1`).
pub const STENCIL: usize = 8;
const LEFT: isize = 3;

/// Barycentric weights `(-1)^k C(7, k)` for equispaced nodes.
const WEIGHTS: [f64; STENCIL] = [1.0, -7.0, 21.0, -35.0, 35.0, -21.0, 7.0, -1.0];

#[inline]
fn wrap(i: isize, m: usize) -> usize {
    i.rem_euclid(m as isize) as usize
}

/// Evaluates the periodic interpolant of `samples` (values at `i/m`) at `x`.
///
/// Grid nodes are reproduced exactly.
#[inline]
pub fn eval_periodic(samples: &[f64], x: f64) -> f64 {
    let m = samples.len();
    let s = x * m as f64;
    let base = s.floor();
    let frac = s - base;
    let i0 = base as isize;
    if frac == 0.0 {
        return samples[wrap(i0, m)];
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, w) in WEIGHTS.iter().enumerate() {
        let node = k as isize - LEFT;
        let c = w / (frac - node as f64);
        num += c * samples[wrap(i0 + node, m)];
        den += c;
    }
    num / den
}

/// Resamples a periodic sample vector onto a grid of `new_len` points.
pub fn resample(samples: &[f64], new_len: usize) -> Vec<f64> {
    if new_len == samples.len() {
        return samples.to_vec();
    }
    (0..new_len)
        .map(|i| eval_periodic(samples, i as f64 / new_len as f64))
        .collect()
}

/// Maximises `score(p(x))` over the circle, where `p` interpolates `samples`.
///
/// Returns the maximal score; the grid maximum is refined by golden-section
/// search on the two neighbouring cells.
pub fn refined_max<F: Fn(f64) -> f64>(samples: &[f64], score: F) -> f64 {
    let m = samples.len();
    let (imax, grid_best) = samples
        .iter()
        .enumerate()
        .map(|(i, &v)| (i, score(v)))
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, s)| if s > acc.1 { (i, s) } else { acc },
        );
    if m < STENCIL || !grid_best.is_finite() {
        return grid_best;
    }
    let h = 1.0 / m as f64;
    let centre = imax as f64 * h;
    let f = |x: f64| score(eval_periodic(samples, x));
    let mut best = grid_best;
    for (lo, hi) in [(centre - h, centre), (centre, centre + h)] {
        best = best.max(golden_max(&f, lo, hi));
    }
    best
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..48 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    fc.max(fd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn sampled(m: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..m).map(|i| f(i as f64 / m as f64)).collect()
    }

    #[test]
    fn reproduces_nodes_and_constants() {
        let s = sampled(64, |t| (TAU * t).sin());
        for (i, &v) in s.iter().enumerate() {
            assert_eq!(eval_periodic(&s, i as f64 / 64.0), v);
        }
        let c = vec![0.3; 32];
        for x in [0.01, 0.377, -2.9, 7.123] {
            assert!((eval_periodic(&c, x) - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn high_order_accuracy_on_smooth_data() {
        let f = |t: f64| 0.1 * (TAU * t).sin() + 0.05 * (2.0 * TAU * t).cos();
        let s = sampled(256, f);
        let worst = (0..997)
            .map(|k| {
                let x = k as f64 / 997.0 + 0.000_37;
                (eval_periodic(&s, x) - f(x)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "worst {worst:e}");
    }

    #[test]
    fn refined_max_finds_off_grid_peak() {
        let f = |t: f64| (TAU * (t - 0.0013)).cos();
        let s = sampled(128, f);
        let grid = s.iter().cloned().fold(f64::MIN, f64::max);
        let refined = refined_max(&s, |v| v);
        assert!(grid < 1.0 - 1e-5);
        assert!((refined - 1.0).abs() < 1e-12, "refined {refined}");
    }
}
