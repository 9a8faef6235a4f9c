//! Hyperbolic automorphisms of the 2-torus.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = Ratio<i64>;

/// Default absolute tolerance for comparing torus points modulo 1.
pub const POINT_TOLERANCE: f64 = 1e-12;

#[inline]
pub(crate) fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[inline]
fn qfrac(q: Q) -> Q {
    q - q.floor()
}

#[inline]
fn qf64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// A point of `R²/Z²`, optionally carrying an exact rational representative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    exact: Option<[(i64, i64); 2]>,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Self {
        TorusPoint {
            coords: [frac(x), frac(y)],
            exact: None,
        }
    }

    /// Exact point `(a/b, c/d)` reduced modulo 1.
    pub fn rational(x: Q, y: Q) -> Self {
        let (x, y) = (qfrac(x), qfrac(y));
        TorusPoint {
            coords: [qf64(x), qf64(y)],
            exact: Some([(*x.numer(), *x.denom()), (*y.numer(), *y.denom())]),
        }
    }

    pub fn coords(&self) -> [f64; 2] {
        self.coords
    }

    pub fn exact(&self) -> Option<[Q; 2]> {
        self.exact
            .map(|[(a, b), (c, d)]| [Q::new(a, b), Q::new(c, d)])
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Equality modulo 1 within `tol` (exact comparison when both points are
    /// rational).
    pub fn same_as(&self, other: &TorusPoint, tol: f64) -> bool {
        if let (Some(a), Some(b)) = (self.exact(), other.exact()) {
            return a == b;
        }
        self.coords
            .iter()
            .zip(other.coords.iter())
            .all(|(a, b)| crate::fiber::circle_dist(*a, *b) <= tol)
    }

    fn translate(&self, v: [f64; 2]) -> TorusPoint {
        TorusPoint::new(self.coords[0] + v[0], self.coords[1] + v[1])
    }
}

impl PartialEq for TorusPoint {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other, POINT_TOLERANCE)
    }
}

/// Linear algebra of a hyperbolic matrix in `GL(2, Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToralAutomorphism {
    matrix: [[i64; 2]; 2],
    det: i64,
    /// Signed eigenvalue of modulus < 1.
    pub(crate) eig_s: f64,
    /// Signed eigenvalue of modulus > 1.
    pub(crate) eig_u: f64,
    /// Unit eigenvectors.
    pub(crate) e_s: [f64; 2],
    pub(crate) e_u: [f64; 2],
    /// Inverse of the matrix with columns `e_s, e_u`.
    basis_inv: [[f64; 2]; 2],
}

fn mat_mul(a: [[i64; 2]; 2], b: [[i64; 2]; 2]) -> [[i64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

fn spectral_norm(m: [[f64; 2]; 2]) -> f64 {
    // largest singular value of a 2x2 matrix
    let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
    let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
    let d = m[0][1] * m[0][1] + m[1][1] * m[1][1];
    let tr = a + d;
    let det = a * d - b * b;
    (0.5 * (tr + (tr * tr - 4.0 * det).max(0.0).sqrt())).sqrt()
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.signum() * a, a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - (a.div_euclid(b)) * y)
    }
}

impl ToralAutomorphism {
    pub fn new(matrix: [[i64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, d]] = matrix;
        let det = a * d - b * c;
        if det.abs() != 1 {
            return Err(Error::InvalidSystem(format!("determinant {det} is not ±1")));
        }
        let tr = (a + d) as f64;
        let disc = tr * tr - 4.0 * det as f64;
        if disc <= 0.0 {
            return Err(Error::InvalidSystem("eigenvalues are not real".into()));
        }
        let r1 = 0.5 * (tr + disc.sqrt());
        let r2 = 0.5 * (tr - disc.sqrt());
        let (eig_u, eig_s) = if r1.abs() > r2.abs() {
            (r1, r2)
        } else {
            (r2, r1)
        };
        if (eig_s.abs() - 1.0).abs() < 1e-12 || (eig_u.abs() - 1.0).abs() < 1e-12 {
            return Err(Error::InvalidSystem("eigenvalue on the unit circle".into()));
        }
        let eigvec = |l: f64| {
            let v1 = [b as f64, l - a as f64];
            let v2 = [l - d as f64, c as f64];
            let v = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) {
                unit(v1)
            } else {
                unit(v2)
            };
            // sign convention: first nonzero component positive
            if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
                [-v[0], -v[1]]
            } else {
                v
            }
        };
        let e_s = eigvec(eig_s);
        let e_u = eigvec(eig_u);
        let bdet = e_s[0] * e_u[1] - e_u[0] * e_s[1];
        let basis_inv = [
            [e_u[1] / bdet, -e_u[0] / bdet],
            [-e_s[1] / bdet, e_s[0] / bdet],
        ];
        Ok(ToralAutomorphism {
            matrix,
            det,
            eig_s,
            eig_u,
            e_s,
            e_u,
            basis_inv,
        })
    }

    pub fn matrix(&self) -> [[i64; 2]; 2] {
        self.matrix
    }

    pub fn inverse_matrix(&self) -> [[i64; 2]; 2] {
        let [[a, b], [c, d]] = self.matrix;
        let s = self.det; // inverse of ±1 is itself
        [[s * d, -s * b], [-s * c, s * a]]
    }

    /// `A^n` for `n ≥ 0`, `A^{-|n|}` otherwise.
    pub fn power(&self, n: i64) -> [[i64; 2]; 2] {
        let base = if n >= 0 {
            self.matrix
        } else {
            self.inverse_matrix()
        };
        let mut out = [[1, 0], [0, 1]];
        for _ in 0..n.unsigned_abs() {
            out = mat_mul(base, out);
        }
        out
    }

    /// Modulus of the contracting eigenvalue.
    pub fn lambda(&self) -> f64 {
        self.eig_s.abs()
    }

    /// Condition number of the eigenbasis change.
    pub fn eigenbasis_condition(&self) -> f64 {
        let v = [[self.e_s[0], self.e_u[0]], [self.e_s[1], self.e_u[1]]];
        spectral_norm(v) * spectral_norm(self.basis_inv)
    }

    /// Closing-lemma prefactor valid for every `θ ≥ λ`.
    pub fn closing_constant(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.eigenbasis_condition() / (1.0 - self.lambda())
    }

    /// Coordinates `(a, b)` of `v = a e_s + b e_u`.
    pub fn decompose(&self, v: [f64; 2]) -> (f64, f64) {
        let m = self.basis_inv;
        (
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        )
    }

    pub fn apply_once(&self, p: &TorusPoint, forward: bool) -> TorusPoint {
        let m = if forward {
            self.matrix
        } else {
            self.inverse_matrix()
        };
        if let Some([x, y]) = p.exact() {
            let nx = x * m[0][0] + y * m[0][1];
            let ny = x * m[1][0] + y * m[1][1];
            return TorusPoint::rational(nx, ny);
        }
        let [x, y] = p.coords;
        TorusPoint::new(
            m[0][0] as f64 * x + m[0][1] as f64 * y,
            m[1][0] as f64 * x + m[1][1] as f64 * y,
        )
    }

    pub fn apply(&self, p: &TorusPoint, n: i64) -> TorusPoint {
        let mut q = p.clone();
        for _ in 0..n.unsigned_abs() {
            q = self.apply_once(&q, n > 0);
        }
        q
    }

    /// Shortest lift of `x - y`, searched over the 3×3 block of lattice
    /// translates around the rounded difference.
    pub fn minimal_lift(x: &TorusPoint, y: &TorusPoint) -> [f64; 2] {
        let d = [x.coords[0] - y.coords[0], x.coords[1] - y.coords[1]];
        let r = [d[0] - d[0].round(), d[1] - d[1].round()];
        let mut best = r;
        let mut best_n = f64::INFINITY;
        for i in -1..=1 {
            for j in -1..=1 {
                let c = [r[0] + i as f64, r[1] + j as f64];
                let n = c[0].hypot(c[1]);
                if n < best_n {
                    best_n = n;
                    best = c;
                }
            }
        }
        best
    }

    pub fn dist(x: &TorusPoint, y: &TorusPoint) -> f64 {
        if let (Some(a), Some(b)) = (x.exact(), y.exact()) {
            if a == b {
                return 0.0;
            }
        }
        let v = Self::minimal_lift(x, y);
        v[0].hypot(v[1])
    }

    /// `p + t·e` for a unit direction `e`.
    pub fn along(p: &TorusPoint, t: f64, e: [f64; 2]) -> TorusPoint {
        if t == 0.0 {
            return p.clone();
        }
        p.translate([t * e[0], t * e[1]])
    }

    /// `W^s(x) ∩ W^u(y)` for nearby points.
    pub fn bracket(&self, x: &TorusPoint, y: &TorusPoint) -> TorusPoint {
        let v = Self::minimal_lift(x, y);
        let (_, b) = self.decompose(v);
        Self::along(y, b, self.e_u)
    }

    /// All points of `Fix(A^n)`, as exact rationals, in lexicographic order.
    pub fn periodic_points(&self, n: u32, budget: u64) -> Result<Vec<TorusPoint>> {
        let p = self.power(n as i64);
        let bmat = [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]];
        let det = bmat[0][0] * bmat[1][1] - bmat[0][1] * bmat[1][0];
        let count = det.unsigned_abs();
        if count > budget {
            return Err(Error::BudgetExceeded { count, budget });
        }
        // lattice B·Z² has a basis {(a,0), (b,c)} with a·c = |det|
        let (g, _, _) = ext_gcd(bmat[1][0], bmat[1][1]);
        let c = g.abs();
        let a = (det / g).abs();
        let adj = [[bmat[1][1], -bmat[0][1]], [-bmat[1][0], bmat[0][0]]];
        let mut pts: Vec<(Q, Q)> = Vec::with_capacity(count as usize);
        for i in 0..a {
            for j in 0..c {
                let x = Q::new(adj[0][0] * i + adj[0][1] * j, det);
                let y = Q::new(adj[1][0] * i + adj[1][1] * j, det);
                pts.push((qfrac(x), qfrac(y)));
            }
        }
        pts.sort();
        pts.dedup();
        debug_assert_eq!(pts.len() as u64, count);
        Ok(pts
            .into_iter()
            .map(|(x, y)| TorusPoint::rational(x, y))
            .collect())
    }

    /// Exact periodic point shadowing the orbit segment `z, …, f^n z`.
    pub fn closing_point(&self, z: &TorusPoint, n: u32) -> TorusPoint {
        let p = self.power(n as i64);
        let bmat = [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]];
        let fz = self.apply(z, n as i64);
        let v = Self::minimal_lift(z, &fz);
        let [zx, zy] = z.coords;
        // B z + v is an integer vector K; p = B⁻¹ K exactly
        let k0 = (bmat[0][0] as f64 * zx + bmat[0][1] as f64 * zy + v[0]).round() as i64;
        let k1 = (bmat[1][0] as f64 * zx + bmat[1][1] as f64 * zy + v[1]).round() as i64;
        let det = bmat[0][0] * bmat[1][1] - bmat[0][1] * bmat[1][0];
        let x = Q::new(bmat[1][1] * k0 - bmat[0][1] * k1, det);
        let y = Q::new(-bmat[1][0] * k0 + bmat[0][0] * k1, det);
        TorusPoint::rational(x, y)
    }

    /// Whether `p` satisfies `(A^n - I) p ∈ Z²` exactly.
    pub fn is_fixed_exact(&self, p: &TorusPoint, n: u32) -> bool {
        let Some([x, y]) = p.exact() else {
            return false;
        };
        let m = self.power(n as i64);
        let bx = x * (m[0][0] - 1) + y * m[0][1];
        let by = x * m[1][0] + y * (m[1][1] - 1);
        bx.is_integer() && by.is_integer()
    }
}
