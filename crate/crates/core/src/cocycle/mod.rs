//! Cocycles over a base system with values in circle diffeomorphisms.
//!
//! A cocycle is determined by its generator `x ↦ α(x) = α^{(1)}(x)`; longer
//! products follow from `α^{(m+n)}(x) = α^{(m)}(F^n x) ∘ α^{(n)}(x)`.

pub mod estimate;
pub mod observable;

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::base::{BasePoint, BaseSystem};
use crate::error::{Error, Result};
use crate::fiber::{CircleDiffeo, FiberGrid};
pub use estimate::{
    check_domination, check_domination_with, estimate_holder, estimate_rho, poc_check,
    DominationReport, PocEntry, PocReport, RhoEstimate,
};
pub use observable::{Observable, SymbolTerm, TrigKind, TrigTerm};

/// One Fourier mode `sin·sin(2πkt) + cos·cos(2πkt)` of a fiber profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: u32,
    #[serde(default)]
    pub sin: f64,
    #[serde(default)]
    pub cos: f64,
}

fn profile(modes: &[Mode], grid: FiberGrid) -> Vec<f64> {
    (0..grid.grid_size)
        .map(|i| {
            let t = grid.node(i);
            modes
                .iter()
                .map(|m| {
                    let a = TAU * m.k as f64 * t;
                    m.sin * a.sin() + m.cos * a.cos()
                })
                .sum()
        })
        .collect()
}

fn one() -> Observable {
    Observable::constant(1.0)
}

/// `x ↦ (t ↦ t + angle(x) + weight(x)·Σ modes(t))`, optionally inverted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    #[serde(default = "Observable::zero")]
    pub angle: Observable,
    #[serde(default = "one")]
    pub weight: Observable,
    #[serde(default)]
    pub modes: Vec<Mode>,
    #[serde(default)]
    pub inverse: bool,
}

/// A base-dependent family of diffeomorphisms, `P: M → Diff(S¹)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoField {
    spec: FieldSpec,
    profile: Vec<f64>,
    jet_order: usize,
}

impl DiffeoField {
    pub fn new(spec: FieldSpec, grid: FiberGrid) -> Self {
        let profile = profile(&spec.modes, grid);
        DiffeoField {
            spec,
            profile,
            jet_order: grid.jet_order,
        }
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    /// The field `x ↦ P(x)⁻¹`.
    pub fn inverted(&self) -> Self {
        let mut f = self.clone();
        f.spec.inverse = !f.spec.inverse;
        f
    }

    pub fn eval(&self, sys: &BaseSystem, x: &BasePoint) -> Result<CircleDiffeo> {
        let a = self.spec.angle.eval(sys, x);
        let w = self.spec.weight.eval(sys, x);
        let disp = self.profile.iter().map(|p| a + w * p).collect();
        let h = CircleDiffeo::from_displacement(disp, self.jet_order)?;
        Ok(if self.spec.inverse { h.inverse() } else { h })
    }
}

/// Serializable description of a generator family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Identity,
    /// `t ↦ t + shift + Σ modes(t)` at every base point.
    Constant {
        #[serde(default)]
        shift: f64,
        #[serde(default)]
        modes: Vec<Mode>,
    },
    /// Rotation by `phi(x)`.
    Rotation {
        phi: Observable,
    },
    /// `t ↦ t + angle(x) + weight(x)·Σ modes(t)`.
    Bump {
        #[serde(default = "Observable::zero")]
        angle: Observable,
        weight: Observable,
        modes: Vec<Mode>,
    },
    /// `P(Fx) ∘ P(x)⁻¹`.
    Coboundary {
        p: FieldSpec,
    },
    /// `P(Fx)⁻¹ ∘ α(x) ∘ P(x)`.
    Conjugate {
        of: Box<Family>,
        p: FieldSpec,
    },
    /// `α^{(n0)}` over `F = f^{n0}`.
    Power {
        of: Box<Family>,
        n0: u32,
    },
    /// `α(F⁻¹ x)⁻¹` over `F⁻¹`.
    TimeReversed {
        of: Box<Family>,
    },
    /// A generator supplied in code.
    Custom {
        name: String,
    },
}

type GenFn = dyn Fn(&BaseSystem, &BasePoint) -> Result<CircleDiffeo> + Send + Sync;

enum Imp {
    Identity(CircleDiffeo),
    Constant(CircleDiffeo),
    Rotation(Observable),
    Bump {
        angle: Observable,
        weight: Observable,
        profile: Vec<f64>,
    },
    Coboundary(DiffeoField),
    Conjugate(Cocycle, DiffeoField),
    Power {
        inner: Cocycle,
        inner_sys: BaseSystem,
        n0: u32,
    },
    TimeReversed {
        inner: Cocycle,
    },
    Custom(Arc<GenFn>),
}

/// A cocycle, given by its generator.
#[derive(Clone)]
pub struct Cocycle {
    imp: Arc<Imp>,
    family: Family,
    nu: f64,
    grid: FiberGrid,
}

impl fmt::Debug for Cocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cocycle")
            .field("family", &self.family)
            .field("nu", &self.nu)
            .finish()
    }
}

fn check_fits(obs: &[&Observable], sys: &BaseSystem) -> Result<()> {
    if obs.iter().all(|o| o.fits(sys.is_toral())) {
        Ok(())
    } else {
        Err(Error::config(
            "family",
            "observable does not match the base system kind",
        ))
    }
}

impl Cocycle {
    /// Builds a cocycle from a family description. `sys` is only used to
    /// check that observables match the base kind.
    pub fn from_family(family: Family, sys: &BaseSystem, grid: FiberGrid) -> Result<Self> {
        let imp = match &family {
            Family::Identity => Imp::Identity(CircleDiffeo::identity(grid)),
            Family::Constant { shift, modes } => {
                let p = profile(modes, grid);
                Imp::Constant(CircleDiffeo::from_displacement(
                    p.iter().map(|v| v + shift).collect(),
                    grid.jet_order,
                )?)
            }
            Family::Rotation { phi } => {
                check_fits(&[phi], sys)?;
                Imp::Rotation(phi.clone())
            }
            Family::Bump {
                angle,
                weight,
                modes,
            } => {
                check_fits(&[angle, weight], sys)?;
                Imp::Bump {
                    angle: angle.clone(),
                    weight: weight.clone(),
                    profile: profile(modes, grid),
                }
            }
            Family::Coboundary { p } => {
                check_fits(&[&p.angle, &p.weight], sys)?;
                Imp::Coboundary(DiffeoField::new(p.clone(), grid))
            }
            Family::Conjugate { of, p } => {
                check_fits(&[&p.angle, &p.weight], sys)?;
                let inner = Cocycle::from_family((**of).clone(), sys, grid)?;
                Imp::Conjugate(inner, DiffeoField::new(p.clone(), grid))
            }
            Family::Power { .. } | Family::TimeReversed { .. } | Family::Custom { .. } => {
                return Err(Error::config(
                    "family",
                    "power, time_reversed and custom cocycles are built programmatically",
                ))
            }
        };
        Ok(Cocycle {
            imp: Arc::new(imp),
            family,
            nu: 1.0,
            grid,
        })
    }

    pub fn identity(grid: FiberGrid) -> Self {
        Cocycle {
            imp: Arc::new(Imp::Identity(CircleDiffeo::identity(grid))),
            family: Family::Identity,
            nu: 1.0,
            grid,
        }
    }

    pub fn constant(g: CircleDiffeo) -> Self {
        let grid = g.grid();
        Cocycle {
            imp: Arc::new(Imp::Constant(g)),
            family: Family::Custom {
                name: "constant".into(),
            },
            nu: 1.0,
            grid,
        }
    }

    pub fn rotation(phi: Observable, grid: FiberGrid) -> Self {
        Cocycle {
            imp: Arc::new(Imp::Rotation(phi.clone())),
            family: Family::Rotation { phi },
            nu: 1.0,
            grid,
        }
    }

    /// Generator supplied as a closure.
    pub fn custom<F>(name: &str, grid: FiberGrid, f: F) -> Self
    where
        F: Fn(&BaseSystem, &BasePoint) -> Result<CircleDiffeo> + Send + Sync + 'static,
    {
        Cocycle {
            imp: Arc::new(Imp::Custom(Arc::new(f))),
            family: Family::Custom { name: name.into() },
            nu: 1.0,
            grid,
        }
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn grid(&self) -> FiberGrid {
        self.grid
    }

    /// Whether every generator value is a rotation (checked structurally).
    pub fn is_rotation_family(&self) -> bool {
        match &*self.imp {
            Imp::Identity(_) | Imp::Rotation(_) => true,
            Imp::Constant(g) => g.is_rotation(),
            Imp::Power { inner, .. } | Imp::TimeReversed { inner } => inner.is_rotation_family(),
            _ => false,
        }
    }

    /// `α^{(1)}(x)`.
    pub fn generator(&self, sys: &BaseSystem, x: &BasePoint) -> Result<CircleDiffeo> {
        match &*self.imp {
            Imp::Identity(id) => Ok(id.clone()),
            Imp::Constant(g) => Ok(g.clone()),
            Imp::Rotation(phi) => Ok(CircleDiffeo::rotation(phi.eval(sys, x), self.grid)),
            Imp::Bump {
                angle,
                weight,
                profile,
            } => {
                let a = angle.eval(sys, x);
                let w = weight.eval(sys, x);
                CircleDiffeo::from_displacement(
                    profile.iter().map(|p| a + w * p).collect(),
                    self.grid.jet_order,
                )
            }
            Imp::Coboundary(p) => {
                let fx = sys.apply(x, 1);
                p.eval(sys, &fx)?.compose(&p.eval(sys, x)?.inverse())
            }
            Imp::Conjugate(inner, p) => {
                let fx = sys.apply(x, 1);
                let mid = inner.generator(sys, x)?.compose(&p.eval(sys, x)?)?;
                p.eval(sys, &fx)?.inverse().compose(&mid)
            }
            Imp::Power {
                inner,
                inner_sys,
                n0,
            } => inner.iterate(inner_sys, x, *n0 as i64),
            Imp::TimeReversed { inner } => {
                // sys is F⁻¹ here, so F⁻¹ x = sys.apply(x, 1)
                let y = sys.apply(x, 1);
                Ok(inner.generator(&sys.inverse(), &y)?.inverse())
            }
            Imp::Custom(f) => f(sys, x),
        }
    }

    /// `α^{(n)}(x)` for any integer `n`.
    pub fn iterate(&self, sys: &BaseSystem, x: &BasePoint, n: i64) -> Result<CircleDiffeo> {
        let mut acc = CircleDiffeo::identity(self.grid);
        if n >= 0 {
            let mut y = x.clone();
            for j in 0..n {
                acc = self.generator(sys, &y)?.compose(&acc)?;
                if j + 1 < n {
                    y = sys.apply(&y, 1);
                }
            }
        } else {
            // α(F^{-m}x)⁻¹ ∘ … ∘ α(F^{-1}x)⁻¹
            let mut y = x.clone();
            for _ in 0..(-n) {
                y = sys.apply(&y, -1);
                acc = self.generator(sys, &y)?.inverse().compose(&acc)?;
            }
        }
        Ok(acc)
    }

    /// `β(x) = P(Fx)⁻¹ ∘ α(x) ∘ P(x)`.
    pub fn conjugate(&self, p: &DiffeoField) -> Cocycle {
        Cocycle {
            imp: Arc::new(Imp::Conjugate(self.clone(), p.clone())),
            family: Family::Conjugate {
                of: Box::new(self.family.clone()),
                p: p.spec().clone(),
            },
            nu: self.nu,
            grid: self.grid,
        }
    }

    /// `α^{(n0)}` viewed as a cocycle over `sys^{n0}`.
    pub fn power(&self, sys: &BaseSystem, n0: u32) -> Result<(Cocycle, BaseSystem)> {
        let f = sys.power(n0)?;
        let c = Cocycle {
            imp: Arc::new(Imp::Power {
                inner: self.clone(),
                inner_sys: sys.clone(),
                n0,
            }),
            family: Family::Power {
                of: Box::new(self.family.clone()),
                n0,
            },
            nu: self.nu,
            grid: self.grid,
        };
        Ok((c, f))
    }

    /// The cocycle `x ↦ α(F⁻¹x)⁻¹` over `F⁻¹`, whose stable holonomies are
    /// the unstable holonomies of `α`.
    pub fn time_reversed(&self, sys: &BaseSystem) -> (Cocycle, BaseSystem) {
        let c = Cocycle {
            imp: Arc::new(Imp::TimeReversed {
                inner: self.clone(),
            }),
            family: Family::TimeReversed {
                of: Box::new(self.family.clone()),
            },
            nu: self.nu,
            grid: self.grid,
        };
        (c, sys.inverse())
    }
}

/// Free-function form of [`Cocycle::iterate`].
pub fn iterate(a: &Cocycle, sys: &BaseSystem, x: &BasePoint, n: i64) -> Result<CircleDiffeo> {
    a.iterate(sys, x, n)
}

/// Free-function form of [`Cocycle::conjugate`].
pub fn conjugate(a: &Cocycle, p: &DiffeoField) -> Cocycle {
    a.conjugate(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{d0, dk_surrogate};

    fn grid() -> FiberGrid {
        FiberGrid::new(512, 3).unwrap()
    }

    fn bump(sys: &BaseSystem) -> Cocycle {
        Cocycle::from_family(
            Family::Bump {
                angle: Observable::cos(0.05, [1, 0]),
                weight: Observable::Sum {
                    terms: vec![Observable::constant(0.02), Observable::sin(0.01, [0, 1])],
                },
                modes: vec![Mode {
                    k: 1,
                    sin: 1.0,
                    cos: 0.0,
                }],
            },
            sys,
            grid(),
        )
        .unwrap()
    }

    #[test]
    fn rotation_iterates_are_birkhoff_sums() {
        let sys = BaseSystem::cat_map();
        let phi = Observable::cos(0.1, [1, 1]);
        let a = Cocycle::rotation(phi.clone(), grid());
        for x in sys.sample_points(5, 7) {
            let mut sum = 0.0;
            let mut y = x.clone();
            for _ in 0..6 {
                sum += phi.eval(&sys, &y);
                y = sys.apply(&y, 1);
            }
            let h = a.iterate(&sys, &x, 6).unwrap();
            assert!(d0(&h, &CircleDiffeo::rotation(sum, grid())) < 1e-10);
        }
    }

    #[test]
    fn cocycle_and_inverse_laws() {
        let sys = BaseSystem::cat_map();
        let a = bump(&sys);
        let x = BasePoint::torus(0.31, 0.17);
        for (m, n) in [(2, 3), (-2, 3), (4, -1), (-3, -2), (0, 5)] {
            let lhs = a.iterate(&sys, &x, m + n).unwrap();
            let rhs = a
                .iterate(&sys, &sys.apply(&x, n), m)
                .unwrap()
                .compose(&a.iterate(&sys, &x, n).unwrap())
                .unwrap();
            assert!(dk_surrogate(&lhs, &rhs, 0) < 5e-9, "m={m} n={n}");
        }
        for n in 1..=6 {
            let back = a.iterate(&sys, &x, -n).unwrap();
            let fwd = a.iterate(&sys, &sys.apply(&x, -n), n).unwrap();
            assert!(
                d0(
                    &back.compose(&fwd).unwrap(),
                    &CircleDiffeo::identity(grid())
                ) < 1e-8
            );
        }
        assert_eq!(
            a.iterate(&sys, &x, 0).unwrap(),
            CircleDiffeo::identity(grid())
        );
    }

    #[test]
    fn conjugation_residual_and_involution() {
        let sys = BaseSystem::cat_map();
        let a = bump(&sys);
        let p = DiffeoField::new(
            FieldSpec {
                angle: Observable::sin(0.1, [1, 0]),
                weight: Observable::constant(0.03),
                modes: vec![Mode {
                    k: 2,
                    sin: 0.0,
                    cos: 1.0,
                }],
                inverse: false,
            },
            grid(),
        );
        let b = a.conjugate(&p);
        let back = b.conjugate(&p.inverted());
        for x in sys.sample_points(20, 0) {
            let fx = sys.apply(&x, 1);
            let rebuilt = p
                .eval(&sys, &fx)
                .unwrap()
                .compose(&b.generator(&sys, &x).unwrap())
                .unwrap()
                .compose(&p.eval(&sys, &x).unwrap().inverse())
                .unwrap();
            let ax = a.generator(&sys, &x).unwrap();
            assert!(d0(&ax, &rebuilt) < 1e-8);
            assert!(d0(&ax, &back.generator(&sys, &x).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn power_and_time_reversal() {
        let sys = BaseSystem::cat_map();
        let a = bump(&sys);
        let (a2, f2) = a.power(&sys, 2).unwrap();
        let x = BasePoint::torus(0.6, 0.2);
        let lhs = a2.iterate(&f2, &x, 2).unwrap();
        let rhs = a.iterate(&sys, &x, 4).unwrap();
        assert!(d0(&lhs, &rhs) < 1e-9);
        let (r, inv) = a.time_reversed(&sys);
        let lhs = r.iterate(&inv, &x, 3).unwrap();
        let rhs = a.iterate(&sys, &x, -3).unwrap();
        assert!(d0(&lhs, &rhs) < 1e-9);
    }

    #[test]
    fn observable_kind_is_checked() {
        let sft = BaseSystem::sft(vec![vec![1, 1], vec![1, 1]], 0.5).unwrap();
        let fam = Family::Rotation {
            phi: Observable::cos(0.1, [1, 0]),
        };
        assert!(Cocycle::from_family(fam, &sft, grid()).is_err());
    }
}
