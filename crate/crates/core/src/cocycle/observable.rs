//! Real-valued functions on the base.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::base::{BasePoint, BaseSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigKind {
    Cos,
    Sin,
}

/// `coef · cos(2π k·x)` or `coef · sin(2π k·x)` on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub coef: f64,
    pub k: [i32; 2],
    #[serde(default = "default_kind")]
    pub kind: TrigKind,
}

fn default_kind() -> TrigKind {
    TrigKind::Cos
}

/// `values[x_index]` on a symbolic base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm {
    pub index: i64,
    pub values: Vec<f64>,
}

/// A function `φ: M → R` built from simple pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Observable {
    Constant {
        value: f64,
    },
    Trig {
        terms: Vec<TrigTerm>,
    },
    Symbols {
        terms: Vec<SymbolTerm>,
    },
    /// `base(x) - psi(F x) + psi(x) + shift`.
    Cohomologous {
        base: Box<Observable>,
        psi: Box<Observable>,
        #[serde(default)]
        shift: f64,
    },
    Sum {
        terms: Vec<Observable>,
    },
}

impl Observable {
    pub fn constant(value: f64) -> Self {
        Observable::Constant { value }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn cos(coef: f64, k: [i32; 2]) -> Self {
        Observable::Trig {
            terms: vec![TrigTerm {
                coef,
                k,
                kind: TrigKind::Cos,
            }],
        }
    }

    pub fn sin(coef: f64, k: [i32; 2]) -> Self {
        Observable::Trig {
            terms: vec![TrigTerm {
                coef,
                k,
                kind: TrigKind::Sin,
            }],
        }
    }

    pub fn cohomologous(base: Observable, psi: Observable, shift: f64) -> Self {
        Observable::Cohomologous {
            base: Box::new(base),
            psi: Box::new(psi),
            shift,
        }
    }

    pub fn eval(&self, sys: &BaseSystem, x: &BasePoint) -> f64 {
        match self {
            Observable::Constant { value } => *value,
            Observable::Trig { terms } => {
                let c = match x {
                    BasePoint::Torus(p) => p.coords(),
                    BasePoint::Symbol(_) => panic!("trigonometric observable on a symbolic base"),
                };
                terms
                    .iter()
                    .map(|t| {
                        let arg = TAU * (t.k[0] as f64 * c[0] + t.k[1] as f64 * c[1]);
                        t.coef
                            * match t.kind {
                                TrigKind::Cos => arg.cos(),
                                TrigKind::Sin => arg.sin(),
                            }
                    })
                    .sum()
            }
            Observable::Symbols { terms } => {
                let s = match x {
                    BasePoint::Symbol(s) => s,
                    BasePoint::Torus(_) => panic!("symbolic observable on a toral base"),
                };
                terms
                    .iter()
                    .map(|t| {
                        t.values
                            .get(s.get(t.index) as usize)
                            .copied()
                            .unwrap_or(0.0)
                    })
                    .sum()
            }
            Observable::Cohomologous { base, psi, shift } => {
                let fx = sys.apply(x, 1);
                base.eval(sys, x) - psi.eval(sys, &fx) + psi.eval(sys, x) + shift
            }
            Observable::Sum { terms } => terms.iter().map(|t| t.eval(sys, x)).sum(),
        }
    }

    /// Whether the observable only involves symbolic pieces (or constants).
    pub fn fits(&self, toral: bool) -> bool {
        match self {
            Observable::Constant { .. } => true,
            Observable::Trig { .. } => toral,
            Observable::Symbols { .. } => !toral,
            Observable::Cohomologous { base, psi, .. } => base.fits(toral) && psi.fits(toral),
            Observable::Sum { terms } => terms.iter().all(|t| t.fits(toral)),
        }
    }

    /// Euclidean Lipschitz bound on the torus (`None` for symbolic pieces).
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self {
            Observable::Constant { .. } => Some(0.0),
            Observable::Trig { terms } => Some(
                terms
                    .iter()
                    .map(|t| t.coef.abs() * TAU * (t.k[0] as f64).hypot(t.k[1] as f64))
                    .sum(),
            ),
            Observable::Sum { terms } => terms.iter().map(|t| t.lipschitz_bound()).sum(),
            _ => None,
        }
    }
}
