//! Hyperbolic base systems: toral automorphisms and subshifts of finite type.
//!
//! A [`BaseSystem`] is `F = f^step` for one of the concrete maps `f`; powers
//! and the inverse are cheap views over the same data. Stable and unstable
//! sets always refer to `F`.

pub mod shift;
pub mod torus;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use shift::{ShiftSpace, SymbolPoint};
pub use torus::{ToralAutomorphism, TorusPoint, Q};

/// Default cap on the number of periodic points enumerated at once.
pub const DEFAULT_BUDGET: u64 = 1 << 20;
/// Iterates allowed for pushing a leaf pair into its local set.
pub const MAX_PUSH: usize = 64;
/// Largest cross-leaf component accepted when classifying toral pairs.
const LEAF_TOL: f64 = 1e-9;

/// A point of the base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BasePoint {
    Torus(TorusPoint),
    Symbol(SymbolPoint),
}

impl BasePoint {
    pub fn torus(x: f64, y: f64) -> Self {
        BasePoint::Torus(TorusPoint::new(x, y))
    }

    pub fn as_torus(&self) -> Option<&TorusPoint> {
        match self {
            BasePoint::Torus(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&SymbolPoint> {
        match self {
            BasePoint::Symbol(p) => Some(p),
            _ => None,
        }
    }

    /// Hashable identity, used by caches.
    pub fn key(&self) -> PointKey {
        match self {
            BasePoint::Torus(p) => match p.exact() {
                Some([x, y]) => {
                    PointKey::Rational([*x.numer(), *x.denom(), *y.numer(), *y.denom()])
                }
                None => {
                    let [x, y] = p.coords();
                    PointKey::Float([x.to_bits(), y.to_bits()])
                }
            },
            BasePoint::Symbol(s) => PointKey::Symbol(s.clone()),
        }
    }

    /// Short human-readable label for reports.
    pub fn label(&self) -> String {
        match self {
            BasePoint::Torus(p) => {
                if let Some([x, y]) = p.exact() {
                    format!("({x}, {y})")
                } else {
                    let [x, y] = p.coords();
                    format!("({x:.6}, {y:.6})")
                }
            }
            BasePoint::Symbol(s) => {
                let w = |v: &[u8]| v.iter().map(|c| c.to_string()).collect::<String>();
                let past: Vec<u8> = s.past_core.iter().rev().cloned().collect();
                let ptail: Vec<u8> = s.past_tail.iter().rev().cloned().collect();
                format!(
                    "({}){}.{}({})",
                    w(&ptail),
                    w(&past),
                    w(&s.future_core),
                    w(&s.future_tail)
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PointKey {
    Float([u64; 2]),
    Rational([i64; 4]),
    Symbol(SymbolPoint),
}

/// Stable or unstable set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Leaf {
    #[serde(rename = "s")]
    Stable,
    #[serde(rename = "u")]
    Unstable,
}

impl Leaf {
    pub fn tag(self) -> &'static str {
        match self {
            Leaf::Stable => "s",
            Leaf::Unstable => "u",
        }
    }

    pub fn other(self) -> Leaf {
        match self {
            Leaf::Stable => Leaf::Unstable,
            Leaf::Unstable => Leaf::Stable,
        }
    }

    /// Direction of time along which the leaf contracts.
    pub fn time_sign(self) -> i64 {
        match self {
            Leaf::Stable => 1,
            Leaf::Unstable => -1,
        }
    }
}

/// Constants of the hyperbolic structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicConstants {
    pub c1: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub epsilon0: f64,
    pub c5: f64,
    pub theta: f64,
    pub nu: f64,
}

impl HyperbolicConstants {
    pub fn validate(&self) -> Result<()> {
        let pos = [self.c1, self.epsilon, self.tau, self.epsilon0, self.c5];
        if pos.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidSystem(
                "hyperbolicity constants must be positive".into(),
            ));
        }
        if !(0.0 < self.lambda && self.lambda < self.theta && self.theta < 1.0) {
            return Err(Error::InvalidSystem(format!(
                "need 0 < lambda ({}) < theta ({}) < 1",
                self.lambda, self.theta
            )));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidSystem("nu must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Toral(ToralAutomorphism),
    Shift(ShiftSpace),
}

/// Serializable description of a base system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseDescriptor {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<i64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition_matrix: Option<Vec<Vec<u8>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric_base: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stable_dir: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unstable_dir: Option<[f64; 2]>,
    pub step: i64,
    pub constants: HyperbolicConstants,
}

/// A pair of points on a common stable or unstable set.
///
/// For toral systems the pair also records the signed offset of `z` from
/// `y` along the leaf direction, so that iterating the pair keeps it exactly
/// on one leaf even though the float orbit of `y` drifts.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafPair {
    pub leaf: Leaf,
    pub y: BasePoint,
    pub z: BasePoint,
    offset: Option<f64>,
}

impl LeafPair {
    pub fn reversed(&self) -> LeafPair {
        LeafPair {
            leaf: self.leaf,
            y: self.z.clone(),
            z: self.y.clone(),
            offset: self.offset.map(|t| -t),
        }
    }

    pub fn offset(&self) -> Option<f64> {
        self.offset
    }

    pub fn is_trivial(&self) -> bool {
        match self.offset {
            Some(t) => t == 0.0,
            None => self.y == self.z,
        }
    }
}

/// Waypoints `x = w_0, …, w_k = z` and the leaf pairs joining them.
#[derive(Debug, Clone, PartialEq)]
pub struct SuPath {
    pub waypoints: Vec<BasePoint>,
    pub legs: Vec<LeafPair>,
}

impl SuPath {
    pub fn tags(&self) -> Vec<Leaf> {
        self.legs.iter().map(|l| l.leaf).collect()
    }
}

/// Measured shadowing data from [`BaseSystem::closing`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosingReport {
    pub n: u32,
    pub initial_gap: f64,
    pub distances: Vec<f64>,
    pub bounds: Vec<f64>,
    /// `distances[j] / bounds[j]`, or 0 where both vanish.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// A point homoclinic to an anchor `x`, with leaf pairs `x → y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Homoclinic {
    pub point: BasePoint,
    pub stable: LeafPair,
    pub unstable: LeafPair,
}

/// `F = f^step` for a hyperbolic map `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseSystem {
    kind: Arc<Kind>,
    step: i64,
    constants: HyperbolicConstants,
    budget: u64,
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

impl BaseSystem {
    /// Toral automorphism; hyperbolicity constants are computed.
    pub fn toral(matrix: [[i64; 2]; 2]) -> Result<Self> {
        let a = ToralAutomorphism::new(matrix)?;
        let lambda = a.lambda();
        let constants = HyperbolicConstants {
            c1: a.eigenbasis_condition(),
            lambda,
            epsilon: 0.1,
            tau: 0.25,
            epsilon0: 1.0,
            c5: a.closing_constant(),
            theta: lambda.sqrt(),
            nu: 1.0,
        };
        Ok(BaseSystem {
            kind: Arc::new(Kind::Toral(a)),
            step: 1,
            constants,
            budget: DEFAULT_BUDGET,
        })
    }

    pub fn cat_map() -> Self {
        Self::toral([[2, 1], [1, 1]]).expect("cat map is hyperbolic")
    }

    /// Subshift of finite type with metric `metric_base^{first disagreement}`.
    pub fn sft(transitions: Vec<Vec<u8>>, metric_base: f64) -> Result<Self> {
        let s = ShiftSpace::new(transitions, metric_base)?;
        let b = metric_base;
        let constants = HyperbolicConstants {
            c1: 1.0,
            lambda: b,
            epsilon: b,
            tau: b,
            epsilon0: b,
            c5: 1.0,
            theta: b.sqrt(),
            nu: 1.0,
        };
        Ok(BaseSystem {
            kind: Arc::new(Kind::Shift(s)),
            step: 1,
            constants,
            budget: DEFAULT_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        self.constants.theta = theta;
        self.constants.validate()?;
        Ok(self)
    }

    /// Replaces `theta` by the largest admissible value with `rho·theta < 1`
    /// when the default `sqrt(lambda)` is too large.
    pub fn with_theta_for_rho(self, rho: f64) -> Result<Self> {
        let c = self.constants;
        if rho * c.theta < 1.0 {
            return Ok(self);
        }
        if rho * c.lambda >= 1.0 {
            return Err(Error::InvalidSystem(format!(
                "no theta in (lambda, 1/rho) for rho = {rho}"
            )));
        }
        let theta = 0.5 * (c.lambda + 1.0 / rho);
        self.with_theta(theta)
    }

    pub fn with_constants(mut self, constants: HyperbolicConstants) -> Result<Self> {
        constants.validate()?;
        self.constants = constants;
        Ok(self)
    }

    pub fn constants(&self) -> &HyperbolicConstants {
        &self.constants
    }

    pub fn lambda(&self) -> f64 {
        self.constants.lambda
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn is_toral(&self) -> bool {
        matches!(*self.kind, Kind::Toral(_))
    }

    pub fn toral_map(&self) -> Option<&ToralAutomorphism> {
        match &*self.kind {
            Kind::Toral(a) => Some(a),
            _ => None,
        }
    }

    pub fn shift_space(&self) -> Option<&ShiftSpace> {
        match &*self.kind {
            Kind::Shift(s) => Some(s),
            _ => None,
        }
    }

    /// `F^{n0}` over the same underlying map.
    pub fn power(&self, n0: u32) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::InvalidSystem("power must be >= 1".into()));
        }
        let mut c = self.constants;
        let n = n0 as i32;
        c.lambda = c.lambda.powi(n);
        c.theta = c.theta.powi(n);
        if let Kind::Toral(a) = &*self.kind {
            let l = a
                .lambda()
                .powi((self.step.unsigned_abs() * n0 as u64) as i32);
            c.c5 = std::f64::consts::SQRT_2 * a.eigenbasis_condition() / (1.0 - l);
        }
        Ok(BaseSystem {
            kind: self.kind.clone(),
            step: self.step * n0 as i64,
            constants: c,
            budget: self.budget,
        })
    }

    /// `F⁻¹`; stable and unstable sets swap.
    pub fn inverse(&self) -> Self {
        BaseSystem {
            kind: self.kind.clone(),
            step: -self.step,
            constants: self.constants,
            budget: self.budget,
        }
    }

    pub fn descriptor(&self) -> BaseDescriptor {
        match &*self.kind {
            Kind::Toral(a) => {
                let (s, u) = self.dirs(a);
                BaseDescriptor {
                    kind: "toral_automorphism".into(),
                    matrix: Some(a.matrix().iter().map(|r| r.to_vec()).collect()),
                    transition_matrix: None,
                    metric_base: None,
                    stable_dir: Some(s),
                    unstable_dir: Some(u),
                    step: self.step,
                    constants: self.constants,
                }
            }
            Kind::Shift(sh) => BaseDescriptor {
                kind: "sft".into(),
                matrix: None,
                transition_matrix: Some(sh.transition_matrix()),
                metric_base: Some(sh.metric_base()),
                stable_dir: None,
                unstable_dir: None,
                step: self.step,
                constants: self.constants,
            },
        }
    }

    /// Stable and unstable unit directions of `F`.
    fn dirs(&self, a: &ToralAutomorphism) -> ([f64; 2], [f64; 2]) {
        if self.step > 0 {
            (a.e_s, a.e_u)
        } else {
            (a.e_u, a.e_s)
        }
    }

    /// Signed factor by which a leaf offset changes over one step of `F`
    /// taken in the leaf's contracting time direction.
    fn leaf_multiplier(&self, a: &ToralAutomorphism, leaf: Leaf) -> f64 {
        let k = self.step.unsigned_abs() as i32;
        // the contracting direction of F for stable, of F⁻¹ for unstable
        let stable_of_f = (leaf == Leaf::Stable) == (self.step > 0);
        if stable_of_f {
            a.eig_s.powi(k)
        } else {
            (1.0 / a.eig_u).powi(k)
        }
    }

    fn leaf_dir(&self, a: &ToralAutomorphism, leaf: Leaf) -> [f64; 2] {
        let (s, u) = self.dirs(a);
        match leaf {
            Leaf::Stable => s,
            Leaf::Unstable => u,
        }
    }

    /// `(s, u)` with `v = s·e^s + u·e^u` for the stable/unstable directions of `F`.
    fn decompose(&self, a: &ToralAutomorphism, v: [f64; 2]) -> (f64, f64) {
        let (cs, cu) = a.decompose(v);
        if self.step > 0 {
            (cs, cu)
        } else {
            (cu, cs)
        }
    }

    pub fn validate(&self, x: &BasePoint) -> Result<()> {
        match (&*self.kind, x) {
            (Kind::Toral(_), BasePoint::Torus(_)) => Ok(()),
            (Kind::Shift(s), BasePoint::Symbol(p)) => s.validate(p),
            _ => Err(Error::InvalidPoint(
                "point does not belong to this kind of system".into(),
            )),
        }
    }

    /// `F^n(x)`.
    pub fn apply(&self, x: &BasePoint, n: i64) -> BasePoint {
        let m = n * self.step;
        match (&*self.kind, x) {
            (Kind::Toral(a), BasePoint::Torus(p)) => BasePoint::Torus(a.apply(p, m)),
            (Kind::Shift(_), BasePoint::Symbol(p)) => BasePoint::Symbol(p.shift(m)),
            _ => panic!("point does not belong to this kind of system"),
        }
    }

    pub fn dist(&self, x: &BasePoint, y: &BasePoint) -> f64 {
        match (&*self.kind, x, y) {
            (Kind::Toral(_), BasePoint::Torus(p), BasePoint::Torus(q)) => {
                ToralAutomorphism::dist(p, q)
            }
            (Kind::Shift(s), BasePoint::Symbol(p), BasePoint::Symbol(q)) => s.dist(p, q),
            _ => panic!("points do not belong to this kind of system"),
        }
    }

    /// `[x, y] = W^s_ε(x) ∩ W^u_ε(y)`.
    pub fn bracket(&self, x: &BasePoint, y: &BasePoint) -> Result<BasePoint> {
        let d = self.dist(x, y);
        if d > self.constants.tau {
            return Err(Error::BracketOutOfRange {
                dist: d,
                tau: self.constants.tau,
            });
        }
        match (&*self.kind, x, y) {
            (Kind::Toral(a), BasePoint::Torus(p), BasePoint::Torus(q)) => {
                let v = ToralAutomorphism::minimal_lift(p, q);
                let (_, u) = self.decompose(a, v);
                Ok(BasePoint::Torus(ToralAutomorphism::along(
                    q,
                    u,
                    self.leaf_dir(a, Leaf::Unstable),
                )))
            }
            (Kind::Shift(s), BasePoint::Symbol(p), BasePoint::Symbol(q)) => {
                if self.step > 0 {
                    s.bracket(p, q).map(BasePoint::Symbol)
                } else {
                    s.bracket(q, p).map(BasePoint::Symbol)
                }
            }
            _ => Err(Error::InvalidPoint(
                "points do not belong to this kind of system".into(),
            )),
        }
    }

    /// Leaf pair with `z = y + t·e` along the toral leaf direction.
    pub fn toral_pair(&self, y: &TorusPoint, t: f64, leaf: Leaf) -> Result<LeafPair> {
        let a = self
            .toral_map()
            .ok_or_else(|| Error::InvalidSystem("not a toral system".into()))?;
        let z = ToralAutomorphism::along(y, t, self.leaf_dir(a, leaf));
        Ok(LeafPair {
            leaf,
            y: BasePoint::Torus(y.clone()),
            z: BasePoint::Torus(z),
            offset: Some(t),
        })
    }

    /// Classifies `(y, z)` as a pair on a common stable or unstable set.
    ///
    /// Toral pairs must be local (the minimal lift of `z - y` lies along the
    /// leaf direction); symbolic pairs may be arbitrarily far apart.
    pub fn leaf_pair(&self, y: &BasePoint, z: &BasePoint, leaf: Leaf) -> Result<LeafPair> {
        match (&*self.kind, y, z) {
            (Kind::Toral(a), BasePoint::Torus(p), BasePoint::Torus(q)) => {
                let v = ToralAutomorphism::minimal_lift(q, p);
                let (s, u) = self.decompose(a, v);
                let (along, across) = match leaf {
                    Leaf::Stable => (s, u),
                    Leaf::Unstable => (u, s),
                };
                if across.abs() > LEAF_TOL * (1.0 + along.abs()) {
                    return Err(Error::NotOnSameLeaf {
                        leaf: leaf.tag(),
                        reason: format!("transverse component {across:e}"),
                    });
                }
                Ok(LeafPair {
                    leaf,
                    y: y.clone(),
                    z: z.clone(),
                    offset: Some(along),
                })
            }
            (Kind::Shift(_), BasePoint::Symbol(p), BasePoint::Symbol(q)) => {
                if self.symbolic_gap(p, q, leaf).is_none() {
                    return Err(Error::NotOnSameLeaf {
                        leaf: leaf.tag(),
                        reason: "sequences never merge in the contracting direction".into(),
                    });
                }
                Ok(LeafPair {
                    leaf,
                    y: y.clone(),
                    z: z.clone(),
                    offset: None,
                })
            }
            _ => Err(Error::InvalidPoint(
                "points do not belong to this kind of system".into(),
            )),
        }
    }

    /// Symbol shifts needed (in the contracting direction of `leaf`) before
    /// the two sequences agree on the whole relevant half-line.
    fn symbolic_gap(&self, p: &SymbolPoint, q: &SymbolPoint, leaf: Leaf) -> Option<i64> {
        let future = (leaf == Leaf::Stable) == (self.step > 0);
        if future {
            p.future_merge_index(q).map(|m| m.max(0))
        } else {
            p.past_merge_index(q)
                .map(|m| if m == i64::MAX { 0 } else { (-m).max(0) })
        }
    }

    /// Iterates of `F` (in the leaf's contracting time direction) needed to
    /// bring the pair into the local set of size `epsilon`.
    pub fn steps_to_local(&self, pair: &LeafPair) -> Result<usize> {
        let k = match (&*self.kind, &pair.y, &pair.z) {
            (Kind::Toral(a), _, _) => {
                let t = pair.offset.unwrap_or(0.0).abs();
                let mult = self.leaf_multiplier(a, pair.leaf).abs();
                let mut k = 0;
                let mut t = t;
                while t > self.constants.epsilon && k <= MAX_PUSH {
                    t *= mult;
                    k += 1;
                }
                k
            }
            (Kind::Shift(_), BasePoint::Symbol(p), BasePoint::Symbol(q)) => {
                let gap =
                    self.symbolic_gap(p, q, pair.leaf)
                        .ok_or_else(|| Error::NotOnSameLeaf {
                            leaf: pair.leaf.tag(),
                            reason: "sequences never merge".into(),
                        })?;
                let s = self.step.unsigned_abs() as i64;
                ((gap + s - 1) / s) as usize
            }
            _ => {
                return Err(Error::InvalidPoint(
                    "points do not belong to this kind of system".into(),
                ))
            }
        };
        if k > MAX_PUSH {
            return Err(Error::NotOnSameLeaf {
                leaf: pair.leaf.tag(),
                reason: format!("not local after {MAX_PUSH} iterates"),
            });
        }
        Ok(k)
    }

    /// Moves the pair `k` steps of `F` in the leaf's contracting direction.
    pub fn advance(&self, pair: &LeafPair, k: usize) -> LeafPair {
        self.flow_pair(pair, pair.leaf.time_sign() * k as i64)
    }

    /// Image of the pair under `F^n` for any sign of `n`.
    pub fn flow_pair(&self, pair: &LeafPair, n: i64) -> LeafPair {
        let k = n * pair.leaf.time_sign();
        let y = self.apply(&pair.y, n);
        match (&*self.kind, pair.offset) {
            (Kind::Toral(a), Some(t)) => {
                let t = t * self.leaf_multiplier(a, pair.leaf).powi(k as i32);
                let BasePoint::Torus(yt) = &y else {
                    unreachable!()
                };
                let z =
                    BasePoint::Torus(ToralAutomorphism::along(yt, t, self.leaf_dir(a, pair.leaf)));
                LeafPair {
                    leaf: pair.leaf,
                    y,
                    z,
                    offset: Some(t),
                }
            }
            _ => LeafPair {
                leaf: pair.leaf,
                y,
                z: self.apply(&pair.z, n),
                offset: pair.offset,
            },
        }
    }

    /// Distance between the two points of a pair (exact along toral leaves).
    pub fn pair_dist(&self, pair: &LeafPair) -> f64 {
        match pair.offset {
            Some(t) => t.abs(),
            None => self.dist(&pair.y, &pair.z),
        }
    }

    /// Pairs `(x, z_j)` inside the local `leaf` set of `x` with separation
    /// shrinking by a factor 2 (toral) or the metric base (symbolic).
    pub fn local_leaf_pairs(
        &self,
        x: &BasePoint,
        leaf: Leaf,
        count: usize,
    ) -> Result<Vec<LeafPair>> {
        self.validate(x)?;
        match (&*self.kind, x) {
            (Kind::Toral(_), BasePoint::Torus(p)) => (0..count)
                .map(|j| {
                    self.toral_pair(
                        p,
                        0.5 * self.constants.epsilon * 0.5f64.powi(j as i32),
                        leaf,
                    )
                })
                .collect(),
            (Kind::Shift(sh), BasePoint::Symbol(p)) => {
                let future = (leaf == Leaf::Stable) == (self.step > 0);
                let mut out = Vec::new();
                for j in 0..count as i64 {
                    let z = if future {
                        let old = p.get(-j - 1);
                        let Some(c) =
                            (0..sh.alphabet_size()).find(|&c| c != old && sh.allowed(c, p.get(-j)))
                        else {
                            continue;
                        };
                        let mut core: Vec<u8> = (1..=j).map(|i| p.get(-i)).collect();
                        core.push(c);
                        let cyc = sh.cycle_through(c);
                        let mut tail: Vec<u8> = cyc[1..].iter().rev().cloned().collect();
                        tail.push(c);
                        SymbolPoint::from_parts(
                            core,
                            tail,
                            p.future_core.clone(),
                            p.future_tail.clone(),
                            p.alphabet_size,
                        )?
                    } else {
                        let old = p.get(j + 1);
                        let Some(c) =
                            (0..sh.alphabet_size()).find(|&c| c != old && sh.allowed(p.get(j), c))
                        else {
                            continue;
                        };
                        let mut core: Vec<u8> = (0..=j).map(|i| p.get(i)).collect();
                        core.push(c);
                        let cyc = sh.cycle_through(c);
                        let mut tail: Vec<u8> = cyc[1..].to_vec();
                        tail.push(c);
                        SymbolPoint::from_parts(
                            p.past_core.clone(),
                            p.past_tail.clone(),
                            core,
                            tail,
                            p.alphabet_size,
                        )?
                    };
                    out.push(self.leaf_pair(x, &BasePoint::Symbol(z), leaf)?);
                }
                Ok(out)
            }
            _ => Err(Error::InvalidPoint(
                "points do not belong to this kind of system".into(),
            )),
        }
    }

    pub fn is_local(&self, pair: &LeafPair) -> bool {
        matches!(self.steps_to_local(pair), Ok(0))
    }

    /// su-path from `x` to `z` with the default leg order.
    pub fn su_path(&self, x: &BasePoint, z: &BasePoint) -> Result<SuPath> {
        match &*self.kind {
            Kind::Toral(_) => self.su_path_ordered(x, z, Leaf::Stable),
            Kind::Shift(_) => self
                .su_path_ordered(x, z, Leaf::Unstable)
                .or_else(|_| self.su_path_ordered(x, z, Leaf::Stable)),
        }
    }

    /// Two-leg su-path whose first leg lies on a `first` set.
    pub fn su_path_ordered(&self, x: &BasePoint, z: &BasePoint, first: Leaf) -> Result<SuPath> {
        if x == z {
            return Ok(SuPath {
                waypoints: vec![x.clone()],
                legs: Vec::new(),
            });
        }
        match (&*self.kind, x, z) {
            (Kind::Toral(a), BasePoint::Torus(p), BasePoint::Torus(q)) => {
                let v = ToralAutomorphism::minimal_lift(q, p);
                let (s, u) = self.decompose(a, v);
                let (t1, t2) = match first {
                    Leaf::Stable => (s, u),
                    Leaf::Unstable => (u, s),
                };
                let mut leg1 = self.toral_pair(p, t1, first)?;
                let BasePoint::Torus(w) = leg1.z.clone() else {
                    unreachable!()
                };
                let mut leg2 = self.toral_pair(&w, t2, first.other())?;
                leg2.z = z.clone();
                leg1.z = BasePoint::Torus(w.clone());
                Ok(SuPath {
                    waypoints: vec![x.clone(), BasePoint::Torus(w), z.clone()],
                    legs: vec![leg1, leg2],
                })
            }
            (Kind::Shift(sh), BasePoint::Symbol(p), BasePoint::Symbol(q)) => {
                // in terms of the shift σ: a u-leg of F is a u-leg of σ iff step > 0
                let sigma_first = if self.step > 0 { first } else { first.other() };
                let w = Self::splice_waypoint(sh, p, q, sigma_first)?;
                let wp = BasePoint::Symbol(w);
                let leg1 = LeafPair {
                    leaf: first,
                    y: x.clone(),
                    z: wp.clone(),
                    offset: None,
                };
                let leg2 = LeafPair {
                    leaf: first.other(),
                    y: wp.clone(),
                    z: z.clone(),
                    offset: None,
                };
                Ok(SuPath {
                    waypoints: vec![x.clone(), wp, z.clone()],
                    legs: vec![leg1, leg2],
                })
            }
            _ => Err(Error::InvalidPoint(
                "points do not belong to this kind of system".into(),
            )),
        }
    }

    /// Waypoint `w` with `w ∈ W^{first}(x) ∩ W^{other}(z)` for the shift σ.
    fn splice_waypoint(
        sh: &ShiftSpace,
        x: &SymbolPoint,
        z: &SymbolPoint,
        first: Leaf,
    ) -> Result<SymbolPoint> {
        let k = sh.alphabet_size() as usize;
        let max_len = 2 * k + 2;
        for len in 0..=max_len {
            let l = len as i64;
            match first {
                Leaf::Unstable => {
                    // past of x, connector at 0..len, future of z from len on
                    let Some(c) = sh.walk(x.get(-1), z.get(l), len + 1) else {
                        continue;
                    };
                    let tail_from = z.shift(l);
                    let mut fc = c;
                    fc.extend(tail_from.future_core.iter());
                    return SymbolPoint::from_parts(
                        x.past_core.clone(),
                        x.past_tail.clone(),
                        fc,
                        tail_from.future_tail.clone(),
                        x.alphabet_size,
                    );
                }
                Leaf::Stable => {
                    // past of z up to -len-1, connector at -len..0, future of x
                    let Some(c) = sh.walk(z.get(-l - 1), x.get(0), len + 1) else {
                        continue;
                    };
                    let head = z.shift(-l);
                    let mut pc: Vec<u8> = c.iter().rev().cloned().collect();
                    pc.extend(head.past_core.iter());
                    return SymbolPoint::from_parts(
                        pc,
                        head.past_tail.clone(),
                        x.future_core.clone(),
                        x.future_tail.clone(),
                        x.alphabet_size,
                    );
                }
            }
        }
        Err(Error::NoPath(format!(
            "no admissible connector of length <= {max_len}"
        )))
    }

    /// Every point of `Fix(F^n)`.
    pub fn periodic_points(&self, n: u32) -> Result<Vec<BasePoint>> {
        if n == 0 {
            return Err(Error::InvalidPoint("period must be >= 1".into()));
        }
        let m = n * self.step.unsigned_abs() as u32;
        match &*self.kind {
            Kind::Toral(a) => Ok(a
                .periodic_points(m, self.budget)?
                .into_iter()
                .map(BasePoint::Torus)
                .collect()),
            Kind::Shift(s) => Ok(s
                .periodic_points(m, self.budget)?
                .into_iter()
                .map(BasePoint::Symbol)
                .collect()),
        }
    }

    /// Whether `F^n(p) = p` holds exactly (rational or symbolic arithmetic).
    pub fn is_fixed_exact(&self, p: &BasePoint, n: u32) -> bool {
        let m = n * self.step.unsigned_abs() as u32;
        match (&*self.kind, p) {
            (Kind::Toral(a), BasePoint::Torus(t)) => a.is_fixed_exact(t, m),
            (Kind::Shift(_), BasePoint::Symbol(s)) => &s.shift(m as i64) == s,
            _ => false,
        }
    }

    /// Smallest `n ≥ 1` with `F^n(p) = p` exactly, searching up to `max`.
    pub fn exact_period(&self, p: &BasePoint, max: u32) -> Option<u32> {
        (1..=max).find(|&n| self.is_fixed_exact(p, n))
    }

    /// Anosov closing: a periodic point of `F` shadowing `z, …, F^n z`.
    pub fn closing(&self, z: &BasePoint, n: u32) -> Result<(BasePoint, ClosingReport)> {
        if n == 0 {
            return Err(Error::InvalidPoint("period must be >= 1".into()));
        }
        let c = self.constants;
        let fz = self.apply(z, n as i64);
        let gap = self.dist(&fz, z);
        if gap >= c.epsilon0 {
            return Err(Error::NotCloseEnough {
                dist: gap,
                epsilon0: c.epsilon0,
            });
        }
        let m = n * self.step.unsigned_abs() as u32;
        let p = match (&*self.kind, z) {
            (Kind::Toral(a), BasePoint::Torus(t)) => BasePoint::Torus(a.closing_point(t, m)),
            (Kind::Shift(sh), BasePoint::Symbol(s)) => {
                let word = s.window(0, m as i64);
                let (last, first) = (word[word.len() - 1], word[0]);
                if !sh.allowed(last, first) {
                    return Err(Error::NotCloseEnough {
                        dist: gap,
                        epsilon0: c.epsilon0,
                    });
                }
                BasePoint::Symbol(SymbolPoint::periodic(&word, s.alphabet_size)?)
            }
            _ => {
                return Err(Error::InvalidPoint(
                    "point does not belong to this kind of system".into(),
                ))
            }
        };
        let mut distances = Vec::with_capacity(n as usize + 1);
        let mut bounds = Vec::with_capacity(n as usize + 1);
        let mut ratios = Vec::with_capacity(n as usize + 1);
        let (mut zj, mut pj) = (z.clone(), p.clone());
        for j in 0..=n {
            let d = self.dist(&zj, &pj);
            let bound = c.c5 * c.theta.powi(j.min(n - j) as i32) * gap;
            if d > bound * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::ShadowingBoundViolated {
                    j: j as usize,
                    measured: d,
                    bound,
                });
            }
            distances.push(d);
            bounds.push(bound);
            ratios.push(if bound > 0.0 { d / bound } else { 0.0 });
            zj = self.apply(&zj, 1);
            pj = self.apply(&pj, 1);
        }
        let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
        Ok((
            p,
            ClosingReport {
                n,
                initial_gap: gap,
                distances,
                bounds,
                ratios,
                max_ratio,
            },
        ))
    }

    /// Deterministic sample of `count` points. Toral systems use a shifted
    /// Halton sequence; symbolic systems draw random admissible cores from a
    /// seeded stream.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<BasePoint> {
        match &*self.kind {
            Kind::Toral(_) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let (sx, sy) = if seed == 0 {
                    (0.0, 0.0)
                } else {
                    (rng.random::<f64>(), rng.random::<f64>())
                };
                (1..=count as u64)
                    .map(|i| BasePoint::torus(halton(i, 2) + sx, halton(i, 3) + sy))
                    .collect()
            }
            Kind::Shift(sh) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| BasePoint::Symbol(Self::random_symbol_point(sh, &mut rng, 6)))
                    .collect()
            }
        }
    }

    fn random_symbol_point(sh: &ShiftSpace, rng: &mut ChaCha8Rng, half: usize) -> SymbolPoint {
        let k = sh.alphabet_size();
        let mut core = vec![rng.random_range(0..k)];
        while core.len() < 2 * half {
            let last = *core.last().unwrap();
            let next: Vec<u8> = (0..k).filter(|&b| sh.allowed(last, b)).collect();
            core.push(next[rng.random_range(0..next.len())]);
        }
        // future: core[half..], then a walk into a cycle
        let fs = rng.random_range(0..k);
        let ftail = sh.cycle_through(fs);
        let mut fcore: Vec<u8> = core[half..].to_vec();
        fcore.extend(
            sh.connector(*fcore.last().unwrap(), fs, 1)
                .expect("irreducible"),
        );
        // past: reversed core[..half], then a walk out of a cycle
        let ps = rng.random_range(0..k);
        let cyc = sh.cycle_through(ps);
        let mut ptail = vec![ps];
        ptail.extend(cyc[1..].iter().rev());
        let mut pcore: Vec<u8> = core[..half].iter().rev().cloned().collect();
        let conn = sh.connector(ps, core[0], 1).expect("irreducible");
        pcore.extend(conn.iter().rev());
        SymbolPoint::from_parts(pcore, ptail, fcore, ftail, k).expect("admissible by construction")
    }

    /// Up to `count` points homoclinic to a fixed point `x` of `F`, ordered by
    /// increasing complexity (lattice norm or excursion length).
    pub fn homoclinic_points(&self, x: &BasePoint, count: usize) -> Result<Vec<Homoclinic>> {
        if !self.is_fixed_exact(x, 1) {
            let is_float_fixed = self.dist(&self.apply(x, 1), x) < 1e-12;
            if !is_float_fixed {
                return Err(Error::NotPeriodic(1));
            }
        }
        match (&*self.kind, x) {
            (Kind::Toral(a), BasePoint::Torus(p)) => {
                let mut ks: Vec<(i64, i64)> = Vec::new();
                let r = (count as f64).sqrt().ceil() as i64 + 2;
                for i in -r..=r {
                    for j in -r..=r {
                        if (i, j) != (0, 0) {
                            ks.push((i, j));
                        }
                    }
                }
                ks.sort_by_key(|&(i, j)| (i * i + j * j, i, j));
                let mut out = Vec::with_capacity(count);
                for (i, j) in ks.into_iter().take(count) {
                    // k = s·e^s + u·e^u, so x + s·e^s ≡ x - u·e^u is homoclinic
                    let (s, u) = self.decompose(a, [i as f64, j as f64]);
                    let stable = self.toral_pair(p, s, Leaf::Stable)?;
                    let mut unstable = self.toral_pair(p, -u, Leaf::Unstable)?;
                    unstable.z = stable.z.clone();
                    out.push(Homoclinic {
                        point: stable.z.clone(),
                        stable,
                        unstable,
                    });
                }
                Ok(out)
            }
            (Kind::Shift(sh), BasePoint::Symbol(p)) => {
                let mut out = Vec::with_capacity(count);
                let mut len = 1usize;
                while out.len() < count && len <= 16 {
                    let mut word = Vec::with_capacity(len);
                    self.excursions(sh, p, len, &mut word, &mut out, count);
                    len += 1;
                }
                Ok(out)
            }
            _ => Err(Error::InvalidPoint(
                "point does not belong to this kind of system".into(),
            )),
        }
    }

    fn excursions(
        &self,
        sh: &ShiftSpace,
        x: &SymbolPoint,
        len: usize,
        word: &mut Vec<u8>,
        out: &mut Vec<Homoclinic>,
        count: usize,
    ) {
        if out.len() >= count {
            return;
        }
        if word.len() == len {
            if !sh.allowed(word[len - 1], x.get(len as i64))
                || word[..] == x.window(0, len as i64)[..]
            {
                return;
            }
            // must differ at the last position, otherwise it was found at a shorter length
            if word[len - 1] == x.get(len as i64 - 1) {
                return;
            }
            let tail = x.shift(len as i64);
            let mut fc = word.clone();
            fc.extend(tail.future_core.iter());
            let y = SymbolPoint::from_parts(
                x.past_core.clone(),
                x.past_tail.clone(),
                fc,
                tail.future_tail.clone(),
                x.alphabet_size,
            )
            .expect("admissible by construction");
            let point = BasePoint::Symbol(y);
            let stable = LeafPair {
                leaf: Leaf::Stable,
                y: BasePoint::Symbol(x.clone()),
                z: point.clone(),
                offset: None,
            };
            let unstable = LeafPair {
                leaf: Leaf::Unstable,
                ..stable.clone()
            };
            out.push(Homoclinic {
                point,
                stable,
                unstable,
            });
            return;
        }
        let prev = word.last().copied().unwrap_or_else(|| x.get(-1));
        for s in 0..sh.alphabet_size() {
            if sh.allowed(prev, s) {
                word.push(s);
                self.excursions(sh, x, len, word, out, count);
                word.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_map_constants() {
        let sys = BaseSystem::cat_map();
        let c = sys.constants();
        assert!((c.lambda - 0.381_966_011_250_105).abs() < 1e-12);
        assert!((c.c1 - 1.0).abs() < 1e-12);
        c.validate().unwrap();
        let sq = sys.power(2).unwrap();
        assert!((sq.lambda() - c.lambda * c.lambda).abs() < 1e-15);
    }

    #[test]
    fn apply_examples() {
        let sys = BaseSystem::cat_map();
        let p = sys.apply(&BasePoint::torus(0.5, 0.5), 1);
        assert!(sys.dist(&p, &BasePoint::torus(0.5, 0.0)) < 1e-15);
        let x = BasePoint::torus(0.3, 0.7);
        assert_eq!(sys.apply(&x, 0), x);
        assert!(sys.dist(&sys.inverse().apply(&sys.apply(&x, 3), 3), &x) < 1e-12);
    }

    #[test]
    fn toral_bracket_lies_on_both_leaves() {
        let sys = BaseSystem::cat_map();
        let x = BasePoint::torus(0.0, 0.0);
        let y = BasePoint::torus(0.01, 0.02);
        let z = sys.bracket(&x, &y).unwrap();
        sys.leaf_pair(&x, &z, Leaf::Stable).unwrap();
        sys.leaf_pair(&y, &z, Leaf::Unstable).unwrap();
        assert_eq!(sys.bracket(&x, &x).unwrap(), x);
        assert!(matches!(
            sys.bracket(&x, &BasePoint::torus(0.4, 0.4)),
            Err(Error::BracketOutOfRange { .. })
        ));
    }

    #[test]
    fn su_path_waypoint_example() {
        let sys = BaseSystem::cat_map();
        let x = BasePoint::torus(0.0, 0.0);
        let z = BasePoint::torus(0.1, 0.0);
        let path = sys.su_path(&x, &z).unwrap();
        assert_eq!(path.tags(), vec![Leaf::Stable, Leaf::Unstable]);
        let w = path.waypoints[1].as_torus().unwrap().coords();
        // oracle: (0.1, 0) = a(1, -φ) + b(1, 1/φ), so w1 = a(1, -φ) mod 1
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let a = 0.1 / (1.0 + phi * phi);
        assert!((w[0] - a).abs() < 1e-14);
        assert!((w[1] - (1.0 - a * phi)).abs() < 1e-14);
        // forward iterates of w1 approach those of x
        let mut leg = path.legs[0].clone();
        let mut d = sys.dist(&leg.y, &leg.z);
        for _ in 0..8 {
            leg = sys.advance(&leg, 1);
            let next = sys.dist(&leg.y, &leg.z);
            assert!(next < d * 0.39);
            d = next;
        }
        assert_eq!(sys.su_path(&x, &x).unwrap().legs.len(), 0);
    }

    #[test]
    fn symbolic_su_paths() {
        let sys = BaseSystem::sft(vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]], 0.5).unwrap();
        let x = BasePoint::Symbol(SymbolPoint::periodic(&[0, 1], 3).unwrap());
        let z = BasePoint::Symbol(SymbolPoint::periodic(&[2, 1, 0], 3).unwrap());
        for first in [Leaf::Stable, Leaf::Unstable] {
            let path = sys.su_path_ordered(&x, &z, first).unwrap();
            assert_eq!(path.legs.len(), 2);
            assert_eq!(path.legs[0].leaf, first);
            for leg in &path.legs {
                sys.validate(&leg.z).unwrap();
                sys.leaf_pair(&leg.y, &leg.z, leg.leaf).unwrap();
                let k = sys.steps_to_local(leg).unwrap();
                assert!(sys.pair_dist(&sys.advance(leg, k + 3)) <= 0.0625);
            }
        }
        // the flip shift is two points in different cyclic classes
        let flip = BaseSystem::sft(vec![vec![0, 1], vec![1, 0]], 0.5).unwrap();
        let p = BasePoint::Symbol(SymbolPoint::periodic(&[0, 1], 2).unwrap());
        let q = BasePoint::Symbol(SymbolPoint::periodic(&[1, 0], 2).unwrap());
        assert!(matches!(flip.su_path(&p, &q), Err(Error::NoPath(_))));
    }

    #[test]
    fn homoclinic_points_are_on_both_leaves() {
        let sys = BaseSystem::cat_map();
        let x = BasePoint::Torus(TorusPoint::rational(Q::from_integer(0), Q::from_integer(0)));
        let hs = sys.homoclinic_points(&x, 12).unwrap();
        assert_eq!(hs.len(), 12);
        for h in &hs {
            let ps = h.stable.offset().unwrap();
            let pu = h.unstable.offset().unwrap();
            let (a, _) = (sys.toral_map().unwrap().e_s, 0);
            let _ = a;
            let zs = h.stable.z.as_torus().unwrap();
            let zu = ToralAutomorphism::along(
                &TorusPoint::new(0.0, 0.0),
                pu,
                sys.toral_map().unwrap().e_u,
            );
            assert!(zs.same_as(&zu, 1e-12), "offsets {ps} {pu}");
        }
        let shift = BaseSystem::sft(vec![vec![1, 1], vec![1, 1]], 0.5).unwrap();
        let o = BasePoint::Symbol(SymbolPoint::constant(0, 2).unwrap());
        let hs = shift.homoclinic_points(&o, 10).unwrap();
        assert_eq!(hs.len(), 10);
        for h in &hs {
            assert_ne!(h.point, o);
            shift.leaf_pair(&o, &h.point, Leaf::Stable).unwrap();
            shift.leaf_pair(&o, &h.point, Leaf::Unstable).unwrap();
        }
    }

    #[test]
    fn advance_keeps_pairs_on_leaf() {
        let sys = BaseSystem::cat_map();
        let y = TorusPoint::new(0.2, 0.3);
        let pair = sys.toral_pair(&y, 0.5, Leaf::Stable).unwrap();
        let k = sys.steps_to_local(&pair).unwrap();
        assert_eq!(k, 2);
        let local = sys.advance(&pair, k);
        assert!(sys.is_local(&local));
        assert!((sys.pair_dist(&local) - 0.5 * sys.lambda().powi(2)).abs() < 1e-15);
        let u = sys.toral_pair(&y, 0.5, Leaf::Unstable).unwrap();
        let back = sys.advance(&u, 1);
        let d = ToralAutomorphism::dist(back.y.as_torus().unwrap(), back.z.as_torus().unwrap());
        assert!((d - 0.5 * sys.lambda()).abs() < 1e-12);
    }
}
