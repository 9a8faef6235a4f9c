//! Two-sided subshifts of finite type on eventually periodic sequences.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A two-sided sequence that is eventually periodic in both directions.
///
/// The future reads `future_core` then `future_tail` repeated, starting at
/// index 0. The past reads `past_core` then `past_tail` repeated, starting at
/// index -1 and moving left.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolPoint {
    pub past_core: Vec<u8>,
    pub past_tail: Vec<u8>,
    pub future_core: Vec<u8>,
    pub future_tail: Vec<u8>,
    pub alphabet_size: u8,
}

fn primitive(w: &mut Vec<u8>) {
    let n = w.len();
    for p in 1..n {
        if n.is_multiple_of(p) && (p..n).all(|i| w[i] == w[i - p]) {
            w.truncate(p);
            return;
        }
    }
}

fn absorb(core: &mut Vec<u8>, tail: &mut [u8]) {
    while let (Some(&c), Some(&t)) = (core.last(), tail.last()) {
        if c != t {
            break;
        }
        core.pop();
        tail.rotate_right(1);
    }
}

#[inline]
fn read(core: &[u8], tail: &[u8], j: usize) -> u8 {
    if j < core.len() {
        core[j]
    } else {
        tail[(j - core.len()) % tail.len()]
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl SymbolPoint {
    /// Builds a point from its four words and puts it in canonical form.
    pub fn from_parts(
        past_core: Vec<u8>,
        past_tail: Vec<u8>,
        future_core: Vec<u8>,
        future_tail: Vec<u8>,
        alphabet_size: u8,
    ) -> Result<Self> {
        if past_tail.is_empty() || future_tail.is_empty() {
            return Err(Error::InvalidPoint("tails must be non-empty".into()));
        }
        let all = past_core
            .iter()
            .chain(&past_tail)
            .chain(&future_core)
            .chain(&future_tail);
        if alphabet_size == 0 || all.clone().any(|&s| s >= alphabet_size) {
            return Err(Error::InvalidPoint(format!(
                "symbol outside alphabet of size {alphabet_size}"
            )));
        }
        let mut p = SymbolPoint {
            past_core,
            past_tail,
            future_core,
            future_tail,
            alphabet_size,
        };
        p.canonicalize();
        Ok(p)
    }

    /// The periodic point `…www.www…` with `w` starting at index 0.
    pub fn periodic(word: &[u8], alphabet_size: u8) -> Result<Self> {
        let past: Vec<u8> = word.iter().rev().cloned().collect();
        Self::from_parts(Vec::new(), past, Vec::new(), word.to_vec(), alphabet_size)
    }

    /// A constant sequence.
    pub fn constant(symbol: u8, alphabet_size: u8) -> Result<Self> {
        Self::periodic(&[symbol], alphabet_size)
    }

    fn canonicalize(&mut self) {
        primitive(&mut self.past_tail);
        primitive(&mut self.future_tail);
        absorb(&mut self.past_core, &mut self.past_tail);
        absorb(&mut self.future_core, &mut self.future_tail);
    }

    /// Symbol at index `i`.
    pub fn get(&self, i: i64) -> u8 {
        if i >= 0 {
            read(&self.future_core, &self.future_tail, i as usize)
        } else {
            read(&self.past_core, &self.past_tail, (-i - 1) as usize)
        }
    }

    /// Symbols at indices `lo..hi`.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<u8> {
        (lo..hi).map(|i| self.get(i)).collect()
    }

    /// Index range outside of which both halves are purely periodic.
    pub fn core_extent(&self) -> (i64, i64) {
        (
            -(self.past_core.len() as i64),
            self.future_core.len() as i64,
        )
    }

    /// The shift `(σx)_i = x_{i+1}`.
    pub fn shift_left(&self) -> Self {
        let mut p = self.clone();
        let x0 = self.get(0);
        p.past_core.insert(0, x0);
        if p.future_core.is_empty() {
            p.future_tail.rotate_left(1);
        } else {
            p.future_core.remove(0);
        }
        p.canonicalize();
        p
    }

    /// The inverse shift `(σ⁻¹x)_i = x_{i-1}`.
    pub fn shift_right(&self) -> Self {
        let mut p = self.clone();
        let xm = self.get(-1);
        p.future_core.insert(0, xm);
        if p.past_core.is_empty() {
            p.past_tail.rotate_left(1);
        } else {
            p.past_core.remove(0);
        }
        p.canonicalize();
        p
    }

    pub fn shift(&self, n: i64) -> Self {
        let mut p = self.clone();
        for _ in 0..n.unsigned_abs() {
            p = if n > 0 {
                p.shift_left()
            } else {
                p.shift_right()
            };
        }
        p
    }

    /// Index window that covers every distinct adjacent pair.
    fn pair_window(&self) -> (i64, i64) {
        let lo = -((self.past_core.len() + 2 * self.past_tail.len()) as i64) - 1;
        let hi = (self.future_core.len() + 2 * self.future_tail.len()) as i64 + 1;
        (lo, hi)
    }

    /// Splices the past of `past` (indices < 0) with the future of `future`.
    pub fn splice(past: &SymbolPoint, future: &SymbolPoint) -> SymbolPoint {
        let mut p = SymbolPoint {
            past_core: past.past_core.clone(),
            past_tail: past.past_tail.clone(),
            future_core: future.future_core.clone(),
            future_tail: future.future_tail.clone(),
            alphabet_size: past.alphabet_size.max(future.alphabet_size),
        };
        p.canonicalize();
        p
    }

    /// Smallest `m` with `x_i = y_i` for all `i ≥ m`, or `None` if the
    /// futures never merge. Identical futures return `i64::MIN`.
    pub fn future_merge_index(&self, other: &SymbolPoint) -> Option<i64> {
        let l = self.future_core.len().max(other.future_core.len()) as i64;
        let period = {
            let (a, b) = (self.future_tail.len(), other.future_tail.len());
            a / gcd(a, b) * b
        } as i64;
        if (l..l + period).any(|i| self.get(i) != other.get(i)) {
            return None;
        }
        let lo = -(self.past_core.len().max(other.past_core.len()) as i64)
            - (self.past_tail.len() * other.past_tail.len()) as i64;
        let mut m = l;
        while m > lo && self.get(m - 1) == other.get(m - 1) {
            m -= 1;
        }
        if m == lo {
            return Some(i64::MIN);
        }
        Some(m)
    }

    /// Largest `m` with `x_i = y_i` for all `i ≤ m`, or `None` if the pasts
    /// never merge. Identical pasts return `i64::MAX`.
    pub fn past_merge_index(&self, other: &SymbolPoint) -> Option<i64> {
        let l = -(self.past_core.len().max(other.past_core.len()) as i64) - 1;
        let period = {
            let (a, b) = (self.past_tail.len(), other.past_tail.len());
            a / gcd(a, b) * b
        } as i64;
        if (0..period).any(|k| self.get(l - k) != other.get(l - k)) {
            return None;
        }
        let hi = self.future_core.len().max(other.future_core.len()) as i64
            + (self.future_tail.len() * other.future_tail.len()) as i64;
        let mut m = l;
        while m < hi && self.get(m + 1) == other.get(m + 1) {
            m += 1;
        }
        if m == hi {
            return Some(i64::MAX);
        }
        Some(m)
    }
}

/// A subshift of finite type given by a 0/1 transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpace {
    transitions: Vec<Vec<bool>>,
    metric_base: f64,
}

impl ShiftSpace {
    pub fn new(transitions: Vec<Vec<u8>>, metric_base: f64) -> Result<Self> {
        let k = transitions.len();
        if k == 0 || k > u8::MAX as usize {
            return Err(Error::InvalidSystem(
                "alphabet size must be in 1..=255".into(),
            ));
        }
        if transitions.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidSystem(
                "transition matrix must be square".into(),
            ));
        }
        if transitions.iter().flatten().any(|&v| v > 1) {
            return Err(Error::InvalidSystem("transition matrix must be 0/1".into()));
        }
        if !(metric_base > 0.0 && metric_base < 1.0) {
            return Err(Error::InvalidSystem("metric_base must lie in (0,1)".into()));
        }
        let transitions: Vec<Vec<bool>> = transitions
            .into_iter()
            .map(|r| r.into_iter().map(|v| v == 1).collect())
            .collect();
        let s = ShiftSpace {
            transitions,
            metric_base,
        };
        if !s.is_irreducible() {
            return Err(Error::InvalidSystem(
                "transition matrix is not irreducible".into(),
            ));
        }
        Ok(s)
    }

    pub fn full(k: u8, metric_base: f64) -> Result<Self> {
        Self::new(vec![vec![1; k as usize]; k as usize], metric_base)
    }

    pub fn alphabet_size(&self) -> u8 {
        self.transitions.len() as u8
    }

    pub fn metric_base(&self) -> f64 {
        self.metric_base
    }

    pub fn transition_matrix(&self) -> Vec<Vec<u8>> {
        self.transitions
            .iter()
            .map(|r| r.iter().map(|&b| b as u8).collect())
            .collect()
    }

    #[inline]
    pub fn allowed(&self, a: u8, b: u8) -> bool {
        self.transitions[a as usize][b as usize]
    }

    fn reachable_from(&self, a: u8) -> Vec<bool> {
        let k = self.transitions.len();
        let mut seen = vec![false; k];
        let mut queue = VecDeque::from([a as usize]);
        while let Some(i) = queue.pop_front() {
            for (j, &edge) in self.transitions[i].iter().enumerate() {
                if edge && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    fn is_irreducible(&self) -> bool {
        (0..self.alphabet_size()).all(|a| self.reachable_from(a).iter().all(|&r| r))
    }

    /// Checks that every adjacent pair of `x` is an allowed transition.
    pub fn validate(&self, x: &SymbolPoint) -> Result<()> {
        if x.alphabet_size != self.alphabet_size() {
            return Err(Error::InvalidPoint(format!(
                "alphabet size {} does not match system ({})",
                x.alphabet_size,
                self.alphabet_size()
            )));
        }
        let (lo, hi) = x.pair_window();
        for i in lo..hi {
            let (a, b) = (x.get(i), x.get(i + 1));
            if !self.allowed(a, b) {
                return Err(Error::InadmissibleSplice {
                    from: a as usize,
                    to: b as usize,
                });
            }
        }
        Ok(())
    }

    pub fn dist(&self, x: &SymbolPoint, y: &SymbolPoint) -> f64 {
        if x == y {
            return 0.0;
        }
        let mut k: i32 = 0;
        loop {
            if x.get(k as i64) != y.get(k as i64) || x.get(-(k as i64)) != y.get(-(k as i64)) {
                return self.metric_base.powi(k);
            }
            k += 1;
        }
    }

    /// Future of `x`, past of `y`.
    pub fn bracket(&self, x: &SymbolPoint, y: &SymbolPoint) -> Result<SymbolPoint> {
        let (a, b) = (y.get(-1), x.get(0));
        if !self.allowed(a, b) {
            return Err(Error::InadmissibleSplice {
                from: a as usize,
                to: b as usize,
            });
        }
        Ok(SymbolPoint::splice(y, x))
    }

    /// Word `c` with `a c b` an admissible walk of exactly `steps` edges.
    pub fn walk(&self, a: u8, b: u8, steps: usize) -> Option<Vec<u8>> {
        if steps == 0 {
            return (a == b).then(Vec::new);
        }
        let k = self.alphabet_size() as usize;
        // layered search; parents[s][j] is a predecessor of j at step s
        let mut parents: Vec<Vec<Option<u8>>> = vec![vec![None; k]];
        let mut frontier = vec![false; k];
        frontier[a as usize] = true;
        for _ in 0..steps {
            let mut next = vec![false; k];
            let mut parent = vec![None; k];
            for i in (0..k).filter(|&i| frontier[i]) {
                for (j, n) in next.iter_mut().enumerate() {
                    if self.transitions[i][j] && !*n {
                        *n = true;
                        parent[j] = Some(i as u8);
                    }
                }
            }
            parents.push(parent);
            frontier = next;
        }
        if !frontier[b as usize] {
            return None;
        }
        let mut word = Vec::with_capacity(steps - 1);
        let mut cur = b;
        for s in (2..=steps).rev() {
            let prev = parents[s][cur as usize].expect("parent recorded");
            word.push(prev);
            cur = prev;
        }
        word.reverse();
        Some(word)
    }

    /// Shortest word `c` such that `a c b` is an admissible walk of at least
    /// `min_steps` edges.
    pub fn connector(&self, a: u8, b: u8, min_steps: usize) -> Option<Vec<u8>> {
        let k = self.alphabet_size() as usize;
        (min_steps.max(1)..=min_steps + k + 1).find_map(|s| self.walk(a, b, s))
    }

    /// A primitive cycle through `a`, as the word starting at `a`.
    pub fn cycle_through(&self, a: u8) -> Vec<u8> {
        let mut w = vec![a];
        w.extend(self.connector(a, a, 1).expect("irreducible"));
        w
    }

    /// All admissible cyclic words of length `n`, as periodic points, in
    /// lexicographic order.
    pub fn periodic_points(&self, n: u32, budget: u64) -> Result<Vec<SymbolPoint>> {
        let n = n as usize;
        let k = self.alphabet_size();
        let mut out = Vec::new();
        let mut word = Vec::with_capacity(n);
        self.cycles(&mut word, n, k, &mut out, budget)?;
        Ok(out)
    }

    fn cycles(
        &self,
        word: &mut Vec<u8>,
        n: usize,
        k: u8,
        out: &mut Vec<SymbolPoint>,
        budget: u64,
    ) -> Result<()> {
        if word.len() == n {
            if self.allowed(word[n - 1], word[0]) {
                if out.len() as u64 >= budget {
                    return Err(Error::BudgetExceeded {
                        count: out.len() as u64 + 1,
                        budget,
                    });
                }
                out.push(SymbolPoint::periodic(word, k)?);
            }
            return Ok(());
        }
        for s in 0..k {
            if word.last().is_none_or(|&l| self.allowed(l, s)) {
                word.push(s);
                self.cycles(word, n, k, out, budget)?;
                word.pop();
            }
        }
        Ok(())
    }

    /// Trace of the `n`-th power of the transition matrix.
    pub fn fixed_point_count(&self, n: u32) -> u128 {
        let k = self.transitions.len();
        let base: Vec<Vec<u128>> = self
            .transitions
            .iter()
            .map(|r| r.iter().map(|&b| b as u128).collect())
            .collect();
        let mut acc: Vec<Vec<u128>> = (0..k)
            .map(|i| (0..k).map(|j| (i == j) as u128).collect())
            .collect();
        for _ in 0..n {
            acc = (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| (0..k).map(|l| acc[i][l] * base[l][j]).sum())
                        .collect()
                })
                .collect();
        }
        (0..k).map(|i| acc[i][i]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(pc: &[u8], pt: &[u8], fc: &[u8], ft: &[u8]) -> SymbolPoint {
        SymbolPoint::from_parts(pc.to_vec(), pt.to_vec(), fc.to_vec(), ft.to_vec(), 2).unwrap()
    }

    #[test]
    fn canonical_form() {
        let a = pt(&[0, 0], &[0, 0], &[1, 0, 1, 0], &[1, 0]);
        assert_eq!(a, pt(&[], &[0], &[], &[1, 0]));
        assert_eq!(
            SymbolPoint::periodic(&[0, 1, 0, 1], 2).unwrap(),
            SymbolPoint::periodic(&[0, 1], 2).unwrap()
        );
    }

    #[test]
    fn shift_moves_origin_left() {
        let x = pt(&[], &[0], &[1], &[0]);
        let y = x.shift(1);
        assert_eq!(y.get(-1), 1);
        assert_eq!(y.get(0), 0);
        assert_eq!(y, pt(&[1], &[0], &[], &[0]));
        assert_eq!(y.shift(-1), x);
        for n in -5..5 {
            for m in -5..5 {
                assert_eq!(x.shift(m).shift(n), x.shift(m + n));
            }
        }
    }

    #[test]
    fn metric_and_bracket() {
        let s = ShiftSpace::full(2, 0.5).unwrap();
        let x = SymbolPoint::constant(0, 2).unwrap();
        let y = pt(&[0, 0, 0], &[1], &[0, 0, 0, 0], &[1]);
        assert_eq!(s.dist(&x, &y), 0.0625);
        assert_eq!(s.dist(&x, &x), 0.0);
        let y = pt(&[], &[1], &[0], &[1]);
        let z = s.bracket(&x, &y).unwrap();
        assert_eq!(z, pt(&[], &[1], &[], &[0]));
    }

    #[test]
    fn merge_indices() {
        let x = SymbolPoint::constant(0, 2).unwrap();
        let y = pt(&[], &[1], &[0, 1], &[0]);
        assert_eq!(x.future_merge_index(&y), Some(2));
        assert_eq!(x.past_merge_index(&y), None);
        assert_eq!(x.future_merge_index(&x), Some(i64::MIN));
        let w = pt(&[0, 1], &[0], &[], &[1]);
        assert_eq!(x.past_merge_index(&w), Some(-3));
    }

    #[test]
    fn periodic_counts_match_traces() {
        let full = ShiftSpace::full(2, 0.5).unwrap();
        assert_eq!(full.periodic_points(2, 100).unwrap().len(), 4);
        let golden = ShiftSpace::new(vec![vec![1, 1], vec![1, 0]], 0.5).unwrap();
        for n in 1..=8 {
            assert_eq!(
                golden.periodic_points(n, 1000).unwrap().len() as u128,
                golden.fixed_point_count(n)
            );
        }
        let flip = ShiftSpace::new(vec![vec![0, 1], vec![1, 0]], 0.5).unwrap();
        assert!(flip.periodic_points(1, 10).unwrap().is_empty());
        assert_eq!(flip.periodic_points(2, 10).unwrap().len(), 2);
        assert!(ShiftSpace::new(vec![vec![1, 1], vec![0, 1]], 0.5).is_err());
    }

    #[test]
    fn connectors_respect_length() {
        let flip = ShiftSpace::new(vec![vec![0, 1], vec![1, 0]], 0.5).unwrap();
        assert_eq!(flip.connector(0, 1, 1), Some(vec![]));
        assert_eq!(flip.connector(0, 0, 1), Some(vec![1]));
        assert_eq!(flip.connector(0, 1, 2), Some(vec![1, 0]));
        let golden = ShiftSpace::new(vec![vec![1, 1], vec![1, 0]], 0.5).unwrap();
        assert_eq!(golden.connector(1, 1, 1), Some(vec![0]));
        assert_eq!(flip.walk(0, 0, 3), None);
        assert_eq!(flip.walk(0, 0, 4), Some(vec![1, 0, 1]));
        assert_eq!(golden.cycle_through(1), vec![1, 0]);
    }
}
