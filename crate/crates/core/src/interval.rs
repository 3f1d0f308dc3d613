//! Closed-interval arithmetic over the search function set.
//!
//! Every operation returns an enclosure of the exact image. Additions,
//! subtractions and products are rounded outward only when the floating-point
//! result is inexact (detected with error-free transformations); library
//! functions (`exp`, `ln`, `sin`, `tanh`) are widened by one ulp on each side.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{ExpressionTree, Node, Symbol};

/// A closed interval `[lo, hi]` with possibly infinite endpoints, or the
/// distinguished undefined value (both endpoints NaN).
#[derive(Clone, Copy, Debug)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

/// Serialized as `[lo, hi]` (infinite endpoints as `"inf"`/`"-inf"`) or the
/// string `"undefined"`.
impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_undefined() {
            s.serialize_str("undefined")
        } else {
            crate::serde_util::float_pair::serialize(&(self.lo, self.hi), s)
        }
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Pair(#[serde(with = "crate::serde_util::float_pair")] (f64, f64)),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Pair((lo, hi)) => Ok(Interval::new(lo, hi)),
            Repr::Text(t) if t == "undefined" => Ok(Interval::UNDEFINED),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("invalid interval `{t}`"))),
        }
    }
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        (self.is_undefined() && other.is_undefined()) || (self.lo == other.lo && self.hi == other.hi)
    }
}

impl Interval {
    pub const UNDEFINED: Interval = Interval {
        lo: f64::NAN,
        hi: f64::NAN,
    };
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const NON_NEGATIVE: Interval = Interval {
        lo: 0.0,
        hi: f64::INFINITY,
    };
    pub const NON_POSITIVE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: 0.0,
    };

    /// `[lo, hi]`; anything that is not a valid non-empty interval becomes
    /// undefined.
    pub fn new(lo: f64, hi: f64) -> Self {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
        {
            Self::UNDEFINED
        } else {
            Self { lo, hi }
        }
    }

    pub fn point(v: f64) -> Self {
        Self::new(v, v)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_undefined(&self) -> bool {
        self.lo.is_nan()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        !self.is_undefined() && self.lo <= v && v <= self.hi
    }

    /// `self ⊆ other`. Undefined is a subset of nothing.
    pub fn is_subset_of(&self, other: &Interval) -> bool {
        !self.is_undefined() && !other.is_undefined() && other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        if self.is_undefined() || other.is_undefined() {
            return Self::UNDEFINED;
        }
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        if self.is_undefined() || other.is_undefined() {
            return Self::UNDEFINED;
        }
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    fn widened(lo: f64, hi: f64) -> Interval {
        Interval::new(lo.next_down(), hi.next_up())
    }

    pub fn neg(self) -> Interval {
        if self.is_undefined() {
            return self;
        }
        Interval::new(-self.hi, -self.lo)
    }

    pub fn add(self, y: Interval) -> Interval {
        if self.is_undefined() || y.is_undefined() {
            return Self::UNDEFINED;
        }
        Interval::new(add_down(self.lo, y.lo), add_up(self.hi, y.hi))
    }

    pub fn sub(self, y: Interval) -> Interval {
        self.add(y.neg())
    }

    pub fn mul(self, y: Interval) -> Interval {
        if self.is_undefined() || y.is_undefined() {
            return Self::UNDEFINED;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in [self.lo, self.hi] {
            for b in [y.lo, y.hi] {
                lo = lo.min(mul_down(a, b));
                hi = hi.max(mul_up(a, b));
            }
        }
        Interval::new(lo, hi)
    }

    /// Analytic quotient `x / sqrt(1 + y^2)`.
    pub fn aq(self, y: Interval) -> Interval {
        if self.is_undefined() || y.is_undefined() {
            return Self::UNDEFINED;
        }
        let denom = y.square().add(Interval::point(1.0)).sqrt();
        // denom ⊆ [1, inf], so the reciprocal lies in (0, 1]
        let recip = Interval::new(
            div_down(1.0, denom.hi).max(0.0),
            div_up(1.0, denom.lo).min(1.0),
        );
        self.mul(recip)
    }

    pub fn square(self) -> Interval {
        if self.is_undefined() {
            return self;
        }
        if self.lo <= 0.0 && 0.0 <= self.hi {
            let m = self.lo.abs().max(self.hi.abs());
            Interval::new(0.0, mul_up(m, m))
        } else {
            let (a, b) = if self.hi < 0.0 {
                (-self.hi, -self.lo)
            } else {
                (self.lo, self.hi)
            };
            Interval::new(mul_down(a, a), mul_up(b, b))
        }
    }

    pub fn sqrt(self) -> Interval {
        let x = self.intersect(&Interval::NON_NEGATIVE);
        if x.is_undefined() {
            return x;
        }
        Interval::new(sqrt_down(x.lo), sqrt_up(x.hi))
    }

    pub fn ln(self) -> Interval {
        if self.is_undefined() || self.hi <= 0.0 {
            return Self::UNDEFINED;
        }
        let lo = if self.lo <= 0.0 {
            f64::NEG_INFINITY
        } else {
            self.lo.ln()
        };
        Interval::widened(lo, self.hi.ln())
    }

    pub fn exp(self) -> Interval {
        if self.is_undefined() {
            return self;
        }
        let w = Interval::widened(self.lo.exp(), self.hi.exp());
        Interval::new(w.lo.max(0.0), w.hi)
    }

    pub fn tanh(self) -> Interval {
        if self.is_undefined() {
            return self;
        }
        let w = Interval::widened(self.lo.tanh(), self.hi.tanh());
        Interval::new(w.lo.max(-1.0), w.hi.min(1.0))
    }

    pub fn sin(self) -> Interval {
        if self.is_undefined() {
            return self;
        }
        if !self.lo.is_finite() || !self.hi.is_finite() || self.width() >= TAU {
            return Interval::new(-1.0, 1.0);
        }
        let (a, b) = (self.lo.sin(), self.hi.sin());
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        // slack so that a critical point sitting on an endpoint is never missed
        let slack = 4.0 * f64::EPSILON * (1.0 + self.lo.abs().max(self.hi.abs()));
        if contains_phase(self.lo - slack, self.hi + slack, FRAC_PI_2) {
            hi = 1.0;
        }
        if contains_phase(self.lo - slack, self.hi + slack, -FRAC_PI_2) {
            lo = -1.0;
        }
        let w = Interval::widened(lo, hi);
        Interval::new(w.lo.max(-1.0), w.hi.min(1.0))
    }

    pub fn unary(self, op: UnaryOp) -> Interval {
        match op {
            UnaryOp::Sqrt => self.sqrt(),
            UnaryOp::Square => self.square(),
            UnaryOp::Log => self.ln(),
            UnaryOp::Exp => self.exp(),
            UnaryOp::Sin => self.sin(),
            UnaryOp::Tanh => self.tanh(),
            UnaryOp::Negate => self.neg(),
        }
    }

    pub fn binary(self, op: BinaryOp, y: Interval) -> Interval {
        match op {
            BinaryOp::Add => self.add(y),
            BinaryOp::Sub => self.sub(y),
            BinaryOp::Mul => self.mul(y),
            BinaryOp::Aq => self.aq(y),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_undefined() {
            f.write_str("undefined")
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

/// True if `phase + 2k·pi` lies in `[lo, hi]` for some integer k.
fn contains_phase(lo: f64, hi: f64, phase: f64) -> bool {
    let k = ((lo - phase) / TAU).ceil();
    phase + k * TAU <= hi || phase + (k - 1.0) * TAU >= lo
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Sqrt,
    Square,
    Log,
    Exp,
    Sin,
    Tanh,
    Negate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Aq,
}

pub fn interval_unary(op: UnaryOp, x: Interval) -> Interval {
    x.unary(op)
}

pub fn interval_binary(op: BinaryOp, x: Interval, y: Interval) -> Interval {
    x.binary(op, y)
}

// Directed rounding via error-free transformations.

fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() { f64::NEG_INFINITY } else { s };
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return if s.is_nan() { f64::INFINITY } else { s };
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

fn mul_exact(a: f64, b: f64) -> f64 {
    // 0 * inf = 0 for enclosure purposes
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

fn mul_down(a: f64, b: f64) -> f64 {
    let p = mul_exact(a, b);
    if !p.is_finite() || p == 0.0 {
        // product of finite nonzero numbers underflowing to zero
        if p == 0.0 && a != 0.0 && b != 0.0 && a.is_finite() && b.is_finite() {
            return if (a < 0.0) != (b < 0.0) { -f64::MIN_POSITIVE } else { 0.0 };
        }
        return p;
    }
    if a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

fn mul_up(a: f64, b: f64) -> f64 {
    let p = mul_exact(a, b);
    if !p.is_finite() || p == 0.0 {
        if p == 0.0 && a != 0.0 && b != 0.0 && a.is_finite() && b.is_finite() {
            return if (a < 0.0) != (b < 0.0) { 0.0 } else { f64::MIN_POSITIVE };
        }
        return p;
    }
    if a.mul_add(b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

fn div_down(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return q;
    }
    // residual a - q*b has the sign of (exact - q) for b > 0
    let r = (-q).mul_add(b, a);
    if (r < 0.0) == (b > 0.0) && r != 0.0 {
        q.next_down()
    } else {
        q
    }
}

fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return q;
    }
    let r = (-q).mul_add(b, a);
    if (r > 0.0) == (b > 0.0) && r != 0.0 {
        q.next_up()
    } else {
        q
    }
}

fn sqrt_down(x: f64) -> f64 {
    let r = x.sqrt();
    if r.is_finite() && r.mul_add(r, -x) > 0.0 {
        r.next_down().max(0.0)
    } else {
        r
    }
}

fn sqrt_up(x: f64) -> f64 {
    let r = x.sqrt();
    if r.is_finite() && r.mul_add(r, -x) < 0.0 {
        r.next_up()
    } else {
        r
    }
}

/// Per-variable domain intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox(Vec<Interval>);

impl IntervalBox {
    /// Panics if any member is undefined.
    pub fn new(intervals: Vec<Interval>) -> Self {
        assert!(
            intervals.iter().all(|i| !i.is_undefined()),
            "box members must be defined intervals"
        );
        Self(intervals)
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Self {
        Self::new(bounds.iter().map(|&(l, h)| Interval::new(l, h)).collect())
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn is_subset_of(&self, other: &IntervalBox) -> bool {
        self.dims() == other.dims()
            && self.0.iter().zip(&other.0).all(|(a, b)| a.is_subset_of(b))
    }

    /// Copy with dimension `dim` replaced.
    pub fn with(&self, dim: usize, interval: Interval) -> IntervalBox {
        let mut v = self.0.clone();
        v[dim] = interval;
        IntervalBox::new(v)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dims() && self.0.iter().zip(point).all(|(i, &p)| i.contains(p))
    }
}

impl std::ops::Index<usize> for IntervalBox {
    type Output = Interval;

    fn index(&self, i: usize) -> &Interval {
        &self.0[i]
    }
}

/// Interval enclosure of the tree's image over `domain`.
pub fn evaluate_interval(tree: &ExpressionTree, domain: &IntervalBox) -> Interval {
    evaluate(tree, domain, false)
}

/// Like [`evaluate_interval`], but Undefined unless the tree is finite at
/// every point of `domain`: partial functions must see inputs entirely inside
/// their domain and no intermediate enclosure may be unbounded.
pub fn evaluate_interval_strict(tree: &ExpressionTree, domain: &IntervalBox) -> Interval {
    evaluate(tree, domain, true)
}

fn evaluate(tree: &ExpressionTree, domain: &IntervalBox, strict: bool) -> Interval {
    let mut stack: Vec<Interval> = Vec::with_capacity(tree.len());
    for node in tree.nodes().iter().rev() {
        let v = match *node {
            Node::Parameter(v) => Interval::point(v),
            Node::Variable { index, weight } => Interval::point(weight).mul(domain[index]),
            Node::Function(s) => {
                let a = stack.pop().unwrap();
                let outside = match s {
                    Symbol::Sqrt => a.lo < 0.0,
                    Symbol::Log => a.lo <= 0.0,
                    _ => false,
                };
                if strict && outside {
                    return Interval::UNDEFINED;
                }
                match s {
                    Symbol::Sqrt => a.sqrt(),
                    Symbol::Square => a.square(),
                    Symbol::Log => a.ln(),
                    Symbol::Exp => a.exp(),
                    Symbol::Sin => a.sin(),
                    Symbol::Tanh => a.tanh(),
                    binary => {
                        let b = stack.pop().unwrap();
                        match binary {
                            Symbol::Add => a.add(b),
                            Symbol::Sub => a.sub(b),
                            Symbol::Mul => a.mul(b),
                            Symbol::Aq => a.aq(b),
                            _ => unreachable!(),
                        }
                    }
                }
            }
        };
        if strict && !(v.lo.is_finite() && v.hi.is_finite()) {
            return Interval::UNDEFINED;
        }
        stack.push(v);
    }
    stack.pop().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn dependency_problem() {
        let x = iv(1.0, 2.0);
        assert_eq!(x.sub(x), iv(-1.0, 1.0));
    }

    #[test]
    fn endpoint_sums_are_exact() {
        assert_eq!(iv(1.0, 2.0).add(iv(3.0, 4.0)), iv(4.0, 6.0));
        assert_eq!(iv(-1.0, 2.0).mul(iv(3.0, 4.0)), iv(-4.0, 8.0));
    }

    #[test]
    fn inexact_sums_round_outward() {
        let r = iv(0.1, 0.1).add(iv(0.2, 0.2));
        assert!(r.lo() < r.hi());
        assert!(r.contains(0.1 + 0.2));
    }

    #[test]
    fn product_matches_dense_sampling() {
        let (x, y) = (iv(-1.0, 2.0), iv(3.0, 4.0));
        let r = x.mul(y);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let n = 1000;
        for i in 0..=n {
            let a = -1.0 + 3.0 * i as f64 / n as f64;
            for j in 0..=n {
                let b = 3.0 + j as f64 / n as f64;
                let p = a * b;
                assert!(r.contains(p));
                lo = lo.min(p);
                hi = hi.max(p);
            }
        }
        assert!((r.lo() - lo).abs() <= 1e-12 && (r.hi() - hi).abs() <= 1e-12);
    }

    #[test]
    fn zero_times_infinity_is_zero() {
        let r = iv(0.0, 0.0).mul(Interval::ENTIRE);
        assert_eq!(r, iv(0.0, 0.0));
        let r = iv(0.0, 1.0).mul(iv(2.0, f64::INFINITY));
        assert_eq!(r, iv(0.0, f64::INFINITY));
    }

    #[test]
    fn unary_examples() {
        assert_eq!(iv(-1.0, 2.0).square(), iv(0.0, 4.0));
        assert_eq!(iv(-3.0, -2.0).square(), iv(4.0, 9.0));
        let e = iv(0.0, 1.0).exp();
        assert!(e.contains(1.0) && e.contains(std::f64::consts::E));
        assert!(e.width() < 1.72 + 1e-12);
        assert_eq!(iv(0.0, 10.0).sin(), iv(-1.0, 1.0));
        let s = iv(0.0, 1.0).sin();
        assert!(s.lo() <= 0.0 && s.hi() >= 1f64.sin() && s.hi() < 0.85);
        let s = iv(1.0, 2.0).sin();
        assert_eq!(s.hi(), 1.0);
        let s = iv(4.0, 5.0).sin();
        assert_eq!(s.lo(), -1.0);
    }

    #[test]
    fn partial_domains_are_intersected() {
        let r = iv(-1.0, 4.0).sqrt();
        assert_eq!(r, iv(0.0, 2.0));
        assert!(iv(-2.0, -1.0).sqrt().is_undefined());
        let l = iv(-1.0, 1.0).ln();
        assert_eq!(l.lo(), f64::NEG_INFINITY);
        assert!(l.contains(0.0));
        assert!(iv(-1.0, 0.0).ln().is_undefined());
    }

    #[test]
    fn undefined_absorbs() {
        let u = Interval::UNDEFINED;
        let x = iv(1.0, 2.0);
        for op in [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Aq] {
            assert!(interval_binary(op, u, x).is_undefined());
            assert!(interval_binary(op, x, u).is_undefined());
        }
        for op in [
            UnaryOp::Sqrt,
            UnaryOp::Square,
            UnaryOp::Log,
            UnaryOp::Exp,
            UnaryOp::Sin,
            UnaryOp::Tanh,
            UnaryOp::Negate,
        ] {
            assert!(interval_unary(op, u).is_undefined());
        }
        assert!(Interval::new(2.0, 1.0).is_undefined());
    }

    #[test]
    fn analytic_quotient_enclosure() {
        let r = iv(1.0, 1.0).aq(iv(0.0, 0.0));
        assert_eq!(r, iv(1.0, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, y) = (iv(-2.0, 3.0), iv(-1.0, 0.5));
        let r = x.aq(y);
        for _ in 0..10_000 {
            let a = rng.gen_range(-2.0..=3.0);
            let b = rng.gen_range(-1.0..=0.5);
            assert!(r.contains(a / (1.0f64 + b * b).sqrt()));
        }
    }

    #[test]
    fn variable_and_dependency_through_trees() {
        let t = ExpressionTree::variable(0, 1.0);
        let b = IntervalBox::from_bounds(&[(-2.0, 5.0)]);
        assert_eq!(evaluate_interval(&t, &b), iv(-2.0, 5.0));
        let t = ExpressionTree::binary(
            Symbol::Sub,
            ExpressionTree::variable(0, 1.0),
            ExpressionTree::variable(0, 1.0),
        );
        let b = IntervalBox::from_bounds(&[(1.0, 2.0)]);
        assert_eq!(evaluate_interval(&t, &b), iv(-1.0, 1.0));
    }

    #[test]
    fn sin_critical_points_by_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..2000 {
            let lo = rng.gen_range(-20.0..20.0);
            let hi = lo + rng.gen_range(0.0..7.0);
            let r = iv(lo, hi).sin();
            for k in 0..=200 {
                let x = (lo + (hi - lo) * k as f64 / 200.0).min(hi);
                assert!(r.contains(x.sin()), "sin[{lo},{hi}] = {r} misses {x}");
            }
        }
    }
}
