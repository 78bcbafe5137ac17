//! Polynomials on the affine Weierstrass curve `y^2 = 4x^3 - ux - v`.
//!
//! A [`CurvePoly`] lives either on the universal family, where `u` and `v` are
//! indeterminates, or on a single fiber with `u`, `v` fixed rationals. Stored
//! monomials always have `y`-degree at most one; every product is reduced with
//! `y^2 -> 4x^3 - ux - v` as it is formed.

use std::collections::BTreeMap;
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::rat::Rat;

/// Which curve the coordinate ring belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Curve {
    Universal,
    Fiber { u: Rat, v: Rat },
}

impl Curve {
    pub fn universal() -> Arc<Curve> {
        Arc::new(Curve::Universal)
    }

    /// A single fiber. Fails on the discriminant locus `u^3 = 27 v^2`.
    pub fn fiber(u: Rat, v: Rat) -> Result<Arc<Curve>, crate::Error> {
        let disc = &(&(&u * &u) * &u) - &(&Rat::int(27) * &(&v * &v));
        if disc.is_zero() {
            return Err(crate::Error::SingularFiber { u, v });
        }
        Ok(Arc::new(Curve::Fiber { u, v }))
    }

    pub fn is_universal(&self) -> bool {
        matches!(self, Curve::Universal)
    }

    /// `u^3 - 27 v^2` at a fiber.
    pub fn discriminant_value(&self) -> Option<Rat> {
        match self {
            Curve::Universal => None,
            Curve::Fiber { u, v } => Some(&(&(u * u) * u) - &(&Rat::int(27) * &(v * v))),
        }
    }

    /// The terms of `ux + v` in this ring, so that `y^2 = 4x^3 - (ux + v)`.
    fn cubic_tail(&self) -> [(Mono, Rat); 2] {
        match self {
            Curve::Universal => [
                (Mono::new(1, 0, 1, 0), Rat::one()),
                (Mono::new(0, 0, 0, 1), Rat::one()),
            ],
            Curve::Fiber { u, v } => [(Mono::new(1, 0, 0, 0), u.clone()), (Mono::ONE, v.clone())],
        }
    }
}

/// Exponents of `x^i y^j u^k v^l`, ordered graded-lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mono {
    pub x: u32,
    pub y: u32,
    pub u: u32,
    pub v: u32,
}

impl Mono {
    pub const ONE: Mono = Mono { x: 0, y: 0, u: 0, v: 0 };

    pub const fn new(x: u32, y: u32, u: u32, v: u32) -> Mono {
        Mono { x, y, u, v }
    }

    pub fn degree(&self) -> u32 {
        self.x + self.y + self.u + self.v
    }

    fn mul(&self, o: &Mono) -> Mono {
        Mono::new(self.x + o.x, self.y + o.y, self.u + o.u, self.v + o.v)
    }

    /// Weight under `x:-2, y:-3, u:-4, v:-6`.
    pub fn weight(&self) -> i64 {
        -2 * self.x as i64 - 3 * self.y as i64 - 4 * self.u as i64 - 6 * self.v as i64
    }
}

impl Ord for Mono {
    fn cmp(&self, o: &Mono) -> Ordering {
        self.degree()
            .cmp(&o.degree())
            .then(self.x.cmp(&o.x))
            .then(self.y.cmp(&o.y))
            .then(self.u.cmp(&o.u))
            .then(self.v.cmp(&o.v))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, o: &Mono) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Common weight of a collection of homogeneous pieces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    Zero,
    Pure(i64),
    Mixed,
}

impl Weight {
    pub fn join(self, o: Weight) -> Weight {
        match (self, o) {
            (Weight::Zero, w) | (w, Weight::Zero) => w,
            (Weight::Pure(a), Weight::Pure(b)) if a == b => Weight::Pure(a),
            _ => Weight::Mixed,
        }
    }

    pub fn shift(self, by: i64) -> Weight {
        match self {
            Weight::Pure(a) => Weight::Pure(a + by),
            w => w,
        }
    }
}

#[derive(Clone)]
pub struct CurvePoly {
    curve: Arc<Curve>,
    terms: BTreeMap<Mono, Rat>,
}

impl PartialEq for CurvePoly {
    fn eq(&self, o: &CurvePoly) -> bool {
        self.terms == o.terms && same_curve(&self.curve, &o.curve)
    }
}

impl Eq for CurvePoly {}

pub(crate) fn same_curve(a: &Arc<Curve>, b: &Arc<Curve>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn add_term(map: &mut BTreeMap<Mono, Rat>, m: Mono, c: Rat) {
    if c.is_zero() {
        return;
    }
    match map.entry(m) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += &c;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

impl CurvePoly {
    pub fn zero(curve: &Arc<Curve>) -> CurvePoly {
        CurvePoly { curve: curve.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(curve: &Arc<Curve>, c: Rat) -> CurvePoly {
        let mut p = CurvePoly::zero(curve);
        add_term(&mut p.terms, Mono::ONE, c);
        p
    }

    pub fn one(curve: &Arc<Curve>) -> CurvePoly {
        CurvePoly::constant(curve, Rat::one())
    }

    /// `c * x^i y^j u^k v^l`, reduced to normal form.
    pub fn monomial(curve: &Arc<Curve>, c: Rat, m: Mono) -> CurvePoly {
        CurvePoly::from_terms(curve, [(m, c)])
    }

    pub fn x(curve: &Arc<Curve>) -> CurvePoly {
        CurvePoly::monomial(curve, Rat::one(), Mono::new(1, 0, 0, 0))
    }

    pub fn y(curve: &Arc<Curve>) -> CurvePoly {
        CurvePoly::monomial(curve, Rat::one(), Mono::new(0, 1, 0, 0))
    }

    /// `u` on the universal family, the fixed value on a fiber.
    pub fn u(curve: &Arc<Curve>) -> CurvePoly {
        match &**curve {
            Curve::Universal => CurvePoly::monomial(curve, Rat::one(), Mono::new(0, 0, 1, 0)),
            Curve::Fiber { u, .. } => CurvePoly::constant(curve, u.clone()),
        }
    }

    pub fn v(curve: &Arc<Curve>) -> CurvePoly {
        match &**curve {
            Curve::Universal => CurvePoly::monomial(curve, Rat::one(), Mono::new(0, 0, 0, 1)),
            Curve::Fiber { v, .. } => CurvePoly::constant(curve, v.clone()),
        }
    }

    /// `u^3 - 27 v^2`.
    pub fn discriminant(curve: &Arc<Curve>) -> CurvePoly {
        let u = CurvePoly::u(curve);
        let v = CurvePoly::v(curve);
        &u.pow(3) - &v.pow(2).scale(&Rat::int(27))
    }

    /// Normal form of an arbitrary polynomial in `x, y, u, v`.
    ///
    /// On a fiber, `u` and `v` are replaced by the fiber values.
    pub fn from_terms(curve: &Arc<Curve>, terms: impl IntoIterator<Item = (Mono, Rat)>) -> CurvePoly {
        let mut acc = CurvePoly::zero(curve);
        for (m, c) in terms {
            if c.is_zero() {
                continue;
            }
            let (m, c) = match &**curve {
                Curve::Universal => (m, c),
                Curve::Fiber { u, v } => {
                    let c = &(&c * &u.pow(m.u as i32)) * &v.pow(m.v as i32);
                    (Mono::new(m.x, m.y, 0, 0), c)
                }
            };
            if m.y <= 1 {
                add_term(&mut acc.terms, m, c);
            } else {
                let base = CurvePoly::monomial(curve, c, Mono::new(m.x, m.y % 2, m.u, m.v));
                let cubic = CurvePoly::y_squared(curve);
                acc = &acc + &(&base * &cubic.pow(m.y / 2));
            }
        }
        acc
    }

    /// `4x^3 - ux - v`.
    pub fn y_squared(curve: &Arc<Curve>) -> CurvePoly {
        let mut p = CurvePoly::zero(curve);
        add_term(&mut p.terms, Mono::new(3, 0, 0, 0), Rat::int(4));
        for (m, c) in curve.cubic_tail() {
            add_term(&mut p.terms, m, -c);
        }
        p
    }

    pub fn curve(&self) -> &Arc<Curve> {
        &self.curve
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Rat)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Mono) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    /// Constant value, if the polynomial has no variables.
    pub fn as_constant(&self) -> Option<Rat> {
        match self.terms.len() {
            0 => Some(Rat::zero()),
            1 => self.terms.get(&Mono::ONE).cloned(),
            _ => None,
        }
    }

    pub fn is_free_of_xy(&self) -> bool {
        self.terms.keys().all(|m| m.x == 0 && m.y == 0)
    }

    pub fn scale(&self, c: &Rat) -> CurvePoly {
        if c.is_zero() {
            return CurvePoly::zero(&self.curve);
        }
        CurvePoly {
            curve: self.curve.clone(),
            terms: self.terms.iter().map(|(m, a)| (*m, a * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> CurvePoly {
        let mut acc = CurvePoly::one(&self.curve);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    fn check(&self, o: &CurvePoly) {
        assert!(same_curve(&self.curve, &o.curve), "polynomials on different curves");
    }

    /// Split `f0 + f1 y` into `(f0, f1)`.
    pub fn split_y(&self) -> (CurvePoly, CurvePoly) {
        let mut f0 = CurvePoly::zero(&self.curve);
        let mut f1 = CurvePoly::zero(&self.curve);
        for (m, c) in &self.terms {
            if m.y == 0 {
                f0.terms.insert(*m, c.clone());
            } else {
                f1.terms.insert(Mono::new(m.x, 0, m.u, m.v), c.clone());
            }
        }
        (f0, f1)
    }

    /// Inverse of [`split_y`](Self::split_y): `f0 + f1 y`.
    pub fn join_y(f0: &CurvePoly, f1: &CurvePoly) -> CurvePoly {
        let mut out = f0.clone();
        for (m, c) in &f1.terms {
            debug_assert_eq!(m.y, 0);
            add_term(&mut out.terms, Mono::new(m.x, m.y + 1, m.u, m.v), c.clone());
        }
        out
    }

    /// Exact quotient by `y`, if `y` divides in the coordinate ring.
    pub fn div_y(&self) -> Option<CurvePoly> {
        // y (g0 + g1 y) = g0 y + g1 (4x^3 - ux - v)
        let (c0, c1) = self.split_y();
        let g1 = c0.div_cubic()?;
        Some(CurvePoly::join_y(&c1, &g1))
    }

    /// Exact quotient of a `y`-free polynomial by `4x^3 - ux - v`.
    fn div_cubic(&self) -> Option<CurvePoly> {
        let tail = self.curve.cubic_tail();
        let mut rem = self.terms.clone();
        let mut quot = BTreeMap::new();
        let quarter = Rat::new(1, 4);
        loop {
            let lead = rem.iter().filter(|(m, _)| m.x >= 3).max_by_key(|(m, _)| (m.x, **m)).map(|(m, c)| (*m, c.clone()));
            let Some((m, c)) = lead else { break };
            let q = &c * &quarter;
            let qm = Mono::new(m.x - 3, 0, m.u, m.v);
            rem.remove(&m);
            for (tm, tc) in &tail {
                add_term(&mut rem, qm.mul(tm), &q * tc);
            }
            add_term(&mut quot, qm, q);
        }
        if rem.is_empty() {
            Some(CurvePoly { curve: self.curve.clone(), terms: quot })
        } else {
            None
        }
    }

    /// Exact quotient by `u^3 - 27 v^2` on the universal family.
    pub fn div_discriminant(&self) -> Option<CurvePoly> {
        if !self.curve.is_universal() || self.is_zero() {
            return if self.is_zero() { Some(self.clone()) } else { None };
        }
        let mut rem = self.terms.clone();
        let mut quot = BTreeMap::new();
        loop {
            let lead = rem.iter().filter(|(m, _)| m.u >= 3).max_by_key(|(m, _)| (m.u, **m)).map(|(m, c)| (*m, c.clone()));
            let Some((m, c)) = lead else { break };
            let qm = Mono::new(m.x, m.y, m.u - 3, m.v);
            rem.remove(&m);
            add_term(&mut rem, Mono::new(qm.x, qm.y, qm.u, qm.v + 2), &c * &Rat::int(27));
            add_term(&mut quot, qm, c);
        }
        if rem.is_empty() {
            Some(CurvePoly { curve: self.curve.clone(), terms: quot })
        } else {
            None
        }
    }

    /// Partial derivative of the stored representative in one variable.
    pub fn partial(&self, var: Var) -> CurvePoly {
        let mut out = CurvePoly::zero(&self.curve);
        for (m, c) in &self.terms {
            let (e, dm) = match var {
                Var::X if m.x > 0 => (m.x, Mono::new(m.x - 1, m.y, m.u, m.v)),
                Var::Y if m.y > 0 => (m.y, Mono::new(m.x, m.y - 1, m.u, m.v)),
                Var::U if m.u > 0 => (m.u, Mono::new(m.x, m.y, m.u - 1, m.v)),
                Var::V if m.v > 0 => (m.v, Mono::new(m.x, m.y, m.u, m.v - 1)),
                _ => continue,
            };
            add_term(&mut out.terms, dm, c * &Rat::int(e as i64));
        }
        out
    }

    /// Substitute fixed values for `u`, `v`, landing on that fiber.
    pub fn specialize(&self, fiber: &Arc<Curve>) -> CurvePoly {
        assert!(self.curve.is_universal(), "specialize expects a universal polynomial");
        CurvePoly::from_terms(fiber, self.terms.iter().map(|(m, c)| (*m, c.clone())))
    }

    /// Rebuild the same terms on another curve (used when moving a fiber
    /// polynomial between equal `Curve` handles).
    pub fn with_curve(&self, curve: &Arc<Curve>) -> CurvePoly {
        CurvePoly::from_terms(curve, self.terms.iter().map(|(m, c)| (*m, c.clone())))
    }

    pub fn weight(&self) -> Weight {
        self.terms.keys().fold(Weight::Zero, |w, m| w.join(Weight::Pure(m.weight())))
    }

    /// Largest `x`-degree among the `y`-free terms, if any.
    pub fn max_x_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.x).max()
    }

    pub fn eval_f64(&self, x: f64, y: f64, u: f64, v: f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| c.to_f64() * x.powi(m.x as i32) * y.powi(m.y as i32) * u.powi(m.u as i32) * v.powi(m.v as i32))
            .sum()
    }

    pub fn eval_complex(
        &self,
        x: num_complex::Complex64,
        y: num_complex::Complex64,
        u: num_complex::Complex64,
        v: num_complex::Complex64,
    ) -> num_complex::Complex64 {
        self.terms
            .iter()
            .map(|(m, c)| c.to_f64() * x.powu(m.x) * y.powu(m.y) * u.powu(m.u) * v.powu(m.v))
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    U,
    V,
}

impl<'a> std::ops::Add<&'a CurvePoly> for &'a CurvePoly {
    type Output = CurvePoly;
    fn add(self, o: &'a CurvePoly) -> CurvePoly {
        self.check(o);
        let mut out = self.clone();
        for (m, c) in &o.terms {
            add_term(&mut out.terms, *m, c.clone());
        }
        out
    }
}

impl<'a> std::ops::Sub<&'a CurvePoly> for &'a CurvePoly {
    type Output = CurvePoly;
    fn sub(self, o: &'a CurvePoly) -> CurvePoly {
        self.check(o);
        let mut out = self.clone();
        for (m, c) in &o.terms {
            add_term(&mut out.terms, *m, -c);
        }
        out
    }
}

impl std::ops::Neg for &CurvePoly {
    type Output = CurvePoly;
    fn neg(self) -> CurvePoly {
        self.scale(&-Rat::one())
    }
}

impl<'a> std::ops::Mul<&'a CurvePoly> for &'a CurvePoly {
    type Output = CurvePoly;
    fn mul(self, o: &'a CurvePoly) -> CurvePoly {
        self.check(o);
        let tail = self.curve.cubic_tail();
        let mut out = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                let m = ma.mul(mb);
                let c = ca * cb;
                if m.y < 2 {
                    add_term(&mut out, m, c);
                } else {
                    // x^i y^2 u^k v^l = 4 x^{i+3} u^k v^l - (ux + v) x^i u^k v^l
                    let base = Mono::new(m.x, 0, m.u, m.v);
                    add_term(&mut out, Mono::new(m.x + 3, 0, m.u, m.v), &c * &Rat::int(4));
                    for (tm, tc) in &tail {
                        add_term(&mut out, base.mul(tm), -(&c * tc));
                    }
                }
            }
        }
        CurvePoly { curve: self.curve.clone(), terms: out }
    }
}

impl fmt::Display for CurvePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Highest monomial first reads most naturally.
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mut vars = Vec::new();
            for (name, e) in [("x", m.x), ("y", m.y), ("u", m.u), ("v", m.v)] {
                match e {
                    0 => {}
                    1 => vars.push(name.to_string()),
                    _ => vars.push(format!("{name}^{e}")),
                }
            }
            if vars.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{a}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for CurvePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CurvePoly({self})")
    }
}

/// Serialized monomial record `{coeff, expx, expy, expu, expv}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub coeff: Rat,
    pub expx: u32,
    pub expy: u32,
    pub expu: u32,
    pub expv: u32,
}

impl CurvePoly {
    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(m, c)| TermRecord { coeff: c.clone(), expx: m.x, expy: m.y, expu: m.u, expv: m.v })
            .collect()
    }

    pub fn from_records(curve: &Arc<Curve>, recs: &[TermRecord]) -> CurvePoly {
        CurvePoly::from_terms(curve, recs.iter().map(|r| (Mono::new(r.expx, r.expy, r.expu, r.expv), r.coeff.clone())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni() -> Arc<Curve> {
        Curve::universal()
    }

    #[test]
    fn y_squared_reduces_to_cubic() {
        let c = uni();
        let y2 = CurvePoly::monomial(&c, Rat::one(), Mono::new(0, 2, 0, 0));
        assert_eq!(y2, CurvePoly::y_squared(&c));
        assert_eq!(y2.to_string(), "4*x^3 - x*u - v");
    }

    #[test]
    fn relation_maps_to_zero() {
        let c = uni();
        let raw = [
            (Mono::new(0, 2, 0, 0), Rat::one()),
            (Mono::new(3, 0, 0, 0), Rat::int(-4)),
            (Mono::new(1, 0, 1, 0), Rat::one()),
            (Mono::new(0, 0, 0, 1), Rat::one()),
        ];
        assert!(CurvePoly::from_terms(&c, raw).is_zero());
    }

    #[test]
    fn y_cubed() {
        let c = uni();
        let y3 = CurvePoly::monomial(&c, Rat::one(), Mono::new(0, 3, 0, 0));
        let expect = &CurvePoly::y_squared(&c) * &CurvePoly::y(&c);
        assert_eq!(y3, expect);
        assert!(y3.terms().all(|(m, _)| m.y == 1));
    }

    #[test]
    fn fiber_substitution() {
        let f = Curve::fiber(Rat::int(4), Rat::int(1)).unwrap();
        assert_eq!(CurvePoly::discriminant(&f).as_constant(), Some(Rat::int(37)));
        let xu = &CurvePoly::x(&uni()) * &CurvePoly::u(&uni());
        assert_eq!(xu.specialize(&f), CurvePoly::x(&f).scale(&Rat::int(4)));
        assert!(Curve::fiber(Rat::int(3), Rat::int(1)).is_err());
    }

    #[test]
    fn divisions() {
        let c = uni();
        let y = CurvePoly::y(&c);
        let g = &CurvePoly::x(&c) + &y;
        let p = &y * &g;
        assert_eq!(p.div_y(), Some(g.clone()));
        assert_eq!(CurvePoly::x(&c).div_y(), None);
        let d = CurvePoly::discriminant(&c);
        let q = &d * &g;
        assert_eq!(q.div_discriminant(), Some(g));
        assert_eq!(CurvePoly::u(&c).div_discriminant(), None);
    }

    #[test]
    fn weights() {
        let c = uni();
        assert_eq!(CurvePoly::discriminant(&c).weight(), Weight::Pure(-12));
        let xu = &CurvePoly::x(&c) + &CurvePoly::u(&c);
        assert_eq!(xu.weight(), Weight::Mixed);
    }
}
