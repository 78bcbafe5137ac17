//! Rational functions `num / (y^a Δ^b)` on the curve.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::poly::{Curve, CurvePoly, TermRecord, Var, Weight};
use crate::rat::Rat;

/// A function `num / (y^ypow Δ^dpow)` kept in canonical form: neither `y`
/// nor `Δ` divides `num` while the matching exponent is positive, and zero
/// always has both exponents zero.
#[derive(Clone, PartialEq, Eq)]
pub struct CurveFun {
    num: CurvePoly,
    ypow: u32,
    dpow: u32,
}

impl CurveFun {
    pub fn new(num: CurvePoly, ypow: u32, dpow: u32) -> CurveFun {
        assert!(dpow == 0 || num.curve().is_universal(), "Δ denominators only exist on the universal family");
        let mut f = CurveFun { num, ypow, dpow };
        f.canonicalize();
        f
    }

    fn canonicalize(&mut self) {
        if self.num.is_zero() {
            self.ypow = 0;
            self.dpow = 0;
            return;
        }
        while self.ypow > 0 {
            match self.num.div_y() {
                Some(q) => {
                    self.num = q;
                    self.ypow -= 1;
                }
                None => break,
            }
        }
        while self.dpow > 0 {
            match self.num.div_discriminant() {
                Some(q) => {
                    self.num = q;
                    self.dpow -= 1;
                }
                None => break,
            }
        }
    }

    pub fn from_poly(p: CurvePoly) -> CurveFun {
        CurveFun { num: p, ypow: 0, dpow: 0 }
    }

    pub fn zero(curve: &Arc<Curve>) -> CurveFun {
        CurveFun::from_poly(CurvePoly::zero(curve))
    }

    pub fn one(curve: &Arc<Curve>) -> CurveFun {
        CurveFun::from_poly(CurvePoly::one(curve))
    }

    pub fn constant(curve: &Arc<Curve>, c: Rat) -> CurveFun {
        CurveFun::from_poly(CurvePoly::constant(curve, c))
    }

    pub fn x(curve: &Arc<Curve>) -> CurveFun {
        CurveFun::from_poly(CurvePoly::x(curve))
    }

    pub fn y(curve: &Arc<Curve>) -> CurveFun {
        CurveFun::from_poly(CurvePoly::y(curve))
    }

    pub fn u(curve: &Arc<Curve>) -> CurveFun {
        CurveFun::from_poly(CurvePoly::u(curve))
    }

    pub fn v(curve: &Arc<Curve>) -> CurveFun {
        CurveFun::from_poly(CurvePoly::v(curve))
    }

    pub fn discriminant(curve: &Arc<Curve>) -> CurveFun {
        CurveFun::from_poly(CurvePoly::discriminant(curve))
    }

    /// `1/y`.
    pub fn inv_y(curve: &Arc<Curve>) -> CurveFun {
        CurveFun::new(CurvePoly::one(curve), 1, 0)
    }

    /// `1/Δ`. On a fiber this is the rational constant `1/Δ(u0, v0)`.
    pub fn inv_discriminant(curve: &Arc<Curve>) -> CurveFun {
        match curve.discriminant_value() {
            Some(d) => CurveFun::constant(curve, d.recip()),
            None => CurveFun::new(CurvePoly::one(curve), 0, 1),
        }
    }

    pub fn curve(&self) -> &Arc<Curve> {
        self.num.curve()
    }

    pub fn num(&self) -> &CurvePoly {
        &self.num
    }

    pub fn ypow(&self) -> u32 {
        self.ypow
    }

    pub fn dpow(&self) -> u32 {
        self.dpow
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The polynomial itself when there is no denominator.
    pub fn as_poly(&self) -> Option<&CurvePoly> {
        (self.ypow == 0 && self.dpow == 0).then_some(&self.num)
    }

    pub fn as_constant(&self) -> Option<Rat> {
        self.as_poly().and_then(|p| p.as_constant())
    }

    pub fn scale(&self, c: &Rat) -> CurveFun {
        if c.is_zero() {
            return CurveFun::zero(self.curve());
        }
        CurveFun { num: self.num.scale(c), ypow: self.ypow, dpow: self.dpow }
    }

    /// Numerator raised to a common denominator `y^a Δ^b` with `a >= ypow`, `b >= dpow`.
    fn lifted(&self, a: u32, b: u32) -> CurvePoly {
        let curve = self.curve();
        let mut n = self.num.clone();
        if a > self.ypow {
            n = &n * &CurvePoly::y(curve).pow(a - self.ypow);
        }
        if b > self.dpow {
            n = &n * &CurvePoly::discriminant(curve).pow(b - self.dpow);
        }
        n
    }

    pub fn pow(&self, e: u32) -> CurveFun {
        let mut acc = CurveFun::one(self.curve());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Divide by `y^a Δ^b`.
    pub fn div_y_delta(&self, a: u32, b: u32) -> CurveFun {
        if let Some(d) = self.curve().discriminant_value() {
            let s = self.scale(&d.recip().pow(b as i32));
            return CurveFun::new(s.num, s.ypow + a, 0);
        }
        CurveFun::new(self.num.clone(), self.ypow + a, self.dpow + b)
    }

    /// Partial derivative treating `x, y, u, v` as independent, with the
    /// quotient rule applied to the stored denominator.
    pub fn partial(&self, var: Var) -> CurveFun {
        let curve = self.curve();
        let n_d = CurveFun::new(self.num.partial(var), self.ypow, self.dpow);
        let mut out = n_d;
        if self.ypow > 0 && var == Var::Y {
            let t = CurveFun::new(self.num.scale(&Rat::int(-(self.ypow as i64))), self.ypow + 1, self.dpow);
            out = &out + &t;
        }
        if self.dpow > 0 && matches!(var, Var::U | Var::V) {
            let dd = CurvePoly::discriminant(curve).partial(var);
            let t = CurveFun::new(&self.num * &dd.scale(&Rat::int(-(self.dpow as i64))), self.ypow, self.dpow + 1);
            out = &out + &t;
        }
        out
    }

    pub fn weight(&self) -> Weight {
        self.num.weight().shift(3 * self.ypow as i64 + 12 * self.dpow as i64)
    }

    /// Substitute `u = u0`, `v = v0`.
    pub fn specialize(&self, fiber: &Arc<Curve>) -> CurveFun {
        let num = self.num.specialize(fiber);
        let d = fiber.discriminant_value().expect("specialize target must be a fiber");
        CurveFun::new(num.scale(&d.recip().pow(self.dpow as i32)), self.ypow, 0)
    }

    /// Whether no coefficient involves `x` or `y`.
    pub fn is_free_of_xy(&self) -> bool {
        self.ypow == 0 && self.num.is_free_of_xy()
    }

    pub fn eval_complex(
        &self,
        x: num_complex::Complex64,
        y: num_complex::Complex64,
        u: num_complex::Complex64,
        v: num_complex::Complex64,
    ) -> num_complex::Complex64 {
        let d = u * u * u - 27.0 * v * v;
        self.num.eval_complex(x, y, u, v) / (y.powu(self.ypow) * d.powu(self.dpow))
    }

    pub fn to_record(&self) -> FunRecord {
        FunRecord { num: self.num.to_records(), ypow: self.ypow, dpow: self.dpow }
    }

    pub fn from_record(curve: &Arc<Curve>, r: &FunRecord) -> CurveFun {
        CurveFun::new(CurvePoly::from_records(curve, &r.num), r.ypow, r.dpow)
    }
}

/// Serialized form `{num, ypow, dpow}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunRecord {
    pub num: Vec<TermRecord>,
    pub ypow: u32,
    pub dpow: u32,
}

impl<'a> std::ops::Add<&'a CurveFun> for &'a CurveFun {
    type Output = CurveFun;
    fn add(self, o: &'a CurveFun) -> CurveFun {
        if o.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return o.clone();
        }
        if self.ypow == o.ypow && self.dpow == o.dpow {
            return CurveFun::new(&self.num + &o.num, self.ypow, self.dpow);
        }
        let a = self.ypow.max(o.ypow);
        let b = self.dpow.max(o.dpow);
        CurveFun::new(&self.lifted(a, b) + &o.lifted(a, b), a, b)
    }
}

impl<'a> std::ops::Sub<&'a CurveFun> for &'a CurveFun {
    type Output = CurveFun;
    fn sub(self, o: &'a CurveFun) -> CurveFun {
        self + &(-o)
    }
}

impl std::ops::Neg for &CurveFun {
    type Output = CurveFun;
    fn neg(self) -> CurveFun {
        CurveFun { num: -&self.num, ypow: self.ypow, dpow: self.dpow }
    }
}

impl<'a> std::ops::Mul<&'a CurveFun> for &'a CurveFun {
    type Output = CurveFun;
    fn mul(self, o: &'a CurveFun) -> CurveFun {
        if self.is_zero() || o.is_zero() {
            return CurveFun::zero(self.curve());
        }
        CurveFun::new(&self.num * &o.num, self.ypow + o.ypow, self.dpow + o.dpow)
    }
}

impl fmt::Display for CurveFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let den = match (self.ypow, self.dpow) {
            (0, 0) => return write!(f, "{}", self.num),
            (a, 0) => pow_str("y", a),
            (0, b) => pow_str("Δ", b),
            (a, b) => format!("({}*{})", pow_str("y", a), pow_str("Δ", b)),
        };
        if self.num.len() == 1 {
            write!(f, "{}/{}", self.num, den)
        } else {
            write!(f, "({})/{}", self.num, den)
        }
    }
}

fn pow_str(name: &str, e: u32) -> String {
    if e == 1 {
        name.to_string()
    } else {
        format!("{name}^{e}")
    }
}

impl fmt::Debug for CurveFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CurveFun({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_y() {
        let c = Curve::universal();
        let y = CurveFun::y(&c);
        let q = &y * &CurveFun::inv_y(&c);
        assert_eq!(q, CurveFun::one(&c));
        let y2 = &y * &y;
        let r = &y2 * &CurveFun::inv_y(&c).pow(3);
        assert_eq!(r, CurveFun::inv_y(&c));
    }

    #[test]
    fn canonical_delta() {
        let c = Curve::universal();
        let d = CurveFun::discriminant(&c);
        let f = &(&d * &CurveFun::x(&c)) * &CurveFun::inv_discriminant(&c);
        assert_eq!(f, CurveFun::x(&c));
        assert_eq!(CurveFun::inv_discriminant(&c).dpow(), 1);
    }

    #[test]
    fn addition_common_denominator() {
        let c = Curve::universal();
        let a = CurveFun::inv_y(&c);
        let s = &a + &a.scale(&Rat::int(-1));
        assert!(s.is_zero());
        assert_eq!(s.ypow(), 0);
    }

    #[test]
    fn fiber_values() {
        let f = Curve::fiber(Rat::zero(), Rat::one()).unwrap();
        assert_eq!(CurveFun::inv_discriminant(&f).as_constant(), Some(Rat::new(-1, 27)));
        let u = Curve::universal();
        let g = CurveFun::inv_discriminant(&u).specialize(&f);
        assert_eq!(g.as_constant(), Some(Rat::new(-1, 27)));
    }

    #[test]
    fn weight_of_x_over_y() {
        let c = Curve::universal();
        let f = &CurveFun::x(&c) * &CurveFun::inv_y(&c);
        assert_eq!(f.weight(), Weight::Pure(1));
    }
}
