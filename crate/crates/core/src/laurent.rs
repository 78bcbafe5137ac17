//! Laurent expansions at the identity of the curve.
//!
//! The local parameter `s` is normalized so that `dx/y = ds`. Then
//! `x(s) = s^-2 + sum_{k>=1} c_k s^{2k}` with `c_k` in `Q[u, v]`, and
//! `y(s) = x'(s)`.

use std::fmt;
use std::sync::Arc;

use crate::forms::DiffForm1;
use crate::fun::CurveFun;
use crate::poly::{Curve, CurvePoly, Mono};
use crate::rat::Rat;
use crate::Error;

/// `sum_{e >= val} coeffs[e - val] s^e + O(s^prec)`.
///
/// Coefficients are functions of `u, v` only.
#[derive(Clone, PartialEq, Eq)]
pub struct LaurentSeries {
    curve: Arc<Curve>,
    val: i64,
    coeffs: Vec<CurveFun>,
    prec: i64,
}

impl LaurentSeries {
    pub fn new(curve: &Arc<Curve>, val: i64, coeffs: Vec<CurveFun>, prec: i64) -> LaurentSeries {
        let mut s = LaurentSeries { curve: curve.clone(), val, coeffs, prec };
        s.coeffs.truncate((prec - val).max(0) as usize);
        s
    }

    /// `c s^e + O(s^prec)`.
    pub fn monomial(curve: &Arc<Curve>, c: CurveFun, e: i64, prec: i64) -> LaurentSeries {
        LaurentSeries::new(curve, e, vec![c], prec)
    }

    pub fn curve(&self) -> &Arc<Curve> {
        &self.curve
    }

    /// Exponent below which every coefficient is known.
    pub fn prec(&self) -> i64 {
        self.prec
    }

    /// Coefficient of `s^e`; fails when `e` lies beyond the known precision.
    pub fn coeff(&self, e: i64) -> Result<CurveFun, Error> {
        if e >= self.prec {
            return Err(Error::TruncationTooShort { requested: e + 1, available: self.prec });
        }
        if e < self.val || (e - self.val) as usize >= self.coeffs.len() {
            return Ok(CurveFun::zero(&self.curve));
        }
        Ok(self.coeffs[(e - self.val) as usize].clone())
    }

    /// Lowest exponent with a nonzero coefficient, if any is known.
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs.iter().position(|c| !c.is_zero()).map(|i| self.val + i as i64)
    }

    /// Nonzero terms `(exponent, coefficient)` in increasing order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &CurveFun)> {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(move |(i, c)| (self.val + i as i64, c))
    }

    pub fn truncate(&self, prec: i64) -> LaurentSeries {
        LaurentSeries::new(&self.curve, self.val, self.coeffs.clone(), prec.min(self.prec))
    }

    pub fn scale(&self, c: &CurveFun) -> LaurentSeries {
        LaurentSeries {
            curve: self.curve.clone(),
            val: self.val,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            prec: self.prec,
        }
    }

    /// Termwise `d/ds`.
    pub fn derivative(&self) -> LaurentSeries {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, c)| c.scale(&Rat::int(self.val + i as i64))).collect();
        LaurentSeries::new(&self.curve, self.val - 1, coeffs, self.prec - 1)
    }

    /// Inverse of a series whose leading coefficient is a nonzero constant.
    pub fn inverse(&self) -> Result<LaurentSeries, Error> {
        let v = self.valuation().ok_or_else(|| Error::Domain("inverse of a series with no known nonzero term".into()))?;
        let lead = self.coeff(v)?.as_constant().ok_or_else(|| Error::Domain("leading coefficient is not a constant".into()))?;
        let inv_lead = lead.recip();
        let rel = self.prec - v;
        let a: Vec<CurveFun> = (0..rel).map(|i| self.coeff(v + i).unwrap()).collect();
        let mut b: Vec<CurveFun> = Vec::with_capacity(rel as usize);
        for n in 0..rel as usize {
            if n == 0 {
                b.push(CurveFun::constant(&self.curve, inv_lead.clone()));
                continue;
            }
            let mut acc = CurveFun::zero(&self.curve);
            for k in 1..=n {
                if !a[k].is_zero() && !b[n - k].is_zero() {
                    acc = &acc + &(&a[k] * &b[n - k]);
                }
            }
            b.push(acc.scale(&-&inv_lead));
        }
        Ok(LaurentSeries::new(&self.curve, -v, b, -v + rel))
    }
}

impl<'a> std::ops::Mul<&'a LaurentSeries> for &'a LaurentSeries {
    type Output = LaurentSeries;
    fn mul(self, o: &'a LaurentSeries) -> LaurentSeries {
        let val = self.val + o.val;
        let prec = (self.prec + o.val).min(o.prec + self.val);
        let n = (prec - val).max(0) as usize;
        let mut coeffs = vec![CurveFun::zero(&self.curve); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() || i >= n {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                if i + j >= n {
                    break;
                }
                if !b.is_zero() {
                    coeffs[i + j] = &coeffs[i + j] + &(a * b);
                }
            }
        }
        LaurentSeries::new(&self.curve, val, coeffs, prec)
    }
}

impl<'a> std::ops::Add<&'a LaurentSeries> for &'a LaurentSeries {
    type Output = LaurentSeries;
    fn add(self, o: &'a LaurentSeries) -> LaurentSeries {
        let val = self.val.min(o.val);
        let prec = self.prec.min(o.prec);
        let coeffs = (val..prec).map(|e| &self.coeff(e).unwrap() + &o.coeff(e).unwrap()).collect();
        LaurentSeries::new(&self.curve, val, coeffs, prec)
    }
}

impl<'a> std::ops::Sub<&'a LaurentSeries> for &'a LaurentSeries {
    type Output = LaurentSeries;
    fn sub(self, o: &'a LaurentSeries) -> LaurentSeries {
        self + &o.scale(&CurveFun::constant(&o.curve, -Rat::one()))
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (e, c) in self.terms() {
            write!(f, "({c}) s^{e} + ")?;
        }
        write!(f, "O(s^{})", self.prec)
    }
}

impl fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentSeries({self})")
    }
}

/// Expansions of `x` and `y` at the identity.
#[derive(Clone, Debug)]
pub struct WeierstrassData {
    pub xs: LaurentSeries,
    pub ys: LaurentSeries,
}

/// `x(s)` to `O(s^order)` and `y(s) = x'(s)` to `O(s^(order-1))`.
pub fn weierstrass_laurent(curve: &Arc<Curve>, order: i64) -> WeierstrassData {
    let kmax = ((order - 1) / 2).max(0) as usize;
    // c[k] is the coefficient of s^{2k}; c[0] stands for the constant term, which vanishes.
    let mut c: Vec<CurveFun> = vec![CurveFun::zero(curve); kmax + 1];
    for k in 1..=kmax {
        c[k] = match k {
            // s^0 of x'' = 6x^2 - u/2 gives 2 c_1 = 12 c_1 - u/2.
            1 => CurveFun::u(curve).scale(&Rat::new(1, 20)),
            // The second-order equation leaves c_2 free; the s^0 term of
            // y^2 = 4x^3 - ux - v fixes it: -16 c_2 - 12 c_2 + v = 0.
            2 => CurveFun::v(curve).scale(&Rat::new(1, 28)),
            _ => {
                // s^{2k-2} of x'' = 6x^2 - u/2: 2(2k+3)(k-2) c_k = 6 sum_{i+j=k-1} c_i c_j
                let mut acc = CurveFun::zero(curve);
                for i in 1..k - 1 {
                    acc = &acc + &(&c[i] * &c[k - 1 - i]);
                }
                acc.scale(&Rat::new(3, ((2 * k + 3) * (k - 2)) as i64))
            }
        };
    }
    let mut coeffs = vec![CurveFun::zero(curve); (order + 2).max(0) as usize];
    if !coeffs.is_empty() {
        coeffs[0] = CurveFun::one(curve);
    }
    for (k, ck) in c.iter().enumerate().skip(1) {
        let idx = 2 * k + 2;
        if idx < coeffs.len() {
            coeffs[idx] = ck.clone();
        }
    }
    let xs = LaurentSeries::new(curve, -2, coeffs, order);
    let ys = xs.derivative();
    WeierstrassData { xs, ys }
}

/// Expand `f` at the identity to `O(s^order)`.
pub fn laurent_at_identity(f: &CurveFun, order: i64) -> Result<LaurentSeries, Error> {
    // Cancellation can push the true valuation far above the nominal one, so
    // widen the working precision until the requested order is reached.
    let mut extra = 2 * degree_bound(f) + 3 * f.ypow() as i64 + 4;
    for _ in 0..8 {
        let data = weierstrass_laurent(f.curve(), order + extra);
        let s = laurent_with(&data, f)?;
        if s.prec() >= order {
            return Ok(s.truncate(order));
        }
        extra += (order - s.prec()) + 4;
    }
    Err(Error::TruncationTooShort { requested: order, available: order - extra })
}

fn degree_bound(f: &CurveFun) -> i64 {
    f.num().terms().map(|(m, _)| 2 * m.x as i64 + 3 * m.y as i64).max().unwrap_or(0)
}

/// Expand `f` using the supplied expansions of `x` and `y`.
pub fn laurent_with(data: &WeierstrassData, f: &CurveFun) -> Result<LaurentSeries, Error> {
    let curve = f.curve();
    let high = i64::MAX / 4;
    let mut xpow = vec![LaurentSeries::monomial(curve, CurveFun::one(curve), 0, high)];
    let mut acc: Option<LaurentSeries> = None;
    let (n0, n1) = f.num().split_y();
    for (part, extra_y) in [(n0, false), (n1, true)] {
        let mut by_x: std::collections::BTreeMap<u32, CurvePoly> = std::collections::BTreeMap::new();
        for (m, c) in part.terms() {
            let coef = CurvePoly::monomial(curve, c.clone(), Mono::new(0, 0, m.u, m.v));
            let e = by_x.entry(m.x).or_insert_with(|| CurvePoly::zero(curve));
            *e = &*e + &coef;
        }
        let mut sum: Option<LaurentSeries> = None;
        for (i, coef) in by_x {
            while xpow.len() <= i as usize {
                let next = &xpow[xpow.len() - 1] * &data.xs;
                xpow.push(next);
            }
            let t = xpow[i as usize].scale(&CurveFun::from_poly(coef));
            sum = Some(match sum {
                None => t,
                Some(s) => &s + &t,
            });
        }
        if let Some(mut s) = sum {
            if extra_y {
                s = &s * &data.ys;
            }
            acc = Some(match acc {
                None => s,
                Some(a) => &a + &s,
            });
        }
    }
    let mut out = acc.unwrap_or_else(|| LaurentSeries::new(curve, 0, vec![], high));
    if f.ypow() > 0 {
        let inv_y = data.ys.inverse()?;
        for _ in 0..f.ypow() {
            out = &out * &inv_y;
        }
    }
    if f.dpow() > 0 {
        out = out.scale(&CurveFun::inv_discriminant(curve).pow(f.dpow()));
    }
    Ok(out)
}

/// Expansion of the `dx` part of a 1-form as a multiple of `ds`.
///
/// With `dx = y ds`, the result is the expansion of `f y` for `f dx`.
pub fn form_at_identity(w: &DiffForm1, order: i64) -> Result<LaurentSeries, Error> {
    laurent_at_identity(&(&w.dx * &CurveFun::y(w.curve())), order)
}

/// Pole order of the `ds` coefficient of a 1-form (0 when regular).
pub fn form_pole_order(w: &DiffForm1) -> Result<i64, Error> {
    let s = form_at_identity(w, 1)?;
    Ok(s.valuation().map(|v| (-v).max(0)).unwrap_or(0))
}

/// Coefficient of `s^-1 ds`.
pub fn form_residue(w: &DiffForm1) -> Result<CurveFun, Error> {
    form_at_identity(w, 0).and_then(|s| s.coeff(-1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::exterior_d;

    #[test]
    fn x_expansion() {
        let c = Curve::universal();
        let w = weierstrass_laurent(&c, 6);
        assert_eq!(w.xs.coeff(-2).unwrap(), CurveFun::one(&c));
        assert_eq!(w.xs.coeff(2).unwrap(), CurveFun::u(&c).scale(&Rat::new(1, 20)));
        assert_eq!(w.xs.coeff(4).unwrap(), CurveFun::v(&c).scale(&Rat::new(1, 28)));
        assert!(w.xs.coeff(0).unwrap().is_zero());
        assert_eq!(w.ys.coeff(-3).unwrap(), CurveFun::constant(&c, Rat::int(-2)));
        assert!(w.xs.coeff(6).is_err());
    }

    #[test]
    fn p1_principal_part() {
        let c = Curve::universal();
        let f = &CurveFun::x(&c).pow(2).scale(&Rat::int(2)) * &CurveFun::inv_y(&c);
        let s = laurent_at_identity(&f, 1).unwrap();
        assert_eq!(s.valuation(), Some(-1));
        assert_eq!(s.coeff(-1).unwrap(), CurveFun::constant(&c, Rat::int(-1)));
        assert!(s.coeff(0).unwrap().is_zero());
    }

    #[test]
    fn regularized_t_form_is_regular() {
        let c = Curve::universal();
        let g = &CurveFun::x(&c).pow(2).scale(&Rat::int(2)) * &CurveFun::inv_y(&c);
        let w = &exterior_d(&g) - &DiffForm1::dx_over_y(&CurveFun::x(&c));
        assert_eq!(form_pole_order(&w).unwrap(), 0);
        assert_eq!(form_pole_order(&DiffForm1::dx_over_y(&CurveFun::x(&c))).unwrap(), 2);
        assert!(form_residue(&DiffForm1::dx_over_y(&CurveFun::x(&c))).unwrap().is_zero());
    }
}
