//! Differential 1- and 2-forms in the frame `dx, du, dv`.
//!
//! `dy` never appears: it is eliminated through
//! `2y dy = (12x^2 - u) dx - x du - dv`. On a single fiber `du = dv = 0`, so
//! only the `dx` slot of a 1-form is ever nonzero and every 2-form vanishes.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fun::{CurveFun, FunRecord};
use crate::poly::{Curve, CurvePoly, Var, Weight};
use crate::rat::Rat;

#[derive(Clone, PartialEq, Eq)]
pub struct DiffForm1 {
    pub dx: CurveFun,
    pub du: CurveFun,
    pub dv: CurveFun,
}

#[derive(Clone, PartialEq, Eq)]
pub struct DiffForm2 {
    pub dxdu: CurveFun,
    pub dxdv: CurveFun,
    pub dudv: CurveFun,
}

impl DiffForm1 {
    pub fn zero(curve: &Arc<Curve>) -> DiffForm1 {
        let z = CurveFun::zero(curve);
        DiffForm1 { dx: z.clone(), du: z.clone(), dv: z }
    }

    pub fn new(dx: CurveFun, du: CurveFun, dv: CurveFun) -> DiffForm1 {
        if !dx.curve().is_universal() {
            assert!(du.is_zero() && dv.is_zero(), "fiber forms have no du, dv part");
        }
        DiffForm1 { dx, du, dv }
    }

    /// `f dx`.
    pub fn dx(f: CurveFun) -> DiffForm1 {
        let z = CurveFun::zero(f.curve());
        DiffForm1 { dx: f, du: z.clone(), dv: z }
    }

    /// `f dx / y`, the invariant differential times `f`.
    pub fn dx_over_y(f: &CurveFun) -> DiffForm1 {
        DiffForm1::dx(f * &CurveFun::inv_y(f.curve()))
    }

    pub fn curve(&self) -> &Arc<Curve> {
        self.dx.curve()
    }

    pub fn is_zero(&self) -> bool {
        self.dx.is_zero() && self.du.is_zero() && self.dv.is_zero()
    }

    pub fn scale(&self, c: &Rat) -> DiffForm1 {
        DiffForm1 { dx: self.dx.scale(c), du: self.du.scale(c), dv: self.dv.scale(c) }
    }

    pub fn mul_fun(&self, f: &CurveFun) -> DiffForm1 {
        DiffForm1 { dx: &self.dx * f, du: &self.du * f, dv: &self.dv * f }
    }

    pub fn components(&self) -> [&CurveFun; 3] {
        [&self.dx, &self.du, &self.dv]
    }

    /// `G_m`-weight with `dx:-2, du:-4, dv:-6`.
    pub fn weight(&self) -> Weight {
        [(&self.dx, -2), (&self.du, -4), (&self.dv, -6)]
            .into_iter()
            .filter(|(f, _)| !f.is_zero())
            .fold(Weight::Zero, |w, (f, b)| w.join(f.weight().shift(b)))
    }

    /// Largest `Δ` exponent among the coefficient denominators.
    pub fn max_delta_exponent(&self) -> u32 {
        self.components().iter().map(|f| f.dpow()).max().unwrap_or(0)
    }

    /// Restrict to a fiber: substitute `u, v` and drop `du, dv`.
    pub fn specialize(&self, fiber: &Arc<Curve>) -> DiffForm1 {
        DiffForm1::dx(self.dx.specialize(fiber))
    }

    pub fn to_record(&self) -> FormRecord {
        FormRecord { dx: self.dx.to_record(), du: self.du.to_record(), dv: self.dv.to_record() }
    }

    pub fn from_record(curve: &Arc<Curve>, r: &FormRecord) -> DiffForm1 {
        DiffForm1::new(
            CurveFun::from_record(curve, &r.dx),
            CurveFun::from_record(curve, &r.du),
            CurveFun::from_record(curve, &r.dv),
        )
    }
}

/// Serialized 1-form `{dx, du, dv}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormRecord {
    pub dx: FunRecord,
    pub du: FunRecord,
    pub dv: FunRecord,
}

impl DiffForm2 {
    pub fn zero(curve: &Arc<Curve>) -> DiffForm2 {
        let z = CurveFun::zero(curve);
        DiffForm2 { dxdu: z.clone(), dxdv: z.clone(), dudv: z }
    }

    pub fn curve(&self) -> &Arc<Curve> {
        self.dxdu.curve()
    }

    pub fn is_zero(&self) -> bool {
        self.dxdu.is_zero() && self.dxdv.is_zero() && self.dudv.is_zero()
    }

    pub fn scale(&self, c: &Rat) -> DiffForm2 {
        DiffForm2 { dxdu: self.dxdu.scale(c), dxdv: self.dxdv.scale(c), dudv: self.dudv.scale(c) }
    }

    pub fn mul_fun(&self, f: &CurveFun) -> DiffForm2 {
        DiffForm2 { dxdu: &self.dxdu * f, dxdv: &self.dxdv * f, dudv: &self.dudv * f }
    }
}

/// `df`, with `dy` eliminated through the curve relation.
pub fn exterior_d(f: &CurveFun) -> DiffForm1 {
    let curve = f.curve().clone();
    let fy = f.partial(Var::Y);
    let dx = f.partial(Var::X);
    if fy.is_zero() && !curve.is_universal() {
        return DiffForm1::dx(dx);
    }
    // dy = ((12x^2 - u) dx - x du - dv) / (2y)
    let half_fy_over_y = &fy.scale(&Rat::new(1, 2)) * &CurveFun::inv_y(&curve);
    let cx = CurveFun::from_poly(&CurvePoly::x(&curve).pow(2).scale(&Rat::int(12)) - &CurvePoly::u(&curve));
    let dx = &dx + &(&half_fy_over_y * &cx);
    if !curve.is_universal() {
        return DiffForm1::dx(dx);
    }
    let du = &f.partial(Var::U) - &(&half_fy_over_y * &CurveFun::x(&curve));
    let dv = &f.partial(Var::V) - &half_fy_over_y;
    DiffForm1 { dx, du, dv }
}

pub fn wedge(a: &DiffForm1, b: &DiffForm1) -> DiffForm2 {
    DiffForm2 {
        dxdu: &(&a.dx * &b.du) - &(&a.du * &b.dx),
        dxdv: &(&a.dx * &b.dv) - &(&a.dv * &b.dx),
        dudv: &(&a.du * &b.dv) - &(&a.dv * &b.du),
    }
}

/// Exterior derivative of a 1-form.
pub fn d2(a: &DiffForm1) -> DiffForm2 {
    let curve = a.curve();
    let basis = |i: usize| {
        let one = CurveFun::one(curve);
        let z = CurveFun::zero(curve);
        match i {
            0 => DiffForm1 { dx: one, du: z.clone(), dv: z },
            1 => DiffForm1 { dx: z.clone(), du: one, dv: z },
            _ => DiffForm1 { dx: z.clone(), du: z, dv: one },
        }
    };
    let mut out = DiffForm2::zero(curve);
    for (i, c) in a.components().into_iter().enumerate() {
        if !c.is_zero() {
            out = &out + &wedge(&exterior_d(c), &basis(i));
        }
    }
    out
}

impl<'a> std::ops::Add<&'a DiffForm1> for &'a DiffForm1 {
    type Output = DiffForm1;
    fn add(self, o: &'a DiffForm1) -> DiffForm1 {
        DiffForm1 { dx: &self.dx + &o.dx, du: &self.du + &o.du, dv: &self.dv + &o.dv }
    }
}

impl<'a> std::ops::Sub<&'a DiffForm1> for &'a DiffForm1 {
    type Output = DiffForm1;
    fn sub(self, o: &'a DiffForm1) -> DiffForm1 {
        DiffForm1 { dx: &self.dx - &o.dx, du: &self.du - &o.du, dv: &self.dv - &o.dv }
    }
}

impl std::ops::Neg for &DiffForm1 {
    type Output = DiffForm1;
    fn neg(self) -> DiffForm1 {
        DiffForm1 { dx: -&self.dx, du: -&self.du, dv: -&self.dv }
    }
}

impl<'a> std::ops::Add<&'a DiffForm2> for &'a DiffForm2 {
    type Output = DiffForm2;
    fn add(self, o: &'a DiffForm2) -> DiffForm2 {
        DiffForm2 { dxdu: &self.dxdu + &o.dxdu, dxdv: &self.dxdv + &o.dxdv, dudv: &self.dudv + &o.dudv }
    }
}

impl<'a> std::ops::Sub<&'a DiffForm2> for &'a DiffForm2 {
    type Output = DiffForm2;
    fn sub(self, o: &'a DiffForm2) -> DiffForm2 {
        DiffForm2 { dxdu: &self.dxdu - &o.dxdu, dxdv: &self.dxdv - &o.dxdv, dudv: &self.dudv - &o.dudv }
    }
}

impl std::ops::Neg for &DiffForm2 {
    type Output = DiffForm2;
    fn neg(self) -> DiffForm2 {
        DiffForm2 { dxdu: -&self.dxdu, dxdv: -&self.dxdv, dudv: -&self.dudv }
    }
}

impl fmt::Display for DiffForm1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = [(&self.dx, "dx"), (&self.du, "du"), (&self.dv, "dv")]
            .into_iter()
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, b)| format!("({c}) {b}"))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl fmt::Debug for DiffForm1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffForm1({self})")
    }
}

impl fmt::Display for DiffForm2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = [(&self.dxdu, "dx^du"), (&self.dxdv, "dx^dv"), (&self.dudv, "du^dv")]
            .into_iter()
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, b)| format!("({c}) {b}"))
            .collect();
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

impl fmt::Debug for DiffForm2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffForm2({self})")
    }
}

/// `α = 2u dv - 3v du`.
pub fn alpha(curve: &Arc<Curve>) -> DiffForm1 {
    DiffForm1 {
        dx: CurveFun::zero(curve),
        du: CurveFun::v(curve).scale(&Rat::int(-3)),
        dv: CurveFun::u(curve).scale(&Rat::int(2)),
    }
}

/// `dΔ/Δ`.
pub fn dlog_discriminant(curve: &Arc<Curve>) -> DiffForm1 {
    exterior_d(&CurveFun::discriminant(curve)).mul_fun(&CurveFun::inv_discriminant(curve))
}
