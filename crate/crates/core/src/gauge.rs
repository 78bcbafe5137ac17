//! Degree-by-degree solver for `dg = g ν_src - ν_tgt g` on a single curve.
//!
//! One-forms on the affine curve are written `f dx/y` with `f` polynomial in
//! `x, y`, and reduced modulo exact forms to the basis `dx/y, x dx/y`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::connection::{gauge_transform, Connection, GaugeFun};
use crate::freelie::{basis, bracket_with, AssocElt, Coeff, Derivation, LieElt, Word, S, T};
use crate::fun::CurveFun;
use crate::linalg::{solve, Equation, Solution};
use crate::poly::{Curve, CurvePoly, Mono, Var};
use crate::rat::Rat;
use crate::Error;

/// Coordinates against `[dx/y]` and `[x dx/y]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CohomClass {
    pub c1: CurvePoly,
    pub c2: CurvePoly,
}

impl CohomClass {
    pub fn is_zero(&self) -> bool {
        self.c1.is_zero() && self.c2.is_zero()
    }
}

/// `d(p)` in units of `dx/y`: `p_x y + p_y (6x^2 - u/2)`.
pub fn exact_part(p: &CurvePoly) -> CurvePoly {
    let c = p.curve();
    let dy = &CurvePoly::x(c).pow(2).scale(&Rat::int(6)) - &CurvePoly::u(c).scale(&Rat::new(1, 2));
    &(&p.partial(Var::X) * &CurvePoly::y(c)) + &(&p.partial(Var::Y) * &dy)
}

/// Coefficient of `x^m` in a `y`-free polynomial, as a polynomial in `u, v`.
fn x_coeff(f: &CurvePoly, m: u32) -> CurvePoly {
    CurvePoly::from_terms(
        f.curve(),
        f.terms().filter(|(k, _)| k.x == m).map(|(k, c)| (Mono::new(0, 0, k.u, k.v), c.clone())),
    )
}

fn x_pow(curve: &Arc<Curve>, k: u32) -> CurvePoly {
    CurvePoly::x(curve).pow(k)
}

/// Write `f dx/y = c1 dx/y + c2 x dx/y + d(primitive)`.
pub fn reduce_form(f: &CurvePoly) -> (CohomClass, CurvePoly) {
    let curve = f.curve().clone();
    let (mut f0, f1) = f.split_y();
    let mut prim = CurvePoly::zero(&curve);
    // f1(x) y dx/y = f1(x) dx
    for (m, c) in f1.terms() {
        let e = m.x + 1;
        prim = &prim + &CurvePoly::monomial(&curve, c / &Rat::int(e as i64), Mono::new(e, 0, m.u, m.v));
    }
    // x^{k+2} dx/y = [d(x^k y) + (k+1/2) u x^k dx/y + k v x^{k-1} dx/y] / (4k+6)
    while let Some(m) = f0.max_x_degree().filter(|&m| m >= 2) {
        let a = x_coeff(&f0, m);
        let k = m - 2;
        let scale = Rat::int(4 * k as i64 + 6).recip();
        let a = a.scale(&scale);
        prim = &prim + &(&a * &(&x_pow(&curve, k) * &CurvePoly::y(&curve)));
        let lead = &a * &x_pow(&curve, m);
        f0 = &f0 - &lead.scale(&Rat::int(4 * k as i64 + 6));
        let mut low = &(&a * &CurvePoly::u(&curve)) * &x_pow(&curve, k);
        low = low.scale(&(&Rat::int(k as i64) + &Rat::new(1, 2)));
        if k >= 1 {
            low = &low + &(&(&a * &CurvePoly::v(&curve)) * &x_pow(&curve, k - 1)).scale(&Rat::int(k as i64));
        }
        f0 = &f0 + &low;
    }
    let class = CohomClass { c1: x_coeff(&f0, 0), c2: x_coeff(&f0, 1) };
    (class, prim)
}

/// A polynomial coefficient that is affine in unknown rational constants.
#[derive(Clone, Debug, PartialEq)]
pub struct Aff {
    base: CurvePoly,
    lin: BTreeMap<usize, CurvePoly>,
}

impl Aff {
    fn known(p: CurvePoly) -> Aff {
        Aff { base: p, lin: BTreeMap::new() }
    }

    fn unknown(curve: &Arc<Curve>, j: usize) -> Aff {
        Aff { base: CurvePoly::zero(curve), lin: BTreeMap::from([(j, CurvePoly::one(curve))]) }
    }

    fn mul_poly(&self, p: &CurvePoly) -> Aff {
        let mut lin = BTreeMap::new();
        for (j, q) in &self.lin {
            let r = q * p;
            if !r.is_zero() {
                lin.insert(*j, r);
            }
        }
        Aff { base: &self.base * p, lin }
    }

    /// Product where at most one side still carries unknowns.
    fn mul(&self, o: &Aff) -> Aff {
        if self.lin.is_empty() {
            o.mul_poly(&self.base)
        } else {
            assert!(o.lin.is_empty(), "product of two unresolved coefficients");
            self.mul_poly(&o.base)
        }
    }

    fn substitute(&self, values: &BTreeMap<usize, Rat>) -> Aff {
        let mut out = Aff::known(self.base.clone());
        for (j, q) in &self.lin {
            match values.get(j) {
                Some(c) => out.base = &out.base + &q.scale(c),
                None => {
                    out.lin.insert(*j, q.clone());
                }
            }
        }
        out
    }

    fn as_known(&self) -> &CurvePoly {
        assert!(self.lin.is_empty(), "unresolved constant left in coefficient");
        &self.base
    }
}

impl Coeff for Aff {
    fn is_zero(&self) -> bool {
        self.base.is_zero() && self.lin.is_empty()
    }

    fn plus(&self, o: &Aff) -> Aff {
        let mut lin = self.lin.clone();
        for (j, q) in &o.lin {
            let r = match lin.get(j) {
                Some(p) => p + q,
                None => q.clone(),
            };
            if r.is_zero() {
                lin.remove(j);
            } else {
                lin.insert(*j, r);
            }
        }
        Aff { base: &self.base + &o.base, lin }
    }

    fn negate(&self) -> Aff {
        self.times(&-Rat::one())
    }

    fn times(&self, r: &Rat) -> Aff {
        if r.is_zero() {
            return Aff::known(CurvePoly::zero(self.base.curve()));
        }
        Aff { base: self.base.scale(r), lin: self.lin.iter().map(|(j, q)| (*j, q.scale(r))).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `g` in the associative completion, acting by conjugation.
    Inner,
    /// `g` an automorphism of the free Lie algebra.
    Full,
}

/// A linear condition on integration constants.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    /// Where it came from, e.g. `TTS, x dx/y`.
    pub source: String,
    pub terms: Vec<(String, Rat)>,
    pub rhs: Rat,
}

impl Constraint {
    /// The value forced on `name` when this constraint involves only it.
    pub fn forces(&self, name: &str) -> Option<Rat> {
        match self.terms.as_slice() {
            [(n, c)] if n == name => Some(&self.rhs / c),
            _ => None,
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let [(n, c)] = self.terms.as_slice() {
            return write!(f, "{n} = {}  ({})", &self.rhs / c, self.source);
        }
        let mut first = true;
        for (n, c) in &self.terms {
            let (sign, abs) = if c.is_negative() { ("-", -c.clone()) } else { ("+", c.clone()) };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if abs.is_one() {
                write!(f, "{n}")?;
            } else {
                write!(f, "{abs}*{n}")?;
            }
            first = false;
        }
        write!(f, " = {}  ({})", self.rhs, self.source)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Obstruction {
    pub degree: usize,
    /// Every class condition produced at this degree.
    pub constraints: Vec<Constraint>,
    /// A subset whose combination reads `0 = nonzero`.
    pub conflict: Vec<Constraint>,
}

impl Obstruction {
    /// Whether the conflict forces two different values on `name`.
    pub fn forces_two_values(&self, name: &str, a: &Rat, b: &Rat) -> bool {
        let vals: Vec<Rat> = self.conflict.iter().filter_map(|c| c.forces(name)).collect();
        vals.contains(a) && vals.contains(b)
    }
}

impl fmt::Display for Obstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "obstruction at degree {}", self.degree)?;
        for c in &self.conflict {
            writeln!(f, "  {c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Solved {
    pub mode: Mode,
    pub degree: usize,
    /// `log g` as a derivation.
    pub gauge: GaugeFun,
    /// Images of `S` and `T` under `g` (full mode), or `g` itself (inner mode, as a Lie element `log g`).
    pub image_s: LieElt<CurvePoly>,
    pub image_t: LieElt<CurvePoly>,
    /// Constants no condition determined; they were set to zero.
    pub free: Vec<String>,
    /// `gauge_transform(source, g) == target` at the working degree.
    pub residual_zero: bool,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Success(Box<Solved>),
    Obstructed(Obstruction),
}

#[derive(Clone, Debug)]
pub struct GaugeProblem {
    pub source: Connection,
    pub target: Connection,
    pub mode: Mode,
    pub degree: usize,
}

/// Inner connection on a fiber as a Lie element with `dx/y` coefficients.
fn poly_element(c: &Connection, n: usize) -> Result<LieElt<CurvePoly>, Error> {
    let u = c.inner_element().ok_or_else(|| Error::Domain("gauge problems need inner connections".into()))?;
    let y = CurveFun::y(c.curve());
    let mut out = LieElt::zero(n);
    for (i, w) in u.terms() {
        let f = &w.dx * &y;
        let p = f.as_poly().cloned().ok_or_else(|| Error::Domain("coefficient is not regular on the affine curve".into()))?;
        out.add_term(i, p);
    }
    Ok(out)
}

const GREEK: [(&str, &str); 14] = [
    ("T", "α"),
    ("S", "β"),
    ("TT", "γ"),
    ("ST", "λ"),
    ("TS", "μ"),
    ("SS", "δ"),
    ("TTT", "σ"),
    ("TTS", "ζ"),
    ("TST", "η"),
    ("TSS", "ξ"),
    ("STT", "τ"),
    ("STS", "κ"),
    ("SST", "ε"),
    ("SSS", "ι"),
];

fn word_name(w: &Word) -> String {
    let s = w.to_string();
    GREEK.iter().find(|(k, _)| *k == s).map(|(_, g)| g.to_string()).unwrap_or_else(|| format!("c[{s}]"))
}

/// Bookkeeping for integration constants.
struct Unknowns {
    names: Vec<String>,
}

impl Unknowns {
    fn add(&mut self, name: String) -> usize {
        self.names.push(name);
        self.names.len() - 1
    }
}

/// Class conditions for one residual coefficient.
fn class_equations(f: &Aff, source: &str, out: &mut Vec<(Equation, String)>) -> Result<(), Error> {
    let (cb, _) = reduce_form(&f.base);
    let lin: Vec<(usize, CohomClass)> = f.lin.iter().map(|(j, q)| (*j, reduce_form(q).0)).collect();
    let konst = |p: &CurvePoly| p.as_constant().ok_or_else(|| Error::Domain("class is not constant; solve on a fiber".into()));
    for (which, pick) in [("dx/y", 0), ("x dx/y", 1)] {
        let get = |c: &CohomClass| if pick == 0 { c.c1.clone() } else { c.c2.clone() };
        let mut coeffs = Vec::new();
        for (j, c) in &lin {
            coeffs.push((*j, konst(&get(c))?));
        }
        let eq = Equation::new(coeffs, -konst(&get(&cb))?);
        if !eq.is_trivial() {
            out.push((eq, format!("{source}, {which}")));
        }
    }
    Ok(())
}

fn to_constraint(eq: &Equation, source: &str, names: &[String]) -> Constraint {
    Constraint {
        source: source.to_string(),
        terms: eq.coeffs.iter().map(|(j, c)| (names[*j].clone(), c.clone())).collect(),
        rhs: eq.rhs.clone(),
    }
}

/// Solve the class conditions of one degree; substitute into `subst`.
fn settle(
    degree: usize,
    eqs: &[(Equation, String)],
    pending: &[usize],
    unknowns: &Unknowns,
    free_out: &mut Vec<String>,
) -> Result<BTreeMap<usize, Rat>, Obstruction> {
    // Re-index pending unknowns densely.
    let index: BTreeMap<usize, usize> = pending.iter().enumerate().map(|(k, j)| (*j, k)).collect();
    let local: Vec<Equation> = eqs
        .iter()
        .map(|(e, _)| Equation::new(e.coeffs.iter().map(|(j, c)| (index[j], c.clone())), e.rhs.clone()))
        .collect();
    match solve(pending.len(), &local) {
        Solution::Solved { values, free } => {
            for k in free {
                free_out.push(unknowns.names[pending[k]].clone());
            }
            Ok(pending.iter().zip(values).map(|(j, v)| (*j, v)).collect())
        }
        Solution::Inconsistent { certificate } => Err(Obstruction {
            degree,
            constraints: eqs.iter().map(|(e, s)| to_constraint(e, s, &unknowns.names)).collect(),
            conflict: certificate.iter().map(|(r, _)| to_constraint(&eqs[*r].0, &eqs[*r].1, &unknowns.names)).collect(),
        }),
    }
}

pub fn solve_gauge(p: &GaugeProblem) -> Result<Outcome, Error> {
    let curve = p.source.curve().clone();
    if curve.is_universal() {
        return Err(Error::Domain("the gauge solver works on a single fiber".into()));
    }
    if p.source.degree() < p.degree || p.target.degree() < p.degree {
        return Err(Error::TruncationTooShort {
            requested: p.degree as i64,
            available: p.source.degree().min(p.target.degree()) as i64,
        });
    }
    match p.mode {
        Mode::Inner => solve_inner(p, &curve),
        Mode::Full => solve_full(p, &curve),
    }
}

fn solve_inner(p: &GaugeProblem, curve: &Arc<Curve>) -> Result<Outcome, Error> {
    let n = p.degree;
    let lift = |c: &Connection| -> Result<AssocElt<Aff>, Error> {
        Ok(poly_element(c, n)?.to_assoc().map(|q| Aff::known(q.clone())))
    };
    let nu_src = lift(&p.source)?;
    let nu_tgt = lift(&p.target)?;
    let mut g = AssocElt::from_terms(n, [(Word(vec![]), Aff::known(CurvePoly::one(curve)))]);
    let mut unknowns = Unknowns { names: Vec::new() };
    let mut pending: Vec<usize> = Vec::new();
    let mut free = Vec::new();
    let mul = |a: &Aff, b: &Aff| a.mul(b);
    for d in 1..=n {
        let r = g.mul_with(&nu_src, mul).minus(&nu_tgt.mul_with(&g, mul));
        let mut eqs = Vec::new();
        let words: Vec<(Word, Aff)> = r.terms().filter(|(w, _)| w.len() == d).map(|(w, c)| (w.clone(), c.clone())).collect();
        for (w, c) in &words {
            class_equations(c, &w.to_string(), &mut eqs)?;
        }
        let values = match settle(d, &eqs, &pending, &unknowns, &mut free) {
            Ok(v) => v,
            Err(o) => return Ok(Outcome::Obstructed(o)),
        };
        g = g.map(|c| c.substitute(&values));
        let r = r.map(|c| c.substitute(&values));
        pending.clear();
        for w in all_words_of(d) {
            let prim = match r.coeff(&w) {
                Some(c) => reduce_form(c.as_known()).1,
                None => CurvePoly::zero(curve),
            };
            let j = unknowns.add(word_name(&w));
            pending.push(j);
            g.add_term(w, Aff::known(prim).plus(&Aff::unknown(curve, j)));
        }
    }
    let zeros: BTreeMap<usize, Rat> = pending.iter().map(|j| (*j, Rat::zero())).collect();
    free.extend(pending.iter().map(|j| unknowns.names[*j].clone()));
    let g = g.map(|c| c.substitute(&zeros).as_known().clone());
    let log = g.log_with(CurvePoly::one(curve), |a, b| a * b)?;
    let a = project_poly(&log, n);
    let h = Derivation::inner(&a.map(|q| CurveFun::from_poly(q.clone())));
    finish(p, Mode::Inner, GaugeFun { h }, a.clone(), a, free)
}

fn all_words_of(d: usize) -> Vec<Word> {
    let mut out = vec![Word(vec![])];
    for _ in 0..d {
        out = out.into_iter().flat_map(|w| [T, S].map(|l| Word([w.0.clone(), vec![l]].concat()))).collect();
    }
    out.sort();
    out
}

/// Project a primitive associative element with polynomial coefficients to the Lie basis.
fn project_poly(x: &AssocElt<CurvePoly>, n: usize) -> LieElt<CurvePoly> {
    let curve = match x.terms().next() {
        Some((_, c)) => c.curve().clone(),
        None => return LieElt::zero(n),
    };
    let mut by_mono: BTreeMap<Mono, BTreeMap<Word, Rat>> = BTreeMap::new();
    for (w, c) in x.terms() {
        if w.len() == 0 {
            continue;
        }
        for (m, r) in c.terms() {
            by_mono.entry(*m).or_default().insert(w.clone(), r.clone());
        }
    }
    let mut out = LieElt::zero(n);
    for (m, p) in by_mono {
        for (i, r) in basis().project(p) {
            out.add_term(i, CurvePoly::monomial(&curve, r, m));
        }
    }
    out
}

/// Images of all basis elements under the Lie homomorphism `S -> gs, T -> gt`.
fn hom_images<C: Coeff>(gs: &LieElt<C>, gt: &LieElt<C>, n: usize, mul: impl Fn(&C, &C) -> C + Copy) -> Vec<LieElt<C>> {
    let b = basis();
    let mut out: Vec<LieElt<C>> = Vec::with_capacity(b.size_upto(n));
    for i in 0..b.size_upto(n) {
        let img = match b.factors(i) {
            None => {
                if b.word(i).0[0] == S {
                    gs.clone()
                } else {
                    gt.clone()
                }
            }
            Some((a, c)) => bracket_with(&out[a], &out[c], mul),
        };
        out.push(img);
    }
    out
}

fn apply_images<C: Coeff>(imgs: &[LieElt<C>], x: &LieElt<CurvePoly>, n: usize, mul: impl Fn(&CurvePoly, &C) -> C) -> LieElt<C> {
    let mut out = LieElt::zero(n);
    for (i, f) in x.terms() {
        for (k, c) in imgs[i].terms() {
            out.add_term(k, mul(f, c));
        }
    }
    out
}

fn solve_full(p: &GaugeProblem, curve: &Arc<Curve>) -> Result<Outcome, Error> {
    let deg = p.degree;
    let n = deg + 1;
    let src = poly_element(&p.source, n)?;
    let tgt = poly_element(&p.target, n)?;
    let src_d = Derivation::inner(&src);
    let tgt_d = Derivation::inner(&tgt);
    let b = basis();
    let one = Aff::known(CurvePoly::one(curve));
    let mut gs: LieElt<Aff> = LieElt::basis_elt(n, b.generator(S), one.clone());
    let mut gt: LieElt<Aff> = LieElt::basis_elt(n, b.generator(T), one);
    let mut unknowns = Unknowns { names: Vec::new() };
    let mut pending: Vec<usize> = Vec::new();
    let mut free = Vec::new();
    let amul = |a: &Aff, c: &Aff| a.mul(c);
    for d in 1..=deg {
        // Only Lie degree d+1 is needed; cutting there keeps products linear in unknowns.
        let (gs_d, gt_d) = (gs.truncate(d + 1), gt.truncate(d + 1));
        let imgs = hom_images(&gs_d, &gt_d, d + 1, amul);
        let mut residuals = Vec::new();
        let mut eqs = Vec::new();
        for (letter, gx) in [(S, &gs_d), (T, &gt_d)] {
            // g(ν_src(X)) - ν_tgt(g(X))
            let lhs = apply_images(&imgs, &src_d.on(letter).truncate(d + 1), n, |f, c| c.mul_poly(f));
            let rhs = tgt_d.apply_with(gx, |f, c: &Aff| c.mul_poly(f));
            let r = lhs.minus(&rhs).degree_part(d + 1);
            for (i, c) in r.terms() {
                let name = format!("{}->{}", if letter == S { "S" } else { "T" }, b.bracket_string(i));
                class_equations(c, &name, &mut eqs)?;
            }
            residuals.push((letter, r));
        }
        let values = match settle(d, &eqs, &pending, &unknowns, &mut free) {
            Ok(v) => v,
            Err(o) => return Ok(Outcome::Obstructed(o)),
        };
        gs = gs.map(|c| c.substitute(&values));
        gt = gt.map(|c| c.substitute(&values));
        pending.clear();
        for (letter, r) in residuals {
            let r = r.map(|c| c.substitute(&values));
            let mut add = LieElt::zero(n);
            for i in b.size_upto(d)..b.size_upto(d + 1) {
                let prim = match r.get(i) {
                    Some(c) => reduce_form(c.as_known()).1,
                    None => CurvePoly::zero(curve),
                };
                let name = format!("c[{}->{}]", if letter == S { "S" } else { "T" }, b.bracket_string(i));
                let j = unknowns.add(name);
                pending.push(j);
                add.add_term(i, Aff::known(prim).plus(&Aff::unknown(curve, j)));
            }
            if letter == S {
                gs = gs.plus(&add);
            } else {
                gt = gt.plus(&add);
            }
        }
    }
    let zeros: BTreeMap<usize, Rat> = pending.iter().map(|j| (*j, Rat::zero())).collect();
    free.extend(pending.iter().map(|j| unknowns.names[*j].clone()));
    let gs = gs.map(|c| c.substitute(&zeros).as_known().clone());
    let gt = gt.map(|c| c.substitute(&zeros).as_known().clone());
    let h = automorphism_log(&gs, &gt, n);
    finish(p, Mode::Full, GaugeFun { h: h.map(|q| CurveFun::from_poly(q.clone())) }, gs, gt, free)
}

/// `log g = sum_k (-1)^{k+1} (g - 1)^k / k` for a unipotent automorphism.
pub fn automorphism_log(gs: &LieElt<CurvePoly>, gt: &LieElt<CurvePoly>, n: usize) -> Derivation<CurvePoly> {
    let pmul = |a: &CurvePoly, c: &CurvePoly| a * c;
    let imgs = hom_images(gs, gt, n, pmul);
    let e = |x: &LieElt<CurvePoly>| apply_images(&imgs, x, n, pmul).minus(x);
    let b = basis();
    let curve = gs.terms().next().map(|(_, c)| c.curve().clone()).expect("nonzero image");
    let mut out = Vec::new();
    for letter in [S, T] {
        let mut term = e(&LieElt::basis_elt(n, b.generator(letter), CurvePoly::one(&curve)));
        let mut acc = LieElt::zero(n);
        let mut k = 1i64;
        while !term.is_zero() {
            let sign = if k % 2 == 1 { Rat::new(1, k) } else { Rat::new(-1, k) };
            acc = acc.plus(&term.times(&sign));
            term = e(&term);
            k += 1;
        }
        out.push(acc);
    }
    let t = out.pop().unwrap();
    let s = out.pop().unwrap();
    Derivation::new(s, t)
}

/// Whether `ours` has the same coefficients as `reference` on every basis
/// element where `reference` is nonzero, in the given Lie degree.
pub fn agrees_on_support(ours: &LieElt<CurvePoly>, reference: &LieElt<CurvePoly>) -> bool {
    reference.terms().all(|(i, c)| ours.get(i) == Some(c))
}

fn finish(
    p: &GaugeProblem,
    mode: Mode,
    gauge: GaugeFun,
    image_s: LieElt<CurvePoly>,
    image_t: LieElt<CurvePoly>,
    free: Vec<String>,
) -> Result<Outcome, Error> {
    let src = p.source.truncate(p.degree);
    let tgt = p.target.truncate(p.degree);
    let residual_zero = gauge_transform(&src, &gauge)? == tgt;
    Ok(Outcome::Success(Box::new(Solved { mode, degree: p.degree, gauge, image_s, image_t, free, residual_zero })))
}
