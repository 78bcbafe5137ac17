//! Derivation-valued connection forms.
//!
//! A connection `d + ω` is stored as a single derivation of the free Lie
//! algebra whose coefficients are 1-forms: `ω(X)` for `X = S, T`. A connection
//! of degree `N` keeps derivation degrees `0..=N`, so its values live in Lie
//! degree at most `N + 1`. Inner terms `f ⊗ ad_u` are simply `X -> f [u, X]`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::elliptic::{p_poly_on, q_n_on, r_n_on};
use crate::forms::{alpha, dlog_discriminant, exterior_d, wedge, DiffForm1, DiffForm2};
use crate::freelie::{ad_pow, basis, Coeff, bracket_with, dbracket_with, Derivation, LieElt, S, T};
use crate::fun::CurveFun;
use crate::laurent::{form_pole_order, form_residue};
use crate::poly::{Curve, CurvePoly, Weight};
use crate::rat::Rat;
use crate::Error;

#[derive(Clone, PartialEq)]
pub struct Connection {
    curve: Arc<Curve>,
    degree: usize,
    value: Derivation<DiffForm1>,
}

/// A gauge transformation `g = exp(h)` given by its logarithm.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeFun {
    pub h: Derivation<CurveFun>,
}

/// Curvature 2-form with derivation values.
pub type Curvature = Derivation<DiffForm2>;

impl Connection {
    pub fn new(curve: &Arc<Curve>, degree: usize, value: Derivation<DiffForm1>) -> Connection {
        Connection { curve: curve.clone(), degree, value: value.truncate(degree + 1) }
    }

    pub fn zero(curve: &Arc<Curve>, degree: usize) -> Connection {
        Connection::new(curve, degree, Derivation::zero(degree + 1))
    }

    pub fn curve(&self) -> &Arc<Curve> {
        &self.curve
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn value(&self) -> &Derivation<DiffForm1> {
        &self.value
    }

    pub fn plus(&self, o: &Connection) -> Connection {
        Connection::new(&self.curve, self.degree.min(o.degree), self.value.plus(&o.value))
    }

    pub fn minus(&self, o: &Connection) -> Connection {
        Connection::new(&self.curve, self.degree.min(o.degree), self.value.minus(&o.value))
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Component of derivation degree `d`.
    pub fn degree_part(&self, d: usize) -> Connection {
        Connection::new(&self.curve, self.degree, self.value.degree_part(d))
    }

    pub fn truncate(&self, degree: usize) -> Connection {
        Connection::new(&self.curve, degree.min(self.degree), self.value.clone())
    }

    /// Restrict a universal connection to a fiber: substitute `u, v`, drop `du, dv`.
    pub fn specialize(&self, fiber: &Arc<Curve>) -> Connection {
        Connection::new(fiber, self.degree, self.value.map(|w| w.specialize(fiber)))
    }

    /// Labelled terms, inner parts first within each degree.
    pub fn terms(&self) -> Vec<(Label, DiffForm1)> {
        let mut out = Vec::new();
        for d in 0..=self.degree {
            let part = self.value.degree_part(d);
            if part.is_zero() {
                continue;
            }
            let (u, rest) = split_inner(&part, d);
            for (i, w) in u.terms() {
                out.push((Label::Inner(i), w.clone()));
            }
            for (i, w) in rest.s.terms() {
                out.push((Label::OnS(i), w.clone()));
            }
            for (i, w) in rest.t.terms() {
                out.push((Label::OnT(i), w.clone()));
            }
        }
        out
    }

    /// Rebuild from labelled terms.
    pub fn from_terms(curve: &Arc<Curve>, degree: usize, terms: &[(Label, DiffForm1)]) -> Connection {
        let n = degree + 1;
        let mut v = Derivation::zero(n);
        for (l, w) in terms {
            let d = match l {
                Label::Inner(i) => Derivation::inner(&LieElt::basis_elt(n, *i, w.clone())),
                Label::OnS(i) => Derivation::new(LieElt::basis_elt(n, *i, w.clone()), LieElt::zero(n)),
                Label::OnT(i) => Derivation::new(LieElt::zero(n), LieElt::basis_elt(n, *i, w.clone())),
            };
            v = v.plus(&d);
        }
        Connection::new(curve, degree, v)
    }

    /// Coefficient of `ad_u` for an inner component, by bracket string.
    pub fn inner_coefficient(&self, bracket: &str) -> Option<DiffForm1> {
        let i = basis().parse_bracket(bracket)?;
        self.terms().into_iter().find(|(l, _)| *l == Label::Inner(i)).map(|(_, w)| w)
    }

    /// Whether every component is an inner derivation.
    pub fn is_inner(&self) -> bool {
        self.terms().iter().all(|(l, _)| matches!(l, Label::Inner(_)))
    }

    /// The Lie element `u` with `ω = ad_u`, when the connection is inner.
    pub fn inner_element(&self) -> Option<LieElt<DiffForm1>> {
        let mut u = LieElt::zero(self.degree + 1);
        for (l, w) in self.terms() {
            match l {
                Label::Inner(i) => u.add_term(i, w),
                _ => return None,
            }
        }
        Some(u)
    }

    /// Largest `Δ` exponent in any coefficient denominator.
    pub fn max_delta_exponent(&self) -> u32 {
        self.value.s.terms().chain(self.value.t.terms()).map(|(_, w)| w.max_delta_exponent()).max().unwrap_or(0)
    }

    /// Terms whose `G_m`-weight is not zero, with `S:-1`, `T:+1`, and a value
    /// `L` on generator `X` weighing `wt(L) - wt(X)`.
    pub fn weight_violations(&self) -> Vec<String> {
        let b = basis();
        let mut bad = Vec::new();
        for (gen, vals) in [(S, &self.value.s), (T, &self.value.t)] {
            for (i, w) in vals.terms() {
                let word = b.word(i);
                let lw: i64 = word.0.iter().map(|&l| if l == T { 1 } else { -1 }).sum();
                let gw = if gen == T { 1 } else { -1 };
                match w.weight() {
                    Weight::Zero => {}
                    Weight::Pure(x) if x + lw - gw == 0 => {}
                    other => bad.push(format!(
                        "{} -> {}: form weight {:?}",
                        if gen == T { "T" } else { "S" },
                        b.bracket_string(i),
                        other
                    )),
                }
            }
        }
        bad
    }

    /// Order of the pole at the identity along `ds = dx/y`, over all terms.
    pub fn pole_order_at_identity(&self) -> Result<i64, Error> {
        let mut m = 0;
        for (_, w) in self.value.s.terms().chain(self.value.t.terms()) {
            m = m.max(form_pole_order(w)?);
        }
        Ok(m)
    }

    /// Coefficient of `s^-1 ds`; `du, dv` parts count as regular.
    pub fn residue_at_identity(&self) -> Result<Derivation<CurveFun>, Error> {
        let n = self.degree + 1;
        let res = |e: &LieElt<DiffForm1>| -> Result<LieElt<CurveFun>, Error> {
            let mut out = LieElt::zero(n);
            for (i, w) in e.terms() {
                out.add_term(i, form_residue(w)?);
            }
            Ok(out)
        };
        Ok(Derivation::new(res(&self.value.s)?, res(&self.value.t)?))
    }

    pub fn to_json(&self, model: &str) -> ConnectionRecord {
        let b = basis();
        ConnectionRecord {
            model: model.to_string(),
            degree: self.degree,
            family: FamilyRecord::of(&self.curve),
            terms: self
                .terms()
                .into_iter()
                .map(|(l, w)| TermRecord { derivation_label: l.to_string_with(b), form: w.to_record() })
                .collect(),
        }
    }

    pub fn from_json(r: &ConnectionRecord) -> Result<Connection, Error> {
        let curve = r.family.curve()?;
        let mut terms = Vec::new();
        for t in &r.terms {
            let l = Label::parse(&t.derivation_label).ok_or_else(|| Error::Domain(format!("bad label {}", t.derivation_label)))?;
            terms.push((l, DiffForm1::from_record(&curve, &t.form)));
        }
        Ok(Connection::from_terms(&curve, r.degree, &terms))
    }
}

impl fmt::Display for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = basis();
        for (l, w) in self.terms() {
            writeln!(f, "{}: {}", l.to_string_with(b), w)?;
        }
        Ok(())
    }
}

impl fmt::Debug for Connection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Connection(degree {})\n{self}", self.degree)
    }
}

/// How a term acts: `ad_{e_i}`, or sending `S` (resp. `T`) to `e_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    Inner(usize),
    OnS(usize),
    OnT(usize),
}

impl Label {
    fn to_string_with(self, b: &crate::freelie::LieBasis) -> String {
        match self {
            Label::Inner(i) => format!("ad:{}", b.bracket_string(i)),
            Label::OnS(i) => format!("dS:{}", b.bracket_string(i)),
            Label::OnT(i) => format!("dT:{}", b.bracket_string(i)),
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        let (kind, rest) = s.split_once(':')?;
        let i = basis().parse_bracket(rest)?;
        match kind {
            "ad" => Some(Label::Inner(i)),
            "dS" => Some(Label::OnS(i)),
            "dT" => Some(Label::OnT(i)),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_string_with(basis()))
    }
}

/// Left inverse of `u -> ([u, S], [u, T])` on Lie degree `d`, as a list of
/// `(row selector, matrix)`: `u_i = sum_r m[i][r] * value_r` over selected rows.
struct InnerSolver {
    rows: Vec<(u8, usize)>,
    inv: Vec<Vec<Rat>>,
    cols: Vec<usize>,
}

fn inner_solver(d: usize) -> Arc<InnerSolver> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<InnerSolver>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(s) = cache.lock().unwrap().get(&d) {
        return s.clone();
    }
    let b = basis();
    let n = d + 1;
    let cols: Vec<usize> = (b.size_upto(d - 1)..b.size_upto(d)).collect();
    let ad = |i: usize| Derivation::inner(&LieElt::basis_elt(n, i, Rat::one()));
    let images: Vec<Derivation<Rat>> = cols.iter().map(|&i| ad(i)).collect();
    let all_rows: Vec<(u8, usize)> =
        [S, T].iter().flat_map(|&g| (b.size_upto(d)..b.size_upto(d + 1)).map(move |k| (g, k))).collect();
    let entry = |img: &Derivation<Rat>, (g, k): (u8, usize)| img.on(g).get(k).cloned().unwrap_or_else(Rat::zero);
    // Greedily pick rows that raise the rank.
    let mut picked: Vec<(u8, usize)> = Vec::new();
    let mut echelon: Vec<Vec<Rat>> = Vec::new();
    for &r in &all_rows {
        if picked.len() == cols.len() {
            break;
        }
        let mut v: Vec<Rat> = images.iter().map(|img| entry(img, r)).collect();
        for e in &echelon {
            let p = e.iter().position(|x| !x.is_zero()).unwrap();
            if !v[p].is_zero() {
                let f = &v[p] / &e[p];
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi -= &(&f * ei);
                }
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            echelon.push(v);
            picked.push(r);
        }
    }
    assert_eq!(picked.len(), cols.len(), "ad is injective in positive degree");
    let m: Vec<Vec<Rat>> = picked.iter().map(|&r| images.iter().map(|img| entry(img, r)).collect()).collect();
    let inv = invert(&m);
    let s = Arc::new(InnerSolver { rows: picked, inv, cols });
    cache.lock().unwrap().insert(d, s.clone());
    s
}

/// Inverse of a square rational matrix `m[row][col]`, indexed `[col][row]`.
fn invert(m: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let k = m.len();
    let mut a: Vec<Vec<Rat>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            r
        })
        .collect();
    for c in 0..k {
        let p = (c..k).find(|&r| !a[r][c].is_zero()).expect("invertible");
        a.swap(c, p);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        let pivot = a[c].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != c && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= &(&f * p);
                }
            }
        }
    }
    // Rows of a now hold M^{-1}; M^{-1}[col][row] maps selected rows to columns.
    a.into_iter().map(|r| r[k..].to_vec()).collect()
}

/// Split a homogeneous derivation of degree `d` into `ad_u` plus a remainder.
pub(crate) fn split_inner<C: Coeff>(part: &Derivation<C>, d: usize) -> (LieElt<C>, Derivation<C>) {
    let n = part.truncation();
    if d == 0 {
        return (LieElt::zero(n), part.clone());
    }
    let solver = inner_solver(d);
    let mut u = LieElt::zero(n);
    for (ci, &col) in solver.cols.iter().enumerate() {
        let mut acc: Option<C> = None;
        for (ri, &(g, k)) in solver.rows.iter().enumerate() {
            let c = &solver.inv[ci][ri];
            if c.is_zero() {
                continue;
            }
            if let Some(w) = part.on(g).get(k) {
                let t = w.times(c);
                acc = Some(match acc {
                    None => t,
                    Some(a) => a.plus(&t),
                });
            }
        }
        if let Some(a) = acc {
            u.add_term(col, a);
        }
    }
    let rest = part.minus(&Derivation::inner(&u));
    (u, rest)
}

fn form_lie(w: &DiffForm1, x: &LieElt<Rat>) -> LieElt<DiffForm1> {
    x.map(|r| w.scale(r))
}

fn inner_with(w: &DiffForm1, x: &LieElt<Rat>) -> Derivation<DiffForm1> {
    Derivation::inner(&form_lie(w, x))
}

/// `-x dx/y ad_T + dx/y ad_S`.
pub fn nu1_naive(curve: &Arc<Curve>, degree: usize) -> Connection {
    let n = degree + 1;
    let x = CurveFun::x(curve);
    let t = inner_with(&DiffForm1::dx_over_y(&x).scale(&-Rat::one()), &LieElt::t(n));
    let s = inner_with(&DiffForm1::dx_over_y(&CurveFun::one(curve)), &LieElt::s(n));
    Connection::new(curve, degree, t.plus(&s))
}

/// The naive form plus `sum_{n>=2} q_n dx/y ad_{ad_T^n S}`.
pub fn nu1_alg(curve: &Arc<Curve>, degree: usize) -> Connection {
    let n = degree + 1;
    let mut c = nu1_naive(curve, degree).value;
    for k in 2..degree {
        let w = DiffForm1::dx_over_y(&CurveFun::from_poly(q_n_on(curve, k as u32)));
        c = c.plus(&inner_with(&w, &ad_pow(k, &LieElt::s(n))));
    }
    Connection::new(curve, degree, c)
}

/// `(d(2x^2/y) - x dx/y) ad_T + dx/y ad_S + sum_{n>=1} r_n dx/y ad_{ad_T^n S}`.
pub fn nu1_reg(curve: &Arc<Curve>, degree: usize) -> Connection {
    let n = degree + 1;
    let x = CurveFun::x(curve);
    let tform = &exterior_d(&two_x2_over_y(curve)) - &DiffForm1::dx_over_y(&x);
    let mut c = inner_with(&tform, &LieElt::t(n)).plus(&inner_with(&DiffForm1::dx_over_y(&CurveFun::one(curve)), &LieElt::s(n)));
    for k in 1..degree {
        let w = DiffForm1::dx_over_y(&r_n_on(curve, k as u32));
        c = c.plus(&inner_with(&w, &ad_pow(k, &LieElt::s(n))));
    }
    Connection::new(curve, degree, c)
}

fn two_x2_over_y(curve: &Arc<Curve>) -> CurveFun {
    &CurveFun::x(curve).pow(2).scale(&Rat::int(2)) * &CurveFun::inv_y(curve)
}

/// `g_reg = exp(-(2x^2/y) T)`.
pub fn g_reg(curve: &Arc<Curve>, degree: usize) -> GaugeFun {
    let n = degree + 1;
    let f = two_x2_over_y(curve).scale(&-Rat::one());
    GaugeFun { h: Derivation::inner(&LieElt::t(n).map(|r| f.scale(r))) }
}

fn universal_only(curve: &Arc<Curve>) {
    assert!(curve.is_universal(), "the universal connection lives on the universal family");
}

fn inv_delta(curve: &Arc<Curve>) -> CurveFun {
    CurveFun::inv_discriminant(curve)
}

/// `3α / (2Δ)`.
fn three_alpha_over_2delta(curve: &Arc<Curve>) -> DiffForm1 {
    alpha(curve).mul_fun(&inv_delta(curve)).scale(&Rat::new(3, 2))
}

/// The Gauss–Manin connection on the frame `S, T` over the `(u, v)` plane.
pub fn gauss_manin(degree: usize) -> Connection {
    let curve = Curve::universal();
    let n = degree + 1;
    let dl = dlog_discriminant(&curve);
    let a = three_alpha_over_2delta(&curve);
    let u_alpha_8 = alpha(&curve).mul_fun(&(&CurveFun::u(&curve) * &inv_delta(&curve))).scale(&Rat::new(-1, 8));
    let on_t = form_lie(&dl.scale(&Rat::new(-1, 12)), &LieElt::t(n)).plus(&form_lie(&a, &LieElt::s(n)));
    let on_s = form_lie(&u_alpha_8, &LieElt::t(n)).plus(&form_lie(&dl.scale(&Rat::new(1, 12)), &LieElt::s(n)));
    Connection::new(&curve, degree, Derivation::new(on_s, on_t))
}

/// `sum_m (1/(2m)!) (3α/2Δ) p_{2m+2} ⊗ (S -> sum_{j+k=2m+1} (-1)^j [ad_T^j S, ad_T^k S])`.
fn psi_terms(curve: &Arc<Curve>, degree: usize) -> Derivation<DiffForm1> {
    let n = degree + 1;
    let mut out = Derivation::zero(n);
    let a = three_alpha_over_2delta(curve);
    let mut m = 1;
    while 2 * m + 2 <= degree {
        let mut val = LieElt::<Rat>::zero(n);
        for j in 1..=2 * m {
            let k = 2 * m + 1 - j;
            let sign = if j % 2 == 0 { Rat::one() } else { -Rat::one() };
            let br = ad_pow(j, &LieElt::s(n)).bracket(&ad_pow(k, &LieElt::s(n)));
            val = val.plus(&br.times(&sign));
        }
        let p = CurveFun::from_poly(p_poly_on(curve, 2 * m as u32 + 2).expect("even weight"));
        let w = a.mul_fun(&p).scale(&Rat::factorial(2 * m as u32).recip());
        out = out.plus(&Derivation::new(form_lie(&w, &val), LieElt::zero(n)));
        m += 1;
    }
    out
}

/// `dx/y - ((6x^2 - u)/y)(α/2Δ) - (1/6)(dΔ/Δ)(x/y)`.
fn phi_alg(curve: &Arc<Curve>) -> DiffForm1 {
    let inv_y = CurveFun::inv_y(curve);
    let six_x2_u = CurveFun::from_poly(&CurvePoly::x(curve).pow(2).scale(&Rat::int(6)) - &CurvePoly::u(curve));
    let a2 = alpha(curve).mul_fun(&inv_delta(curve)).scale(&Rat::new(1, 2));
    let x_over_y = &CurveFun::x(curve) * &inv_y;
    let t1 = DiffForm1::dx_over_y(&CurveFun::one(curve));
    let t2 = a2.mul_fun(&(&six_x2_u * &inv_y));
    let t3 = dlog_discriminant(curve).mul_fun(&x_over_y).scale(&Rat::new(1, 6));
    &(&t1 - &t2) - &t3
}

/// `dx/y + (1/y)(uα/2Δ) - (1/6)(dΔ/Δ)(x/y)`.
fn phi_reg(curve: &Arc<Curve>) -> DiffForm1 {
    let inv_y = CurveFun::inv_y(curve);
    let t1 = DiffForm1::dx_over_y(&CurveFun::one(curve));
    let t2 = alpha(curve).mul_fun(&(&(&CurveFun::u(curve) * &inv_delta(curve)) * &inv_y)).scale(&Rat::new(1, 2));
    let t3 = dlog_discriminant(curve).mul_fun(&(&CurveFun::x(curve) * &inv_y)).scale(&Rat::new(1, 6));
    &(&t1 + &t2) - &t3
}

/// `(1/4)(α/Δ)(ux + 3v)/y`.
fn ux3v_term(curve: &Arc<Curve>) -> DiffForm1 {
    let ux3v = CurveFun::from_poly(&(&CurvePoly::u(curve) * &CurvePoly::x(curve)) + &CurvePoly::v(curve).scale(&Rat::int(3)));
    alpha(curve).mul_fun(&(&(&ux3v * &inv_delta(curve)) * &CurveFun::inv_y(curve))).scale(&Rat::new(1, 4))
}

/// The algebraic universal connection over the family minus the identity.
pub fn omega_alg(degree: usize) -> Connection {
    let curve = Curve::universal();
    universal_only(&curve);
    let n = degree + 1;
    let x = CurveFun::x(&curve);
    let inv_y = CurveFun::inv_y(&curve);
    let tform = &(&DiffForm1::dx_over_y(&x).scale(&-Rat::one()) + &ux3v_term(&curve))
        + &dlog_discriminant(&curve).mul_fun(&(&x.pow(2) * &inv_y)).scale(&Rat::new(1, 6));
    let phi = phi_alg(&curve);
    let a = three_alpha_over_2delta(&curve);
    let mut c = gauss_manin(degree).value;
    c = c.plus(&inner_with(&tform, &LieElt::t(n)));
    c = c.plus(&inner_with(&phi, &LieElt::s(n)));
    // The exponential series gives phi q_k on ad_T^k S, and its
    // T-derivative part gives k q_{k+1} (3α/2Δ).
    for k in 1..degree {
        let mut coef = a.mul_fun(&CurveFun::from_poly(q_n_on(&curve, k as u32 + 1))).scale(&Rat::int(k as i64));
        if k >= 2 {
            coef = &coef + &phi.mul_fun(&CurveFun::from_poly(q_n_on(&curve, k as u32)));
        }
        c = c.plus(&inner_with(&coef, &ad_pow(k, &LieElt::s(n))));
    }
    c = c.plus(&psi_terms(&curve, degree));
    Connection::new(&curve, degree, c)
}

/// The regularized universal connection: `phi r_k + k r_{k+1} (3α/2Δ)` on `ad_T^k S`.
pub fn omega_reg(degree: usize) -> Connection {
    let curve = Curve::universal();
    let n = degree + 1;
    let x = CurveFun::x(&curve);
    let tform = &(&exterior_d(&two_x2_over_y(&curve)) - &DiffForm1::dx_over_y(&x)) + &ux3v_term(&curve);
    let phi = phi_reg(&curve);
    let a = three_alpha_over_2delta(&curve);
    let mut c = gauss_manin(degree).value;
    c = c.plus(&inner_with(&tform, &LieElt::t(n)));
    c = c.plus(&inner_with(&phi, &LieElt::s(n)));
    for k in 1..degree {
        let coef = &phi.mul_fun(&r_n_on(&curve, k as u32))
            + &a.mul_fun(&r_n_on(&curve, k as u32 + 1)).scale(&Rat::int(k as i64));
        c = c.plus(&inner_with(&coef, &ad_pow(k, &LieElt::s(n))));
    }
    c = c.plus(&psi_terms(&curve, degree));
    Connection::new(&curve, degree, c)
}

impl GaugeFun {
    pub fn identity(degree: usize) -> GaugeFun {
        GaugeFun { h: Derivation::zero(degree + 1) }
    }

    pub fn inverse(&self) -> GaugeFun {
        GaugeFun { h: self.h.negate() }
    }

    /// `a` with `h = ad_a`, when `h` is inner.
    pub fn inner_element(&self) -> Option<LieElt<CurveFun>> {
        let n = self.h.truncation();
        let mut a = LieElt::zero(n);
        for d in 1..n {
            let part = self.h.degree_part(d);
            if part.is_zero() {
                continue;
            }
            let (u, rest) = split_inner(&part, d);
            if !rest.is_zero() {
                return None;
            }
            a = a.plus(&u);
        }
        self.h.degree_part(0).is_zero().then_some(a)
    }
}

fn ad_h_form(h: &Derivation<CurveFun>, x: &Derivation<DiffForm1>) -> Derivation<DiffForm1> {
    dbracket_with(h, x, |f, w| w.mul_fun(f))
}

/// `-dg g^-1 + g ω g^-1` with `g = exp(h)`.
pub fn gauge_transform(c: &Connection, g: &GaugeFun) -> Result<Connection, Error> {
    if g.h.min_degree().map_or(false, |d| d == 0) {
        return Err(Error::Domain("gauge logarithm must have positive degree".into()));
    }
    let n = c.degree + 1;
    let h = g.h.truncate(n);
    // dg g^-1 = sum_k ad_h^k(dh) / (k+1)!
    let dh = h.map(exterior_d);
    let mut term = dh;
    let mut dgg = Derivation::zero(n);
    let mut k = 0u32;
    while !term.is_zero() {
        dgg = dgg.plus(&term.times(&Rat::factorial(k + 1).recip()));
        term = ad_h_form(&h, &term);
        k += 1;
    }
    // g ω g^-1 = sum_k ad_h^k(ω) / k!
    let mut term = c.value.clone();
    let mut conj = Derivation::zero(n);
    let mut k = 0u32;
    while !term.is_zero() {
        conj = conj.plus(&term.times(&Rat::factorial(k).recip()));
        term = ad_h_form(&h, &term);
        k += 1;
    }
    Ok(Connection::new(&c.curve, c.degree, conj.minus(&dgg)))
}

/// `dω + (1/2)[ω, ω]`.
pub fn curvature(c: &Connection) -> Curvature {
    let dw = c.value.map(crate::forms::d2);
    let sq = dbracket_with(&c.value, &c.value, wedge);
    dw.plus(&sq.times(&Rat::new(1, 2)))
}

/// Serialized connection.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ConnectionRecord {
    pub model: String,
    pub degree: usize,
    pub family: FamilyRecord,
    pub terms: Vec<TermRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TermRecord {
    pub derivation_label: String,
    pub form: crate::forms::FormRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyRecord {
    Universal,
    Fiber { u: Rat, v: Rat },
}

impl FamilyRecord {
    pub fn of(curve: &Arc<Curve>) -> FamilyRecord {
        match &**curve {
            Curve::Universal => FamilyRecord::Universal,
            Curve::Fiber { u, v } => FamilyRecord::Fiber { u: u.clone(), v: v.clone() },
        }
    }

    pub fn curve(&self) -> Result<Arc<Curve>, Error> {
        match self {
            FamilyRecord::Universal => Ok(Curve::universal()),
            FamilyRecord::Fiber { u, v } => Curve::fiber(u.clone(), v.clone()),
        }
    }
}

/// Lie bracket of two Lie elements with 1-form coefficients into 2-forms.
pub fn wedge_bracket(a: &LieElt<DiffForm1>, b: &LieElt<DiffForm1>) -> LieElt<DiffForm2> {
    bracket_with(a, b, wedge)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fiber() -> Arc<Curve> {
        Curve::fiber(Rat::int(4), Rat::int(1)).unwrap()
    }

    #[test]
    fn naive_terms() {
        let c = nu1_naive(&fiber(), 3);
        let t = c.terms();
        assert_eq!(t.len(), 2);
        assert_eq!(c.inner_coefficient("T").unwrap(), DiffForm1::dx_over_y(&CurveFun::x(&fiber())).scale(&-Rat::one()));
        assert_eq!(c.inner_coefficient("S").unwrap(), DiffForm1::dx_over_y(&CurveFun::one(&fiber())));
    }

    #[test]
    fn alg_degree_three() {
        let f = fiber();
        let c = nu1_alg(&f, 4);
        let w = c.inner_coefficient("[T,[T,S]]").unwrap();
        assert_eq!(w, DiffForm1::dx_over_y(&CurveFun::x(&f).scale(&Rat::new(-1, 2))));
        assert!(c.is_inner());
    }

    #[test]
    fn gauss_manin_is_flat() {
        assert!(curvature(&gauss_manin(2)).is_zero());
    }

    #[test]
    fn reg_from_alg_on_fiber() {
        let f = fiber();
        let g = gauge_transform(&nu1_alg(&f, 4), &g_reg(&f, 4)).unwrap();
        assert_eq!(g, nu1_reg(&f, 4));
    }

    #[test]
    fn residues() {
        // q_3 = -y/6, so the algebraic form has a triple pole from degree 4 on.
        let f = fiber();
        assert_eq!(nu1_alg(&f, 4).pole_order_at_identity().unwrap(), 3);
        assert_eq!(nu1_reg(&f, 4).pole_order_at_identity().unwrap(), 1);
        let r = nu1_reg(&f, 4).residue_at_identity().unwrap();
        let ts = LieElt::t(5).bracket(&LieElt::s(5));
        assert_eq!(r, Derivation::inner(&ts.map(|c| CurveFun::constant(&f, c.clone()))));
    }
}



#[cfg(test)]
mod universal_props {
    use super::*;

    #[test]
    fn reg_residue_and_weights() {
        let r = omega_reg(5);
        assert_eq!(r.pole_order_at_identity().unwrap(), 1);
        let u = Curve::universal();
        let ts = LieElt::t(6).bracket(&LieElt::s(6));
        assert_eq!(r.residue_at_identity().unwrap(), Derivation::inner(&ts.map(|c| CurveFun::constant(&u, c.clone()))));
        assert!(r.weight_violations().is_empty(), "{:?}", r.weight_violations());
        assert!(omega_alg(5).weight_violations().is_empty());
        assert_eq!(omega_reg(5).specialize(&Curve::fiber(Rat::int(4), Rat::int(1)).unwrap()), nu1_reg(&Curve::fiber(Rat::int(4), Rat::int(1)).unwrap(), 5));
        println!("max delta exponent alg {} reg {}", omega_alg(5).max_delta_exponent(), r.max_delta_exponent());
    }

    #[test]
    fn json_round_trip() {
        let c = omega_reg(4);
        let rec = c.to_json("omega_reg");
        assert_eq!(Connection::from_json(&rec).unwrap(), c);
        let g = gauss_manin(3);
        assert_eq!(Connection::from_json(&g.to_json("gm")).unwrap(), g);
    }
}
