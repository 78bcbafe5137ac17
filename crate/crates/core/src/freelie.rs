//! Truncated free Lie algebra on two generators, its derivations, and the
//! truncated tensor algebra it embeds in.
//!
//! Letters are ordered `T < S`. The Lie basis is the Lyndon basis with the
//! standard bracketing (split off the longest proper Lyndon suffix), indexed by
//! degree and then lexicographically, so the degree `<= n` part of the basis is
//! always a prefix of the index range. Equality and rewriting go through the
//! associative expansion: the smallest word of a Lie polynomial is Lyndon, which
//! makes projection onto the basis triangular.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use crate::forms::{DiffForm1, DiffForm2};
use crate::fun::CurveFun;
use crate::poly::CurvePoly;
use crate::rat::Rat;

/// Highest Lie degree the shared basis tables cover.
pub const MAX_DEGREE: usize = 12;

pub const T: u8 = 0;
pub const S: u8 = 1;

/// Coefficients the Lie machinery can carry: a `Q`-vector space.
pub trait Coeff: Clone + PartialEq + fmt::Debug {
    fn is_zero(&self) -> bool;
    fn plus(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    fn times(&self, r: &Rat) -> Self;
    fn minus(&self, o: &Self) -> Self {
        self.plus(&o.negate())
    }
}

impl Coeff for Rat {
    fn is_zero(&self) -> bool {
        Rat::is_zero(self)
    }
    fn plus(&self, o: &Rat) -> Rat {
        self + o
    }
    fn negate(&self) -> Rat {
        -self
    }
    fn times(&self, r: &Rat) -> Rat {
        self * r
    }
}

impl Coeff for CurvePoly {
    fn is_zero(&self) -> bool {
        CurvePoly::is_zero(self)
    }
    fn plus(&self, o: &CurvePoly) -> CurvePoly {
        self + o
    }
    fn negate(&self) -> CurvePoly {
        -self
    }
    fn times(&self, r: &Rat) -> CurvePoly {
        self.scale(r)
    }
}

impl Coeff for CurveFun {
    fn is_zero(&self) -> bool {
        CurveFun::is_zero(self)
    }
    fn plus(&self, o: &CurveFun) -> CurveFun {
        self + o
    }
    fn negate(&self) -> CurveFun {
        -self
    }
    fn times(&self, r: &Rat) -> CurveFun {
        self.scale(r)
    }
}

impl Coeff for DiffForm1 {
    fn is_zero(&self) -> bool {
        DiffForm1::is_zero(self)
    }
    fn plus(&self, o: &DiffForm1) -> DiffForm1 {
        self + o
    }
    fn negate(&self) -> DiffForm1 {
        -self
    }
    fn times(&self, r: &Rat) -> DiffForm1 {
        self.scale(r)
    }
}

impl Coeff for DiffForm2 {
    fn is_zero(&self) -> bool {
        DiffForm2::is_zero(self)
    }
    fn plus(&self, o: &DiffForm2) -> DiffForm2 {
        self + o
    }
    fn negate(&self) -> DiffForm2 {
        -self
    }
    fn times(&self, r: &Rat) -> DiffForm2 {
        self.scale(r)
    }
}

fn accumulate<K: Ord, C: Coeff>(map: &mut BTreeMap<K, C>, k: K, c: C) {
    if c.is_zero() {
        return;
    }
    use std::collections::btree_map::Entry;
    match map.entry(k) {
        Entry::Vacant(e) => {
            e.insert(c);
        }
        Entry::Occupied(mut e) => {
            let s = e.get().plus(&c);
            if s.is_zero() {
                e.remove();
            } else {
                *e.get_mut() = s;
            }
        }
    }
}

/// A word in `T`, `S`, ordered by length and then lexicographically.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, o: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&o.0);
        Word(v)
    }

    pub fn parse(s: &str) -> Option<Word> {
        s.chars()
            .map(|c| match c {
                'T' => Some(T),
                'S' => Some(S),
                _ => None,
            })
            .collect::<Option<Vec<u8>>>()
            .map(Word)
    }
}

impl Ord for Word {
    fn cmp(&self, o: &Word) -> Ordering {
        self.0.len().cmp(&o.0.len()).then_with(|| self.0.cmp(&o.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, o: &Word) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for &l in &self.0 {
            write!(f, "{}", if l == T { 'T' } else { 'S' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn is_lyndon(w: &[u8]) -> bool {
    !w.is_empty() && (1..w.len()).all(|i| w[i..] > *w)
}

/// Lyndon words over `{T, S}` of length at most `n`, by Duval's algorithm.
fn lyndon_words_upto(n: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut w: Vec<u8> = vec![T];
    loop {
        out.push(Word(w.clone()));
        let m = w.len();
        while w.len() < n {
            let c = w[w.len() - m];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last == S {
                w.pop();
            } else {
                break;
            }
        }
        match w.last_mut() {
            None => break,
            Some(l) => *l = S,
        }
    }
    out.sort();
    out
}

type AssocPoly = BTreeMap<Word, Rat>;

/// The shared Lyndon basis up to [`MAX_DEGREE`], with lazily filled tables.
pub struct LieBasis {
    words: Vec<Word>,
    index: HashMap<Word, usize>,
    split: Vec<Option<(usize, usize)>>,
    upto: Vec<usize>,
    assoc: RwLock<HashMap<usize, Arc<AssocPoly>>>,
    brackets: RwLock<HashMap<(usize, usize), Arc<Vec<(usize, Rat)>>>>,
}

pub fn basis() -> &'static LieBasis {
    static B: OnceLock<LieBasis> = OnceLock::new();
    B.get_or_init(|| LieBasis::build(MAX_DEGREE))
}

impl LieBasis {
    fn build(max: usize) -> LieBasis {
        let words = lyndon_words_upto(max);
        let index: HashMap<Word, usize> = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let split = words
            .iter()
            .map(|w| {
                if w.len() == 1 {
                    return None;
                }
                let j = (1..w.len()).find(|&j| is_lyndon(&w.0[j..])).expect("proper Lyndon suffix");
                Some((index[&Word(w.0[..j].to_vec())], index[&Word(w.0[j..].to_vec())]))
            })
            .collect();
        let mut upto = vec![0; max + 1];
        for d in 0..=max {
            upto[d] = words.iter().filter(|w| w.len() <= d).count();
        }
        LieBasis { words, index, split, upto, assoc: RwLock::new(HashMap::new()), brackets: RwLock::new(HashMap::new()) }
    }

    /// Number of basis elements of degree at most `n`.
    pub fn size_upto(&self, n: usize) -> usize {
        self.upto[n.min(MAX_DEGREE)]
    }

    pub fn word(&self, i: usize) -> &Word {
        &self.words[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.words[i].len()
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn generator(&self, letter: u8) -> usize {
        self.index[&Word(vec![letter])]
    }

    /// Standard factorization `(left, right)` of a non-letter basis element.
    pub fn factors(&self, i: usize) -> Option<(usize, usize)> {
        self.split[i]
    }

    /// Nested bracket string such as `[T,[T,S]]`.
    pub fn bracket_string(&self, i: usize) -> String {
        match self.split[i] {
            None => self.words[i].to_string(),
            Some((a, b)) => format!("[{},{}]", self.bracket_string(a), self.bracket_string(b)),
        }
    }

    /// Basis index for a bracket string in standard form.
    pub fn parse_bracket(&self, s: &str) -> Option<usize> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let mut depth = 0;
            for (pos, ch) in inner.char_indices() {
                match ch {
                    '[' => depth += 1,
                    ']' => depth -= 1,
                    ',' if depth == 0 => {
                        let a = self.parse_bracket(&inner[..pos])?;
                        let b = self.parse_bracket(&inner[pos + 1..])?;
                        let w = self.words[a].concat(&self.words[b]);
                        let i = self.index_of(&w)?;
                        return (self.split[i] == Some((a, b))).then_some(i);
                    }
                    _ => {}
                }
            }
            None
        } else {
            let w = Word::parse(s)?;
            (w.len() == 1).then(|| self.index[&w])
        }
    }

    /// Associative expansion of a basis element.
    pub fn assoc(&self, i: usize) -> Arc<AssocPoly> {
        if let Some(p) = self.assoc.read().unwrap().get(&i) {
            return p.clone();
        }
        let p = match self.split[i] {
            None => Arc::new(BTreeMap::from([(self.words[i].clone(), Rat::one())])),
            Some((a, b)) => {
                let pa = self.assoc(a);
                let pb = self.assoc(b);
                let mut out = assoc_mul_rat(&pa, &pb);
                for (w, c) in assoc_mul_rat(&pb, &pa) {
                    accumulate(&mut out, w, -c);
                }
                Arc::new(out)
            }
        };
        self.assoc.write().unwrap().insert(i, p.clone());
        p
    }

    /// Write a homogeneous Lie polynomial, given by its associative
    /// expansion, in the Lyndon basis.
    pub fn project(&self, mut p: AssocPoly) -> Vec<(usize, Rat)> {
        let mut out = Vec::new();
        while let Some((w, c)) = p.iter().next().map(|(w, c)| (w.clone(), c.clone())) {
            let k = self.index_of(&w).unwrap_or_else(|| panic!("{w} is not Lyndon: input is not a Lie polynomial"));
            for (wk, ck) in self.assoc(k).iter() {
                accumulate(&mut p, wk.clone(), -(&c * ck));
            }
            out.push((k, c));
        }
        out.sort_by_key(|(k, _)| *k);
        out
    }

    /// `[e_i, e_j]` in the basis.
    pub fn bracket(&self, i: usize, j: usize) -> Arc<Vec<(usize, Rat)>> {
        if i == j {
            return Arc::new(Vec::new());
        }
        if let Some(v) = self.brackets.read().unwrap().get(&(i, j)) {
            return v.clone();
        }
        assert!(self.degree(i) + self.degree(j) <= MAX_DEGREE, "bracket beyond the supported degree");
        let pi = self.assoc(i);
        let pj = self.assoc(j);
        let mut p = assoc_mul_rat(&pi, &pj);
        for (w, c) in assoc_mul_rat(&pj, &pi) {
            accumulate(&mut p, w, -c);
        }
        let v = Arc::new(self.project(p));
        let neg = Arc::new(v.iter().map(|(k, c)| (*k, -c)).collect::<Vec<_>>());
        let mut g = self.brackets.write().unwrap();
        g.insert((i, j), v.clone());
        g.insert((j, i), neg);
        v
    }
}

fn assoc_mul_rat(a: &AssocPoly, b: &AssocPoly) -> AssocPoly {
    let mut out = BTreeMap::new();
    for (wa, ca) in a {
        for (wb, cb) in b {
            accumulate(&mut out, wa.concat(wb), ca * cb);
        }
    }
    out
}

/// Lyndon basis of the degree-`n` component, as bracket strings.
pub fn lyndon_basis(n: usize) -> Vec<String> {
    let b = basis();
    (b.size_upto(n - 1)..b.size_upto(n)).map(|i| b.bracket_string(i)).collect()
}

/// Witt's formula `(1/n) sum_{d | n} mu(d) 2^(n/d)`.
pub fn witt_dimension(n: usize) -> usize {
    fn mobius(mut n: usize) -> i64 {
        let mut m = 1;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                n /= p;
                if n % p == 0 {
                    return 0;
                }
                m = -m;
            }
            p += 1;
        }
        if n > 1 {
            m = -m;
        }
        m
    }
    let s: i64 = (1..=n).filter(|d| n % d == 0).map(|d| mobius(d) * (1i64 << (n / d))).sum();
    (s / n as i64) as usize
}

/// Element of the free Lie algebra truncated above degree `n`.
#[derive(Clone, PartialEq)]
pub struct LieElt<C> {
    n: usize,
    terms: BTreeMap<usize, C>,
}

impl<C: Coeff> LieElt<C> {
    pub fn zero(n: usize) -> LieElt<C> {
        assert!(n <= MAX_DEGREE, "truncation degree above {MAX_DEGREE}");
        LieElt { n, terms: BTreeMap::new() }
    }

    /// `c * e_i`, dropped when `e_i` lies above the truncation.
    pub fn basis_elt(n: usize, i: usize, c: C) -> LieElt<C> {
        let mut e = LieElt::zero(n);
        e.add_term(i, c);
        e
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (usize, C)>) -> LieElt<C> {
        let mut e = LieElt::zero(n);
        for (i, c) in terms {
            e.add_term(i, c);
        }
        e
    }

    pub fn add_term(&mut self, i: usize, c: C) {
        if basis().degree(i) <= self.n {
            accumulate(&mut self.terms, i, c);
        }
    }

    pub fn truncation(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &C)> {
        self.terms.iter().map(|(i, c)| (*i, c))
    }

    pub fn get(&self, i: usize) -> Option<&C> {
        self.terms.get(&i)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn plus(&self, o: &LieElt<C>) -> LieElt<C> {
        let mut out = LieElt { n: self.n.min(o.n), terms: BTreeMap::new() };
        for (i, c) in self.terms.iter().chain(o.terms.iter()) {
            out.add_term(*i, c.clone());
        }
        out
    }

    pub fn minus(&self, o: &LieElt<C>) -> LieElt<C> {
        self.plus(&o.negate())
    }

    pub fn negate(&self) -> LieElt<C> {
        self.map(|c| c.negate())
    }

    pub fn times(&self, r: &Rat) -> LieElt<C> {
        self.map(|c| c.times(r))
    }

    /// Coefficientwise map; zero images are dropped.
    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> LieElt<D> {
        LieElt::from_terms(self.n, self.terms.iter().map(|(i, c)| (*i, f(c))))
    }

    pub fn truncate(&self, n: usize) -> LieElt<C> {
        LieElt::from_terms(n.min(self.n), self.terms.iter().map(|(i, c)| (*i, c.clone())))
    }

    /// Homogeneous component of degree `d`.
    pub fn degree_part(&self, d: usize) -> LieElt<C> {
        let b = basis();
        LieElt::from_terms(self.n, self.terms.iter().filter(|(i, _)| b.degree(**i) == d).map(|(i, c)| (*i, c.clone())))
    }

    /// Lowest degree with a nonzero component.
    pub fn min_degree(&self) -> Option<usize> {
        self.terms.keys().map(|i| basis().degree(*i)).min()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(|i| basis().degree(*i)).max()
    }

    /// `[self, e_j]` for a basis element.
    pub fn bracket_basis_right(&self, j: usize) -> LieElt<C> {
        let b = basis();
        let mut out = LieElt::zero(self.n);
        for (i, c) in &self.terms {
            if b.degree(*i) + b.degree(j) > self.n {
                continue;
            }
            for (k, r) in b.bracket(*i, j).iter() {
                out.add_term(*k, c.times(r));
            }
        }
        out
    }

    /// Expansion in the truncated tensor algebra.
    pub fn to_assoc(&self) -> AssocElt<C> {
        let b = basis();
        let mut out = AssocElt::zero(self.n);
        for (i, c) in &self.terms {
            for (w, r) in b.assoc(*i).iter() {
                out.add_term(w.clone(), c.times(r));
            }
        }
        out
    }

    pub fn fmt_with(&self, f: &mut fmt::Formatter<'_>, show: impl Fn(&C) -> String) -> fmt::Result {
        write!(f, "{}", self.render(show))
    }

    /// `(c1) e1 + (c2) e2 + ...` with basis elements as brackets.
    pub fn render(&self, show: impl Fn(&C) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let b = basis();
        let parts: Vec<String> = self.terms.iter().map(|(i, c)| format!("({}) {}", show(c), b.bracket_string(*i))).collect();
        parts.join(" + ")
    }
}

impl LieElt<Rat> {
    pub fn gen(n: usize, letter: u8) -> LieElt<Rat> {
        LieElt::basis_elt(n, basis().generator(letter), Rat::one())
    }

    pub fn s(n: usize) -> LieElt<Rat> {
        LieElt::gen(n, S)
    }

    pub fn t(n: usize) -> LieElt<Rat> {
        LieElt::gen(n, T)
    }

    pub fn bracket(&self, o: &LieElt<Rat>) -> LieElt<Rat> {
        bracket_with(self, o, |a, b| a * b)
    }

    /// Inverse of [`to_assoc`](Self::to_assoc) on Lie polynomials.
    pub fn from_assoc(a: &AssocElt<Rat>) -> LieElt<Rat> {
        let b = basis();
        let mut by_len: BTreeMap<usize, AssocPoly> = BTreeMap::new();
        for (w, c) in &a.terms {
            assert!(!w.is_empty(), "Lie elements have no constant term");
            by_len.entry(w.len()).or_default().insert(w.clone(), c.clone());
        }
        let mut out = LieElt::zero(a.n);
        for (_, p) in by_len {
            for (k, c) in b.project(p) {
                out.add_term(k, c);
            }
        }
        out
    }
}

impl<C: Coeff + fmt::Display> fmt::Display for LieElt<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, |c| c.to_string())
    }
}

impl<C: Coeff> fmt::Debug for LieElt<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_with(f, |c| format!("{c:?}"))
    }
}

/// Bilinear bracket with a coefficient product supplied by the caller.
pub fn bracket_with<A: Coeff, B: Coeff, O: Coeff>(
    a: &LieElt<A>,
    b: &LieElt<B>,
    mul: impl Fn(&A, &B) -> O,
) -> LieElt<O> {
    let basis = basis();
    let n = a.n.min(b.n);
    let mut out = LieElt::zero(n);
    for (i, ca) in &a.terms {
        for (j, cb) in &b.terms {
            if basis.degree(*i) + basis.degree(*j) > n || i == j {
                continue;
            }
            let br = basis.bracket(*i, *j);
            if br.is_empty() {
                continue;
            }
            let p = mul(ca, cb);
            for (k, r) in br.iter() {
                out.add_term(*k, p.times(r));
            }
        }
    }
    out
}

/// `ad_T^k(target)`.
pub fn ad_pow<C: Coeff>(k: usize, target: &LieElt<C>) -> LieElt<C> {
    let t = basis().generator(T);
    let mut x = target.clone();
    for _ in 0..k {
        // [T, x] = -[x, T]
        x = x.bracket_basis_right(t).negate();
    }
    x
}

/// A derivation of the truncated free Lie algebra, given by its values on
/// `S` and `T`.
#[derive(Clone, PartialEq)]
pub struct Derivation<C> {
    pub s: LieElt<C>,
    pub t: LieElt<C>,
}

impl<C: Coeff> Derivation<C> {
    pub fn zero(n: usize) -> Derivation<C> {
        Derivation { s: LieElt::zero(n), t: LieElt::zero(n) }
    }

    pub fn new(s: LieElt<C>, t: LieElt<C>) -> Derivation<C> {
        let n = s.n.min(t.n);
        Derivation { s: s.truncate(n), t: t.truncate(n) }
    }

    pub fn truncation(&self) -> usize {
        self.s.n.min(self.t.n)
    }

    pub fn is_zero(&self) -> bool {
        self.s.is_zero() && self.t.is_zero()
    }

    /// `ad_u`, i.e. `X -> [u, X]`.
    pub fn inner(u: &LieElt<C>) -> Derivation<C> {
        let b = basis();
        Derivation {
            s: u.bracket_basis_right(b.generator(S)),
            t: u.bracket_basis_right(b.generator(T)),
        }
    }

    pub fn plus(&self, o: &Derivation<C>) -> Derivation<C> {
        Derivation { s: self.s.plus(&o.s), t: self.t.plus(&o.t) }
    }

    pub fn minus(&self, o: &Derivation<C>) -> Derivation<C> {
        Derivation { s: self.s.minus(&o.s), t: self.t.minus(&o.t) }
    }

    pub fn negate(&self) -> Derivation<C> {
        Derivation { s: self.s.negate(), t: self.t.negate() }
    }

    pub fn times(&self, r: &Rat) -> Derivation<C> {
        Derivation { s: self.s.times(r), t: self.t.times(r) }
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Derivation<D> {
        Derivation { s: self.s.map(&f), t: self.t.map(&f) }
    }

    pub fn truncate(&self, n: usize) -> Derivation<C> {
        Derivation { s: self.s.truncate(n), t: self.t.truncate(n) }
    }

    /// The component of derivation degree `d` (values of Lie degree `d + 1`).
    pub fn degree_part(&self, d: usize) -> Derivation<C> {
        Derivation { s: self.s.degree_part(d + 1), t: self.t.degree_part(d + 1) }
    }

    /// Lowest derivation degree present.
    pub fn min_degree(&self) -> Option<usize> {
        [self.s.min_degree(), self.t.min_degree()].into_iter().flatten().min().map(|d| d - 1)
    }

    /// Value on the generator `letter`.
    pub fn on(&self, letter: u8) -> &LieElt<C> {
        if letter == S {
            &self.s
        } else {
            &self.t
        }
    }

    /// Images of the basis elements needed to apply the derivation to `x`.
    fn images<'a>(&self, x: impl Iterator<Item = &'a usize>, n: usize) -> HashMap<usize, LieElt<C>> {
        let mut memo: HashMap<usize, LieElt<C>> = HashMap::new();
        for i in x {
            self.image(*i, n, &mut memo);
        }
        memo
    }

    fn image(&self, i: usize, n: usize, memo: &mut HashMap<usize, LieElt<C>>) -> LieElt<C> {
        if let Some(v) = memo.get(&i) {
            return v.clone();
        }
        let b = basis();
        let v = match b.factors(i) {
            None => self.on(b.word(i).0[0]).truncate(n),
            Some((l, r)) => {
                // D[a, b] = [Da, b] + [a, Db]
                let dl = self.image(l, n, memo);
                let dr = self.image(r, n, memo);
                let x = dl.bracket_basis_right(r);
                let y = dr.bracket_basis_right(l).negate();
                x.plus(&y)
            }
        };
        memo.insert(i, v.clone());
        v
    }

    /// Apply to `x`, multiplying derivation coefficients into element
    /// coefficients with `mul`.
    pub fn apply_with<B: Coeff, O: Coeff>(&self, x: &LieElt<B>, mul: impl Fn(&C, &B) -> O) -> LieElt<O> {
        let n = self.truncation().min(x.n);
        let b = basis();
        // A derivation never lowers degree, so only elements below the cap matter.
        let keys: Vec<usize> = x.terms.keys().copied().filter(|i| b.degree(*i) <= n).collect();
        let memo = self.images(keys.iter(), n);
        let mut out = LieElt::zero(n);
        for i in keys {
            let xb = &x.terms[&i];
            for (k, c) in memo[&i].terms() {
                out.add_term(k, mul(c, xb));
            }
        }
        out
    }
}

impl Derivation<Rat> {
    pub fn apply(&self, x: &LieElt<Rat>) -> LieElt<Rat> {
        self.apply_with(x, |a, b| a * b)
    }

    pub fn dbracket(&self, o: &Derivation<Rat>) -> Derivation<Rat> {
        dbracket_with(self, o, |a, b| a * b)
    }
}

/// `[D1, D2] = D1 D2 - D2 D1` on generators, where coefficients combine as
/// `mul(coefficient of D1, coefficient of D2)`.
pub fn dbracket_with<A: Coeff, B: Coeff, O: Coeff>(
    d1: &Derivation<A>,
    d2: &Derivation<B>,
    mul: impl Fn(&A, &B) -> O,
) -> Derivation<O> {
    let on = |x2: &LieElt<B>, x1: &LieElt<A>| {
        let p = d1.apply_with(x2, |a, b| mul(a, b));
        let q = d2.apply_with(x1, |b, a| mul(a, b));
        p.minus(&q)
    };
    Derivation { s: on(&d2.s, &d1.s), t: on(&d2.t, &d1.t) }
}

impl<C: Coeff + fmt::Display> fmt::Display for Derivation<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{S -> {}, T -> {}}}", self.s, self.t)
    }
}

impl<C: Coeff> fmt::Debug for Derivation<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{S -> {:?}, T -> {:?}}}", self.s, self.t)
    }
}

/// Element of the tensor algebra on `T`, `S` truncated above length `n`.
#[derive(Clone, PartialEq)]
pub struct AssocElt<C> {
    n: usize,
    terms: BTreeMap<Word, C>,
}

impl<C: Coeff> AssocElt<C> {
    pub fn zero(n: usize) -> AssocElt<C> {
        AssocElt { n, terms: BTreeMap::new() }
    }

    pub fn scalar(n: usize, c: C) -> AssocElt<C> {
        let mut a = AssocElt::zero(n);
        a.add_term(Word(vec![]), c);
        a
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Word, C)>) -> AssocElt<C> {
        let mut a = AssocElt::zero(n);
        for (w, c) in terms {
            a.add_term(w, c);
        }
        a
    }

    pub fn add_term(&mut self, w: Word, c: C) {
        if w.len() <= self.n {
            accumulate(&mut self.terms, w, c);
        }
    }

    pub fn truncation(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: &Word) -> Option<&C> {
        self.terms.get(w)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C)> {
        self.terms.iter()
    }

    pub fn plus(&self, o: &AssocElt<C>) -> AssocElt<C> {
        let mut out = AssocElt::zero(self.n.min(o.n));
        for (w, c) in self.terms.iter().chain(o.terms.iter()) {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn minus(&self, o: &AssocElt<C>) -> AssocElt<C> {
        self.plus(&o.times(&-Rat::one()))
    }

    pub fn times(&self, r: &Rat) -> AssocElt<C> {
        AssocElt::from_terms(self.n, self.terms.iter().map(|(w, c)| (w.clone(), c.times(r))))
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> AssocElt<D> {
        AssocElt::from_terms(self.n, self.terms.iter().map(|(w, c)| (w.clone(), f(c))))
    }

    pub fn mul_with<B: Coeff, O: Coeff>(&self, o: &AssocElt<B>, mul: impl Fn(&C, &B) -> O) -> AssocElt<O> {
        let mut out = AssocElt::zero(self.n.min(o.n));
        for (wa, ca) in &self.terms {
            for (wb, cb) in &o.terms {
                if wa.len() + wb.len() <= out.n {
                    out.add_term(wa.concat(wb), mul(ca, cb));
                }
            }
        }
        out
    }

    /// `exp(a)` for `a` without constant term; `one` is the unit coefficient.
    pub fn exp_with(&self, one: C, mul: impl Fn(&C, &C) -> C) -> Result<AssocElt<C>, crate::Error> {
        if self.terms.keys().any(|w| w.is_empty()) {
            return Err(crate::Error::Domain("exp needs an element without constant term".into()));
        }
        let mut acc = AssocElt::scalar(self.n, one.clone());
        let mut p = AssocElt::scalar(self.n, one);
        for k in 1..=self.n {
            p = p.mul_with(self, &mul).times(&Rat::new(1, k as i64));
            acc = acc.plus(&p);
        }
        Ok(acc)
    }

    /// `log(g)` for `g` with constant term one.
    pub fn log_with(&self, one: C, mul: impl Fn(&C, &C) -> C) -> Result<AssocElt<C>, crate::Error> {
        let unit = Word(vec![]);
        if self.terms.get(&unit) != Some(&one) {
            return Err(crate::Error::Domain("log needs an element with constant term 1".into()));
        }
        let mut x = self.clone();
        x.terms.remove(&unit);
        let mut acc = AssocElt::zero(self.n);
        let mut p = AssocElt::scalar(self.n, one);
        for k in 1..=self.n {
            p = p.mul_with(&x, &mul);
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc = acc.plus(&p.times(&Rat::new(sign, k as i64)));
        }
        Ok(acc)
    }
}

impl AssocElt<Rat> {
    pub fn one(n: usize) -> AssocElt<Rat> {
        AssocElt::scalar(n, Rat::one())
    }

    pub fn mul(&self, o: &AssocElt<Rat>) -> AssocElt<Rat> {
        self.mul_with(o, |a, b| a * b)
    }

    pub fn exp(&self) -> Result<AssocElt<Rat>, crate::Error> {
        self.exp_with(Rat::one(), |a, b| a * b)
    }

    pub fn log(&self) -> Result<AssocElt<Rat>, crate::Error> {
        self.log_with(Rat::one(), |a, b| a * b)
    }

    /// Shuffle test `c(I) c(J) = sum_{K in I sh J} c(K)` for all words with
    /// `|I| + |J| <= n`, together with `c(empty) = 1`.
    pub fn is_grouplike(&self) -> bool {
        let c = |w: &Word| self.terms.get(w).cloned().unwrap_or_else(Rat::zero);
        if c(&Word(vec![])) != Rat::one() {
            return false;
        }
        let words = all_words(self.n);
        for i in &words {
            for j in &words {
                if i.is_empty() || j.is_empty() || i.len() + j.len() > self.n || i > j {
                    continue;
                }
                let rhs: Rat = shuffle(i, j).into_iter().map(|(k, m)| &c(&k) * &Rat::int(m)).sum();
                if &c(i) * &c(j) != rhs {
                    return false;
                }
            }
        }
        true
    }
}

impl<C: Coeff + fmt::Display> fmt::Display for AssocElt<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(w, c)| format!("({c}) {w}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<C: Coeff> fmt::Debug for AssocElt<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(|(w, c)| format!("({c:?}) {w}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// All words of length `0..=n`.
pub fn all_words(n: usize) -> Vec<Word> {
    let mut out = vec![Word(vec![])];
    let mut layer = vec![Word(vec![])];
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &layer {
            for l in [T, S] {
                let mut v = w.0.clone();
                v.push(l);
                next.push(Word(v));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Shuffle product of two words, with multiplicities.
pub fn shuffle(a: &Word, b: &Word) -> BTreeMap<Word, i64> {
    let mut out = BTreeMap::new();
    if a.is_empty() || b.is_empty() {
        out.insert(if a.is_empty() { b.clone() } else { a.clone() }, 1);
        return out;
    }
    let (a0, ar) = (a.0[0], Word(a.0[1..].to_vec()));
    let (b0, br) = (b.0[0], Word(b.0[1..].to_vec()));
    for (w, m) in shuffle(&ar, b) {
        let mut v = vec![a0];
        v.extend(w.0);
        *out.entry(Word(v)).or_insert(0) += m;
    }
    for (w, m) in shuffle(a, &br) {
        let mut v = vec![b0];
        v.extend(w.0);
        *out.entry(Word(v)).or_insert(0) += m;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witt_dimensions() {
        for n in 1..=8 {
            assert_eq!(lyndon_basis(n).len(), witt_dimension(n), "degree {n}");
        }
        assert_eq!(lyndon_basis(1), vec!["T", "S"]);
        assert_eq!(lyndon_basis(2), vec!["[T,S]"]);
        assert_eq!(lyndon_basis(3), vec!["[T,[T,S]]", "[[T,S],S]"]);
    }

    #[test]
    fn parse_round_trip() {
        let b = basis();
        for i in 0..b.size_upto(6) {
            assert_eq!(b.parse_bracket(&b.bracket_string(i)), Some(i));
        }
        assert_eq!(b.parse_bracket("[S,T]"), None);
    }

    #[test]
    fn s_s_t_is_basis_word() {
        let n = 4;
        let s = LieElt::s(n);
        let t = LieElt::t(n);
        let x = s.bracket(&s.bracket(&t));
        let b = basis();
        let i = b.index_of(&Word::parse("TSS").unwrap()).unwrap();
        assert_eq!(x, LieElt::basis_elt(n, i, Rat::one()));
    }

    #[test]
    fn ad_t_squared_expansion() {
        let x = ad_pow(2, &LieElt::s(4)).to_assoc();
        let w = |s: &str| Word::parse(s).unwrap();
        let expect = AssocElt::from_terms(4, [(w("TTS"), Rat::one()), (w("TST"), Rat::int(-2)), (w("STT"), Rat::one())]);
        assert_eq!(x, expect);
    }

    #[test]
    fn derivation_examples() {
        let n = 4;
        // S d/dT
        let d = Derivation::new(LieElt::zero(n), LieElt::s(n));
        assert_eq!(d.apply(&LieElt::t(n)), LieElt::s(n));
        assert!(d.apply(&LieElt::s(n)).is_zero());
        let ads = Derivation::inner(&LieElt::s(n));
        let adt = Derivation::inner(&LieElt::t(n));
        let st = LieElt::s(n).bracket(&LieElt::t(n));
        assert_eq!(ads.dbracket(&adt), Derivation::inner(&st));
    }

    #[test]
    fn bch_low_degree() {
        let n = 3;
        let s = LieElt::s(n).to_assoc();
        let t = LieElt::t(n).to_assoc();
        let z = s.exp().unwrap().mul(&t.exp().unwrap()).log().unwrap();
        let lie = LieElt::from_assoc(&z);
        let (ls, lt) = (LieElt::s(n), LieElt::t(n));
        let st = ls.bracket(&lt);
        let expect = ls
            .plus(&lt)
            .plus(&st.times(&Rat::new(1, 2)))
            .plus(&ls.bracket(&st).times(&Rat::new(1, 12)))
            .plus(&lt.bracket(&lt.bracket(&ls)).times(&Rat::new(1, 12)));
        assert_eq!(lie, expect);
    }

    #[test]
    fn grouplike_examples() {
        assert!(AssocElt::one(4).is_grouplike());
        let n = 4;
        let a = LieElt::s(n).plus(&LieElt::s(n).bracket(&LieElt::t(n)).times(&Rat::int(2)));
        assert!(a.to_assoc().exp().unwrap().is_grouplike());
        let bad = AssocElt::one(2).plus(&LieElt::s(2).to_assoc()).plus(&LieElt::t(2).to_assoc());
        assert!(!bad.is_grouplike());
    }

    #[test]
    fn shuffle_counts() {
        let w = |s: &str| Word::parse(s).unwrap();
        let sh = shuffle(&w("T"), &w("S"));
        assert_eq!(sh.len(), 2);
        let sh = shuffle(&w("TT"), &w("T"));
        assert_eq!(sh.get(&w("TTT")), Some(&3));
    }
}
