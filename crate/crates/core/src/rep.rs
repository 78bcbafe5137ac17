//! Matrix connections obtained by sending `S, T` to nilpotent matrices.

use std::fmt;
use std::sync::Arc;

use crate::connection::{Connection, GaugeFun};
use crate::forms::{exterior_d, DiffForm1};
use crate::freelie::{basis, LieElt};
use crate::fun::CurveFun;
use crate::poly::Curve;
use crate::rat::Rat;
use crate::Error;

pub type RatMatrix = Vec<Vec<Rat>>;

#[derive(Clone, PartialEq)]
pub struct MatrixConnection {
    curve: Arc<Curve>,
    entries: Vec<Vec<DiffForm1>>,
}

/// A pair of nilpotent matrices standing for `S` and `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rep {
    dim: usize,
    s: RatMatrix,
    t: RatMatrix,
}

fn mat_zero(n: usize) -> RatMatrix {
    vec![vec![Rat::zero(); n]; n]
}

fn mat_id(n: usize) -> RatMatrix {
    let mut m = mat_zero(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Rat::one();
    }
    m
}

fn mat_mul(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let n = a.len();
    let mut out = mat_zero(n);
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                out[i][j] += &(&a[i][k] * &b[k][j]);
            }
        }
    }
    out
}

fn is_zero_mat(a: &RatMatrix) -> bool {
    a.iter().flatten().all(Rat::is_zero)
}

impl Rep {
    /// Validates shapes and nilpotency.
    pub fn new(s: RatMatrix, t: RatMatrix) -> Result<Rep, Error> {
        let dim = s.len();
        let square = |m: &RatMatrix| m.len() == dim && m.iter().all(|r| r.len() == dim);
        if !square(&s) || !square(&t) {
            return Err(Error::Domain("representation matrices must be square of equal size".into()));
        }
        for (name, m) in [("S", &s), ("T", &t)] {
            let mut p = mat_id(dim);
            for _ in 0..dim {
                p = mat_mul(&p, m);
            }
            if !is_zero_mat(&p) {
                return Err(Error::Domain(format!("image of {name} is not nilpotent")));
            }
        }
        Ok(Rep { dim, s, t })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn letter(&self, l: u8) -> &RatMatrix {
        if l == crate::freelie::S {
            &self.s
        } else {
            &self.t
        }
    }

    /// Image of a word.
    fn word(&self, w: &[u8]) -> RatMatrix {
        w.iter().fold(mat_id(self.dim), |acc, &l| mat_mul(&acc, self.letter(l)))
    }

    /// Image of the Lie basis element `i`.
    pub fn basis_image(&self, i: usize) -> RatMatrix {
        let mut out = mat_zero(self.dim);
        for (w, c) in basis().assoc(i).iter() {
            let m = self.word(&w.0);
            for (orow, mrow) in out.iter_mut().zip(&m) {
                for (o, x) in orow.iter_mut().zip(mrow) {
                    *o += &(c * x);
                }
            }
        }
        out
    }

    /// Whether every word of length `len` maps to zero.
    fn kills_words_of_length(&self, len: usize) -> bool {
        let mut layer = vec![mat_id(self.dim)];
        for _ in 0..len {
            layer = layer.iter().flat_map(|m| [mat_mul(m, &self.s), mat_mul(m, &self.t)]).filter(|m| !is_zero_mat(m)).collect();
            if layer.is_empty() {
                return true;
            }
        }
        layer.is_empty()
    }

    fn image<C: crate::freelie::Coeff>(&self, u: &LieElt<C>, zero: C, add: impl Fn(&C, &C, &Rat) -> C) -> Vec<Vec<C>> {
        let mut out = vec![vec![zero; self.dim]; self.dim];
        for (i, c) in u.terms() {
            let m = self.basis_image(i);
            for (orow, mrow) in out.iter_mut().zip(&m) {
                for (o, x) in orow.iter_mut().zip(mrow) {
                    if !x.is_zero() {
                        *o = add(o, c, x);
                    }
                }
            }
        }
        out
    }
}

/// `(1 ⊗ ρ) ∘ ω` for an inner connection `ω = ad_u`, i.e. `d + ρ(u)`.
pub fn specialize_rep(c: &Connection, rep: &Rep) -> Result<MatrixConnection, Error> {
    let u = c.inner_element().ok_or_else(|| Error::Domain("connection has non-inner components".into()))?;
    if !rep.kills_words_of_length(c.degree() + 2) {
        return Err(Error::TruncationTooShort { requested: rep.dim as i64, available: c.degree() as i64 + 1 });
    }
    let entries = rep.image(&u, DiffForm1::zero(c.curve()), |o, w, x| o + &w.scale(x));
    Ok(MatrixConnection { curve: c.curve().clone(), entries })
}

type FunMatrix = Vec<Vec<CurveFun>>;

fn fun_mul(a: &FunMatrix, b: &FunMatrix) -> FunMatrix {
    let n = a.len();
    let curve = a[0][0].curve().clone();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(CurveFun::zero(&curve), |acc, k| &acc + &(&a[i][k] * &b[k][j])))
                .collect()
        })
        .collect()
}

fn fun_exp(a: &FunMatrix) -> FunMatrix {
    let n = a.len();
    let curve = a[0][0].curve().clone();
    let mut out: FunMatrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { CurveFun::one(&curve) } else { CurveFun::zero(&curve) }).collect())
        .collect();
    let mut term = out.clone();
    for k in 1..=n as u32 {
        term = fun_mul(&term, a).into_iter().map(|r| r.into_iter().map(|f| f.scale(&Rat::int(k as i64).recip())).collect()).collect();
        for (orow, trow) in out.iter_mut().zip(&term) {
            for (o, t) in orow.iter_mut().zip(trow) {
                *o = &*o + t;
            }
        }
    }
    out
}

impl MatrixConnection {
    pub fn curve(&self) -> &Arc<Curve> {
        &self.curve
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &DiffForm1 {
        &self.entries[i][j]
    }

    pub fn is_trivial(&self) -> bool {
        self.entries.iter().flatten().all(DiffForm1::is_zero)
    }

    /// `-dG G^-1 + G Ω G^-1` with `G = exp(ρ(a))` for `g = exp(ad_a)`.
    pub fn gauge(&self, g: &GaugeFun, rep: &Rep) -> Result<MatrixConnection, Error> {
        let a = g.inner_element().ok_or_else(|| Error::Domain("gauge is not inner".into()))?;
        let n = self.dim();
        let fa = rep.image(&a, CurveFun::zero(&self.curve), |o, f, x| o + &f.scale(x));
        let neg: FunMatrix = fa.iter().map(|r| r.iter().map(|f| -f).collect()).collect();
        let gm = fun_exp(&fa);
        let gi = fun_exp(&neg);
        let zero = DiffForm1::zero(&self.curve);
        let mut out = vec![vec![zero.clone(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = zero.clone();
                for k in 0..n {
                    acc = &acc - &exterior_d(&gm[i][k]).mul_fun(&gi[k][j]);
                    for l in 0..n {
                        acc = &acc + &self.entries[k][l].mul_fun(&(&gm[i][k] * &gi[l][j]));
                    }
                }
                out[i][j] = acc;
            }
        }
        Ok(MatrixConnection { curve: self.curve.clone(), entries: out })
    }
}

impl fmt::Display for MatrixConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.entries {
            let cells: Vec<String> = row.iter().map(|w| w.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for MatrixConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
