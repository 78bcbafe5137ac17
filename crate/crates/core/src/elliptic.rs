//! Eisenstein series and the Eisenstein elliptic functions as exact
//! polynomials on the curve.
//!
//! `G_k` is normalized with constant term `-B_k/(2k)` and `q^n` coefficient
//! `sigma_{k-1}(n)`; `G_k = 0` for odd `k`. On the curve, `u = 20 G_4`,
//! `v = (7/3) G_6`, `P_2 = x` and `P_3 = -y/2`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::fun::CurveFun;
use crate::linalg::{self, Equation, Solution};
use crate::poly::{Curve, CurvePoly, Mono};
use crate::rat::Rat;

pub use crate::laurent::{weierstrass_laurent, WeierstrassData};

/// Bernoulli numbers with `B_1 = -1/2`.
pub fn bernoulli(n: u32) -> Rat {
    let mut b: Vec<Rat> = Vec::with_capacity(n as usize + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(Rat::one());
            continue;
        }
        // sum_{k=0}^{m} C(m+1, k) B_k = 0
        let s: Rat = (0..m).map(|k| &Rat::binomial(m + 1, k) * &b[k as usize]).sum();
        b.push(-(&s / &Rat::int(m as i64 + 1)));
    }
    b.pop().unwrap()
}

/// Truncated `q`-expansion `sum_{n < len} c_n q^n` with exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    pub coeffs: Vec<Rat>,
    /// Modular weight, when the series is a homogeneous form.
    pub weight: Option<u32>,
}

impl QSeries {
    pub fn constant(c: Rat, len: usize) -> QSeries {
        let mut coeffs = vec![Rat::zero(); len];
        if len > 0 {
            coeffs[0] = c;
        }
        QSeries { coeffs, weight: Some(0) }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, n: usize) -> &Rat {
        &self.coeffs[n]
    }

    pub fn scale(&self, c: &Rat) -> QSeries {
        QSeries { coeffs: self.coeffs.iter().map(|a| a * c).collect(), weight: self.weight }
    }

    pub fn add(&self, o: &QSeries) -> QSeries {
        let len = self.len().min(o.len());
        let weight = if self.weight == o.weight { self.weight } else { None };
        QSeries { coeffs: (0..len).map(|i| &self.coeffs[i] + &o.coeffs[i]).collect(), weight }
    }

    pub fn mul(&self, o: &QSeries) -> QSeries {
        let len = self.len().min(o.len());
        let mut coeffs = vec![Rat::zero(); len];
        for i in 0..len {
            for j in 0..len - i {
                coeffs[i + j] += &(&self.coeffs[i] * &o.coeffs[j]);
            }
        }
        let weight = match (self.weight, o.weight) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        QSeries { coeffs, weight }
    }

    pub fn pow(&self, e: u32) -> QSeries {
        let mut acc = QSeries::constant(Rat::one(), self.len());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }
}

fn sigma(k: u32, n: u64) -> Rat {
    let s: u128 = (1..=n).filter(|d| n % d == 0).map(|d| (d as u128).pow(k)).sum();
    Rat::from_bigint(num_bigint::BigInt::from(s))
}

/// `G_k` to `len` coefficients; the zero series for odd `k`.
pub fn eisenstein_g(k: u32, len: usize) -> QSeries {
    if k % 2 == 1 {
        return QSeries { coeffs: vec![Rat::zero(); len], weight: Some(k) };
    }
    let mut coeffs = Vec::with_capacity(len);
    for n in 0..len {
        if n == 0 {
            coeffs.push(-(&bernoulli(k) / &Rat::int(2 * k as i64)));
        } else {
            coeffs.push(sigma(k - 1, n as u64));
        }
    }
    QSeries { coeffs, weight: Some(k) }
}

/// Number of `q`-coefficients matched when solving for `p_m`.
pub const Q_MATCH_LEN: usize = 12;

/// Exponents `(a, b)` with `4a + 6b = m`.
pub fn weight_monomials(m: u32) -> Vec<(u32, u32)> {
    (0..=m / 4).filter_map(|a| {
        let r = m - 4 * a;
        (r % 6 == 0).then_some((a, r / 6))
    }).collect()
}

/// `p_m(u, v)` with `G_m = p_m(20 G_4, (7/3) G_6)`, as a polynomial on the
/// universal curve. Odd `m` gives zero.
pub fn p_poly(m: u32) -> CurvePoly {
    let curve = Curve::universal();
    p_poly_on(&curve, m).expect("Eisenstein q-expansions are consistent")
}

/// `p_m` on the given curve (fixed values of `u`, `v` on a fiber).
pub fn p_poly_on(curve: &Arc<Curve>, m: u32) -> Result<CurvePoly, crate::Error> {
    if m % 2 == 1 {
        return Ok(CurvePoly::zero(curve));
    }
    if m < 4 {
        return Err(crate::Error::Domain(format!("p_{m} is not a polynomial in u, v")));
    }
    let len = Q_MATCH_LEN;
    let uq = eisenstein_g(4, len).scale(&Rat::int(20));
    let vq = eisenstein_g(6, len).scale(&Rat::new(7, 3));
    let monos = weight_monomials(m);
    let cols: Vec<QSeries> = monos.iter().map(|(a, b)| uq.pow(*a).mul(&vq.pow(*b))).collect();
    let target = eisenstein_g(m, len);
    let eqs: Vec<Equation> =
        (0..len).map(|n| Equation::new(cols.iter().enumerate().map(|(j, c)| (j, c.coeffs[n].clone())), target.coeffs[n].clone())).collect();
    match linalg::solve(monos.len(), &eqs) {
        Solution::Solved { values, free } if free.is_empty() => Ok(CurvePoly::from_terms(
            curve,
            monos.iter().zip(values).map(|((a, b), c)| (Mono::new(0, 0, *a, *b), c)),
        )),
        _ => Err(crate::Error::Domain(format!("no consistent q-expansion match for p_{m}"))),
    }
}

/// `G_k` as a polynomial in `u, v` (`k >= 3`); zero for odd `k`.
fn g_on(curve: &Arc<Curve>, k: u32, cache: &mut BTreeMap<u32, CurvePoly>) -> CurvePoly {
    cache.entry(k).or_insert_with(|| p_poly_on(curve, k).expect("valid weight")).clone()
}

/// `P_2, ..., P_kmax` on a curve, indexed by `k` (entries 0 and 1 are zero).
pub fn p_polys_on(curve: &Arc<Curve>, kmax: u32) -> Vec<CurvePoly> {
    let mut g = BTreeMap::new();
    let mut p = vec![CurvePoly::zero(curve); (kmax as usize + 1).max(4)];
    p[2] = CurvePoly::x(curve);
    p[3] = CurvePoly::y(curve).scale(&Rat::new(-1, 2));
    for k in 4..=kmax {
        // The m = 2 case of the product relation, solved for P_{n+2}:
        // P_{n+2} = P_2 P_n - sum_{j=1}^{n-2} (2/j!) G_{j+2} P_{n-j} - ((n+2)/n!) G_{n+2}
        let n = k - 2;
        let mut acc = &p[2] * &p[n as usize];
        for j in 1..=n.saturating_sub(2) {
            let gj = g_on(curve, j + 2, &mut g);
            if gj.is_zero() {
                continue;
            }
            let t = (&gj * &p[(n - j) as usize]).scale(&(&Rat::int(2) / &Rat::factorial(j)));
            acc = &acc - &t;
        }
        let c = &Rat::int(n as i64 + 2) / &Rat::factorial(n);
        acc = &acc - &g_on(curve, n + 2, &mut g).scale(&c);
        p[k as usize] = acc;
    }
    p.truncate(kmax as usize + 1);
    p
}

/// `P_k` on the universal curve.
pub fn p_k_poly(k: u32) -> CurvePoly {
    assert!(k >= 2, "P_k needs k >= 2");
    p_polys_on(&Curve::universal(), k).pop().unwrap()
}

/// Residual `P_m P_n - P_{m+n} - RHS` of the general product relation.
pub fn recurrence_residual(curve: &Arc<Curve>, m: u32, n: u32) -> CurvePoly {
    let p = p_polys_on(curve, m + n);
    let mut g = BTreeMap::new();
    let sign = |e: u32| if e % 2 == 0 { Rat::one() } else { -Rat::one() };
    let mut rhs = CurvePoly::zero(curve);
    let c1 = &sign(n) / &Rat::factorial(n - 1);
    for h in 1..=m.saturating_sub(2) {
        let t = (&g_on(curve, n + h, &mut g) * &p[(m - h) as usize]).scale(&(&c1 * &(&Rat::int(2) / &Rat::factorial(h))));
        rhs = &rhs + &t;
    }
    let c2 = &sign(m) / &Rat::factorial(m - 1);
    for k in 1..=n.saturating_sub(2) {
        let t = (&g_on(curve, m + k, &mut g) * &p[(n - k) as usize]).scale(&(&c2 * &(&Rat::int(2) / &Rat::factorial(k))));
        rhs = &rhs + &t;
    }
    let c3 = &(&sign(m) * &Rat::int(2 * (m + n) as i64)) / &(&Rat::factorial(m) * &Rat::factorial(n));
    rhs = &rhs + &g_on(curve, m + n, &mut g).scale(&c3);
    &(&(&p[m as usize] * &p[n as usize]) - &p[(m + n) as usize]) - &rhs
}

/// Partitions of `n` into parts `>= min_part`, each in descending order.
pub fn partitions(n: u32, min_part: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(rem: u32, max: u32, min: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        let mut p = max.min(rem);
        while p >= min.max(1) {
            cur.push(p);
            rec(rem - p, p, min, cur, out);
            cur.pop();
            p -= 1;
        }
    }
    rec(n, n, min_part, &mut cur, &mut out);
    out
}

/// `sum over partitions prod_k (1/a_k!) ((-1)^{k+1} P_k / k)^{a_k}`, where
/// `P_1` is taken as `p1` and `a_k` is the multiplicity of the part `k`.
fn partition_sum(curve: &Arc<Curve>, n: u32, min_part: u32, p: &[CurveFun]) -> CurveFun {
    let mut total = CurveFun::zero(curve);
    for part in partitions(n, min_part) {
        let mut mult: BTreeMap<u32, u32> = BTreeMap::new();
        for k in part {
            *mult.entry(k).or_insert(0) += 1;
        }
        let mut term = CurveFun::one(curve);
        for (k, a) in mult {
            let sign = if k % 2 == 1 { Rat::one() } else { -Rat::one() };
            let base = p[k as usize].scale(&(&sign / &Rat::int(k as i64)));
            term = &term * &base.pow(a).scale(&Rat::factorial(a).recip());
        }
        total = &total + &term;
    }
    total
}

fn p_funs(curve: &Arc<Curve>, n: u32) -> Vec<CurveFun> {
    let mut p: Vec<CurveFun> = p_polys_on(curve, n.max(3)).into_iter().map(CurveFun::from_poly).collect();
    // P_1 = -2x^2/y
    p[1] = &CurveFun::x(curve).pow(2).scale(&Rat::int(-2)) * &CurveFun::inv_y(curve);
    p
}

/// `q_n` (partitions with parts `>= 2`) on a curve.
pub fn q_n_on(curve: &Arc<Curve>, n: u32) -> CurvePoly {
    assert!(n >= 2, "q_n needs n >= 2");
    let f = partition_sum(curve, n, 2, &p_funs(curve, n));
    f.as_poly().cloned().expect("q_n is a polynomial")
}

/// `q_n` on the universal curve.
pub fn q_n_poly(n: u32) -> CurvePoly {
    q_n_on(&Curve::universal(), n)
}

/// `r_n` (all partitions, with `P_1 = -2x^2/y`) on a curve.
pub fn r_n_on(curve: &Arc<Curve>, n: u32) -> CurveFun {
    assert!(n >= 1, "r_n needs n >= 1");
    partition_sum(curve, n, 1, &p_funs(curve, n))
}

/// `r_n` on the universal curve.
pub fn r_n_fun(n: u32) -> CurveFun {
    r_n_on(&Curve::universal(), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(0), Rat::one());
        assert_eq!(bernoulli(1), Rat::new(-1, 2));
        assert_eq!(bernoulli(4), Rat::new(-1, 30));
        assert_eq!(bernoulli(3), Rat::zero());
        assert_eq!(bernoulli(12), Rat::new(-691, 2730));
    }

    #[test]
    fn g4_coefficients() {
        let g = eisenstein_g(4, 4);
        assert_eq!(g.coeffs[0], Rat::new(1, 240));
        assert_eq!(g.coeffs[2], Rat::int(9));
        assert!(eisenstein_g(3, 4).coeffs.iter().all(|c| c.is_zero()));
    }

    #[test]
    fn low_p_polys() {
        assert_eq!(p_poly(4).to_string(), "1/20*u");
        assert_eq!(p_poly(6).to_string(), "3/7*v");
        assert_eq!(p_poly(8).to_string(), "3/10*u^2");
    }

    #[test]
    fn low_p_k() {
        assert_eq!(p_k_poly(2).to_string(), "x");
        assert_eq!(p_k_poly(3).to_string(), "-1/2*y");
        assert_eq!(p_k_poly(4).to_string(), "x^2 - 1/10*u");
    }

    #[test]
    fn q_values() {
        assert_eq!(q_n_poly(2).to_string(), "-1/2*x");
        assert_eq!(q_n_poly(3).to_string(), "-1/6*y");
        assert_eq!(q_n_poly(4).to_string(), "-1/8*x^2 + 1/40*u");
    }

    #[test]
    fn partition_counts() {
        assert_eq!(partitions(5, 1).len(), 7);
        assert_eq!(partitions(6, 2).len(), 4);
        assert_eq!(partitions(4, 1)[0], vec![4]);
    }
}
