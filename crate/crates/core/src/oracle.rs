//! Double-precision q-series evaluation of `G_k`, `P_k` and `F^Zag`.
//!
//! Everything is routed through convergent series in `q = e^{2πiτ}` and
//! `w = e^{2πiξ}`; nothing is lattice-summed.

use std::f64::consts::PI;

use num_complex::Complex64 as C;

use crate::elliptic::{bernoulli, p_k_poly};
use crate::Error;

const MAX_TERMS: usize = 20_000;

fn two_pi_i() -> C {
    C::new(0.0, 2.0 * PI)
}

/// A point `(ξ, τ)` of `C × h` off the lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub xi: C,
    pub tau: C,
}

impl Point {
    pub fn new(xi: C, tau: C) -> Result<Point, Error> {
        if tau.im <= 0.0 {
            return Err(Error::Domain("τ must lie in the upper half plane".into()));
        }
        // Distance from ξ to the nearest lattice point m + nτ.
        let n = (xi.im / tau.im).round();
        let mut best = f64::INFINITY;
        for dn in -1..=1 {
            let nn = n + dn as f64;
            let r = xi - tau * nn;
            let m = r.re.round();
            for dm in -1..=1 {
                best = best.min((r - (m + dm as f64)).norm());
            }
        }
        if best < 1e-6 {
            return Err(Error::Domain("ξ is too close to a lattice point".into()));
        }
        Ok(Point { xi, tau })
    }

    pub fn q(&self) -> C {
        q_of(self.tau)
    }

    pub fn w(&self) -> C {
        (two_pi_i() * self.xi).exp()
    }
}

pub fn q_of(tau: C) -> C {
    (two_pi_i() * tau).exp()
}

/// `G_k(τ) = -B_k/(2k) + Σ σ_{k-1}(n) q^n` for even `k`, zero for odd `k`.
pub fn eval_g(k: u32, tau: C) -> Result<C, Error> {
    if k % 2 == 1 {
        return Ok(C::new(0.0, 0.0));
    }
    let q = q_of(tau);
    let c0 = -bernoulli(k).to_f64() / (2.0 * k as f64);
    // Lambert series Σ d^{k-1} q^d / (1 - q^d)
    let s = sum_until(|d| {
        let qd = q.powu(d as u32);
        (d as f64).powi(k as i32 - 1) * qd / (1.0 - qd)
    })?;
    Ok(C::new(c0, 0.0) + s)
}

/// `dG_k/dτ = 2πi Σ d^k q^d / (1 - q^d)^2`.
pub fn eval_g_dtau(k: u32, tau: C) -> Result<C, Error> {
    if k % 2 == 1 {
        return Ok(C::new(0.0, 0.0));
    }
    let q = q_of(tau);
    let s = sum_until(|d| {
        let qd = q.powu(d as u32);
        (d as f64).powi(k as i32) * qd / ((1.0 - qd) * (1.0 - qd))
    })?;
    Ok(two_pi_i() * s)
}

/// Sum `term(1) + term(2) + ...` until terms are negligible.
fn sum_until(term: impl Fn(usize) -> C) -> Result<C, Error> {
    let mut s = C::new(0.0, 0.0);
    let mut small = 0;
    for d in 1..MAX_TERMS {
        let t = term(d);
        if !t.re.is_finite() || !t.im.is_finite() {
            return Err(Error::Domain("non-finite term in q-series".into()));
        }
        s += t;
        if t.norm() <= 1e-18 * s.norm().max(1.0) {
            small += 1;
            if small >= 3 {
                return Ok(s);
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Domain("q-series did not reach the requested tolerance".into()))
}

/// Numerators `N_j` with `θ^j f = N_j(z) / (1 - z)^{j+2}`, `f = z/(1-z)^2`, `θ = z d/dz`.
fn theta_numerators(jmax: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0, 1.0]];
    for j in 0..jmax {
        let n = &out[j];
        let m = (j + 2) as f64;
        // θ(N/(1-z)^m) = [z N' (1 - z) + m z N] / (1-z)^{m+1}
        let mut next = vec![0.0; n.len() + 1];
        for (i, c) in n.iter().enumerate() {
            let zn1 = i as f64 * c; // coefficient of z^i in z N'
            next[i] += zn1;
            next[i + 1] -= zn1;
            next[i + 1] += m * c;
        }
        out.push(next);
    }
    out
}

fn theta_f(num: &[f64], j: usize, z: C) -> C {
    let p = num.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * z + c);
    p / (1.0 - z).powu(j as u32 + 2)
}

/// `Σ_{n≥0} n^a g(w q^n) + s Σ_{m≥1} m^a g(q^m / w)`.
fn lattice_sum(g: impl Fn(C) -> C, w: C, q: C, a: u32, s: f64) -> Result<C, Error> {
    let head = if a == 0 { g(w) } else { C::new(0.0, 0.0) };
    let wi = 1.0 / w;
    let tail = sum_until(|n| {
        let qn = q.powu(n as u32);
        (n as f64).powi(a as i32) * (g(w * qn) + s * g(wi * qn))
    })?;
    Ok(head + tail)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `P_k(ξ, τ) = (2πi)^{-k} (E_k - e_k)`, and `(2πi)^{-1} E_1` for `k = 1`.
pub fn eval_p(k: u32, p: &Point) -> Result<C, Error> {
    let (w, q) = (p.w(), p.q());
    if k == 0 {
        return Err(Error::Domain("P_k needs k >= 1".into()));
    }
    if k == 1 {
        // θ'/θ for θ(u) = (w^{1/2} - w^{-1/2}) Π (1 - q^n w)(1 - q^n/w)
        let h = (w + 1.0) / (2.0 * (w - 1.0));
        let k1 = |z: C| z / (1.0 - z);
        return Ok(h - (lattice_sum(k1, w, q, 0, -1.0)? - k1(w)));
    }
    let j = (k - 2) as usize;
    let nums = theta_numerators(j);
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    let a = lattice_sum(|z| theta_f(&nums[j], j, z), w, q, 0, sign)?;
    let kf = factorial(k - 1);
    let ck = if k % 2 == 0 { 1.0 } else { -1.0 } / kf;
    let corr = if k % 2 == 0 { 2.0 * eval_g(k, p.tau)? / kf } else { C::new(0.0, 0.0) };
    Ok(ck * a - corr)
}

/// `∂P_k/∂τ` at fixed `ξ`.
pub fn eval_p_dtau(k: u32, p: &Point) -> Result<C, Error> {
    let (w, q) = (p.w(), p.q());
    let nums = theta_numerators(k as usize);
    if k == 1 {
        let f = |z: C| theta_f(&nums[0], 0, z);
        return Ok(-two_pi_i() * lattice_sum(f, w, q, 1, -1.0)?);
    }
    let j = (k - 2) as usize;
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    let a = lattice_sum(|z| theta_f(&nums[j + 1], j + 1, z), w, q, 1, sign)? * two_pi_i();
    let kf = factorial(k - 1);
    let ck = if k % 2 == 0 { 1.0 } else { -1.0 } / kf;
    let corr = if k % 2 == 0 { 2.0 * eval_g_dtau(k, p.tau)? / kf } else { C::new(0.0, 0.0) };
    Ok(ck * a - corr)
}

/// Curve coordinates `(x, y, u, v) = (P_2, -2P_3, 20G_4, (7/3)G_6)`.
pub fn curve_coordinates(p: &Point) -> Result<[C; 4], Error> {
    Ok([eval_p(2, p)?, -2.0 * eval_p(3, p)?, 20.0 * eval_g(4, p.tau)?, 7.0 / 3.0 * eval_g(6, p.tau)?])
}

/// `θ(u) = (e^{u/2} - e^{-u/2}) Π (1 - q^n e^u)(1 - q^n e^{-u}) / (1 - q^n)^2`, so `θ'(0) = 1`.
fn theta(u: C, q: C) -> Result<C, Error> {
    let e = u.exp();
    let ei = 1.0 / e;
    let mut prod = (u / 2.0).exp() - (-u / 2.0).exp();
    let mut small = 0;
    for n in 1..MAX_TERMS {
        let qn = q.powu(n as u32);
        let f = (1.0 - qn * e) * (1.0 - qn * ei) / ((1.0 - qn) * (1.0 - qn));
        prod *= f;
        if (f - 1.0).norm() < 1e-18 {
            small += 1;
            if small >= 3 {
                return Ok(prod);
            }
        }
    }
    Err(Error::Domain("theta product did not converge".into()))
}

/// `F^Zag(u, v, τ) = θ(u + v) / (θ(u) θ(v))`.
pub fn eval_fzag(u: C, v: C, tau: C) -> Result<C, Error> {
    let q = q_of(tau);
    let (tu, tv) = (theta(u, q)?, theta(v, q)?);
    if tu.norm() < 1e-12 || tv.norm() < 1e-12 {
        return Err(Error::Domain("F^Zag evaluated too close to a pole".into()));
    }
    Ok(theta(u + v, q)? / (tu * tv))
}

/// `((u + v)/(uv)) exp(Σ_{k ≤ kmax} (2/k!) [u^k + v^k - (u + v)^k] G_k)`, valid for small `u, v`.
pub fn eval_fzag_series(u: C, v: C, tau: C, kmax: u32) -> Result<C, Error> {
    let mut s = C::new(0.0, 0.0);
    for k in 2..=kmax {
        let g = eval_g(k, tau)?;
        s += 2.0 / factorial(k) * (u.powu(k) + v.powu(k) - (u + v).powu(k)) * g;
    }
    Ok((u + v) / (u * v) * s.exp())
}

/// Power series helpers on coefficient vectors.
fn series_exp(a: &[C]) -> Vec<C> {
    // e' = a' e, e_0 = exp(a_0)
    let n = a.len();
    let mut e = vec![C::new(0.0, 0.0); n];
    e[0] = a[0].exp();
    for m in 1..n {
        let mut s = C::new(0.0, 0.0);
        for k in 1..=m {
            s += k as f64 * a[k] * e[m - k];
        }
        e[m] = s / m as f64;
    }
    e
}

/// Taylor coefficients `0..=m` of `exp(-Σ_{k≥1} (-T)^k/k P_k)`.
pub fn kronecker_coefficients(p: &Point, m: usize) -> Result<Vec<C>, Error> {
    let mut a = vec![C::new(0.0, 0.0); m + 1];
    for k in 1..=m {
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        a[k] = sign / k as f64 * eval_p(k as u32, p)?;
    }
    Ok(series_exp(&a))
}

/// Taylor coefficients of `T ↦ T F^Zag(2πiξ, T, τ)` by a Cauchy integral.
pub fn fzag_taylor(p: &Point, m: usize) -> Result<Vec<C>, Error> {
    let u = two_pi_i() * p.xi;
    // Stay well inside the nearest pole in T.
    let mut dist = f64::INFINITY;
    for a in -3i32..=3 {
        for b in -3i32..=3 {
            let l = two_pi_i() * (a as f64 + p.tau * b as f64);
            if a != 0 || b != 0 {
                dist = dist.min(l.norm());
            }
            dist = dist.min((l - u).norm());
        }
    }
    let r = (0.3 * dist).min(1.0);
    let n = 256;
    let mut coeffs = vec![C::new(0.0, 0.0); m + 1];
    for l in 0..n {
        let z = C::from_polar(r, 2.0 * PI * l as f64 / n as f64);
        let val = z * eval_fzag(u, z, p.tau)?;
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c += val * z.powi(-(j as i32));
        }
    }
    Ok(coeffs.into_iter().map(|c| c / n as f64).collect())
}

fn max_dev(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `|y^2 - (4x^3 - ux - v)|`.
pub fn check_curve(p: &Point) -> Result<f64, Error> {
    let [x, y, u, v] = curve_coordinates(p)?;
    Ok((y * y - (4.0 * x * x * x - u * x - v)).norm())
}

/// Max deviation of Taylor coefficients `0..=m` in `T` of both sides of
/// `T F^Zag(2πiξ, T, τ) = exp(-Σ (-T)^k/k P_k)`.
pub fn check_kronecker_expansion(p: &Point, m: usize) -> Result<f64, Error> {
    Ok(max_dev(&fzag_taylor(p, m)?, &kronecker_coefficients(p, m)?))
}

/// Same for `T ∂F/∂T = exp(...)(Σ (-T)^{k-1} P_k - 1/T)`, comparing Laurent
/// coefficients of `T^{-1} .. T^{m-1}`.
pub fn check_kronecker_derivative(p: &Point, m: usize) -> Result<f64, Error> {
    let g = fzag_taylor(p, m)?;
    // T F = G  =>  T ∂F/∂T = G' - G/T, coefficient of T^{j-1} is (j - 1) g_j.
    let lhs: Vec<C> = (0..=m).map(|j| (j as f64 - 1.0) * g[j]).collect();
    let e = kronecker_coefficients(p, m)?;
    let s: Vec<C> = (0..m)
        .map(|b| Ok(if b % 2 == 0 { 1.0 } else { -1.0 } * eval_p(b as u32 + 1, p)?))
        .collect::<Result<Vec<_>, _>>()?;
    let rhs: Vec<C> = (0..=m)
        .map(|j| {
            let conv: C = if j == 0 { C::new(0.0, 0.0) } else { (0..j).map(|a| e[a] * s[j - 1 - a]).sum() };
            conv - e[j]
        })
        .collect();
    Ok(max_dev(&lhs, &rhs))
}

/// Richardson-extrapolated central difference.
fn d_tau(f: impl Fn(C) -> Result<C, Error>, tau: C, h: f64) -> Result<C, Error> {
    let cd = |h: f64| -> Result<C, Error> { Ok((f(tau + h)? - f(tau - h)?) / (2.0 * h)) };
    let (d1, d2, d3) = (cd(h)?, cd(h / 2.0)?, cd(h / 4.0)?);
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    Ok((16.0 * r2 - r1) / 15.0)
}

/// `2πi ∂E_1/∂τ = E_3 - E_1 E_2`, with the τ-derivative taken numerically.
pub fn check_e1_tau_derivative(p: &Point) -> Result<f64, Error> {
    let tpi = two_pi_i();
    let xi = p.xi;
    let e1 = |tau: C| -> Result<C, Error> { Ok(tpi * eval_p(1, &Point::new(xi, tau)?)?) };
    let de1 = d_tau(e1, p.tau, 1e-3)?;
    let e1v = tpi * eval_p(1, p)?;
    let e2 = tpi * tpi * (eval_p(2, p)? + 2.0 * eval_g(2, p.tau)?);
    let e3 = tpi * tpi * tpi * eval_p(3, p)?;
    Ok(((tpi * de1 - (e3 - e1v * e2)) / (tpi * tpi * tpi)).norm())
}

/// `|3(2u v' - 3v u')/(2Δ) - 2πi|` with `u = 20G_4`, `v = (7/3)G_6`, `' = d/dτ`.
pub fn check_tau_form(tau: C) -> Result<f64, Error> {
    let (u, v) = (20.0 * eval_g(4, tau)?, 7.0 / 3.0 * eval_g(6, tau)?);
    let (du, dv) = (20.0 * eval_g_dtau(4, tau)?, 7.0 / 3.0 * eval_g_dtau(6, tau)?);
    let delta = u * u * u - 27.0 * v * v;
    Ok((3.0 * (2.0 * u * dv - 3.0 * v * du) / (2.0 * delta) - two_pi_i()).norm())
}

/// Both components of `2πi(dξ + E_1/(2πi) dτ) = dx/y - ((6x^2-u)/y)(α/2Δ) - (1/6)(dΔ/Δ)(x/y)`.
pub fn check_dxi_form(p: &Point) -> Result<f64, Error> {
    let tpi = two_pi_i();
    let [x, y, u, v] = curve_coordinates(p)?;
    // ∂x/∂ξ = 2πi D P_2 = 2πi y
    let x_xi = tpi * y;
    let x_tau = eval_p_dtau(2, p)?;
    let (u_t, v_t) = (20.0 * eval_g_dtau(4, p.tau)?, 7.0 / 3.0 * eval_g_dtau(6, p.tau)?);
    let delta = u * u * u - 27.0 * v * v;
    let delta_t = 3.0 * u * u * u_t - 54.0 * v * v_t;
    let alpha_t = 2.0 * u * v_t - 3.0 * v * u_t;
    let rhs_xi = x_xi / y;
    let rhs_tau = x_tau / y - (6.0 * x * x - u) / y * alpha_t / (2.0 * delta) - delta_t / delta * x / y / 6.0;
    let lhs_tau = tpi * eval_p(1, p)?;
    Ok((rhs_xi - tpi).norm().max((rhs_tau - lhs_tau).norm()))
}

/// `|P_k(ξ, τ) - P_poly(k)(x, y, u, v)|`.
pub fn check_p_poly(k: u32, p: &Point) -> Result<f64, Error> {
    let [x, y, u, v] = curve_coordinates(p)?;
    Ok((eval_p(k, p)? - p_k_poly(k).eval_complex(x, y, u, v)).norm())
}

/// Deviations of symmetry, periodicity in `u` and quasi-periodicity under `u -> u + 2πiτ`.
pub fn check_fzag_properties(u: C, v: C, tau: C) -> Result<[f64; 3], Error> {
    let f = eval_fzag(u, v, tau)?;
    let sym = (f - eval_fzag(v, u, tau)?).norm();
    let per = (f - eval_fzag(u + two_pi_i(), v, tau)?).norm();
    let quasi = (eval_fzag(u + two_pi_i() * tau, v, tau)? - (-v).exp() * f).norm();
    Ok([sym, per, quasi])
}

/// Modular transformation of `F^Zag` under `τ -> -1/τ`.
pub fn check_fzag_modular(u: C, v: C, tau: C) -> Result<f64, Error> {
    let lhs = eval_fzag(u / tau, v / tau, -1.0 / tau)?;
    let rhs = tau * (u * v / (two_pi_i() * tau)).exp() * eval_fzag(u, v, tau)?;
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt() -> Point {
        Point::new(C::new(0.3, 0.1), C::new(0.0, 1.0)).unwrap()
    }

    #[test]
    fn g4_constant_term() {
        let g = eval_g(4, C::new(0.0, 30.0)).unwrap();
        assert!((g - C::new(1.0 / 240.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn curve_relation() {
        assert!(check_curve(&pt()).unwrap() < 1e-9);
    }

    #[test]
    fn periodic_in_xi() {
        let p = pt();
        let p1 = Point::new(p.xi + 1.0, p.tau).unwrap();
        assert!((eval_p(2, &p).unwrap() - eval_p(2, &p1).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn identities() {
        let p = pt();
        assert!(check_kronecker_expansion(&p, 5).unwrap() < 1e-7, "{}", check_kronecker_expansion(&p, 5).unwrap());
        assert!(check_kronecker_derivative(&p, 5).unwrap() < 1e-7);
        assert!(check_e1_tau_derivative(&p).unwrap() < 1e-6, "{}", check_e1_tau_derivative(&p).unwrap());
        assert!(check_tau_form(C::new(0.0, 1.0)).unwrap() < 1e-8);
        assert!(check_dxi_form(&p).unwrap() < 1e-6, "{}", check_dxi_form(&p).unwrap());
        assert!(check_tau_form(C::new(0.0, 2.0)).unwrap() < 1e-8);
    }

    #[test]
    fn fzag_product_and_series_agree() {
        let (u, v, tau) = (C::new(0.02, 0.01), C::new(-0.015, 0.03), C::new(0.1, 1.1));
        let a = eval_fzag(u, v, tau).unwrap();
        let b = eval_fzag_series(u, v, tau, 12).unwrap();
        assert!((a - b).norm() < 1e-9 * a.norm());
    }

    #[test]
    fn fzag_properties() {
        let (u, v, tau) = (C::new(0.4, 0.7), C::new(-0.3, 0.2), C::new(0.2, 1.3));
        for d in check_fzag_properties(u, v, tau).unwrap() {
            assert!(d < 1e-10);
        }
        let tau = C::new(0.0, 1.0);
        assert!(check_fzag_modular(u, v, tau).unwrap() < 1e-10);
    }

    #[test]
    fn polynomial_bridge() {
        let p = pt();
        for k in 4..=6 {
            assert!(check_p_poly(k, &p).unwrap() < 1e-8, "k={k}");
        }
    }

    #[test]
    fn rejects_lattice_points() {
        assert!(Point::new(C::new(1.0, 0.0), C::new(0.0, 1.0)).is_err());
        assert!(Point::new(C::new(0.2, 0.0), C::new(0.0, -1.0)).is_err());
    }
}

