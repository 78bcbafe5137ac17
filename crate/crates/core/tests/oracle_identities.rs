use num_complex::Complex64 as C;

use kzb_core::elliptic::eisenstein_g;
use kzb_core::oracle::{self, Point};

fn points() -> Vec<Point> {
    [
        (C::new(0.21, 0.05), C::new(0.1, 0.9)),
        (C::new(-0.33, 0.4), C::new(-0.3, 1.2)),
        (C::new(0.45, -0.1), C::new(0.45, 0.75)),
    ]
    .into_iter()
    .map(|(xi, tau)| Point::new(xi, tau).unwrap())
    .collect()
}

#[test]
fn eisenstein_matches_exact_expansion() {
    let tau = C::new(0.17, 0.8);
    let q = oracle::q_of(tau);
    for k in [4u32, 6, 8, 10] {
        let s = eisenstein_g(k, 40);
        let exact: C = (0..40).map(|n| q.powu(n as u32) * s.coeff(n).to_f64()).sum();
        let g = oracle::eval_g(k, tau).unwrap();
        assert!((g - exact).norm() < 1e-10 * exact.norm().max(1.0), "k={k}");
    }
}

#[test]
fn polynomial_forms_of_p_k() {
    for p in points() {
        for k in 2..=10 {
            assert!(oracle::check_p_poly(k, &p).unwrap() < 1e-7, "k={k}");
        }
    }
}

#[test]
fn kronecker_expansion() {
    for p in points() {
        assert!(oracle::check_kronecker_expansion(&p, 6).unwrap() < 1e-7);
        assert!(oracle::check_kronecker_derivative(&p, 5).unwrap() < 1e-7);
    }
}

#[test]
fn modular_transformation() {
    for tau in [C::new(0.0, 1.0), C::new(0.2, 1.1), C::new(-0.4, 0.95)] {
        let d = oracle::check_fzag_modular(C::new(0.3, 0.2), C::new(-0.1, 0.25), tau).unwrap();
        assert!(d < 1e-9, "{d}");
    }
}

#[test]
fn pole_proximity_is_reported() {
    assert!(oracle::eval_fzag(C::new(1e-14, 0.0), C::new(0.3, 0.0), C::new(0.0, 1.0)).is_err());
    assert!(Point::new(C::new(0.2, 1.0), C::new(0.2, 1.0)).is_err());
}
