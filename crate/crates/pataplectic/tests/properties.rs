//! Randomized invariants of the algebra, the Legendre map, the models and the solvers.

use pataplectic::dynamics::harness::fd4;
use pataplectic::dynamics::io::{read_trajectory, write_trajectory};
use pataplectic::dynamics::{solve_dw, InitData, LatticeSpec};
use pataplectic::expr::Expr;
use pataplectic::exterior::{canonicalize_raw, ChartSpec, DifferentialForm};
use pataplectic::models::{minkowski, Model, ModelJson, SigmaModel};
use proptest::prelude::*;

/// Polynomial of degree ≤ 2 in the listed symbols.
fn poly(syms: &[usize], coeffs: &[i64]) -> Expr {
    let mut e = Expr::int(coeffs[0]);
    let mut c = 1;
    for (a, &s) in syms.iter().enumerate() {
        e = e + Expr::int(coeffs[c % coeffs.len()]) * Expr::sym(s as _);
        c += 1;
        for &t in &syms[a..] {
            e = e + Expr::int(coeffs[c % coeffs.len()]) * Expr::sym(s as _) * Expr::sym(t as _);
            c += 1;
        }
    }
    e
}

fn form(dim: usize, idx: &[usize], syms: &[usize], coeffs: &[i64]) -> DifferentialForm {
    let (sorted, sign) = canonicalize_raw(idx);
    if sign == 0 {
        return DifferentialForm::zero(dim, idx.len());
    }
    DifferentialForm::monomial(dim, &sorted, poly(syms, coeffs).scale_int(sign as i64))
}

fn parity(v: &[usize]) -> i32 {
    let mut inv = 0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] > v[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn canonical_sign_is_the_permutation_parity(idx in prop::collection::vec(0usize..7, 0..6)) {
        let (sorted, sign) = canonicalize_raw(&idx);
        let mut want = idx.clone();
        want.sort();
        prop_assert_eq!(&sorted, &want);
        let repeat = want.windows(2).any(|w| w[0] == w[1]);
        prop_assert_eq!(sign == 0, repeat);
        if !repeat {
            prop_assert_eq!(sign, parity(&idx));
        }
    }

    #[test]
    fn wedge_is_graded_anticommutative(
        a in prop::collection::vec(0usize..6, 1..3),
        b in prop::collection::vec(0usize..6, 1..3),
        ca in prop::collection::vec(-3i64..4, 4),
        cb in prop::collection::vec(-3i64..4, 4),
    ) {
        let c = ChartSpec::weyl(2, 1).unwrap();
        let dim = c.dim();
        let syms: Vec<usize> = (0..3).collect();
        let fa = form(dim, &a, &syms, &ca);
        let fb = form(dim, &b, &syms[1..], &cb);
        let sign = if a.len() * b.len() % 2 == 0 { 1 } else { -1 };
        let lhs = fa.wedge(&fb);
        let rhs = fb.wedge(&fa).scale(&Expr::int(sign as i64));
        prop_assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn d_squares_to_zero(
        idx in prop::collection::vec(0usize..6, 0..3),
        coeffs in prop::collection::vec(-5i64..6, 6),
    ) {
        let c = ChartSpec::weyl(2, 1).unwrap();
        let syms: Vec<usize> = (0..c.dim()).collect();
        let f = form(c.dim(), &idx, &syms, &coeffs);
        prop_assert!(f.d().d().is_zero());
    }

    #[test]
    fn mixed_partials_commute(coeffs in prop::collection::vec(-5i64..6, 8), s in 0usize..3, t in 0usize..3) {
        let e = poly(&[0, 1, 2], &coeffs).sin() * Expr::sym(1 as _);
        prop_assert_eq!(e.diff(s as _).diff(t as _), e.diff(t as _).diff(s as _));
    }

    #[test]
    fn evaluation_is_deterministic(coeffs in prop::collection::vec(-5i64..6, 8), pt in prop::collection::vec(-2.0f64..2.0, 3)) {
        let e = poly(&[0, 1, 2], &coeffs).cos();
        let a = e.eval(&pt);
        prop_assert_eq!(a.to_bits(), e.eval(&pt).to_bits());
        prop_assert_eq!(a.to_bits(), e.compile().eval(&pt).to_bits());
    }

    #[test]
    fn hamiltonian_is_the_energy_gauge(mass in 0.0f64..3.0, q in prop::collection::vec(-2.0f64..2.0, 3), v in prop::collection::vec(-2.0f64..2.0, 2), w in -2.0f64..2.0) {
        let m = Model::from_json(&ModelJson { preset: Some("klein_gordon".into()), mass: Some(mass), ..Default::default() }).unwrap();
        prop_assert!(m.hamiltonian.eps_derivative_is_one());
        let pt = m.forward(&q, &v, w);
        prop_assert!((m.hamiltonian.value(&pt).unwrap() - w).abs() < 1e-10);
    }

    #[test]
    fn string_metric_is_pair_symmetric(pt in prop::collection::vec(-1.5f64..1.5, 64), b in -2000i64..2000) {
        let c = ChartSpec::full(2, 2).unwrap();
        let y0 = Expr::sym(c.y(0));
        let bf = y0.clone() * Expr::frac(b, 1000);
        let s = SigmaModel::string(
            minkowski(2),
            vec![vec![Expr::one() + y0.pow(2), Expr::zero()], vec![Expr::zero(), Expr::one()]],
            Some(vec![vec![Expr::zero(), bf.clone()], vec![-bf, Expr::zero()]]),
        )
        .unwrap();
        let pt = &pt[..c.n_symbols()];
        let m = s.m_matrix(pt);
        prop_assert!((&m - m.transpose()).abs().max() == 0.0);
    }

    #[test]
    fn fd4_differentiates_quartics_exactly(c in prop::collection::vec(-3.0f64..3.0, 5), h in 0.05f64..0.5, m in 5usize..12) {
        let f = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * (c[3] + x * c[4])));
        let df = |x: f64| c[1] + x * (2.0 * c[2] + x * (3.0 * c[3] + x * 4.0 * c[4]));
        for i in 0..m {
            let at = |j: isize| f(j as f64 * h);
            let d = fd4(&at, i, m, h, false);
            let scale = 1.0 + c.iter().map(|v| v.abs()).sum::<f64>() * (m as f64 * h).powi(4) / h;
            prop_assert!((d - df(i as f64 * h)).abs() < 1e-11 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solver_is_deterministic_and_files_round_trip(nx in 4usize..12, amp in -1000i64..1000, mass in 0.0f64..2.0) {
        let mj = ModelJson { preset: Some("klein_gordon".into()), mass: Some(mass), ..Default::default() };
        let m = Model::from_json(&mj).unwrap();
        let lat = LatticeSpec::periodic(6, 0.1, &[(nx, 2.0 * std::f64::consts::PI / nx as f64)]);
        let init = InitData { y: vec![m.chart().parse("sin(x2)").unwrap() * Expr::frac(amp, 1000)], dt_y: None };
        let a = solve_dw(&m, &lat, &init).unwrap();
        let b = solve_dw(&m, &lat, &init).unwrap();
        prop_assert_eq!(&a, &b);
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &a, m.chart(), &mj, None).unwrap();
        let (_, back) = read_trajectory(&buf[..], |j| Ok(Model::from_json(j)?.chart().clone())).unwrap();
        prop_assert_eq!(back, a);
    }
}
