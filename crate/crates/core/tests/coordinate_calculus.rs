mod common;

use common::poly;
use harmcoord::calculus::{
    divergence_functional, energy_form, fiber_inner, generator_apply, generator_symbolic, gradient_pairing,
    gradient_pairing_symbolic, leibniz_check, weak_generator_check_on,
};
use harmcoord::models::{
    det3, euclidean_ibp_check, euclidean_model, heisenberg_model, heisenberg_x, heisenberg_y, heisenberg_z_poly,
    observed_orders, sublaplacian, ETA, XI, ZETA,
};
use harmcoord::sg::{boundary_bump, kusuoka_model, GasketGraph};
use harmcoord::{BoxDomain, CoefficientField, CoordinateModel, FiberElement, Polynomial};
use proptest::prelude::*;
use std::sync::OnceLock;

fn p(s: &str) -> Polynomial {
    Polynomial::parse(s).unwrap()
}

fn sg4() -> &'static CoordinateModel {
    static M: OnceLock<CoordinateModel> = OnceLock::new();
    M.get_or_init(|| kusuoka_model(4).unwrap())
}

fn heis() -> &'static CoordinateModel {
    static M: OnceLock<CoordinateModel> = OnceLock::new();
    M.get_or_init(|| heisenberg_model(&BoxDomain::new(vec![-1.0; 3], vec![1.0; 3]).unwrap(), 3).unwrap())
}

fn euclid() -> &'static CoordinateModel {
    static M: OnceLock<CoordinateModel> = OnceLock::new();
    M.get_or_init(|| {
        let a = CoefficientField::diagonal(&["1 + x1^2", "2 + x2"], 0.5).unwrap();
        euclidean_model(&a, &BoxDomain::unit(2), 6).unwrap()
    })
}

fn models() -> [(&'static CoordinateModel, usize); 3] {
    [(sg4(), 2), (heis(), 3), (euclid(), 2)]
}

#[test]
fn heisenberg_metric_is_degenerate() {
    let z = heisenberg_z_poly();
    assert!(det3(&z).is_zero());
    assert_eq!(z[0][0], p("1"));
    assert_eq!(z[0][2], p("-1/2*eta"));
    assert_eq!(z[2][2], p("1/4*xi^2 + 1/4*eta^2"));
    let zeta = Polynomial::var(ZETA);
    let bracket = heisenberg_x(&heisenberg_y(&zeta)) - heisenberg_y(&heisenberg_x(&zeta));
    assert_eq!(bracket, Polynomial::one());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn heisenberg_pairings_are_exact(f in poly(3, 4)) {
        let z = heisenberg_z_poly();
        let (xf, yf) = (heisenberg_x(&f), heisenberg_y(&f));
        prop_assert_eq!(gradient_pairing_symbolic(&f, XI, &z), xf.clone());
        prop_assert_eq!(gradient_pairing_symbolic(&f, ETA, &z), yf.clone());
        let third = Polynomial::var(ETA).scale(&harmcoord::poly::rational(-1, 2)) * &xf
            + Polynomial::var(XI).scale(&harmcoord::poly::rational(1, 2)) * &yf;
        prop_assert_eq!(gradient_pairing_symbolic(&f, ZETA, &z), third);
        let laps = vec![Polynomial::zero(); 3];
        prop_assert_eq!(generator_symbolic(&f, &z, &laps), sublaplacian(&f));
    }

    #[test]
    fn heisenberg_numeric_generator(f in poly(3, 4), k in 0..27usize) {
        let m = heis();
        let lhs = generator_apply(&f, m, k).unwrap();
        let rhs = sublaplacian(&f).eval(m.y(k)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn energy_form_symmetric_psd(which in 0..3usize, f in poly(3, 3), g in poly(3, 3)) {
        let (m, d) = models()[which];
        let keep = |q: &Polynomial| Polynomial::from_terms(
            q.terms().filter(|(mono, _)| mono.exponents().len() <= d).map(|(a, b)| (a.clone(), b.clone())),
        );
        let (f, g) = (keep(&f), keep(&g));
        let fg = energy_form(&f, &g, m).unwrap();
        let gf = energy_form(&g, &f, m).unwrap();
        prop_assert!((fg - gf).abs() <= 1e-10 * fg.abs().max(1.0));
        prop_assert!(energy_form(&f, &f, m).unwrap() >= -1e-10);
        // Σ_k ⟨∂f, ∂g⟩ m_k
        let sum: f64 = (0..m.len())
            .map(|k| {
                let a = FiberElement::differential(&f, m, k).unwrap();
                let b = FiberElement::differential(&g, m, k).unwrap();
                fiber_inner(&a, &b, m).unwrap() * m.weight(k)
            })
            .sum();
        prop_assert!((sum - fg).abs() <= 1e-10 * fg.abs().max(1.0));
    }

    #[test]
    fn pairing_agrees_with_fiber_inner(which in 0..3usize, f in poly(2, 3), j in 0..2usize, k in 0..16usize) {
        let (m, _) = models()[which];
        let k = k % m.len();
        let a = FiberElement::differential(&f, m, k).unwrap();
        let b = FiberElement::differential(&Polynomial::var(j), m, k).unwrap();
        let lhs = gradient_pairing(&f, j, m, k).unwrap();
        prop_assert!((lhs - fiber_inner(&a, &b, m).unwrap()).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn leibniz_on_gasket_cells(f in poly(2, 3), g in poly(2, 3), k in 0..81usize) {
        prop_assert!(leibniz_check(&f, &g, sg4(), k).unwrap() <= 1e-12);
    }

    #[test]
    fn divergence_with_unit_weight_is_minus_energy(which in 0..3usize, f in poly(2, 3), u in poly(2, 3)) {
        let (m, _) = models()[which];
        let d = divergence_functional(&f, &Polynomial::one(), &u, m).unwrap();
        let e = energy_form(&f, &u, m).unwrap();
        prop_assert!((d + e).abs() <= 1e-12 * e.abs().max(1.0));
        prop_assert_eq!(divergence_functional(&f, &Polynomial::one(), &p("3/2"), m).unwrap(), 0.0);
    }
}

#[test]
fn euclidean_divergence_matches_strong_form() {
    // a = I, F = x1, U vanishing on the square: ∫ div(∇f) u = 0
    let a = CoefficientField::identity(2);
    let f = p("x1");
    let u = p("x1*x2 - x1^2*x2 - x1*x2^2 + x1^2*x2^2");
    let m = euclidean_model(&a, &BoxDomain::unit(2), 16).unwrap();
    let weak = divergence_functional(&f, &Polynomial::one(), &u, &m).unwrap();
    let strong = euclidean_ibp_check(&a, &f, &Polynomial::one(), &u, &BoxDomain::unit(2), 16).unwrap();
    assert!(strong.warning.is_none());
    assert!(strong.divergence_term.abs() < 1e-15);
    assert!(weak.abs() < 1e-3, "{weak}");
    assert!((weak + strong.flux_term).abs() < 1e-12);
}

#[test]
fn euclidean_ibp_second_order() {
    let a = CoefficientField::diagonal(&["1 + x1^2", "1"], 1.0).unwrap();
    let f = p("x1");
    let u = p("x1*x2 - x1^2*x2 - x1*x2^2 + x1^2*x2^2");
    let residuals: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&g| {
            euclidean_ibp_check(&a, &f, &Polynomial::one(), &u, &BoxDomain::unit(2), g)
                .unwrap()
                .residual
        })
        .collect();
    for order in observed_orders(&residuals) {
        assert!(order >= 1.8, "order {order}, residuals {residuals:?}");
    }
}

#[test]
fn gasket_generator_is_trace_form() {
    let m = sg4();
    let f = p("y1^2 + 3*y1*y2^2");
    for k in 0..m.len() {
        let z = m.z(k);
        let y = m.y(k);
        // F11 = 2, F12 = 6 y2, F22 = 6 y1
        let tr = 2.0 * z[(0, 0)] + 2.0 * 6.0 * y[1] * z[(0, 1)] + 6.0 * y[0] * z[(1, 1)];
        assert!((generator_apply(&f, m, k).unwrap() - tr).abs() < 1e-12);
    }
}

#[test]
fn weak_generator_constant_test_function() {
    let g = GasketGraph::build(5).unwrap();
    let check = weak_generator_check_on(&g, &p("y1*y2"), &p("1")).unwrap();
    assert_eq!(check.graph_energy, 0.0);
    assert!(check.trace_sum.abs() < 1e-12);
}

#[test]
fn weak_generator_with_bump_converges() {
    let f = p("y1^2");
    let u = p("y1") * boundary_bump();
    let rel: Vec<f64> = (4..=6)
        .map(|n| {
            weak_generator_check_on(&GasketGraph::build(n).unwrap(), &f, &u)
                .unwrap()
                .relative
        })
        .collect();
    assert!(rel.windows(2).all(|w| w[1] < w[0]), "{rel:?}");
}

#[test]
fn missing_laplacians_is_an_error() {
    let m = sg4();
    let stripped = CoordinateModel::new(
        "no laplacians",
        2,
        m.weights().to_vec(),
        (0..m.len()).map(|k| m.z(k).clone()).collect(),
        (0..m.len()).map(|k| m.y(k).to_vec()).collect(),
        None,
    )
    .unwrap();
    let err = generator_apply(&p("y1^2"), &stripped, 0).unwrap_err();
    assert_eq!(err.to_string(), "generator formula requires Ly^i");
}
