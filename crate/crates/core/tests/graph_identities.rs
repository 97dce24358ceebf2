use harmcoord::graph_form::{pointwise, unit_contraction};
use harmcoord::GraphForm;
use proptest::prelude::*;

/// A connected random graph as raw parts: masses and a possibly repeated edge list.
#[derive(Debug, Clone)]
struct RawGraph {
    mu: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
}

impl RawGraph {
    fn form(&self) -> GraphForm {
        GraphForm::new(self.mu.clone(), self.edges.clone()).unwrap()
    }

    /// Stiffness matrix `K` with `E(f, g) = fᵀ K g`, assembled edge by edge.
    fn stiffness(&self) -> Vec<Vec<f64>> {
        let n = self.mu.len();
        let mut k = vec![vec![0.0; n]; n];
        for &(p, q, c) in &self.edges {
            k[p][p] += c;
            k[q][q] += c;
            k[p][q] -= c;
            k[q][p] -= c;
        }
        k
    }

    fn energy(&self, f: &[f64], g: &[f64]) -> f64 {
        let k = self.stiffness();
        (0..f.len())
            .map(|p| f[p] * (0..g.len()).map(|q| k[p][q] * g[q]).sum::<f64>())
            .sum()
    }

    /// `Lf = −M⁻¹ K f`
    fn generator(&self, f: &[f64]) -> Vec<f64> {
        let k = self.stiffness();
        (0..f.len())
            .map(|p| -(0..f.len()).map(|q| k[p][q] * f[q]).sum::<f64>() / self.mu[p])
            .collect()
    }
}

fn raw_graph(max_n: usize) -> impl Strategy<Value = RawGraph> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let mu = prop::collection::vec(0.1..2.0f64, n);
            let tree = (1..n)
                .map(|q| (0..q, 0.1..2.0f64).prop_map(move |(p, c)| (p, q, c)))
                .collect::<Vec<_>>();
            let extra = prop::collection::vec((0..n, 0..n, 0.1..2.0f64), 0..2 * n);
            (mu, tree, extra)
        })
        .prop_map(|(mu, tree, extra)| {
            let mut edges = tree;
            edges.extend(extra.into_iter().filter(|(p, q, _)| p != q));
            RawGraph { mu, edges }
        })
}

fn graph_with_functions(k: usize) -> impl Strategy<Value = (RawGraph, Vec<Vec<f64>>)> {
    raw_graph(12).prop_flat_map(move |g| {
        let n = g.mu.len();
        let fs = prop::collection::vec(prop::collection::vec(-1.0..1.0f64, n), k);
        (Just(g), fs)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn energy_matches_stiffness_oracle((g, fs) in graph_with_functions(2)) {
        let form = g.form();
        let e = form.energy(&fs[0], &fs[1]);
        prop_assert!((e - g.energy(&fs[0], &fs[1])).abs() <= 1e-12);
        prop_assert!((e - form.energy(&fs[1], &fs[0])).abs() <= 1e-12);
        prop_assert!(form.energy(&fs[0], &fs[0]) >= 0.0);
    }

    #[test]
    fn energy_measure_total_is_energy((g, fs) in graph_with_functions(2)) {
        let form = g.form();
        let total = form.energy_measure(&fs[0], &fs[1]).total();
        prop_assert!((total - form.energy(&fs[0], &fs[1])).abs() <= 1e-12);
        prop_assert!(form.energy_measure(&fs[0], &fs[0]).mass.iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn energy_measure_identity((g, fs) in graph_with_functions(3)) {
        let r = g.form().energy_measure_identity_residual(&fs[0], &fs[1], &fs[2]);
        prop_assert!(r <= 1e-12, "residual {r:e}");
    }

    #[test]
    fn carre_du_champ_with_half((g, fs) in graph_with_functions(2)) {
        let (f, h) = (&fs[0], &fs[1]);
        let form = g.form();
        let gamma = form.energy_measure(f, h);
        let lfh = g.generator(&pointwise(f, h));
        let lf = g.generator(f);
        let lh = g.generator(h);
        for p in 0..f.len() {
            let rhs = 0.5 * (lfh[p] - f[p] * lh[p] - h[p] * lf[p]);
            let lhs = gamma.mass[p] / g.mu[p];
            prop_assert!((lhs - rhs).abs() <= 1e-12, "vertex {p}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn markov_contraction((g, fs) in graph_with_functions(1)) {
        let form = g.form();
        let f: Vec<f64> = fs[0].iter().map(|x| 2.0 * x).collect();
        let c = unit_contraction(&f);
        prop_assert!(form.energy(&c, &c) <= form.energy(&f, &f) + 1e-12);
    }

    #[test]
    fn generator_adjoint((g, fs) in graph_with_functions(2)) {
        let form = g.form();
        let (f, h) = (&fs[0], &fs[1]);
        let lf = form.generator(f);
        let lh = form.generator(h);
        let oracle = g.generator(f);
        for p in 0..f.len() {
            prop_assert!((lf[p] - oracle[p]).abs() <= 1e-12);
        }
        let a: f64 = (0..f.len()).map(|p| lf[p] * h[p] * g.mu[p]).sum();
        let b: f64 = (0..f.len()).map(|p| f[p] * lh[p] * g.mu[p]).sum();
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!((a + form.energy(f, h)).abs() <= 1e-12);
    }

    #[test]
    fn resolvent_is_sub_markov((g, fs) in graph_with_functions(1)) {
        let form = g.form();
        let f: Vec<f64> = fs[0].iter().map(|x| x.abs()).collect();
        let u = form.resolvent_g1(&f).unwrap();
        let sup = f.iter().cloned().fold(0.0, f64::max);
        for (p, &v) in u.iter().enumerate() {
            prop_assert!(v >= -1e-12, "negative at {p}");
            prop_assert!(v <= sup + 1e-12);
        }
        // (I − L) u = f
        let lu = g.generator(&u);
        for p in 0..f.len() {
            prop_assert!((u[p] - lu[p] - f[p]).abs() <= 1e-10);
        }
    }

    #[test]
    fn harmonic_solution_minimizes_energy(
        (g, fs) in graph_with_functions(1),
        eps in -0.5..0.5f64,
        pick in any::<prop::sample::Index>(),
    ) {
        let form = g.form();
        let n = g.mu.len();
        let boundary = [(0, fs[0][0]), (n - 1, fs[0][n - 1])];
        let h = form.harmonic_solve(&boundary).unwrap();
        let e0 = form.energy(&h, &h);
        if n > 2 {
            let p = 1 + pick.index(n - 2);
            let mut v = h.clone();
            v[p] += eps;
            prop_assert!(form.energy(&v, &v) >= e0 - 1e-12);
            let lh = form.generator(&h);
            prop_assert!(lh[p].abs() <= 1e-9);
        }
    }
}

#[test]
fn generator_matrix_agrees_with_generator() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let form = GraphForm::random_connected(15, 10, &mut rng);
    let m = form.generator_matrix();
    let f: Vec<f64> = (0..15).map(|i| (i as f64 * 0.37).sin()).collect();
    let lf = form.generator(&f);
    for p in 0..15 {
        let row: f64 = (0..15).map(|q| m[(p, q)] * f[q]).sum();
        assert!((row - lf[p]).abs() < 1e-13);
    }
}

#[test]
fn text_round_trip() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let form = GraphForm::random_connected(8, 6, &mut rng);
    let parsed = GraphForm::parse_text(&form.to_text()).unwrap();
    assert_eq!(parsed.form.num_vertices(), 8);
    let f: Vec<f64> = (0..8).map(|i| i as f64).collect();
    assert!((parsed.form.energy(&f, &f) - form.energy(&f, &f)).abs() < 1e-12);
}
