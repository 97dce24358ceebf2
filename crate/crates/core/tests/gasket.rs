use harmcoord::graph_form::GraphForm;
use harmcoord::sg::{
    apply, cell_enumerate, cell_levels, coordinate_boundary_values, extension_matrices, gram_additivity_check,
    kusuoka_additivity_check, q_form, GasketGraph, Word,
};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

type RVec = [BigRational; 3];

fn exact_extension(i: usize) -> [RVec; 3] {
    std::array::from_fn(|row| {
        std::array::from_fn(|col| {
            if row == i {
                if col == i {
                    r(1, 1)
                } else {
                    r(0, 1)
                }
            } else if col == i || col == row {
                r(2, 5)
            } else {
                r(1, 5)
            }
        })
    })
}

fn exact_apply(a: &[RVec; 3], b: &RVec) -> RVec {
    std::array::from_fn(|row| (0..3).fold(BigRational::zero(), |s, c| s + &a[row][c] * &b[c]))
}

fn exact_b(u: &RVec, v: &RVec) -> BigRational {
    let d = |x: &RVec, i: usize, j: usize| &x[i] - &x[j];
    d(u, 0, 1) * d(v, 0, 1) + d(u, 1, 2) * d(v, 1, 2) + d(u, 0, 2) * d(v, 0, 2)
}

/// Exact `(ν, Z11, Z22, Z12²)` per cell, from the unnormalized corner values
/// `(−1, 1, 0)` and `(−1, −1, 2)` with `Q` scaled by `1/6` and `1/18`.
fn exact_cells(level: usize) -> Vec<(Vec<u8>, [BigRational; 4])> {
    let a = [exact_extension(0), exact_extension(1), exact_extension(2)];
    let mut out = Vec::new();
    let mut frontier = vec![(
        Vec::<u8>::new(),
        [r(-1, 1), r(1, 1), r(0, 1)],
        [r(-1, 1), r(-1, 1), r(2, 1)],
    )];
    for _ in 0..level {
        frontier = frontier
            .into_iter()
            .flat_map(|(w, u1, u2)| {
                (0..3)
                    .map(|i| {
                        let mut w = w.clone();
                        w.push(i as u8 + 1);
                        (w, exact_apply(&a[i], &u1), exact_apply(&a[i], &u2))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }
    let mut scale = BigRational::one();
    for _ in 0..level {
        scale *= r(5, 3);
    }
    for (w, u1, u2) in frontier {
        let g11 = &scale * exact_b(&u1, &u1) * r(1, 6);
        let g22 = &scale * exact_b(&u2, &u2) * r(1, 18);
        let g12_sq = {
            let g = &scale * exact_b(&u1, &u2);
            &g * &g * r(1, 108)
        };
        let nu = &g11 + &g22;
        let z11 = &g11 / &nu;
        let z22 = &g22 / &nu;
        let z12_sq = g12_sq / (&nu * &nu);
        out.push((w, [nu, z11, z22, z12_sq]));
    }
    out
}

#[test]
fn cells_match_exact_rationals_up_to_level_two() {
    for level in 0..=2 {
        let cells = cell_enumerate(level).unwrap();
        let exact = exact_cells(level);
        assert_eq!(cells.len(), exact.len());
        for (c, (w, [nu, z11, z22, z12_sq])) in cells.iter().zip(&exact) {
            assert_eq!(c.word.letters(), &w[..]);
            let tol = 1e-14;
            assert!((c.nu - nu.to_f64().unwrap()).abs() < tol);
            assert!((c.z[0][0] - z11.to_f64().unwrap()).abs() < tol);
            assert!((c.z[1][1] - z22.to_f64().unwrap()).abs() < tol);
            assert!((c.z[0][1].powi(2) - z12_sq.to_f64().unwrap()).abs() < tol);
        }
    }
    // level 1, cell 3: G = diag(1/15, 3/5), ν = 2/3, Z = diag(1/10, 9/10)
    let exact = exact_cells(1);
    let [nu, z11, z22, z12_sq] = &exact[2].1;
    assert_eq!(*nu, r(2, 3));
    assert_eq!(*z11, r(1, 10));
    assert_eq!(*z22, r(9, 10));
    assert!(z12_sq.is_zero());
    let total: BigRational = exact_cells(2).iter().map(|(_, v)| v[0].clone()).sum();
    assert_eq!(total, r(2, 1));
}

/// Level-1 cell masses from a hand-built six-vertex graph and a direct harmonic solve.
#[test]
fn level_one_masses_from_graph_oracle() {
    // p1, p2, p3, m12, m13, m23
    let cells = [[0, 3, 4], [3, 1, 5], [4, 5, 2]];
    let c = 5.0 / 3.0;
    let edges: Vec<_> = cells
        .iter()
        .flat_map(|t| [(t[0], t[1], c), (t[1], t[2], c), (t[0], t[2], c)])
        .collect();
    let form = GraphForm::new(vec![1.0; 6], edges).unwrap();
    let b = coordinate_boundary_values();
    let y1 = form
        .harmonic_solve(&[(0, b.b1[0]), (1, b.b1[1]), (2, b.b1[2])])
        .unwrap();
    let y2 = form
        .harmonic_solve(&[(0, b.b2[0]), (1, b.b2[1]), (2, b.b2[2])])
        .unwrap();
    assert!((form.energy(&y1, &y1) - 1.0).abs() < 1e-14);
    assert!((form.energy(&y2, &y2) - 1.0).abs() < 1e-14);
    assert!(form.energy(&y1, &y2).abs() < 1e-14);
    let lib = cell_enumerate(1).unwrap();
    for (t, cell) in cells.iter().zip(&lib) {
        let nu: f64 = [(0, 1), (1, 2), (0, 2)]
            .iter()
            .map(|&(i, j)| c * ((y1[t[i]] - y1[t[j]]).powi(2) + (y2[t[i]] - y2[t[j]]).powi(2)))
            .sum();
        assert!((nu - 2.0 / 3.0).abs() < 1e-12, "graph oracle {nu}");
        assert!((cell.nu - nu).abs() < 1e-12);
    }
}

#[test]
fn coordinate_energies_are_orthonormal() {
    let y1 = harmcoord::Polynomial::parse("y1").unwrap();
    let y2 = harmcoord::Polynomial::parse("y2").unwrap();
    for n in 0..=7 {
        let g = GasketGraph::build(n).unwrap();
        assert!((g.composite_energy(&y1, &y1).unwrap() - 1.0).abs() < 1e-10);
        assert!((g.composite_energy(&y2, &y2).unwrap() - 1.0).abs() < 1e-10);
        assert!(g.composite_energy(&y1, &y2).unwrap().abs() < 1e-10);
    }
}

#[test]
fn vertex_count() {
    for n in 0..=6 {
        let g = GasketGraph::build(n).unwrap();
        assert_eq!(g.num_vertices(), (3usize.pow(n as u32 + 1) + 3) / 2);
        assert_eq!(g.form().edges().len(), 3usize.pow(n as u32 + 1));
        assert!(g.form().is_connected());
    }
}

/// Graph harmonic extension from the corners agrees with the 1/5–2/5 recursion,
/// and the edge energy inside `K_w` equals `(5/3)^|w| Q(b_w)`.
#[test]
fn energy_self_similarity_against_graph_solve() {
    let a = extension_matrices();
    let boundary = [0.3, -1.2, 0.7];
    for n in 2..=5 {
        let g = GasketGraph::build(n).unwrap();
        let corners = g.corners();
        let h = g
            .form()
            .harmonic_solve(&[
                (corners[0], boundary[0]),
                (corners[1], boundary[1]),
                (corners[2], boundary[2]),
            ])
            .unwrap();
        for depth in 0..=n - 2 {
            for cell in cell_enumerate(depth).unwrap() {
                let mut b = boundary;
                for &l in cell.word.letters() {
                    b = apply(&a[l as usize - 1], &b);
                }
                let expected = (5.0f64 / 3.0).powi(depth as i32) * q_form(&b);
                let got = g.cell_energy_measure(&cell.word, &h, &h).unwrap();
                assert!(
                    (got - expected).abs() < 1e-10,
                    "n={n} w={} {got} vs {expected}",
                    cell.word
                );
            }
        }
    }
}

#[test]
fn metric_invariants_through_level_eight() {
    for (level, cells) in cell_levels(8).unwrap().iter().enumerate() {
        assert_eq!(cells.len(), 3usize.pow(level as u32));
        let total: f64 = cells.iter().map(|c| c.nu).sum();
        assert!((total - 2.0).abs() < 1e-12);
        for c in cells {
            assert!((c.z[0][0] + c.z[1][1] - 1.0).abs() < 1e-12);
            assert_eq!(c.z[0][1], c.z[1][0]);
            let (lo, hi) = c.z_eigenvalues();
            assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12);
            assert!(c.gram[0][0] >= 0.0 && c.gram[1][1] >= 0.0);
            assert!(c.nu > 0.0);
        }
    }
    assert!(kusuoka_additivity_check(8).unwrap() <= 1e-12);
    assert!(gram_additivity_check(8).unwrap() <= 1e-12);
}

#[test]
fn coordinates_injective_on_v8_and_inside_triangle() {
    let g = GasketGraph::build(8).unwrap();
    let pts = g.coords();
    let mut sorted: Vec<[f64; 2]> = pts.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut min_gap = f64::INFINITY;
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            let dx = sorted[j][0] - sorted[i][0];
            if dx >= min_gap {
                break;
            }
            min_gap = min_gap.min(dx.hypot(sorted[j][1] - sorted[i][1]));
        }
    }
    assert!(min_gap > 0.0, "two vertices share coordinates");

    let b = coordinate_boundary_values();
    let corners: Vec<[f64; 2]> = (0..3).map(|c| b.corner(c)).collect();
    assert_eq!(corners[2], [0.0, 2.0 / 18f64.sqrt()]);
    for k in 0..2 {
        assert!(corners.iter().map(|c| c[k]).sum::<f64>().abs() < 1e-15);
    }
    // barycentric coordinates with respect to the boundary images
    let [p, q, s] = [corners[0], corners[1], corners[2]];
    let det = (q[0] - p[0]) * (s[1] - p[1]) - (s[0] - p[0]) * (q[1] - p[1]);
    for y in pts {
        let l2 = ((y[0] - p[0]) * (s[1] - p[1]) - (s[0] - p[0]) * (y[1] - p[1])) / det;
        let l3 = ((q[0] - p[0]) * (y[1] - p[1]) - (y[0] - p[0]) * (q[1] - p[1])) / det;
        let l1 = 1.0 - l2 - l3;
        assert!(l1 >= -1e-12 && l2 >= -1e-12 && l3 >= -1e-12, "{y:?} outside");
    }
}

#[test]
fn words_reject_bad_letters() {
    assert!(Word::parse("1240").is_err());
    assert!(Word::new(vec![0]).is_err());
    assert_eq!(Word::parse("312").unwrap().to_string(), "312");
}

proptest! {
    #[test]
    fn extension_preserves_renormalized_energy(b in prop::array::uniform3(-5.0..5.0f64)) {
        let a = extension_matrices();
        let children: f64 = a.iter().map(|m| q_form(&apply(m, &b))).sum();
        prop_assert!((5.0 / 3.0 * children - q_form(&b)).abs() <= 1e-12 * q_form(&b).max(1.0));
    }

    #[test]
    fn constants_are_fixed(c in -10.0..10.0f64) {
        for m in &extension_matrices() {
            let out = apply(m, &[c; 3]);
            for v in out {
                prop_assert!((v - c).abs() <= 1e-14 * c.abs().max(1.0));
            }
        }
    }
}
