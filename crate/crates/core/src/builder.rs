//! Coordinates and an energy dominant measure built from resolvent functions.
//!
//! Given nonzero vertex functions `f_1, …, f_N` on a finite graph form:
//!
//! ```text
//! yⁱ = 2⁻ⁱ G₁fᵢ / (‖G₁fᵢ‖_sup + ‖fᵢ‖_sup + E(G₁fᵢ)^½)
//! m̃  = Σᵢ 2ⁱ Γ(yⁱ)
//! Zⁱʲ(p) = Γ(yⁱ, yʲ)({p}) / m̃({p})
//! ```
//!
//! Indices run from 1. The normalization gives `‖yⁱ‖_sup ≤ 2⁻ⁱ`,
//! `Γ(yⁱ)(X) ≤ 2⁻²ⁱ`, `m̃(X) ≤ Σ 2⁻ⁱ` and `Zⁱⁱ ≤ 2⁻ⁱ`; [`verify_bounds`]
//! checks all of them. On a finite state space the Feller hypothesis holds
//! trivially and is not checked.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph_form::{GraphForm, VertexMeasure};
use crate::linalg::{row_normalized_rank, sup_norm, sym_eigenvalues};

/// Relative slack for floating point comparisons against the analytic bounds.
const BOUND_SLACK: f64 = 1e-12;

pub fn build_coordinates(graph: &GraphForm, fs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    fs.iter()
        .enumerate()
        .map(|(k, f)| {
            if f.len() != graph.num_vertices() {
                return Err(Error::DimensionMismatch {
                    expected: graph.num_vertices(),
                    got: f.len(),
                });
            }
            if f.iter().all(|&x| x == 0.0) {
                return Err(Error::ZeroFunction(k + 1));
            }
            let u = graph.resolvent_g1(f)?;
            let denom = sup_norm(&u) + sup_norm(f) + graph.energy(&u, &u).max(0.0).sqrt();
            let scale = 0.5f64.powi(k as i32 + 1) / denom;
            Ok(u.into_iter().map(|x| x * scale).collect())
        })
        .collect()
}

/// `m̃ = Σᵢ 2ⁱ Γ(yⁱ)`
pub fn build_measure(graph: &GraphForm, ys: &[Vec<f64>]) -> VertexMeasure {
    let mut m = VertexMeasure::zeros(graph.num_vertices());
    for (k, y) in ys.iter().enumerate() {
        m.add_scaled(2f64.powi(k as i32 + 1), &graph.energy_measure(y, y));
    }
    m
}

/// Per-vertex metric; `None` where `m̃({p}) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    pub matrices: Vec<Option<DMatrix<f64>>>,
    pub excluded: Vec<usize>,
}

pub fn compute_z(graph: &GraphForm, ys: &[Vec<f64>], m_tilde: &VertexMeasure) -> Result<MetricField> {
    let n = graph.num_vertices();
    let k = ys.len();
    let mut gram = vec![DMatrix::<f64>::zeros(k, k); n];
    for i in 0..k {
        for j in 0..=i {
            let g = graph.energy_measure(&ys[i], &ys[j]);
            for (gp, &m) in gram.iter_mut().zip(&g.mass) {
                gp[(i, j)] = m;
                gp[(j, i)] = m;
            }
        }
    }
    let mut matrices = Vec::with_capacity(n);
    let mut excluded = Vec::new();
    for (p, g) in gram.into_iter().enumerate() {
        let m = m_tilde.mass[p];
        if m > 0.0 {
            matrices.push(Some(g / m));
        } else {
            if let Some(i) = (0..k).find(|&i| g[(i, i)] > 0.0) {
                return Err(Error::Internal(format!(
                    "m̃ vanishes at vertex {p} but Γ(y^{}) does not",
                    i + 1
                )));
            }
            excluded.push(p);
            matrices.push(None);
        }
    }
    Ok(MetricField { matrices, excluded })
}

#[derive(Debug, Clone)]
pub struct BuiltCoordinates {
    pub graph: GraphForm,
    pub y: Vec<Vec<f64>>,
    pub m_tilde: VertexMeasure,
    pub z: MetricField,
}

impl BuiltCoordinates {
    pub fn build(graph: GraphForm, fs: &[Vec<f64>]) -> Result<Self> {
        let y = build_coordinates(&graph, fs)?;
        let m_tilde = build_measure(&graph, &y);
        let z = compute_z(&graph, &y, &m_tilde)?;
        Ok(BuiltCoordinates { graph, y, m_tilde, z })
    }

    /// Sources `f_i` = standard basis vectors ordered by vertex index.
    pub fn from_basis(graph: GraphForm) -> Result<Self> {
        let fs = standard_basis(graph.num_vertices());
        Self::build(graph, &fs)
    }
}

pub fn standard_basis(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect()
}

/// `count` random smooth sources: random vertex values averaged once over
/// neighbourhoods.
pub fn random_smooth_family(graph: &GraphForm, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let raw: Vec<f64> = (0..graph.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (0..graph.num_vertices())
                .map(|p| {
                    let (s, w) = graph
                        .neighbors(p)
                        .iter()
                        .fold((raw[p], 1.0), |(s, w), &(q, c)| (s + c * raw[q], w + c));
                    s / w
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    /// Coordinate index `i` (1-based) or vertex, depending on the check.
    pub index: Option<usize>,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

/// JSON report `{bounds, rank, m_total, violations, ...}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub bounds: Vec<BoundCheck>,
    pub rank: usize,
    pub vertices: usize,
    pub coordinates: usize,
    pub m_total: f64,
    pub excluded_vertices: Vec<usize>,
    pub violations: Vec<String>,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn within(value: f64, limit: f64) -> bool {
    value <= limit * (1.0 + BOUND_SLACK) + f64::MIN_POSITIVE
}

/// Check every bound of the construction. Failures are collected, never thrown.
///
/// `seed` drives the random directions `v` for `‖Z(p)v‖ ≤ ‖v‖` and the random
/// functions for the energy dominance check.
pub fn verify_bounds(b: &BuiltCoordinates, seed: u64) -> BoundsReport {
    const RANDOM_DIRECTIONS: usize = 100;
    const RANDOM_FUNCTIONS: usize = 10;
    let g = &b.graph;
    let n = g.num_vertices();
    let k = b.y.len();
    let mut bounds = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for (i, y) in b.y.iter().enumerate() {
        let limit_sup = 0.5f64.powi(i as i32 + 1);
        let s = sup_norm(y);
        bounds.push(BoundCheck {
            name: "sup_norm".into(),
            index: Some(i + 1),
            value: s,
            limit: limit_sup,
            pass: within(s, limit_sup),
        });
        let e = g.energy(y, y);
        let limit = 0.25f64.powi(i as i32 + 1);
        bounds.push(BoundCheck {
            name: "energy_measure_total".into(),
            index: Some(i + 1),
            value: e,
            limit,
            pass: within(e, limit),
        });
    }

    let m_total = b.m_tilde.total();
    let limit = (1..=k).map(|i| 0.5f64.powi(i as i32)).sum::<f64>();
    bounds.push(BoundCheck {
        name: "m_tilde_total".into(),
        index: None,
        value: m_total,
        limit,
        pass: within(m_total, limit),
    });
    let m_min = b.m_tilde.mass.iter().copied().fold(f64::INFINITY, f64::min);
    bounds.push(BoundCheck {
        name: "m_tilde_nonnegative".into(),
        index: None,
        value: -m_min,
        limit: 0.0,
        pass: m_min >= 0.0 && m_total > 0.0,
    });

    let mut worst_diag = (0.0f64, 0usize);
    let mut worst_psd = (f64::INFINITY, 0usize);
    let mut worst_op = (0.0f64, 0usize);
    let mut worst_random = (0.0f64, 0usize);
    for (p, z) in b.z.matrices.iter().enumerate() {
        let Some(z) = z else { continue };
        for i in 0..k {
            // Zⁱⁱ · 2ⁱ ≤ 1
            let r = z[(i, i)] * 2f64.powi(i as i32 + 1);
            if r > worst_diag.0 {
                worst_diag = (r, p);
            }
        }
        let ev = sym_eigenvalues(z);
        if ev[0] < worst_psd.0 {
            worst_psd = (ev[0], p);
        }
        let op = ev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if op > worst_op.0 {
            worst_op = (op, p);
        }
        for _ in 0..RANDOM_DIRECTIONS {
            let v = nalgebra::DVector::from_fn(k, |_, _| rng.gen_range(-1.0..1.0));
            let ratio = (z * &v).norm() / v.norm();
            if ratio > worst_random.0 {
                worst_random = (ratio, p);
            }
        }
    }
    bounds.push(BoundCheck {
        name: "z_diagonal_scaled".into(),
        index: Some(worst_diag.1),
        value: worst_diag.0,
        limit: 1.0,
        pass: within(worst_diag.0, 1.0),
    });
    let psd = if worst_psd.0.is_finite() { worst_psd.0 } else { 0.0 };
    bounds.push(BoundCheck {
        name: "z_min_eigenvalue".into(),
        index: Some(worst_psd.1),
        value: psd,
        limit: -1e-10,
        pass: psd >= -1e-10,
    });
    bounds.push(BoundCheck {
        name: "z_operator_norm".into(),
        index: Some(worst_op.1),
        value: worst_op.0,
        limit: 1.0,
        pass: within(worst_op.0, 1.0),
    });
    bounds.push(BoundCheck {
        name: "z_random_direction_ratio".into(),
        index: Some(worst_random.1),
        value: worst_random.0,
        limit: 1.0,
        pass: within(worst_random.0, 1.0),
    });

    // Γ(f) ≪ m̃ at vertex level
    let mut dominance_mass = 0.0f64;
    for _ in 0..RANDOM_FUNCTIONS {
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gamma = g.energy_measure(&f, &f);
        for &p in &b.z.excluded {
            dominance_mass = dominance_mass.max(gamma.mass[p].abs());
        }
    }
    bounds.push(BoundCheck {
        name: "energy_dominance".into(),
        index: None,
        value: dominance_mass,
        limit: 0.0,
        pass: dominance_mass == 0.0,
    });

    let rank = row_normalized_rank(&b.y, 1e-10);
    bounds.push(BoundCheck {
        name: "density_rank".into(),
        index: None,
        value: rank as f64,
        limit: n as f64,
        pass: rank == n,
    });

    let violations = bounds
        .iter()
        .filter(|c| !c.pass)
        .map(|c| match c.index {
            Some(i) => format!("{} [{}]: {} vs limit {}", c.name, i, c.value, c.limit),
            None => format!("{}: {} vs limit {}", c.name, c.value, c.limit),
        })
        .collect();
    BoundsReport {
        bounds,
        rank,
        vertices: n,
        coordinates: k,
        m_total,
        excluded_vertices: b.z.excluded.clone(),
        violations,
    }
}
