//! Dirichlet forms on finite weighted graphs.
//!
//! For vertex functions `f, g` and symmetric conductances `c_pq`:
//!
//! ```text
//! E(f, g)        = ½ Σ_{p,q} c_pq (f(p) − f(q)) (g(p) − g(q))
//! Γ(f, g)({p})   = ½ Σ_q   c_pq (f(p) − f(q)) (g(p) − g(q))
//! Lf(p)          = μ(p)⁻¹ Σ_q c_pq (f(q) − f(p))
//! ```
//!
//! Everything here is exact up to floating point rounding, which makes this
//! module the reference against which the continuum formulas are checked.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GraphForm {
    mu: Vec<f64>,
    /// Each undirected edge once, `p < q`.
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

/// A signed measure on the vertex set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexMeasure {
    pub mass: Vec<f64>,
}

impl VertexMeasure {
    pub fn zeros(n: usize) -> Self {
        VertexMeasure { mass: vec![0.0; n] }
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn integrate(&self, phi: &[f64]) -> f64 {
        self.mass.iter().zip(phi).map(|(m, f)| m * f).sum()
    }

    /// `self += factor · other`
    pub fn add_scaled(&mut self, factor: f64, other: &VertexMeasure) {
        for (a, b) in self.mass.iter_mut().zip(&other.mass) {
            *a += factor * b;
        }
    }
}

impl GraphForm {
    /// Build a form from vertex masses and an edge list. Parallel edges are merged
    /// by adding conductances.
    pub fn new(mu: Vec<f64>, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::InvalidGraph("no vertices".into()));
        }
        if let Some((p, m)) = mu.iter().enumerate().find(|(_, m)| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::InvalidGraph(format!("vertex {p} has non-positive measure {m}")));
        }
        let mut merged: HashMap<(usize, usize), f64> = HashMap::new();
        let mut order = Vec::new();
        for (p, q, c) in edges {
            if p >= n || q >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({p}, {q}) references a missing vertex"
                )));
            }
            if p == q {
                return Err(Error::InvalidGraph(format!("self loop at vertex {p}")));
            }
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::InvalidGraph(format!("edge ({p}, {q}) has conductance {c}")));
            }
            let key = (p.min(q), p.max(q));
            let slot = merged.entry(key).or_insert_with(|| {
                order.push(key);
                0.0
            });
            *slot += c;
        }
        let edges: Vec<(usize, usize, f64)> = order.into_iter().map(|k| (k.0, k.1, merged[&k])).collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(p, q, c) in &edges {
            adjacency[p].push((q, c));
            adjacency[q].push((p, c));
        }
        Ok(GraphForm { mu, edges, adjacency })
    }

    pub fn num_vertices(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, p: usize) -> &[(usize, f64)] {
        &self.adjacency[p]
    }

    pub fn conductance(&self, p: usize, q: usize) -> f64 {
        self.adjacency[p].iter().find(|(r, _)| *r == q).map_or(0.0, |(_, c)| *c)
    }

    fn check_len(&self, f: &[f64]) {
        assert_eq!(f.len(), self.num_vertices(), "vertex function has the wrong length");
    }

    pub fn energy(&self, f: &[f64], g: &[f64]) -> f64 {
        self.check_len(f);
        self.check_len(g);
        self.edges
            .iter()
            .map(|&(p, q, c)| c * (f[p] - f[q]) * (g[p] - g[q]))
            .sum()
    }

    pub fn energy_measure(&self, f: &[f64], g: &[f64]) -> VertexMeasure {
        self.check_len(f);
        self.check_len(g);
        let mut mass = vec![0.0; self.num_vertices()];
        for &(p, q, c) in &self.edges {
            let half = 0.5 * c * (f[p] - f[q]) * (g[p] - g[q]);
            mass[p] += half;
            mass[q] += half;
        }
        VertexMeasure { mass }
    }

    /// `|Σ_p φ(p) Γ(f,g)({p}) − ½(E(f, gφ) + E(g, fφ) − E(fg, φ))|`
    pub fn energy_measure_identity_residual(&self, f: &[f64], g: &[f64], phi: &[f64]) -> f64 {
        let lhs = self.energy_measure(f, g).integrate(phi);
        let gphi = pointwise(g, phi);
        let fphi = pointwise(f, phi);
        let fg = pointwise(f, g);
        let rhs = 0.5 * (self.energy(f, &gphi) + self.energy(g, &fphi) - self.energy(&fg, phi));
        (lhs - rhs).abs()
    }

    pub fn generator(&self, f: &[f64]) -> Vec<f64> {
        self.check_len(f);
        (0..self.num_vertices())
            .map(|p| {
                let s: f64 = self.adjacency[p].iter().map(|&(q, c)| c * (f[q] - f[p])).sum();
                s / self.mu[p]
            })
            .collect()
    }

    /// Dense matrix of `L` acting on vertex functions.
    pub fn generator_matrix(&self) -> DMatrix<f64> {
        let n = self.num_vertices();
        let mut l = DMatrix::zeros(n, n);
        for &(p, q, c) in &self.edges {
            l[(p, q)] += c / self.mu[p];
            l[(q, p)] += c / self.mu[q];
            l[(p, p)] -= c / self.mu[p];
            l[(q, q)] -= c / self.mu[q];
        }
        l
    }

    /// `u = G₁f`, the solution of `(I − L) u = f`.
    pub fn resolvent_g1(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f);
        let n = self.num_vertices();
        let a = DMatrix::identity(n, n) - self.generator_matrix();
        let u = a
            .lu()
            .solve(&DVector::from_column_slice(f))
            .ok_or(Error::SingularSystem)?;
        Ok(u.iter().copied().collect())
    }

    /// Energy minimizing extension of `boundary` values to the whole vertex set.
    pub fn harmonic_solve(&self, boundary: &[(usize, f64)]) -> Result<Vec<f64>> {
        let n = self.num_vertices();
        if boundary.is_empty() {
            return Err(Error::InvalidGraph("empty boundary".into()));
        }
        let mut fixed: Vec<Option<f64>> = vec![None; n];
        for &(p, v) in boundary {
            if p >= n {
                return Err(Error::InvalidGraph(format!("boundary vertex {p} does not exist")));
            }
            fixed[p] = Some(v);
        }
        // every vertex must reach the boundary through positive conductances
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = boundary.iter().map(|&(p, _)| p).collect();
        for &(p, _) in boundary {
            seen[p] = true;
        }
        while let Some(p) = queue.pop_front() {
            for &(q, c) in &self.adjacency[p] {
                if c > 0.0 && !seen[q] {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
        if let Some(p) = seen.iter().position(|s| !s) {
            return Err(Error::Underdetermined(p));
        }

        let interior: Vec<usize> = (0..n).filter(|&p| fixed[p].is_none()).collect();
        let mut out: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
        if interior.is_empty() {
            return Ok(out);
        }
        let mut slot = vec![usize::MAX; n];
        for (k, &p) in interior.iter().enumerate() {
            slot[p] = k;
        }
        let m = interior.len();
        let mut a = DMatrix::zeros(m, m);
        let mut b = DVector::zeros(m);
        for (k, &p) in interior.iter().enumerate() {
            for &(q, c) in &self.adjacency[p] {
                a[(k, k)] += c;
                match fixed[q] {
                    Some(v) => b[k] += c * v,
                    None => a[(k, slot[q])] -= c,
                }
            }
        }
        let x = a.lu().solve(&b).ok_or(Error::SingularSystem)?;
        for (k, &p) in interior.iter().enumerate() {
            out[p] = x[k];
        }
        Ok(out)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(p) = stack.pop() {
            for &(q, c) in &self.adjacency[p] {
                if c > 0.0 && !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Random connected graph: a random spanning tree plus extra edges.
    /// Conductances and masses are drawn from `[0.1, 2)`.
    pub fn random_connected<R: Rng + ?Sized>(n: usize, extra_edges: usize, rng: &mut R) -> Self {
        assert!(n > 0);
        let mu: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let mut edges = Vec::new();
        for q in 1..n {
            let p = rng.gen_range(0..q);
            edges.push((p, q, rng.gen_range(0.1..2.0)));
        }
        if n > 1 {
            for _ in 0..extra_edges {
                let p = rng.gen_range(0..n);
                let q = rng.gen_range(0..n);
                if p != q {
                    edges.push((p, q, rng.gen_range(0.1..2.0)));
                }
            }
        }
        GraphForm::new(mu, edges).expect("generated graph is valid")
    }

    /// Path `0 – 1 – … – (n−1)` with unit conductances and unit masses.
    pub fn path(n: usize) -> Self {
        GraphForm::new(vec![1.0; n], (1..n).map(|q| (q - 1, q, 1.0))).expect("path graph is valid")
    }

    /// Parse the line format `v <id> <mu>` / `e <id1> <id2> <conductance>`, `#` comments.
    pub fn parse_text(text: &str) -> Result<ParsedGraph> {
        let mut ids: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut mu = Vec::new();
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                position: format!("line {}", lineno + 1),
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let number = |s: &str| -> Result<f64> { s.parse::<f64>().map_err(|_| err(format!("not a number: '{s}'"))) };
            match fields.as_slice() {
                ["v", id, m] => {
                    if index.contains_key(*id) {
                        return Err(err(format!("duplicate vertex '{id}'")));
                    }
                    index.insert(id.to_string(), ids.len());
                    ids.push(id.to_string());
                    mu.push(number(m)?);
                }
                ["e", a, b, c] => {
                    let lookup = |id: &str| {
                        index
                            .get(id)
                            .copied()
                            .ok_or_else(|| err(format!("edge references undeclared vertex '{id}'")))
                    };
                    edges.push((lookup(a)?, lookup(b)?, number(c)?));
                }
                _ => return Err(err(format!("unrecognised line '{line}'"))),
            }
        }
        let form = GraphForm::new(mu, edges)?;
        Ok(ParsedGraph { form, ids })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (p, m) in self.mu.iter().enumerate() {
            let _ = writeln!(s, "v {p} {m}");
        }
        for &(p, q, c) in &self.edges {
            let _ = writeln!(s, "e {p} {q} {c}");
        }
        s
    }
}

/// A graph read from text together with the vertex ids in index order.
#[derive(Debug, Clone)]
pub struct ParsedGraph {
    pub form: GraphForm,
    pub ids: Vec<String>,
}

pub fn pointwise(f: &[f64], g: &[f64]) -> Vec<f64> {
    f.iter().zip(g).map(|(a, b)| a * b).collect()
}

/// `(f ∨ 0) ∧ 1`
pub fn unit_contraction(f: &[f64]) -> Vec<f64> {
    f.iter().map(|x| x.clamp(0.0, 1.0)).collect()
}
