//! The Sierpinski gasket in harmonic coordinates.
//!
//! The gasket `K` is generated by `f_j(x) = ½(x + p_j)`, `j = 1, 2, 3`. A cell
//! `K_w` is addressed by a [`Word`] over `{1, 2, 3}`. Harmonic functions are
//! determined by their values on the three corners of `K`, and the values on the
//! corners of a child cell follow from the parent's by the extension matrices
//! `A_1, A_2, A_3` (the 1/5–2/5 rule).
//!
//! The two coordinates `y¹, y²` are harmonic with corner values
//! `(−1, 1, 0)/√6` and `(−1, −1, 2)/√18`. These are orthonormal for the level-0
//! energy `Q(a, b, c) = (a−b)² + (b−c)² + (a−c)²` and therefore for the
//! renormalized limit energy. Any other orthonormal pair differs by a rotation
//! and conjugates every `Z_w` by it.
//!
//! For a cell `K_w` the energy measures of the coordinates are
//! `Γ(yʲ, yᵏ)(K_w) = (5/3)^|w| B(b_wʲ, b_wᵏ)` with `B` the polarization of `Q`;
//! the Kusuoka measure is `ν = Γ(y¹) + Γ(y²)` and the cellwise metric is
//! `Z_w = G_w / ν(K_w)`.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph_form::GraphForm;
use crate::linalg::eig2;
use crate::models::CoordinateModel;
use crate::poly::Polynomial;

pub const DEFAULT_MAX_LEVEL: usize = 10;

/// Energy renormalization per subdivision (resistance factor 3/5).
pub const ENERGY_SCALE: f64 = 5.0 / 3.0;

/// Levels up to which [`rank_one_decay`] is always exhaustive.
pub const EXHAUSTIVE_LEVEL: usize = 8;

/// Recorded wherever outputs depend on the choice of orthonormal coordinates.
pub const COORDINATE_CHOICE: &str = "y1 corners (-1,1,0)/sqrt(6), y2 corners (-1,-1,2)/sqrt(18)";

/// Cell address over `{1, 2, 3}`; empty means the whole gasket.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn root() -> Self {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| !(1..=3).contains(&l)) {
            return Err(Error::Parse {
                position: "word".into(),
                message: format!("letter {bad} outside {{1,2,3}}"),
            });
        }
        Ok(Word(letters))
    }

    pub fn parse(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| match c {
                '1' => Ok(1),
                '2' => Ok(2),
                '3' => Ok(3),
                _ => Err(Error::Parse {
                    position: "word".into(),
                    message: format!("letter '{c}' outside {{1,2,3}}"),
                }),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Word(letters))
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, letter: u8) -> Word {
        debug_assert!((1..=3).contains(&letter));
        let mut l = self.0.clone();
        l.push(letter);
        Word(l)
    }

    /// Position of the first level-`n` descendant in lexicographic order, and the
    /// number of descendants.
    fn descendant_block(&self, n: usize) -> (usize, usize) {
        let depth = n - self.len();
        let start = self.0.iter().fold(0usize, |acc, &l| acc * 3 + (l as usize - 1)) * 3usize.pow(depth as u32);
        (start, 3usize.pow(depth as u32))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// `Q(a, b, c) = (a−b)² + (b−c)² + (a−c)²`
pub fn q_form(b: &[f64; 3]) -> f64 {
    b_form(b, b)
}

/// Polarization of [`q_form`].
pub fn b_form(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    (u[0] - u[1]) * (v[0] - v[1]) + (u[1] - u[2]) * (v[1] - v[2]) + (u[0] - u[2]) * (v[0] - v[2])
}

pub type Mat3 = [[f64; 3]; 3];

/// `A_i` maps corner values of a harmonic function on a cell to the corner values
/// on its `i`-th child: corner `i` is kept, and the midpoint between corners `i`
/// and `j` receives `(2 b_i + 2 b_j + b_k)/5`.
pub fn extension_matrices() -> [Mat3; 3] {
    let mut out = [[[0.0; 3]; 3]; 3];
    for (i, a) in out.iter_mut().enumerate() {
        for (j, row) in a.iter_mut().enumerate() {
            if i == j {
                row[i] = 1.0;
            } else {
                let k = 3 - i - j;
                row[i] = 0.4;
                row[j] = 0.4;
                row[k] = 0.2;
            }
        }
    }
    out
}

pub fn apply(a: &Mat3, b: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|r| a[r][0] * b[0] + a[r][1] * b[1] + a[r][2] * b[2])
}

/// Corner values of `y¹` and `y²` on one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPair {
    pub b1: [f64; 3],
    pub b2: [f64; 3],
}

impl BoundaryPair {
    fn child(&self, a: &Mat3) -> BoundaryPair {
        BoundaryPair {
            b1: apply(a, &self.b1),
            b2: apply(a, &self.b2),
        }
    }

    /// `y(corner)` for corner `0, 1, 2`.
    pub fn corner(&self, c: usize) -> [f64; 2] {
        [self.b1[c], self.b2[c]]
    }
}

/// Corner values of the coordinates on the whole gasket.
pub fn coordinate_boundary_values() -> BoundaryPair {
    let s6 = 6f64.sqrt();
    let s18 = 18f64.sqrt();
    BoundaryPair {
        b1: [-1.0 / s6, 1.0 / s6, 0.0],
        b2: [-1.0 / s18, -1.0 / s18, 2.0 / s18],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellData {
    pub word: Word,
    pub boundary: BoundaryPair,
    /// `G_w^{jk} = Γ(yʲ, yᵏ)(K_w)`
    pub gram: [[f64; 2]; 2],
    /// `ν(K_w)`
    pub nu: f64,
    /// `Z_w = G_w / ν(K_w)`
    pub z: [[f64; 2]; 2],
}

impl CellData {
    pub fn new(word: Word, boundary: BoundaryPair) -> CellData {
        let scale = ENERGY_SCALE.powi(word.len() as i32);
        let g11 = scale * q_form(&boundary.b1);
        let g12 = scale * b_form(&boundary.b1, &boundary.b2);
        let g22 = scale * q_form(&boundary.b2);
        let nu = g11 + g22;
        let gram = [[g11, g12], [g12, g22]];
        let z = [[g11 / nu, g12 / nu], [g12 / nu, g22 / nu]];
        CellData {
            word,
            boundary,
            gram,
            nu,
            z,
        }
    }

    pub fn level(&self) -> usize {
        self.word.len()
    }

    /// Eigenvalues of `Z_w`, ascending.
    pub fn z_eigenvalues(&self) -> (f64, f64) {
        eig2(self.z[0][0], self.z[0][1], self.z[1][1])
    }

    /// `λ_min / λ_max` of `Z_w`.
    pub fn eig_ratio(&self) -> f64 {
        let (lo, hi) = self.z_eigenvalues();
        lo.max(0.0) / hi
    }

    /// Centroid of the three corner images, the cell's quadrature point.
    pub fn center(&self) -> [f64; 2] {
        let b = &self.boundary;
        [(b.b1[0] + b.b1[1] + b.b1[2]) / 3.0, (b.b2[0] + b.b2[1] + b.b2[2]) / 3.0]
    }

    fn children(&self, a: &[Mat3; 3]) -> [CellData; 3] {
        std::array::from_fn(|i| CellData::new(self.word.child(i as u8 + 1), self.boundary.child(&a[i])))
    }
}

fn check_level(n: usize, max: usize) -> Result<()> {
    if n > max {
        Err(Error::LevelTooLarge { level: n, max })
    } else {
        Ok(())
    }
}

/// All cells of every level `0..=n`, each level in lexicographic word order.
pub fn cell_levels(n: usize) -> Result<Vec<Vec<CellData>>> {
    check_level(n, DEFAULT_MAX_LEVEL)?;
    let a = extension_matrices();
    let mut levels = vec![vec![CellData::new(Word::root(), coordinate_boundary_values())]];
    for _ in 0..n {
        let next = levels
            .last()
            .expect("level 0 present")
            .iter()
            .flat_map(|c| c.children(&a))
            .collect();
        levels.push(next);
    }
    Ok(levels)
}

/// The `3ⁿ` level-`n` cells in lexicographic word order.
pub fn cell_enumerate(n: usize) -> Result<Vec<CellData>> {
    Ok(cell_levels(n)?.pop().expect("non-empty"))
}

/// `max_{|w|<n} |ν(K_w) − Σ_i ν(K_wi)|`
pub fn kusuoka_additivity_check(n: usize) -> Result<f64> {
    let levels = cell_levels(n)?;
    Ok(levels
        .windows(2)
        .flat_map(|pair| {
            pair[0]
                .iter()
                .zip(pair[1].chunks(3))
                .map(|(parent, kids)| (parent.nu - kids.iter().map(|k| k.nu).sum::<f64>()).abs())
        })
        .fold(0.0, f64::max))
}

/// `max_{|w|<n} ‖G_w − Σ_i G_wi‖_max`
pub fn gram_additivity_check(n: usize) -> Result<f64> {
    let levels = cell_levels(n)?;
    let mut worst = 0.0f64;
    for pair in levels.windows(2) {
        for (parent, kids) in pair[0].iter().zip(pair[1].chunks(3)) {
            for r in 0..2 {
                for c in 0..2 {
                    let s: f64 = kids.iter().map(|k| k.gram[r][c]).sum();
                    worst = worst.max((parent.gram[r][c] - s).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// The level-`n` graph `V_n` with coordinates at every vertex.
#[derive(Debug, Clone)]
pub struct GasketGraph {
    level: usize,
    /// Triangular lattice position: `p1 = (0,0)`, `p2 = (2ⁿ,0)`, `p3 = (0,2ⁿ)`.
    lattice: Vec<[i64; 2]>,
    coords: Vec<[f64; 2]>,
    cells: Vec<CellData>,
    cell_vertices: Vec<[usize; 3]>,
    corners: [usize; 3],
    form: GraphForm,
}

impl GasketGraph {
    /// Build `V_n`. Vertices are numbered in order of first appearance when the
    /// level-`n` cells are visited lexicographically, corner by corner.
    pub fn build(n: usize) -> Result<GasketGraph> {
        check_level(n, DEFAULT_MAX_LEVEL)?;
        let side = 1i64 << n;
        let root = [[0, 0], [side, 0], [0, side]];
        let cells = cell_enumerate(n)?;

        let mut index: HashMap<[i64; 2], usize> = HashMap::new();
        let mut lattice = Vec::new();
        let mut coords: Vec<[f64; 2]> = Vec::new();
        let mut cell_vertices = Vec::with_capacity(cells.len());
        for cell in &cells {
            let corners = cell_lattice_corners(&cell.word, root);
            let mut ids = [0usize; 3];
            for (c, pos) in corners.iter().enumerate() {
                let y = cell.boundary.corner(c);
                let id = *index.entry(*pos).or_insert_with(|| {
                    lattice.push(*pos);
                    coords.push(y);
                    lattice.len() - 1
                });
                let known = coords[id];
                let gap = (known[0] - y[0]).abs().max((known[1] - y[1]).abs());
                if gap > 1e-12 {
                    return Err(Error::Internal(format!(
                        "cells sharing lattice vertex {pos:?} disagree on y by {gap:e}"
                    )));
                }
                ids[c] = id;
            }
            cell_vertices.push(ids);
        }

        // each edge of V_n belongs to exactly one level-n cell
        let conductance = ENERGY_SCALE.powi(n as i32);
        let mut mu = vec![0.0; lattice.len()];
        let mut edges = Vec::with_capacity(3 * cells.len());
        for (cell, ids) in cells.iter().zip(&cell_vertices) {
            for &p in ids {
                mu[p] += cell.nu / 3.0;
            }
            edges.push((ids[0], ids[1], conductance));
            edges.push((ids[1], ids[2], conductance));
            edges.push((ids[0], ids[2], conductance));
        }
        let form = GraphForm::new(mu, edges)?;
        let corners = root.map(|p| index[&p]);
        Ok(GasketGraph {
            level: n,
            lattice,
            coords,
            cells,
            cell_vertices,
            corners,
            form,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn lattice(&self) -> &[[i64; 2]] {
        &self.lattice
    }

    pub fn cells(&self) -> &[CellData] {
        &self.cells
    }

    pub fn cell_vertices(&self) -> &[[usize; 3]] {
        &self.cell_vertices
    }

    /// Vertex ids of `p1, p2, p3`.
    pub fn corners(&self) -> [usize; 3] {
        self.corners
    }

    /// The renormalized graph energy `(5/3)ⁿ Σ_edges` as a [`GraphForm`]. Vertex
    /// masses are one third of the Kusuoka mass of each adjacent cell.
    pub fn form(&self) -> &GraphForm {
        &self.form
    }

    /// `F ∘ y` sampled on `V_n`.
    pub fn sample(&self, f: &Polynomial) -> Result<Vec<f64>> {
        if f.num_vars() > 2 {
            return Err(Error::UnboundVariable(f.num_vars() - 1));
        }
        let c = f.compile();
        Ok(self.coords.iter().map(|y| c.eval(y)).collect())
    }

    /// `E_n(F ∘ y, G ∘ y)`
    pub fn composite_energy(&self, f: &Polynomial, g: &Polynomial) -> Result<f64> {
        Ok(self.form.energy(&self.sample(f)?, &self.sample(g)?))
    }

    /// Graph energy measure of `(f, g)` on the cell `K_w`, counting at each vertex
    /// of `K_w` only the edges inside `K_w`.
    pub fn cell_energy_measure(&self, word: &Word, f: &[f64], g: &[f64]) -> Result<f64> {
        check_level(word.len(), self.level)?;
        let (start, count) = word.descendant_block(self.level);
        let scale = ENERGY_SCALE.powi(self.level as i32);
        let mut total = 0.0;
        for ids in &self.cell_vertices[start..start + count] {
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                let (p, q) = (ids[a], ids[b]);
                // half at each endpoint, so each edge counts once
                total += scale * (f[p] - f[q]) * (g[p] - g[q]);
            }
        }
        Ok(total)
    }

    /// The Kusuoka coordinate model at this level: one element per cell with
    /// weight `ν(K_w)`, metric `Z_w`, centroid coordinates and `Ly^i = 0`.
    pub fn kusuoka_model(&self) -> Result<CoordinateModel> {
        kusuoka_model_from_cells(&self.cells, self.level)
    }
}

fn cell_lattice_corners(word: &Word, root: [[i64; 2]; 3]) -> [[i64; 2]; 3] {
    let mut c = root;
    for &l in word.letters() {
        let i = l as usize - 1;
        let anchor = c[i];
        c = std::array::from_fn(|j| [(anchor[0] + c[j][0]) / 2, (anchor[1] + c[j][1]) / 2]);
    }
    c
}

pub fn kusuoka_model(n: usize) -> Result<CoordinateModel> {
    kusuoka_model_from_cells(&cell_enumerate(n)?, n)
}

fn kusuoka_model_from_cells(cells: &[CellData], n: usize) -> Result<CoordinateModel> {
    let weights = cells.iter().map(|c| c.nu).collect();
    let z = cells
        .iter()
        .map(|c| DMatrix::from_row_slice(2, 2, &[c.z[0][0], c.z[0][1], c.z[1][0], c.z[1][1]]))
        .collect();
    let y = cells.iter().map(|c| c.center().to_vec()).collect();
    let lap = Some(vec![vec![0.0, 0.0]; cells.len()]);
    CoordinateModel::new(format!("sierpinski-gasket level {n}"), 2, weights, z, y, lap)
}

/// Values of `(y¹, y²)` on `V_n`.
pub fn coordinates_at_vertices(n: usize) -> Result<Vec<[f64; 2]>> {
    Ok(GasketGraph::build(n)?.coords)
}

/// `E_n(F ∘ y, G ∘ y)` on the level-`n` graph.
pub fn graph_energy_of_composite(f: &Polynomial, g: &Polynomial, n: usize) -> Result<f64> {
    GasketGraph::build(n)?.composite_energy(f, g)
}

/// `(2/9 − y1² − y2²)(1 + y1)`: vanishes at the three boundary images, which
/// lie on the circle `|y|² = 2/9`. The `1 + y1` factor breaks the reflection
/// symmetry swapping corners 1 and 2.
pub fn boundary_bump() -> Polynomial {
    let circle = Polynomial::parse("2/9 - y1^2 - y2^2").expect("literal");
    let tilt = Polynomial::parse("1 + y1").expect("literal");
    &circle * &tilt
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelStats {
    pub level: usize,
    pub cells: usize,
    /// `Σ_w ratio_w ν(K_w) / ν(K)`, or the sample mean over ν-weighted words.
    pub mean_ratio: f64,
    /// Unweighted mean over all cells; `None` for sampled levels.
    pub uniform_mean_ratio: Option<f64>,
    pub max_ratio: f64,
    pub sampled: bool,
}

/// Eigenvalue ratio statistics of `Z_w` for every level `0..=n`.
///
/// The mean is taken with respect to `ν`, so sampled and exhaustive levels
/// estimate the same quantity.
///
/// Levels up to [`EXHAUSTIVE_LEVEL`] (or all levels when `samples` is `None`) use
/// every cell; deeper levels use `samples` random words whose letters are drawn
/// with probability `ν(K_wi)/ν(K_w)`.
pub fn rank_one_decay(n: usize, samples: Option<usize>, seed: u64) -> Result<Vec<LevelStats>> {
    check_level(n, DEFAULT_MAX_LEVEL)?;
    let exhaustive_to = match samples {
        None => n,
        Some(_) => n.min(EXHAUSTIVE_LEVEL),
    };
    let mut stats: Vec<LevelStats> = cell_levels(exhaustive_to)?
        .iter()
        .enumerate()
        .map(|(level, cells)| {
            let ratios: Vec<f64> = cells.iter().map(CellData::eig_ratio).collect();
            let total_nu: f64 = cells.iter().map(|c| c.nu).sum();
            let weighted: f64 = cells.iter().zip(&ratios).map(|(c, r)| r * c.nu).sum();
            LevelStats {
                level,
                cells: cells.len(),
                mean_ratio: weighted / total_nu,
                uniform_mean_ratio: Some(ratios.iter().sum::<f64>() / ratios.len() as f64),
                max_ratio: ratios.iter().copied().fold(0.0, f64::max),
                sampled: false,
            }
        })
        .collect();
    if let Some(count) = samples {
        let a = extension_matrices();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sums = vec![(0.0f64, 0.0f64); n + 1];
        for _ in 0..count {
            let mut cell = CellData::new(Word::root(), coordinate_boundary_values());
            for (level, slot) in sums.iter_mut().enumerate().skip(1) {
                let kids = cell.children(&a);
                let mut u = rng.gen::<f64>() * cell.nu;
                let mut pick = 2;
                for (i, k) in kids.iter().enumerate() {
                    if u < k.nu {
                        pick = i;
                        break;
                    }
                    u -= k.nu;
                }
                cell = kids[pick].clone();
                if level > exhaustive_to {
                    let r = cell.eig_ratio();
                    slot.0 += r;
                    slot.1 = slot.1.max(r);
                }
            }
        }
        for (level, (sum, max)) in sums.into_iter().enumerate().skip(exhaustive_to + 1) {
            stats.push(LevelStats {
                level,
                cells: count,
                mean_ratio: sum / count as f64,
                uniform_mean_ratio: None,
                max_ratio: max,
                sampled: true,
            });
        }
    }
    Ok(stats)
}

pub const CSV_HEADER: &str = "word,level,nu,G11,G12,G22,Z11,Z12,Z22,eig_ratio,y1_center,y2_center";

/// `cells.csv`, one row per cell in the given order.
pub fn cells_csv(cells: &[CellData]) -> String {
    let mut s = String::with_capacity(160 * (cells.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for c in cells {
        let y = c.center();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.word,
            c.level(),
            c.nu,
            c.gram[0][0],
            c.gram[0][1],
            c.gram[1][1],
            c.z[0][0],
            c.z[0][1],
            c.z[1][1],
            c.eig_ratio(),
            y[0],
            y[1]
        );
    }
    s
}

/// Point cloud of `y(V_n)` in a unit-square viewport.
pub fn gasket_svg(graph: &GasketGraph) -> String {
    let b = coordinate_boundary_values();
    let (xmin, xmax) = (b.b1[0], b.b1[1]);
    let (ymin, ymax) = (b.b2[0], b.b2[2]);
    let margin = 0.05;
    let scale = (1.0 - 2.0 * margin) / (xmax - xmin).max(ymax - ymin);
    let xoff = 0.5 - 0.5 * (xmin + xmax) * scale;
    let yoff = 0.5 + 0.5 * (ymin + ymax) * scale;
    let radius = 0.012 * 0.75f64.powi(graph.level() as i32);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 1 1" width="800" height="800">"#
    );
    let _ = writeln!(
        s,
        "<desc>harmonic coordinate image of V_{} ({} points); {}</desc>",
        graph.level(),
        graph.num_vertices(),
        COORDINATE_CHOICE
    );
    let _ = writeln!(s, r#"<rect width="1" height="1" fill="white"/>"#);
    let _ = writeln!(s, r#"<g fill="black">"#);
    for y in graph.coords() {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.6}" cy="{:.6}" r="{:.6}"/>"#,
            xoff + y[0] * scale,
            yoff - y[1] * scale,
            radius
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}
