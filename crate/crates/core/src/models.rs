//! Reference coordinate models: divergence-form operators on a Euclidean box and
//! the first Heisenberg group with its left-invariant horizontal fields.
//!
//! A Riemannian chart with a diagonal metric is covered by [`CoefficientField`]:
//! put the inverse metric (times the volume density) into the coefficients.

use nalgebra::{DMatrix, Matrix3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, sym_eigenvalues};
use crate::poly::{rational, Polynomial};

/// Smallest eigenvalue tolerated for a metric matrix.
pub const PSD_TOLERANCE: f64 = -1e-10;

/// A finite partition with weights, metric matrices, coordinate values and
/// (optionally) the generator applied to each coordinate.
#[derive(Debug, Clone)]
pub struct CoordinateModel {
    name: String,
    dim: usize,
    weights: Vec<f64>,
    z: Vec<DMatrix<f64>>,
    ycoords: Vec<Vec<f64>>,
    laplacians: Option<Vec<Vec<f64>>>,
}

impl CoordinateModel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        weights: Vec<f64>,
        z: Vec<DMatrix<f64>>,
        ycoords: Vec<Vec<f64>>,
        laplacians: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let n = weights.len();
        if z.len() != n || ycoords.len() != n || laplacians.as_ref().is_some_and(|l| l.len() != n) {
            return Err(Error::InvalidModel("per-element arrays differ in length".into()));
        }
        for k in 0..n {
            if !(weights[k].is_finite() && weights[k] > 0.0) {
                return Err(Error::InvalidModel(format!("element {k} has weight {}", weights[k])));
            }
            let m = &z[k];
            if m.nrows() != dim || m.ncols() != dim || ycoords[k].len() != dim {
                return Err(Error::InvalidModel(format!("element {k} has the wrong dimension")));
            }
            let scale = m.amax().max(1.0);
            if max_asymmetry(m) > 1e-12 * scale {
                return Err(Error::InvalidModel(format!("Z at element {k} is not symmetric")));
            }
            let lo = sym_eigenvalues(m)[0];
            if lo < PSD_TOLERANCE * scale {
                return Err(Error::InvalidModel(format!("Z at element {k} has eigenvalue {lo}")));
            }
            if let Some(l) = &laplacians {
                if l[k].len() != dim {
                    return Err(Error::InvalidModel(format!("Ly at element {k} has the wrong length")));
                }
            }
        }
        Ok(CoordinateModel {
            name: name.into(),
            dim,
            weights,
            z,
            ycoords,
            laplacians,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn z(&self, k: usize) -> &DMatrix<f64> {
        &self.z[k]
    }

    pub fn y(&self, k: usize) -> &[f64] {
        &self.ycoords[k]
    }

    pub fn coordinate_laplacian(&self, k: usize) -> Option<&[f64]> {
        self.laplacians.as_ref().map(|l| l[k].as_slice())
    }
}

/// Axis-aligned box `Π [lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidModel(
                "box bounds must have equal, positive length".into(),
            ));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(a, b)| a.is_nan() || b.is_nan() || a >= b)
        {
            return Err(Error::InvalidModel("box has an empty side".into()));
        }
        Ok(BoxDomain { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        BoxDomain {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Centers and common volume of the `gridᵈ` cells, last axis fastest.
    pub fn midpoints(&self, grid: usize) -> (Vec<Vec<f64>>, f64) {
        let d = self.dim();
        let h: Vec<f64> = (0..d).map(|i| (self.upper[i] - self.lower[i]) / grid as f64).collect();
        let volume = h.iter().product();
        let total = grid.pow(d as u32);
        let centers = (0..total)
            .map(|mut idx| {
                let mut c = vec![0.0; d];
                for axis in (0..d).rev() {
                    let i = idx % grid;
                    idx /= grid;
                    c[axis] = self.lower[axis] + (i as f64 + 0.5) * h[axis];
                }
                c
            })
            .collect();
        (centers, volume)
    }
}

/// Symmetric polynomial coefficient matrix `a_ij(x)` with ellipticity constant `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    entries: Vec<Vec<Polynomial>>,
    ellipticity: f64,
}

impl CoefficientField {
    pub fn new(entries: Vec<Vec<Polynomial>>, ellipticity: f64) -> Result<Self> {
        let n = entries.len();
        if n == 0 || entries.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidCoefficients("coefficient matrix must be square".into()));
        }
        for (i, row) in entries.iter().enumerate() {
            for (j, a) in row.iter().enumerate().take(i) {
                if *a != entries[j][i] {
                    return Err(Error::InvalidCoefficients(format!(
                        "a_{}{} ≠ a_{}{}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        if let Some(p) = entries.iter().flatten().find(|p| p.num_vars() > n) {
            return Err(Error::InvalidCoefficients(format!(
                "entry {p} uses variables beyond x{n}"
            )));
        }
        if ellipticity.is_nan() || ellipticity <= 0.0 {
            return Err(Error::InvalidCoefficients(
                "ellipticity constant must be positive".into(),
            ));
        }
        Ok(CoefficientField { entries, ellipticity })
    }

    pub fn identity(dim: usize) -> Self {
        let entries = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { Polynomial::one() } else { Polynomial::zero() })
                    .collect()
            })
            .collect();
        CoefficientField {
            entries,
            ellipticity: 1.0,
        }
    }

    /// Diagonal field from text polynomials in `x1..xn`.
    pub fn diagonal(diag: &[&str], ellipticity: f64) -> Result<Self> {
        let n = diag.len();
        let mut entries = vec![vec![Polynomial::zero(); n]; n];
        for (i, s) in diag.iter().enumerate() {
            entries[i][i] = Polynomial::parse(s)?;
        }
        Self::new(entries, ellipticity)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &Polynomial {
        &self.entries[i][j]
    }

    pub fn ellipticity(&self) -> f64 {
        self.ellipticity
    }

    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.entries[i][j].eval(x)?;
            }
        }
        Ok(m)
    }

    /// Evaluate at `x` and check the smallest eigenvalue against `c`.
    pub fn eval_checked(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.eval(x)?;
        let lo = sym_eigenvalues(&m)[0];
        // small slack for rounding in the eigen solver
        if lo < self.ellipticity - 1e-12 * self.ellipticity.max(1.0) {
            return Err(Error::EllipticityViolated {
                node: x.to_vec(),
                min_eigenvalue: lo,
                bound: self.ellipticity,
            });
        }
        Ok(m)
    }

    /// `Σ_j ∂a_ij/∂x_j`, the generator applied to the coordinate `x_i`.
    pub fn coordinate_laplacians(&self) -> Vec<Polynomial> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).fold(Polynomial::zero(), |acc, j| acc + self.entries[i][j].partial(j)))
            .collect()
    }

    /// `div(a · g ∇f) = Σ_i ∂_i Σ_j a_ij g ∂_j f`
    pub fn divergence_of(&self, f: &Polynomial, g: &Polynomial) -> Polynomial {
        let n = self.dim();
        let grad: Vec<Polynomial> = f.gradient(n);
        (0..n).fold(Polynomial::zero(), |acc, i| {
            let flux = (0..n).fold(Polynomial::zero(), |s, j| s + &self.entries[i][j] * &grad[j]);
            acc + (g * &flux).partial(i)
        })
    }
}

/// Midpoint partition of `domain` with `Z_k = a(center)`.
pub fn euclidean_model(a: &CoefficientField, domain: &BoxDomain, grid: usize) -> Result<CoordinateModel> {
    check_grid(grid)?;
    if domain.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: domain.dim(),
        });
    }
    let (centers, volume) = domain.midpoints(grid);
    let lap: Vec<_> = a.coordinate_laplacians().iter().map(Polynomial::compile).collect();
    let mut z = Vec::with_capacity(centers.len());
    let mut laps = Vec::with_capacity(centers.len());
    for c in &centers {
        z.push(a.eval_checked(c)?);
        laps.push(lap.iter().map(|p| p.eval(c)).collect());
    }
    CoordinateModel::new(
        format!("euclidean {}d grid {grid}", a.dim()),
        a.dim(),
        vec![volume; centers.len()],
        z,
        centers,
        Some(laps),
    )
}

fn check_grid(grid: usize) -> Result<()> {
    if grid < 2 {
        Err(Error::InvalidModel(format!("grid {grid} < 2")))
    } else {
        Ok(())
    }
}

pub const XI: usize = 0;
pub const ETA: usize = 1;
pub const ZETA: usize = 2;

fn half_var(index: usize) -> Polynomial {
    Polynomial::var(index).scale(&rational(1, 2))
}

/// `Xf = ∂f/∂ξ − (η/2) ∂f/∂ζ`
pub fn heisenberg_x(f: &Polynomial) -> Polynomial {
    f.partial(XI) - half_var(ETA) * f.partial(ZETA)
}

/// `Yf = ∂f/∂η + (ξ/2) ∂f/∂ζ`
pub fn heisenberg_y(f: &Polynomial) -> Polynomial {
    f.partial(ETA) + half_var(XI) * f.partial(ZETA)
}

/// `X(Xf) + Y(Yf)`
pub fn sublaplacian(f: &Polynomial) -> Polynomial {
    heisenberg_x(&heisenberg_x(f)) + heisenberg_y(&heisenberg_y(f))
}

/// `Z(q)` with entries `⟨∂yⁱ, ∂yʲ⟩ = (Xyⁱ)(Xyʲ) + (Yyⁱ)(Yyʲ)` as polynomials in ξ, η.
pub fn heisenberg_z_poly() -> Vec<Vec<Polynomial>> {
    let coords: Vec<Polynomial> = (0..3).map(Polynomial::var).collect();
    let xs: Vec<Polynomial> = coords.iter().map(heisenberg_x).collect();
    let ys: Vec<Polynomial> = coords.iter().map(heisenberg_y).collect();
    (0..3)
        .map(|i| (0..3).map(|j| &xs[i] * &xs[j] + &ys[i] * &ys[j]).collect())
        .collect()
}

/// `[[1, 0, −η/2], [0, 1, ξ/2], [−η/2, ξ/2, (ξ²+η²)/4]]`
pub fn heisenberg_z(q: [f64; 3]) -> Matrix3<f64> {
    let (xi, eta) = (q[0], q[1]);
    Matrix3::new(
        1.0,
        0.0,
        -eta / 2.0,
        0.0,
        1.0,
        xi / 2.0,
        -eta / 2.0,
        xi / 2.0,
        (xi * xi + eta * eta) / 4.0,
    )
}

/// Determinant of a 3×3 polynomial matrix by cofactor expansion.
pub fn det3(m: &[Vec<Polynomial>]) -> Polynomial {
    let minor = |r1: usize, r2: usize, c1: usize, c2: usize| &m[r1][c1] * &m[r2][c2] - &m[r1][c2] * &m[r2][c1];
    &m[0][0] * minor(1, 2, 1, 2) - &m[0][1] * minor(1, 2, 0, 2) + &m[0][2] * minor(1, 2, 0, 1)
}

/// Midpoint partition of a box in `(ξ, η, ζ)` with `Z_k = Z(center)` and
/// `Ly^i = 0` for all three coordinates.
pub fn heisenberg_model(domain: &BoxDomain, grid: usize) -> Result<CoordinateModel> {
    check_grid(grid)?;
    if domain.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: domain.dim(),
        });
    }
    let (centers, volume) = domain.midpoints(grid);
    let z = centers
        .iter()
        .map(|c| {
            let m = heisenberg_z([c[0], c[1], c[2]]);
            DMatrix::from_iterator(3, 3, m.iter().copied())
        })
        .collect();
    let laps = Some(vec![vec![0.0; 3]; centers.len()]);
    CoordinateModel::new(
        format!("heisenberg grid {grid}"),
        3,
        vec![volume; centers.len()],
        z,
        centers,
        laps,
    )
}

/// Outcome of [`euclidean_ibp_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IbpCheck {
    pub grid: usize,
    /// `∫ g ∇f · a∇u dx`
    pub flux_term: f64,
    /// `∫ div(a g ∇f) u dx`
    pub divergence_term: f64,
    pub residual: f64,
    pub warning: Option<String>,
}

/// Midpoint-rule residual of `∫ g∇f·a∇u dx + ∫ div(a g∇f) u dx` for a test
/// function `u` that vanishes on the boundary of the box.
pub fn euclidean_ibp_check(
    a: &CoefficientField,
    f: &Polynomial,
    g: &Polynomial,
    u: &Polynomial,
    domain: &BoxDomain,
    grid: usize,
) -> Result<IbpCheck> {
    check_grid(grid)?;
    let n = a.dim();
    if domain.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: domain.dim(),
        });
    }
    let warning = boundary_violation(u, domain)?;
    let grad_f: Vec<_> = f.gradient(n).iter().map(|p| (g * p).compile()).collect();
    let grad_u: Vec<_> = u.gradient(n).iter().map(Polynomial::compile).collect();
    let div = a.divergence_of(f, g).compile();
    let uc = u.compile();
    let (centers, volume) = domain.midpoints(grid);
    let mut flux_term = 0.0;
    let mut divergence_term = 0.0;
    for c in &centers {
        let am = a.eval(c)?;
        let gf: Vec<f64> = grad_f.iter().map(|p| p.eval(c)).collect();
        let gu: Vec<f64> = grad_u.iter().map(|p| p.eval(c)).collect();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += gf[i] * am[(i, j)] * gu[j];
            }
        }
        flux_term += s * volume;
        divergence_term += div.eval(c) * uc.eval(c) * volume;
    }
    Ok(IbpCheck {
        grid,
        flux_term,
        divergence_term,
        residual: (flux_term + divergence_term).abs(),
        warning,
    })
}

/// Samples `u` on a grid over every face of the box.
fn boundary_violation(u: &Polynomial, domain: &BoxDomain) -> Result<Option<String>> {
    const SAMPLES: usize = 9;
    let d = domain.dim();
    let uc = u.compile();
    if uc.num_vars() > d {
        return Err(Error::UnboundVariable(uc.num_vars() - 1));
    }
    let face_points = SAMPLES.pow(d as u32 - 1);
    let mut worst = 0.0f64;
    for axis in 0..d {
        for side in [domain.lower[axis], domain.upper[axis]] {
            for mut idx in 0..face_points {
                let mut x = vec![0.0; d];
                for k in (0..d).filter(|&k| k != axis) {
                    let t = (idx % SAMPLES) as f64 / (SAMPLES - 1) as f64;
                    idx /= SAMPLES;
                    x[k] = domain.lower[k] + t * (domain.upper[k] - domain.lower[k]);
                }
                x[axis] = side;
                worst = worst.max(uc.eval(&x).abs());
            }
        }
    }
    Ok((worst > 1e-12).then(|| format!("test function does not vanish on the boundary (max |u| = {worst:e})")))
}

/// Observed convergence orders `log2(r_k / r_{k+1})` for residuals at successive
/// grid doublings.
pub fn observed_orders(residuals: &[f64]) -> Vec<f64> {
    residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
