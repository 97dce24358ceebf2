//! Coordinate calculus over a [`CoordinateModel`].
//!
//! For `f = F ∘ y` the differential `(∂f)_x` is represented by its coefficient
//! vector `∇F(y(x))` in the span of `(∂yⁱ)_x`, and every pairing goes through the
//! metric: `⟨(∂f)_x, (∂g)_x⟩ = ⟨∇F(y), Z(x) ∇G(y)⟩`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::CoordinateModel;
use crate::poly::{CompiledPoly, Polynomial};
use crate::sg::GasketGraph;

/// A simple tensor `(f ⊗ g)_x` in the fiber over partition element `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberElement {
    pub base: usize,
    pub coeffs: Vec<f64>,
    pub scalar: f64,
}

impl FiberElement {
    /// `(∂f)_x` for `f = F ∘ y`.
    pub fn differential(f: &Polynomial, model: &CoordinateModel, k: usize) -> Result<Self> {
        Self::simple_tensor(f, &Polynomial::one(), model, k)
    }

    /// `(f ⊗ g)_x`: coefficients `∇F(y(x))`, scalar `G(y(x))`.
    pub fn simple_tensor(f: &Polynomial, g: &Polynomial, model: &CoordinateModel, k: usize) -> Result<Self> {
        let y = model.y(k);
        let coeffs = gradient_at(f, model.dim(), y)?;
        Ok(FiberElement {
            base: k,
            coeffs,
            scalar: g.eval(y)?,
        })
    }
}

fn gradient_at(f: &Polynomial, dim: usize, y: &[f64]) -> Result<Vec<f64>> {
    if f.num_vars() > dim {
        return Err(Error::UnboundVariable(f.num_vars() - 1));
    }
    f.gradient(dim).iter().map(|p| p.eval(y)).collect()
}

fn compiled_gradient(f: &Polynomial, dim: usize) -> Result<Vec<CompiledPoly>> {
    if f.num_vars() > dim {
        return Err(Error::UnboundVariable(f.num_vars() - 1));
    }
    Ok(f.gradient(dim).iter().map(Polynomial::compile).collect())
}

fn metric_pairing(z: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += u[i] * z[(i, j)] * v[j];
        }
    }
    s
}

pub fn fiber_inner(e1: &FiberElement, e2: &FiberElement, model: &CoordinateModel) -> Result<f64> {
    if e1.base != e2.base {
        return Err(Error::MismatchedBase(e1.base, e2.base));
    }
    for e in [e1, e2] {
        if e.coeffs.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: e.coeffs.len(),
            });
        }
    }
    Ok(e1.scalar * e2.scalar * metric_pairing(model.z(e1.base), &e1.coeffs, &e2.coeffs))
}

/// `Σ_k ⟨∇F(y_k), Z_k ∇G(y_k)⟩ m_k`
pub fn energy_form(f: &Polynomial, g: &Polynomial, model: &CoordinateModel) -> Result<f64> {
    divergence_like(f, None, g, model)
}

/// `−Σ_k G(y_k) ⟨∇F(y_k), Z_k ∇U(y_k)⟩ m_k`, the pairing `∂*((∂f) g)(u)`.
pub fn divergence_functional(f: &Polynomial, g: &Polynomial, u: &Polynomial, model: &CoordinateModel) -> Result<f64> {
    Ok(-divergence_like(f, Some(g), u, model)?)
}

fn divergence_like(f: &Polynomial, g: Option<&Polynomial>, u: &Polynomial, model: &CoordinateModel) -> Result<f64> {
    let d = model.dim();
    let gf = compiled_gradient(f, d)?;
    let gu = compiled_gradient(u, d)?;
    let scalar = match g {
        Some(g) if g.num_vars() > d => return Err(Error::UnboundVariable(g.num_vars() - 1)),
        Some(g) => Some(g.compile()),
        None => None,
    };
    let mut total = 0.0;
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    for k in 0..model.len() {
        let y = model.y(k);
        for i in 0..d {
            a[i] = gf[i].eval(y);
            b[i] = gu[i].eval(y);
        }
        let w = scalar.as_ref().map_or(1.0, |s| s.eval(y));
        total += w * metric_pairing(model.z(k), &a, &b) * model.weight(k);
    }
    Ok(total)
}

/// `(Z_k ∇F(y_k))_j = ⟨(∂f)_x, (∂yʲ)_x⟩`
pub fn gradient_pairing(f: &Polynomial, j: usize, model: &CoordinateModel, k: usize) -> Result<f64> {
    if j >= model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: j + 1,
        });
    }
    let grad = gradient_at(f, model.dim(), model.y(k))?;
    let z = model.z(k);
    Ok((0..model.dim()).map(|i| z[(j, i)] * grad[i]).sum())
}

/// `Σ_ij ∂²F/∂yⁱ∂yʲ (y_k) Z_kⁱʲ + Σ_i ∂F/∂yⁱ (y_k) Lyⁱ(x_k)`
pub fn generator_apply(f: &Polynomial, model: &CoordinateModel, k: usize) -> Result<f64> {
    let lap = model.coordinate_laplacian(k).ok_or(Error::MissingLaplacians)?;
    let d = model.dim();
    let y = model.y(k);
    let grad = gradient_at(f, d, y)?;
    let vars: Vec<usize> = (0..d).collect();
    let hess = f.hessian(&vars);
    let z = model.z(k);
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += hess[i][j].eval(y)? * z[(i, j)];
        }
        s += grad[i] * lap[i];
    }
    Ok(s)
}

/// `(Z ∇F)_j` with a polynomial metric, exactly.
pub fn gradient_pairing_symbolic(f: &Polynomial, j: usize, z: &[Vec<Polynomial>]) -> Polynomial {
    let d = z.len();
    f.gradient(d)
        .iter()
        .enumerate()
        .fold(Polynomial::zero(), |acc, (i, g)| acc + &z[j][i] * g)
}

/// The generator formula with a polynomial metric and polynomial `Lyⁱ`, exactly.
pub fn generator_symbolic(f: &Polynomial, z: &[Vec<Polynomial>], laplacians: &[Polynomial]) -> Polynomial {
    let d = z.len();
    let vars: Vec<usize> = (0..d).collect();
    let hess = f.hessian(&vars);
    let mut out = Polynomial::zero();
    for i in 0..d {
        for j in 0..d {
            out = out + &hess[i][j] * &z[i][j];
        }
        out = out + f.partial(i) * &laplacians[i];
    }
    out
}

/// Sup-norm gap between the coefficient vector of `∂(FG)` and `F∇G + G∇F` at `y_k`.
pub fn leibniz_check(f: &Polynomial, g: &Polynomial, model: &CoordinateModel, k: usize) -> Result<f64> {
    let d = model.dim();
    let y = model.y(k);
    let lhs = gradient_at(&(f * g), d, y)?;
    let (fv, gv) = (f.eval(y)?, g.eval(y)?);
    let gf = gradient_at(f, d, y)?;
    let gg = gradient_at(g, d, y)?;
    Ok((0..d)
        .map(|i| (lhs[i] - (fv * gg[i] + gv * gf[i])).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakGeneratorCheck {
    pub level: usize,
    /// `E_n(F ∘ y, U ∘ y)` from the graph.
    pub graph_energy: f64,
    /// `Σ_w tr(Z_w D²F(ŷ_w)) U(ŷ_w) ν(K_w)`
    pub trace_sum: f64,
    pub residual: f64,
    pub relative: f64,
}

/// Compare the graph energy `E_n(F∘y, U∘y)` with `−∫ Δ_ν f · u dν`, the latter
/// discretized with the trace formula `Δ_ν f = tr(Z D²F)` on level-`n` cells.
pub fn weak_generator_check(f: &Polynomial, u: &Polynomial, n: usize) -> Result<WeakGeneratorCheck> {
    weak_generator_check_on(&GasketGraph::build(n)?, f, u)
}

pub fn weak_generator_check_on(graph: &GasketGraph, f: &Polynomial, u: &Polynomial) -> Result<WeakGeneratorCheck> {
    let graph_energy = graph.composite_energy(f, u)?;
    let hess: Vec<Vec<CompiledPoly>> = f
        .hessian(&[0, 1])
        .iter()
        .map(|r| r.iter().map(Polynomial::compile).collect())
        .collect();
    let uc = u.compile();
    let trace_sum: f64 = graph
        .cells()
        .iter()
        .map(|c| {
            let y = c.center();
            let mut tr = 0.0;
            for (zr, hr) in c.z.iter().zip(&hess) {
                for (z, h) in zr.iter().zip(hr) {
                    tr += z * h.eval(&y);
                }
            }
            tr * uc.eval(&y) * c.nu
        })
        .sum();
    let residual = (graph_energy + trace_sum).abs();
    let relative = if graph_energy != 0.0 {
        residual / graph_energy.abs()
    } else {
        residual
    };
    Ok(WeakGeneratorCheck {
        level: graph.level(),
        graph_energy,
        trace_sum,
        residual,
        relative,
    })
}

/// One JSON record of a check: `{check, model, level_or_grid, lhs, rhs, residual, relative}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub model: String,
    pub level_or_grid: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub relative: f64,
}

impl CheckRecord {
    pub fn new(check: impl Into<String>, model: impl Into<String>, level_or_grid: usize, lhs: f64, rhs: f64) -> Self {
        let residual = (lhs - rhs).abs();
        let scale = lhs.abs().max(rhs.abs());
        CheckRecord {
            check: check.into(),
            model: model.into(),
            level_or_grid,
            lhs,
            rhs,
            residual,
            relative: if scale > 0.0 { residual / scale } else { 0.0 },
        }
    }
}
