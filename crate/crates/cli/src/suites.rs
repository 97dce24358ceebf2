use std::path::PathBuf;

use anyhow::{Context, Result};
use harmcoord::builder::verify_bounds;
use harmcoord::calculus::{
    energy_form, generator_apply, generator_symbolic, gradient_pairing, gradient_pairing_symbolic,
    weak_generator_check_on, CheckRecord,
};
use harmcoord::models::{
    det3, euclidean_ibp_check, euclidean_model, heisenberg_model, heisenberg_x, heisenberg_y, heisenberg_z_poly,
    observed_orders, sublaplacian, ZETA,
};
use harmcoord::poly::{rational, Monomial};
use harmcoord::sg::{
    boundary_bump, cell_levels, gram_additivity_check, kusuoka_additivity_check, q_form, rank_one_decay, GasketGraph,
    EXHAUSTIVE_LEVEL,
};
use harmcoord::{BoxDomain, BuiltCoordinates, CoefficientField, GraphForm, Polynomial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::{Criterion, Report};

pub const DEFAULT_SG_LEVEL: usize = 8;
pub const DEFAULT_EUCLID_GRID: usize = 8;
pub const DEFAULT_HEISENBERG_GRID: usize = 4;
pub const RANDOM_GRAPHS: usize = 20;
pub const MAX_RANDOM_GRAPH: usize = 50;
pub const RANDOM_POLYNOMIALS: usize = 200;
const DEEP_SAMPLES: usize = 20_000;

/// Level from which the convergence experiments are judged.
pub const CONVERGENCE_LEVEL: usize = 8;
const CONVERGENCE_START: usize = 4;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub level: Option<usize>,
    pub grid: Option<usize>,
    pub graph: Option<PathBuf>,
    pub seed: u64,
    pub tol: Option<f64>,
}

impl SuiteConfig {
    fn exact(&self, default: f64) -> Criterion {
        Criterion::Absolute {
            tol: self.tol.unwrap_or(default),
        }
    }
}

fn p(s: &str) -> Polynomial {
    Polynomial::parse(s).expect("literal polynomial")
}

fn decreasing(values: &[f64]) -> f64 {
    values.windows(2).filter(|w| w[1] >= w[0]).count() as f64
}

pub fn sg(cfg: &SuiteConfig) -> Result<Report> {
    let n = cfg.level.unwrap_or(DEFAULT_SG_LEVEL);
    let model = "sierpinski-gasket";
    let mut r = Report::new("sg", cfg.seed);

    let levels = cell_levels(n)?;
    let mut worst_trace = 1.0f64;
    let mut min_eig = 0.0f64;
    for c in levels.iter().flatten() {
        let t = c.z[0][0] + c.z[1][1];
        if (t - 1.0).abs() > (worst_trace - 1.0).abs() {
            worst_trace = t;
        }
        min_eig = min_eig.min(c.z_eigenvalues().0);
    }
    r.push(
        CheckRecord::new("trace_z", model, n, worst_trace, 1.0),
        cfg.exact(1e-12),
    );
    r.push(
        CheckRecord::new("z_min_eigenvalue", model, n, min_eig, 0.0),
        cfg.exact(1e-12),
    );
    let total: f64 = levels[n].iter().map(|c| c.nu).sum();
    r.push(CheckRecord::new("nu_total", model, n, total, 2.0), cfg.exact(1e-12));
    if n >= 1 {
        r.push(
            CheckRecord::new("nu_additivity", model, n, kusuoka_additivity_check(n)?, 0.0),
            cfg.exact(1e-12),
        );
        r.push(
            CheckRecord::new("gram_additivity", model, n, gram_additivity_check(n)?, 0.0),
            cfg.exact(1e-12),
        );
        // level-1 masses against the level-1 graph energy measure
        let g1 = GasketGraph::build(1)?;
        let (y1, y2) = (g1.sample(&p("y1"))?, g1.sample(&p("y2"))?);
        for c in &levels[1] {
            let oracle = g1.cell_energy_measure(&c.word, &y1, &y1)? + g1.cell_energy_measure(&c.word, &y2, &y2)?;
            r.push(
                CheckRecord::new(format!("nu_level1[{}]", c.word), model, 1, c.nu, 2.0 / 3.0),
                cfg.exact(1e-12),
            );
            r.push(
                CheckRecord::new(format!("nu_level1_graph[{}]", c.word), model, 1, c.nu, oracle),
                cfg.exact(1e-12),
            );
        }
    }

    let (py1, py2) = (p("y1"), p("y2"));
    let mut graph = None;
    for m in 0..=n {
        let g = GasketGraph::build(m)?;
        r.push(
            CheckRecord::new("energy_y1", model, m, g.composite_energy(&py1, &py1)?, 1.0),
            cfg.exact(1e-10),
        );
        r.push(
            CheckRecord::new("energy_y2", model, m, g.composite_energy(&py2, &py2)?, 1.0),
            cfg.exact(1e-10),
        );
        r.push(
            CheckRecord::new("energy_y1_y2", model, m, g.composite_energy(&py1, &py2)?, 0.0),
            cfg.exact(1e-10),
        );
        if m == n {
            graph = Some(g);
        }
    }
    let graph = graph.expect("level n built");

    // (5/3)^|w| Q(b_w) against the edge energy inside K_w, for |w| ≤ n − 2
    let (y1, y2) = (graph.sample(&py1)?, graph.sample(&py2)?);
    let mut worst = 0.0f64;
    for cells in levels.iter().take(n.saturating_sub(1)) {
        for c in cells {
            let scale = (5.0f64 / 3.0).powi(c.level() as i32);
            for (f, b) in [(&y1, &c.boundary.b1), (&y2, &c.boundary.b2)] {
                let e = graph.cell_energy_measure(&c.word, f, f)?;
                worst = worst.max((e - scale * q_form(b)).abs());
            }
        }
    }
    r.push(
        CheckRecord::new("energy_self_similarity", model, n, worst, 0.0),
        cfg.exact(1e-10),
    );

    // rank-one tendency: ν-weighted mean of λ_min/λ_max per level
    let samples = (n > EXHAUSTIVE_LEVEL).then_some(DEEP_SAMPLES);
    let stats = rank_one_decay(n, samples, cfg.seed)?;
    for s in &stats {
        r.push(
            CheckRecord::new("rank_one_mean_ratio", model, s.level, s.mean_ratio, 0.0),
            Criterion::Info,
        );
        if let Some(u) = s.uniform_mean_ratio {
            r.push(
                CheckRecord::new("rank_one_uniform_mean_ratio", model, s.level, u, 0.0),
                Criterion::Info,
            );
        }
    }
    if n >= 2 {
        let means: Vec<f64> = stats[1..].iter().map(|s| s.mean_ratio).collect();
        r.push(
            CheckRecord::new("rank_one_non_decreasing_steps", model, n, decreasing(&means), 0.0),
            Criterion::AtMost,
        );
    }
    if n >= CONVERGENCE_LEVEL {
        r.push(
            CheckRecord::new(
                "rank_one_mean_ratio_bound",
                model,
                CONVERGENCE_LEVEL,
                stats[CONVERGENCE_LEVEL].mean_ratio,
                0.05,
            ),
            Criterion::AtMost,
        );
    }

    if n >= CONVERGENCE_START {
        convergence(&mut r, n)?;
    }
    Ok(r.finish())
}

/// Cell-sum energy and the trace-form generator against graph energies.
fn convergence(r: &mut Report, n: usize) -> Result<()> {
    let model = "sierpinski-gasket";
    let fs = [
        ("y1^2", p("y1^2")),
        ("y1*y2", p("y1*y2")),
        ("y1^2 + y2^3", p("y1^2 + y2^3")),
    ];
    let f_gen = p("y1^2");
    let u = p("y1") * boundary_bump();
    let mut gaps = vec![Vec::new(); fs.len()];
    let mut weak = Vec::new();
    for m in CONVERGENCE_START..=n {
        let g = GasketGraph::build(m)?;
        let km = g.kusuoka_model()?;
        for (k, (name, f)) in fs.iter().enumerate() {
            let rec = CheckRecord::new(
                format!("energy_cell_sum[{name}]"),
                model,
                m,
                g.composite_energy(f, f)?,
                energy_form(f, f, &km)?,
            );
            gaps[k].push(rec.relative);
            let crit = if m == n && n >= CONVERGENCE_LEVEL {
                Criterion::Relative { tol: 0.05 }
            } else {
                Criterion::Info
            };
            r.push(rec, crit);
        }
        let w = weak_generator_check_on(&g, &f_gen, &u)?;
        weak.push(w.relative);
        let crit = if m == n && n >= CONVERGENCE_LEVEL {
            Criterion::Relative { tol: 0.10 }
        } else {
            Criterion::Info
        };
        r.push(
            CheckRecord::new("weak_generator[y1^2; y1*bump]", model, m, w.graph_energy, -w.trace_sum),
            crit,
        );
    }
    for ((name, _), g) in fs.iter().zip(&gaps) {
        r.push(
            CheckRecord::new(
                format!("energy_cell_sum_non_decreasing_steps[{name}]"),
                model,
                n,
                decreasing(g),
                0.0,
            ),
            Criterion::AtMost,
        );
    }
    r.push(
        CheckRecord::new("weak_generator_non_decreasing_steps", model, n, decreasing(&weak), 0.0),
        Criterion::AtMost,
    );
    Ok(())
}

/// Random polynomial in three variables with total degree ≤ `max_deg`.
pub fn random_polynomial(rng: &mut impl Rng, vars: usize, max_deg: u32, terms: usize) -> Polynomial {
    Polynomial::from_terms((0..terms).map(|_| {
        let mut e = vec![0u32; vars];
        let deg = rng.gen_range(0..=max_deg);
        for _ in 0..deg {
            e[rng.gen_range(0..vars)] += 1;
        }
        let num = rng.gen_range(-20i64..=20);
        let den = rng.gen_range(1i64..=6);
        (Monomial::from_exponents(e), rational(num, den))
    }))
}

pub fn heisenberg(cfg: &SuiteConfig) -> Result<Report> {
    let grid = cfg.grid.unwrap_or(DEFAULT_HEISENBERG_GRID);
    let model = "heisenberg";
    let mut r = Report::new("heisenberg", cfg.seed);
    let z = heisenberg_z_poly();
    r.push(
        CheckRecord::new("det_z_terms", model, 0, det3(&z).len() as f64, 0.0),
        Criterion::Absolute { tol: 0.0 },
    );
    let zeta = Polynomial::var(ZETA);
    let bracket = heisenberg_x(&heisenberg_y(&zeta)) - heisenberg_y(&heisenberg_x(&zeta));
    r.push(
        CheckRecord::new(
            "bracket_xy_zeta_minus_one_terms",
            model,
            0,
            (bracket - Polynomial::one()).len() as f64,
            0.0,
        ),
        Criterion::Absolute { tol: 0.0 },
    );

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let polys: Vec<Polynomial> = (0..RANDOM_POLYNOMIALS)
        .map(|_| random_polynomial(&mut rng, 3, 4, 5))
        .collect();
    let half = |i: usize, s: i64| Polynomial::var(i).scale(&rational(s, 2));
    let mut mismatch = [0usize; 4];
    let laps = vec![Polynomial::zero(); 3];
    for f in &polys {
        let (xf, yf) = (heisenberg_x(f), heisenberg_y(f));
        let third = half(1, -1) * &xf + half(0, 1) * &yf;
        for (j, expected) in [xf, yf, third].iter().enumerate() {
            if gradient_pairing_symbolic(f, j, &z) != *expected {
                mismatch[j] += 1;
            }
        }
        if generator_symbolic(f, &z, &laps) != sublaplacian(f) {
            mismatch[3] += 1;
        }
    }
    for (name, count) in [
        "pairing_xi_is_xf",
        "pairing_eta_is_yf",
        "pairing_zeta",
        "generator_is_sublaplacian",
    ]
    .iter()
    .zip(mismatch)
    {
        r.push(
            CheckRecord::new(
                format!("{name}_mismatches"),
                model,
                RANDOM_POLYNOMIALS,
                count as f64,
                0.0,
            ),
            Criterion::Absolute { tol: 0.0 },
        );
    }

    let domain = BoxDomain::new(vec![-1.0; 3], vec![1.0; 3])?;
    let hm = heisenberg_model(&domain, grid)?;
    let mut worst_gen = 0.0f64;
    let mut worst_pair = 0.0f64;
    for f in polys.iter().take(20) {
        let lap = sublaplacian(f).compile();
        let xf = heisenberg_x(f).compile();
        let yf = heisenberg_y(f).compile();
        for k in 0..hm.len() {
            let y = hm.y(k);
            worst_gen = worst_gen.max((generator_apply(f, &hm, k)? - lap.eval(y)).abs());
            worst_pair = worst_pair.max((gradient_pairing(f, 0, &hm, k)? - xf.eval(y)).abs());
            worst_pair = worst_pair.max((gradient_pairing(f, 1, &hm, k)? - yf.eval(y)).abs());
        }
    }
    r.push(
        CheckRecord::new("generator_apply_vs_sublaplacian", model, grid, worst_gen, 0.0),
        cfg.exact(1e-10),
    );
    r.push(
        CheckRecord::new("gradient_pairing_vs_xy", model, grid, worst_pair, 0.0),
        cfg.exact(1e-10),
    );
    Ok(r.finish())
}

pub fn euclid(cfg: &SuiteConfig) -> Result<Report> {
    let grid = cfg.grid.unwrap_or(DEFAULT_EUCLID_GRID);
    let model = "euclidean";
    let mut r = Report::new("euclid", cfg.seed);
    let unit = BoxDomain::unit(2);
    let f = p("x1");
    let one = Polynomial::one();
    let u = p("x1*x2 - x1^2*x2 - x1*x2^2 + x1^2*x2^2");

    let a = CoefficientField::diagonal(&["1 + x1^2", "1"], 1.0)?;
    let mut residuals = Vec::new();
    for k in 0..4 {
        let g = grid << k;
        let c = euclidean_ibp_check(&a, &f, &one, &u, &unit, g)?;
        if let Some(w) = &c.warning {
            anyhow::bail!("{w}");
        }
        r.push(
            CheckRecord::new("ibp_flux_plus_divergence", model, g, c.flux_term, -c.divergence_term),
            Criterion::Info,
        );
        residuals.push(c.residual);
    }
    let order = observed_orders(&residuals).into_iter().fold(f64::INFINITY, f64::min);
    r.push(
        CheckRecord::new("ibp_observed_order_min", model, grid, order, 1.8),
        Criterion::AtLeast,
    );

    // coordinate Laplacians: L x_i = Σ_j ∂a_ij/∂x_j
    let em = euclidean_model(&a, &unit, grid)?;
    let mut worst = 0.0f64;
    for k in 0..em.len() {
        let x = em.y(k);
        worst = worst.max((generator_apply(&f, &em, k)? - 2.0 * x[0]).abs());
    }
    r.push(
        CheckRecord::new("generator_x1", model, grid, worst, 0.0),
        cfg.exact(1e-12),
    );

    // a = I: weak pairing equals the midpoint flux term, strong side vanishes
    let id = CoefficientField::identity(2);
    let im = euclidean_model(&id, &unit, grid)?;
    let weak = harmcoord::calculus::divergence_functional(&f, &one, &u, &im)?;
    let strong = euclidean_ibp_check(&id, &f, &one, &u, &unit, grid)?;
    r.push(
        CheckRecord::new("divergence_weak_vs_flux", model, grid, weak, -strong.flux_term),
        cfg.exact(1e-12),
    );
    r.push(
        CheckRecord::new("divergence_strong_identity", model, grid, strong.divergence_term, 0.0),
        cfg.exact(1e-12),
    );
    Ok(r.finish())
}

pub fn builder(cfg: &SuiteConfig) -> Result<Report> {
    let mut r = Report::new("builder", cfg.seed);
    let model = "graph";

    // two vertices, unit mass and conductance: y¹ = (1/6, 1/12), Γ(y¹)(X) = 1/144
    let two = BuiltCoordinates::from_basis(GraphForm::new(vec![1.0, 1.0], [(0, 1, 1.0)])?)?;
    r.push(
        CheckRecord::new("two_vertex_y1[0]", model, 2, two.y[0][0], 1.0 / 6.0),
        cfg.exact(1e-15),
    );
    r.push(
        CheckRecord::new("two_vertex_y1[1]", model, 2, two.y[0][1], 1.0 / 12.0),
        cfg.exact(1e-15),
    );
    r.push(
        CheckRecord::new(
            "two_vertex_energy_y1",
            model,
            2,
            two.graph.energy(&two.y[0], &two.y[0]),
            1.0 / 144.0,
        ),
        cfg.exact(1e-15),
    );

    match &cfg.graph {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let parsed = GraphForm::parse_text(&text).with_context(|| format!("parsing {}", path.display()))?;
            let n = parsed.form.num_vertices();
            let built = BuiltCoordinates::from_basis(parsed.form)?;
            let report = verify_bounds(&built, cfg.seed);
            r.push(
                CheckRecord::new("density_rank", model, n, report.rank as f64, n as f64),
                Criterion::Absolute { tol: 0.0 },
            );
            r.push_builder(path.display().to_string(), report);
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            for t in 0..RANDOM_GRAPHS {
                let n = rng.gen_range(2..=MAX_RANDOM_GRAPH);
                let extra = rng.gen_range(0..=n);
                let g = GraphForm::random_connected(n, extra, &mut rng);
                let built = BuiltCoordinates::from_basis(g)?;
                let report = verify_bounds(&built, cfg.seed.wrapping_add(t as u64));
                r.push(
                    CheckRecord::new(
                        format!("density_rank[random {t}]"),
                        model,
                        n,
                        report.rank as f64,
                        n as f64,
                    ),
                    Criterion::Absolute { tol: 0.0 },
                );
                r.push_builder(format!("random {t} (N = {n})"), report);
            }
        }
    }
    Ok(r.finish())
}

pub fn all(cfg: &SuiteConfig) -> Result<Report> {
    let mut r = Report::new("all", cfg.seed);
    for run in [sg, heisenberg, euclid, builder] {
        r.extend(run(cfg)?);
    }
    Ok(r.finish())
}
