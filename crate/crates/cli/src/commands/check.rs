use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use ortho_gconv::diagnostics::{theorem1_gradient, theorem2_check_with, Theorem2Report};
use ortho_gconv::engine::{Activation, ModelConfig, ModelState};
use ortho_gconv::graph::Graph;
use ortho_gconv::linalg::orthogonal::{householder_product, random_givens_product, random_permutation};
use ortho_gconv::linalg::random::gaussian;
use ortho_gconv::ortho::{newton_orthogonalize, spectral_bound, OrthoLayerParams};
use ortho_gconv::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::seeds::{default_seed, parse_list};

pub const THEOREM1_BACKPROP_TOL: f64 = 1e-10;
pub const THEOREM1_FD_TOL: f64 = 1e-6;
const FD_STEP: f64 = 1e-5;

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Feature widths to test.
    #[arg(long, default_value = "4,8")]
    pub dims: String,
    /// Model depths for the closed-form gradient comparison.
    #[arg(long, default_value = "2,3,5")]
    pub depths: String,
    /// Random instances per (dim, depth) pair.
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Samples for the moment checks.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Test hook: perturb the Newton-orthogonalized weight so the norm checks must fail.
    #[arg(long)]
    pub perturb_newton: bool,
    /// Also write the table as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub case: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    fn new(check: &str, case: String, deviation: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            case,
            deviation,
            tolerance,
            pass: deviation <= tolerance,
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    config: Echo<'a>,
    rows: &'a [CheckRow],
    theorem1_instances: usize,
    passed: bool,
}

#[derive(Serialize)]
struct Echo<'a> {
    dims: &'a [usize],
    depths: &'a [usize],
    trials: usize,
    samples: usize,
    sigma: f64,
    seed: u64,
    perturb_newton: bool,
}

fn random_graph<R: Rng>(n: usize, rng: &mut R) -> Result<Graph> {
    let p = rng.random_range(0.1..0.6);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Ok(Graph::from_edges(n, edges)?)
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Worst (backprop, finite-difference) deviations over every layer of one instance.
fn theorem1_instance<R: Rng>(d: usize, depth: usize, rng: &mut R) -> Result<(f64, f64)> {
    let n = rng.random_range(4..=16);
    let graph = random_graph(n, rng)?;
    let x = gaussian(n, d, 1.0, rng);
    let weights: Vec<DenseMatrix> = (0..depth).map(|_| gaussian(d, d, 0.6, rng)).collect();
    let upstream = gaussian(n, d, 1.0, rng);

    let mut cfg = ModelConfig::new(d, d, d, depth);
    cfg.activation = Activation::Identity;
    let mut state = ModelState::from_layers(cfg, weights.iter().cloned().map(OrthoLayerParams::new).collect())?;
    state.forward_features(&graph, &x, false)?;
    let grads = state.backward(&graph, &upstream)?;

    let loss = |ws: &[DenseMatrix]| -> Result<f64> {
        let mut h = x.clone();
        for w in ws {
            h = graph.spmm(&h)?.matmul(w)?;
        }
        Ok(h.frobenius_dot(&upstream)?)
    };
    let (mut worst_bp, mut worst_fd) = (0.0f64, 0.0f64);
    for l in 1..=depth {
        let closed = theorem1_gradient(&graph, &x, &weights, &upstream, l)?;
        let engine = &grads.effective[l - 1];
        let scale = closed.frobenius_norm().max(engine.frobenius_norm());
        worst_bp = worst_bp.max(relative(closed.sub(engine)?.frobenius_norm(), scale));
        for i in 0..d {
            for j in 0..d {
                let mut plus = weights.clone();
                plus[l - 1][(i, j)] += FD_STEP;
                let mut minus = weights.clone();
                minus[l - 1][(i, j)] -= FD_STEP;
                let fd = (loss(&plus)? - loss(&minus)?) / (2.0 * FD_STEP);
                worst_fd = worst_fd.max((fd - closed[(i, j)]).abs() / closed[(i, j)].abs().max(1.0));
            }
        }
    }
    Ok((worst_bp, worst_fd))
}

/// Newton steps needed for a unit-spectrum input of width `d` (all
/// eigenvalues of M equal `1/d`) to reach machine precision.
fn iterations_for_orthogonal(d: usize) -> usize {
    let mut y = 1.0 / d as f64;
    let mut t = 0;
    while (1.0 - y).abs() > 1e-15 && t < 60 {
        y = y * (3.0 - y) * (3.0 - y) / 4.0;
        t += 1;
    }
    t
}

fn theorem2_rows(rows: &mut Vec<CheckRow>, case: String, r: &Theorem2Report) {
    rows.push(CheckRow::new("mean", case.clone(), r.mean_deviation, r.mean_tolerance));
    rows.push(CheckRow::new("covariance", case.clone(), r.covariance_deviation, r.covariance_tolerance));
    rows.push(CheckRow::new("norm", case.clone(), r.norm_deviation, r.norm_tolerance));
    rows.push(CheckRow::new("gradient-norm", case, r.gradient_norm_deviation, r.norm_tolerance));
}

pub fn run(args: CheckArgs) -> Result<bool> {
    let dims: Vec<usize> = parse_list(&args.dims, "dim")?;
    let depths: Vec<usize> = parse_list(&args.depths, "depth")?;
    let seed = match args.seed {
        Some(s) => s,
        None => default_seed()?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();

    let mut instances = 0;
    for &d in &dims {
        for &depth in &depths {
            let (mut bp, mut fd) = (0.0f64, 0.0f64);
            for _ in 0..args.trials {
                let (b, f) = theorem1_instance(d, depth, &mut rng)?;
                bp = bp.max(b);
                fd = fd.max(f);
                instances += 1;
            }
            let case = format!("d={d} L={depth} x{}", args.trials);
            rows.push(CheckRow::new("theorem1-backprop", case.clone(), bp, THEOREM1_BACKPROP_TOL));
            rows.push(CheckRow::new("theorem1-finite-diff", case, fd, THEOREM1_FD_TOL));
        }
    }

    for &d in &dims {
        let householder = householder_product(d, &mut rng);
        let q_hat = spectral_bound(&householder_product(d, &mut rng))?;
        let mut newton = newton_orthogonalize(&q_hat, iterations_for_orthogonal(d))?.weight;
        if args.perturb_newton {
            newton = newton.scale(1.0 + 1e-6);
        }
        let cases = [
            ("identity", DenseMatrix::identity(d)),
            ("permutation", random_permutation(d, &mut rng)),
            ("householder", householder),
            ("givens", random_givens_product(d, 3 * d, &mut rng)),
            ("newton", newton),
        ];
        for (name, w) in cases {
            let report = theorem2_check_with(&w, args.samples, args.sigma, rng.random())?;
            theorem2_rows(&mut rows, format!("{name} d={d}"), &report);
        }
    }

    println!("{:<20} {:<22} {:>12} {:>12}  status", "check", "case", "deviation", "tolerance");
    for r in &rows {
        println!(
            "{:<20} {:<22} {:>12.3e} {:>12.3e}  {}",
            r.check,
            r.case,
            r.deviation,
            r.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    let passed = rows.iter().all(|r| r.pass);
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("{instances} closed-form gradient comparisons; {} checks, {failed} failed", rows.len());

    if let Some(path) = &args.out {
        let report = Report {
            config: Echo {
                dims: &dims,
                depths: &depths,
                trials: args.trials,
                samples: args.samples,
                sigma: args.sigma,
                seed,
                perturb_newton: args.perturb_newton,
            },
            rows: &rows,
            theorem1_instances: instances,
            passed,
        };
        std::fs::write(path, serde_json::to_string_pretty(&report)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(passed)
}
