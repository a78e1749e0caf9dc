//! End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per
//! criterion and a summary.
//!
//! By default this target is a report and exits successfully once every
//! criterion has run. Set `ACCEPTANCE_STRICT=1` to exit non-zero when any
//! criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ortho_gconv::diagnostics::{run_cell, theorem1_gradient, theorem2_check_with, SweepConfig, Variant};
use ortho_gconv::engine::{gcn_layer_forward, train, Activation, ModelConfig, ModelState};
use ortho_gconv::graph::synthetic::{sbm_dataset, SbmConfig};
use ortho_gconv::graph::{load_cora_format, planetoid_split, Graph, NodeDataset, Splits};
use ortho_gconv::linalg::inverse_sqrt_oracle;
use ortho_gconv::linalg::orthogonal::{householder_product, orthogonality_defect, random_permutation};
use ortho_gconv::linalg::random::gaussian;
use ortho_gconv::ortho::{newton_orthogonalize, spectral_bound, OrthoConfig, OrthoLayerParams};
use ortho_gconv::{DenseMatrix, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    run: fn() -> Result<Verdict>,
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn random_graph<R: Rng>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges)
}

fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let diff = a.sub(b).expect("same shape").frobenius_norm();
    let scale = a.frobenius_norm().max(b.frobenius_norm());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn criterion_theorem1() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut worst_backprop, mut worst_fd) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let n = rng.random_range(2..=16);
        let depth = rng.random_range(1..=5);
        let (d_in, hidden, d_out) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=8));
        let graph = random_graph(n, 0.3, &mut rng)?;
        let x = gaussian(n, d_in, 1.0, &mut rng);
        let mut cfg = ModelConfig::new(d_in, hidden, d_out, depth);
        cfg.activation = Activation::Identity;
        let layers: Vec<OrthoLayerParams> = cfg
            .layer_dims()
            .into_iter()
            .map(|(r, c)| OrthoLayerParams::new(gaussian(r, c, 0.7, &mut rng)))
            .collect();
        let weights: Vec<DenseMatrix> = layers.iter().map(|p| p.raw_weight.clone()).collect();
        let upstream = gaussian(n, d_out, 1.0, &mut rng);

        let mut state = ModelState::from_layers(cfg, layers)?;
        state.forward_features(&graph, &x, false)?;
        let grads = state.backward(&graph, &upstream)?;

        // L = ⟨H^(L), G⟩ so that ∂L/∂H^(L) = G.
        let loss = |ws: &[DenseMatrix]| -> f64 {
            let mut h = x.clone();
            for w in ws {
                h = graph.spmm(&h).unwrap().matmul(w).unwrap();
            }
            h.frobenius_dot(&upstream).unwrap()
        };
        let step = 1e-5;
        for l in 1..=depth {
            let closed = theorem1_gradient(&graph, &x, &weights, &upstream, l)?;
            worst_backprop = worst_backprop.max(rel_err(&closed, &grads.effective[l - 1]));
            for i in 0..closed.rows() {
                for j in 0..closed.cols() {
                    let mut plus = weights.clone();
                    plus[l - 1][(i, j)] += step;
                    let mut minus = weights.clone();
                    minus[l - 1][(i, j)] -= step;
                    let fd = (loss(&plus) - loss(&minus)) / (2.0 * step);
                    let err = (fd - closed[(i, j)]).abs() / closed[(i, j)].abs().max(1.0);
                    worst_fd = worst_fd.max(err);
                }
            }
        }
    }
    Ok(verdict(
        worst_backprop <= 1e-10 && worst_fd <= 1e-6,
        format!("50 instances: max rel err vs backprop {worst_backprop:.2e} (tol 1e-10), vs finite differences {worst_fd:.2e} (tol 1e-6)"),
    ))
}

fn criterion_theorem2() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let mut failures = Vec::new();
    let (mut worst_norm, mut worst_cov) = (0.0f64, 0.0f64);
    let mut checks = 0;
    for d in [4, 16, 64] {
        for (kind, w) in [
            ("householder", householder_product(d, &mut rng)),
            ("permutation", random_permutation(d, &mut rng)),
        ] {
            for sigma in [1.0, 2.5] {
                let report = theorem2_check_with(&w, 100_000, sigma, rng.random())?;
                checks += 1;
                worst_norm = worst_norm.max(report.norm_deviation).max(report.gradient_norm_deviation);
                worst_cov = worst_cov.max(report.covariance_deviation / (sigma * sigma));
                if !report.passed() {
                    failures.push(format!("{kind} d={d} sigma={sigma}"));
                }
            }
        }
    }
    Ok(verdict(
        failures.is_empty(),
        format!(
            "{checks} checks: max norm deviation {worst_norm:.2e} (tol 1e-10), max covariance deviation {worst_cov:.4}σ² (tol 0.05σ²){}",
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
        ),
    ))
}

fn criterion_newton() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    let (mut converged, mut monotone) = (0, 0);
    let (mut worst_defect, mut worst_oracle) = (0.0f64, 0.0f64);
    let trials = 100;
    for _ in 0..trials {
        let q = gaussian(16, 16, 1.0, &mut rng);
        let q_hat = spectral_bound(&q)?;
        let out = newton_orthogonalize(&q_hat, 6)?;
        let defect = orthogonality_defect(&out.weight);
        worst_defect = worst_defect.max(defect);
        if defect < 1e-2 {
            converged += 1;
        }
        if out.residuals.windows(2).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
        let long = newton_orthogonalize(&q_hat, 12)?;
        let oracle = inverse_sqrt_oracle(&q_hat.matmul_t(&q_hat)?, 1e-14)?.matmul(&q_hat)?;
        worst_oracle = worst_oracle.max(long.weight.sub(&oracle)?.frobenius_norm());
    }
    Ok(verdict(
        converged == trials && monotone == trials && worst_oracle <= 1e-6,
        format!(
            "T=6: {converged}/{trials} below 1e-2 (max ‖WWᵀ−I‖_F {worst_defect:.3}); residual non-increasing in {monotone}/{trials}; T=12 max oracle gap {worst_oracle:.2e} (tol 1e-6)"
        ),
    ))
}

fn criterion_full_gradient() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let n = 8;
    let graph = random_graph(n, 0.35, &mut rng)?;
    let features = gaussian(n, 3, 1.0, &mut rng);
    let labels = (0..n).map(|i| i % 3).collect();
    let splits = Splits {
        train: (0..n).collect(),
        ..Default::default()
    };
    let dataset = NodeDataset::new(graph, features, labels, 3, splits)?;
    let ortho = OrthoConfig {
        iterations: 2,
        lambda: 1e-4,
        ..OrthoConfig::default()
    };
    let mut cfg = ModelConfig::new(3, 4, 3, 3).with_ortho(ortho);
    cfg.seed = 4;
    let mut state = ModelState::init(cfg)?;
    let mask: Vec<usize> = (0..n).collect();
    let (_, _, grads) = state.loss_and_gradients(&dataset, &mask, false)?;

    let h = 1e-6;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-8);
    let mut worst = 0.0f64;
    let mut count = 0;
    for l in 0..state.num_layers() {
        let (r, c) = state.layers[l].raw_weight.shape();
        for i in 0..r {
            for j in 0..c {
                let orig = state.layers[l].raw_weight[(i, j)];
                state.layers[l].raw_weight[(i, j)] = orig + h;
                let plus = state.total_loss(&dataset, &mask)?;
                state.layers[l].raw_weight[(i, j)] = orig - h;
                let minus = state.total_loss(&dataset, &mask)?;
                state.layers[l].raw_weight[(i, j)] = orig;
                worst = worst.max(rel((plus - minus) / (2.0 * h), grads.weights[l][(i, j)]));
                count += 1;
            }
        }
        let orig = state.layers[l].scale;
        state.layers[l].scale = orig + h;
        let plus = state.total_loss(&dataset, &mask)?;
        state.layers[l].scale = orig - h;
        let minus = state.total_loss(&dataset, &mask)?;
        state.layers[l].scale = orig;
        let fd = (plus - minus) / (2.0 * h);
        if fd != 0.0 || grads.scales[l] != 0.0 {
            worst = worst.max(rel(fd, grads.scales[l]));
        }
        count += 1;
    }
    Ok(verdict(
        worst <= 1e-4,
        format!("{count} parameters: max relative error {worst:.2e} (tol 1e-4)"),
    ))
}

fn sbm() -> Result<NodeDataset> {
    sbm_dataset(&SbmConfig::default())
}

fn criterion_msig() -> Result<Verdict> {
    let dataset = sbm()?;
    let config = SweepConfig::default();
    let depths = [2, 4, 8, 16];
    let mut vanilla = Vec::new();
    let mut ortho = Vec::new();
    for &depth in &depths {
        for (variant, sink) in [(Variant::Vanilla, &mut vanilla), (Variant::Ortho, &mut ortho)] {
            let cell = run_cell(&dataset, depth, variant, &config);
            if let Some(e) = cell.error {
                return Ok(Verdict::Fail(format!("{variant} L={depth} failed: {e}")));
            }
            sink.push(cell.msig.unwrap_or(f64::NAN));
        }
    }
    let growth = vanilla[3] / vanilla[0];
    let ortho_ok = ortho.iter().all(|m| (0.5..=2.0).contains(m));
    let fmt = |v: &[f64]| v.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>().join(", ");
    Ok(verdict(
        growth >= 5.0 && ortho_ok,
        format!(
            "500-node SBM, L=2,4,8,16: vanilla M_sig [{}] (L16/L2 = {growth:.2e}, need ≥ 5); ortho M_sig [{}] (need all in [0.5, 2])",
            fmt(&vanilla),
            fmt(&ortho)
        ),
    ))
}

fn criterion_grad_norms() -> Result<Verdict> {
    let dataset = sbm()?;
    let config = SweepConfig {
        epochs: 1,
        ..Default::default()
    };
    let mut ratios = Vec::new();
    for variant in [Variant::Vanilla, Variant::Ortho] {
        let cell = run_cell(&dataset, 8, variant, &config);
        let norms = cell.initial_grad_norms.ok_or_else(|| {
            ortho_gconv::Error::DegenerateInput(format!("{variant}: no gradient norms ({:?})", cell.error))
        })?;
        ratios.push(norms[0] / norms[7]);
    }
    Ok(verdict(
        ratios[0] < 0.1 && ratios[1] >= 0.3,
        format!(
            "8 layers, epoch 1, ‖∂L/∂W1‖/‖∂L/∂W8‖: vanilla {:.3} (need < 0.1), ortho {:.3} (need ≥ 0.3)",
            ratios[0], ratios[1]
        ),
    ))
}

fn cora_dir() -> PathBuf {
    std::env::var_os("ORTHO_GCONV_CORA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/cora"))
}

fn criterion_cora() -> Result<Verdict> {
    let dir = cora_dir();
    let (content, cites) = (dir.join("cora.content"), dir.join("cora.cites"));
    if !content.exists() || !cites.exists() {
        return Ok(Verdict::Skip(format!("Cora files not found under {}", dir.display())));
    }
    let mut dataset = load_cora_format(&content, &cites)?.dataset;
    dataset.row_normalize_features();
    let splits = planetoid_split(&dataset.labels, dataset.num_classes, 20, 500, 1000, 0)?;
    let dataset = dataset.with_splits(splits)?;

    let run = |depth: usize, ortho: OrthoConfig| -> Result<f64> {
        let mut total = 0.0;
        for seed in 0..5 {
            let mut cfg = ModelConfig::new(dataset.num_features(), 16, dataset.num_classes, depth).with_ortho(ortho.clone());
            cfg.dropout = 0.5;
            cfg.seed = seed;
            total += train(cfg, &dataset)?.test_acc_at_best.unwrap_or(0.0);
        }
        Ok(100.0 * total / 5.0)
    };
    let shallow = run(2, OrthoConfig::vanilla())?;
    let deep = run(8, OrthoConfig::vanilla())?;
    let deep_ortho = run(8, OrthoConfig::default())?;
    Ok(verdict(
        (shallow - 81.5).abs() <= 2.5 && deep <= 72.0 && deep_ortho >= 76.0,
        format!("5 seeds: GCN-2 {shallow:.2} (81.5 ± 2.5), GCN-8 {deep:.2} (≤ 72), Ortho-GCN-8 {deep_ortho:.2} (≥ 76)"),
    ))
}

fn criterion_contraction() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(8008);
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..20 {
        let n = rng.random_range(3..=40);
        let graph = random_graph(n, rng.random_range(0.05..0.6), &mut rng)?;
        let d = rng.random_range(2..=12);
        let mut h = gaussian(n, d, 1.0, &mut rng);
        for _ in 0..6 {
            let w = householder_product(d, &mut rng);
            let (next, _) = gcn_layer_forward(&graph, &h, &w, Activation::Relu)?;
            let ratio = next.frobenius_norm() / h.frobenius_norm();
            worst = worst.max(ratio);
            if next.frobenius_norm() > h.frobenius_norm() * (1.0 + 1e-12) {
                violations += 1;
            }
            h = next;
            if h.frobenius_norm() == 0.0 {
                break;
            }
        }
    }
    Ok(verdict(
        violations == 0,
        format!("20 graphs × 6 layers: max ‖H^(l)‖/‖H^(l−1)‖ = {worst:.6}, {violations} violations"),
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "closed-form gradient equivalence", budget: Duration::from_secs(30), run: criterion_theorem1 },
        Criterion { id: 2, name: "orthogonal norm and covariance preservation", budget: Duration::from_secs(60), run: criterion_theorem2 },
        Criterion { id: 3, name: "Newton orthogonalization", budget: Duration::from_secs(30), run: criterion_newton },
        Criterion { id: 4, name: "full-model gradient check", budget: Duration::from_secs(60), run: criterion_full_gradient },
        Criterion { id: 5, name: "signal magnification across depth", budget: Duration::from_secs(600), run: criterion_msig },
        Criterion { id: 6, name: "layer-wise gradient norms at epoch 1", budget: Duration::from_secs(300), run: criterion_grad_norms },
        Criterion { id: 7, name: "semi-supervised Cora accuracy", budget: Duration::from_secs(1800), run: criterion_cora },
        Criterion { id: 8, name: "forward contraction with orthogonal weights", budget: Duration::from_secs(10), run: criterion_contraction },
    ];

    let only: Option<Vec<u8>> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .map(|a| a.parse().ok())
        .collect();
    let (mut passed, mut failed, mut skipped) = (0, 0, 0);
    for c in criteria.iter().filter(|c| only.as_ref().is_none_or(|o| o.is_empty() || o.contains(&c.id))) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let over = if elapsed > c.budget {
            format!(" [over {}s budget]", c.budget.as_secs())
        } else {
            String::new()
        };
        let (tag, detail) = match outcome {
            Ok(Verdict::Pass(d)) if over.is_empty() => ("PASS", d),
            Ok(Verdict::Pass(d)) | Ok(Verdict::Fail(d)) => ("FAIL", d),
            Ok(Verdict::Skip(d)) => ("SKIP", d),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        match tag {
            "PASS" => passed += 1,
            "SKIP" => skipped += 1,
            _ => failed += 1,
        }
        println!("criterion {} {tag}: {} | {detail} ({:.1}s){over}", c.id, c.name, elapsed.as_secs_f64());
    }
    println!("acceptance: {passed} passed, {failed} failed, {skipped} skipped");
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed == 0 || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
