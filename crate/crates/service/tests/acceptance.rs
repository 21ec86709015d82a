//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p crowdopt-service --test acceptance`.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use crowdopt_core::linesearch::{
    aggregate_responses, expected_improvement, fit_preference_gp, run_simulated, Kernel, OptConfig, PreferencePair,
    PreferencePosterior, JITTER,
};
use crowdopt_core::photo::{ciede2000, enhance, mean_perceptual_distance, EnhanceParams, Image};
use crowdopt_core::preference_field::{
    default_kernel_width, estimate_goodness_values, fit_rbf, make_pairwise_tasks, EstimationConfig,
    PairwiseComparison, DEFAULT_RIDGE,
};
use crowdopt_core::sim_crowd::{simulate_pairwise_response, simulate_slider_response, slider_grid_argmax, SynthGoodness, WorkerModel};
use crowdopt_core::{uniform_sample, DesignPoint, DesignSpace, Goodness, Rng, SliderSpace};
use crowdopt_service::session::{SUGGESTION_COUNT, SUGGESTION_SAMPLES};
use crowdopt_service::simulate::default_truth;
use crowdopt_service::{read_events, router, AppState, Domain, Event, Session, Store};
use http_body_util::BodyExt;
use nalgebra::DVector;
use serde_json::{json, Value};
use tower::ServiceExt;

const SHARMA: &str = include_str!("../../core/tests/data/ciede2000_sharma.csv");

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn p(v: &[f64]) -> DesignPoint {
    DesignPoint::new(v.to_vec()).unwrap()
}

fn bump2() -> SynthGoodness {
    SynthGoodness::gaussian_bump(vec![0.3, 0.7], 0.25).unwrap()
}

fn median_of(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn bo_convergence() -> Outcome {
    let g = bump2();
    let truth = g.argmax();
    let workers = [WorkerModel { noise_sigma: 0.05, ..Default::default() }; 5];
    let start = Instant::now();
    let mut errs = Vec::new();
    for seed in 0..20 {
        let state = run_simulated(&g, DesignSpace::new(2).unwrap(), OptConfig::default(), &workers, seed)
            .map_err(|e| e.to_string())?;
        ensure!(state.history().len() == 15, "seed {seed} ran {} iterations", state.history().len());
        errs.push(state.best_design().unwrap().linf_distance(&truth));
    }
    let elapsed = start.elapsed();
    let med = median_of(&errs);
    let msg = format!("median l_inf error {med:.4} (<= 0.1), {:.1} s (< 60 s)", elapsed.as_secs_f64());
    ensure!(med <= 0.1 && elapsed < Duration::from_secs(60), "{msg}");
    Ok(msg)
}

fn photo_trial_convergence() -> Outcome {
    let truth = default_truth(Domain::Photo, 6);
    let workers = [WorkerModel::default(); 5];
    let base = Image::test_pattern(64, 48);
    let bests: Vec<Vec<DesignPoint>> = (0..3)
        .map(|seed| {
            let s = run_simulated(&truth, DesignSpace::new(6).unwrap(), OptConfig::default(), &workers, seed).unwrap();
            s.history().iter().map(|r| r.best.clone()).collect()
        })
        .collect();
    let mean_distance = |it: usize| {
        let renders: Vec<Image> =
            bests.iter().map(|b| enhance(&base, &EnhanceParams::from_point(&b[it - 1]).unwrap())).collect();
        let pairs = [(0, 1), (0, 2), (1, 2)];
        pairs.iter().map(|&(a, b)| mean_perceptual_distance(&renders[a], &renders[b]).unwrap()).sum::<f64>() / 3.0
    };
    let (first, last) = (mean_distance(1), mean_distance(15));
    let msg = format!("mean pairwise distance {first:.3} at iteration 1, {last:.3} at 15 (ratio {:.3} < 0.5)", last / first);
    ensure!(last < 0.5 * first, "{msg}");
    Ok(msg)
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            ranks[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    ranks
}

fn spearman_oracle(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn grid_argmax<G: Goodness>(g: &G) -> DesignPoint {
    let mut best = (f64::NEG_INFINITY, [0.0; 2]);
    for i in 0..=100 {
        for j in 0..=100 {
            let x = [i as f64 / 100.0, j as f64 / 100.0];
            let v = g.eval_raw(&x);
            if v > best.0 {
                best = (v, x);
            }
        }
    }
    p(&best.1)
}

fn field_quality() -> Outcome {
    let g = bump2();
    let want = grid_argmax(&g);
    let (mut worst_rho, mut worst_err, mut slowest) = (1.0f64, 0.0f64, Duration::ZERO);
    for seed in 0..10 {
        let start = Instant::now();
        let mut rng = Rng::new(seed);
        let points = uniform_sample(&DesignSpace::new(2).unwrap(), 100, &mut rng).unwrap();
        let tasks = make_pairwise_tasks(&points, 10, 50, &mut rng).unwrap();
        let comparisons: Vec<PairwiseComparison> = tasks
            .iter()
            .flat_map(|t| t.pairs.iter())
            .map(|&(i, j)| {
                let s = simulate_pairwise_response(&g, &points[i], &points[j], &WorkerModel::noiseless(), &mut rng);
                PairwiseComparison::new(i, j, s.unwrap()).unwrap()
            })
            .collect();
        ensure!(comparisons.len() == 500, "seed {seed}: {} comparisons", comparisons.len());
        let est = estimate_goodness_values(&points, &comparisons, &EstimationConfig::default()).unwrap();
        let field = fit_rbf(&points, est.values.as_slice(), default_kernel_width(2), DEFAULT_RIDGE).unwrap();
        let got = grid_argmax(&field);
        slowest = slowest.max(start.elapsed());
        let truth: Vec<f64> = points.iter().map(|x| g.eval(x).unwrap()).collect();
        worst_rho = worst_rho.min(spearman_oracle(est.values.as_slice(), &truth));
        worst_err = worst_err.max(got.linf_distance(&want));
    }
    let msg = format!(
        "10 seeds: min Spearman {worst_rho:.4} (>= 0.8), max argmax error {worst_err:.3} (<= 0.15), slowest {:.2} s (< 10 s)",
        slowest.as_secs_f64()
    );
    ensure!(worst_rho >= 0.8 && worst_err <= 0.15 && slowest < Duration::from_secs(10), "{msg}");
    Ok(msg)
}

fn rbf_exactness() -> Outcome {
    let mut rng = Rng::new(5);
    let grid: Vec<DesignPoint> = (0..25).map(|k| p(&[(k % 5) as f64 / 4.0, (k / 5) as f64 / 4.0])).collect();
    let scattered = uniform_sample(&DesignSpace::new(3).unwrap(), 25, &mut rng).unwrap();
    let mut worst = 0.0f64;
    for points in [grid, scattered] {
        let values: Vec<f64> = (0..25).map(|_| rng.uniform()).collect();
        let field = fit_rbf(&points, &values, default_kernel_width(points[0].dim()), 0.0).unwrap();
        for (x, y) in points.iter().zip(&values) {
            worst = worst.max((field.eval_raw(x.coords()) - y).abs());
        }
    }
    let msg = format!("max interpolation residual {worst:.2e} (<= 1e-6)");
    ensure!(worst <= 1e-6, "{msg}");
    Ok(msg)
}

fn phi_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

fn gp_suite() -> Outcome {
    // EI and variance on a 101^2 grid.
    let peak = p(&[0.35, 0.6]);
    let others = [[0.1, 0.1], [0.9, 0.2], [0.8, 0.9], [0.1, 0.9], [0.5, 0.5]];
    let pairs: Vec<_> = others.iter().map(|o| PreferencePair::new(peak.clone(), p(o)).unwrap()).collect();
    let amplitude = 1.0;
    let gp = fit_preference_gp(&pairs, &Kernel::isotropic(2, amplitude, 0.5), 0.1).unwrap();
    let (mut min_ei, mut var_lo, mut var_hi) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=100 {
        for j in 0..=100 {
            let x = p(&[i as f64 / 100.0, j as f64 / 100.0]);
            min_ei = min_ei.min(expected_improvement(&gp, &x).unwrap());
            let (_, var) = gp.predict(&x).unwrap();
            var_lo = var_lo.min(var);
            var_hi = var_hi.max(var);
        }
    }
    ensure!(min_ei >= 0.0, "EI reaches {min_ei}");
    ensure!(var_lo >= 0.0 && var_hi <= amplitude, "variance spans [{var_lo}, {var_hi}]");

    // MAP ordering on preferences generated by a linear score.
    let mut rng = Rng::new(21);
    let score = |x: &DesignPoint| x.coords().iter().enumerate().map(|(k, v)| (k + 1) as f64 * v).sum::<f64>();
    for round in 0..5 {
        let pts: Vec<DesignPoint> = (0..8).map(|_| p(&[rng.uniform(), rng.uniform(), rng.uniform()])).collect();
        let mut pairs = Vec::new();
        while pairs.len() < 12 {
            let (i, j) = (rng.index(8), rng.index(8));
            if i != j {
                let (w, l) = if score(&pts[i]) > score(&pts[j]) { (i, j) } else { (j, i) };
                pairs.push(PreferencePair::new(pts[w].clone(), pts[l].clone()).unwrap());
            }
        }
        let gp = fit_preference_gp(&pairs, &Kernel::isotropic(3, 1.0, 0.5), 0.1).unwrap();
        let f = gp.f_map();
        ensure!(gp.index_pairs().iter().all(|&(w, l)| f[w] > f[l]), "round {round}: MAP violates a preference");
    }

    // Log-posterior gradient against central differences.
    let pts: Vec<DesignPoint> = (0..6).map(|_| p(&[rng.uniform(), rng.uniform()])).collect();
    let post =
        PreferencePosterior::new(&pts, vec![(0, 1), (1, 2), (3, 2), (4, 5), (0, 5)], &Kernel::isotropic(2, 1.0, 0.5), 0.1)
            .unwrap();
    let mut worst_rel = 0.0f64;
    for _ in 0..5 {
        let f = DVector::from_iterator(6, (0..6).map(|_| rng.standard_normal()));
        let g = post.gradient(&f);
        for k in 0..6 {
            let h = 1e-6 * (1.0 + f[k].abs());
            let (mut up, mut dn) = (f.clone(), f.clone());
            up[k] += h;
            dn[k] -= h;
            let fd = (post.log_posterior(&up) - post.log_posterior(&dn)) / (2.0 * h);
            worst_rel = worst_rel.max((g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1.0));
        }
    }
    ensure!(worst_rel <= 1e-4, "gradient relative error {worst_rel:.2e}");

    // Two-point MAP against a refining grid search of the log posterior.
    let (x1, x2) = (0.2, 0.7);
    let gp = fit_preference_gp(&[PreferencePair::new(p(&[x1]), p(&[x2])).unwrap()], &Kernel::isotropic(1, 1.0, 1.0), 1.0)
        .unwrap();
    let k12 = (-0.5 * (x1 - x2) * (x1 - x2)).exp();
    let k11 = 1.0 + JITTER;
    let det = k11 * k11 - k12 * k12;
    let objective = |f1: f64, f2: f64| {
        -0.5 * (k11 * f1 * f1 - 2.0 * k12 * f1 * f2 + k11 * f2 * f2) / det
            + phi_cdf((f1 - f2) / std::f64::consts::SQRT_2).ln()
    };
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    let (mut lo1, mut lo2, mut span) = (-3.0, -3.0, 6.0);
    for _ in 0..4 {
        for i in 0..=300 {
            for j in 0..=300 {
                let (f1, f2) = (lo1 + span * i as f64 / 300.0, lo2 + span * j as f64 / 300.0);
                let v = objective(f1, f2);
                if v > best.0 {
                    best = (v, f1, f2);
                }
            }
        }
        span /= 20.0;
        lo1 = best.1 - span / 2.0;
        lo2 = best.2 - span / 2.0;
    }
    let f = gp.f_map();
    let map_err = (f[0] - best.1).abs().max((f[1] - best.2).abs());
    ensure!(map_err <= 1e-3, "two-point MAP off by {map_err:.2e}");

    Ok(format!(
        "min EI {min_ei:.2e} >= 0, variance in [{var_lo:.3}, {var_hi:.3}], MAP orders 5x12 pairs, gradient rel err {worst_rel:.1e}, 2-point MAP err {map_err:.1e}"
    ))
}

fn median_robustness() -> Outcome {
    const R: usize = 101;
    let g = bump2();
    let honest = WorkerModel { noise_sigma: 0.005, grid_resolution: R, ..Default::default() };
    let space = DesignSpace::new(2).unwrap();
    let mut within = 0;
    for trial in 0..1000u64 {
        let mut rng = Rng::new(trial);
        let slider = loop {
            let (a, b) = (space.sample(&mut rng), space.sample(&mut rng));
            if let Ok(s) = SliderSpace::new(a, b) {
                break s;
            }
        };
        let target = slider_grid_argmax(&g, &slider, R);
        let mut answers: Vec<f64> =
            (0..3).map(|_| simulate_slider_response(&g, &slider, &honest, &mut rng).unwrap()).collect();
        answers.extend((0..2).map(|_| rng.uniform()));
        let t = aggregate_responses(&answers).unwrap();
        if (t - target).abs() <= 1.5 / R as f64 {
            within += 1;
        }
    }
    let msg = format!("{within}/1000 trials within 1.5/R of the noise-free argmax (>= 950)");
    ensure!(within >= 950, "{msg}");
    Ok(msg)
}

fn app() -> Router {
    router(AppState::new(Store::in_memory(), Image::test_pattern(32, 24)))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, body).await;
    (status, if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() })
}

async fn create(app: &Router, body: Value) -> Result<String, String> {
    let (status, v) = call_json(app, "POST", "/sessions", Some(body)).await;
    ensure!(status == StatusCode::CREATED, "create returned {status}: {v}");
    Ok(v["id"].as_str().unwrap().to_string())
}

async fn configuration_exactness() -> Outcome {
    let app = app();
    let id = create(&app, json!({"mode": "optimize", "domain": "synthetic", "n": 2, "seed": 1})).await?;
    for it in 1..=15 {
        let (_, summary) = call_json(&app, "GET", &format!("/sessions/{id}"), None).await;
        ensure!(summary["open_tasks"] == 7, "iteration {it}: {} open tasks", summary["open_tasks"]);
        // Seven distinct slider tasks, then nothing for the same worker.
        let mut ids = HashSet::new();
        for _ in 0..7 {
            let (status, task) = call_json(&app, "GET", &format!("/sessions/{id}/task?worker=probe{it}"), None).await;
            ensure!(status == StatusCode::OK, "iteration {it}: task fetch returned {status}");
            ids.insert(task["task_id"].as_str().unwrap().to_string());
            let body = json!({"task_id": task["task_id"], "worker": format!("probe{it}"), "answer": {"t": 0.5}});
            call_json(&app, "POST", &format!("/sessions/{id}/responses"), Some(body)).await;
        }
        ensure!(ids.len() == 7, "iteration {it}: {} distinct tasks", ids.len());
        let (status, _) = call(&app, "GET", &format!("/sessions/{id}/task?worker=probe{it}"), None).await;
        ensure!(status == StatusCode::NO_CONTENT, "iteration {it}: eighth task fetch returned {status}");
        // All seven came from one worker; four more distinct workers reach the quorum.
        let (_, summary) = call_json(&app, "GET", &format!("/sessions/{id}"), None).await;
        ensure!(summary["iteration"] == it - 1, "iteration {it} advanced on one worker");
        for w in 1..5 {
            let worker = format!("w{it}-{w}");
            let (_, task) = call_json(&app, "GET", &format!("/sessions/{id}/task?worker={worker}"), None).await;
            let body = json!({"task_id": task["task_id"], "worker": worker, "answer": {"t": 0.5}});
            let (status, ack) = call_json(&app, "POST", &format!("/sessions/{id}/responses"), Some(body)).await;
            ensure!(status == StatusCode::OK, "iteration {it}: submit returned {status}: {ack}");
            ensure!(ack["advanced"] == (w == 4), "iteration {it}: advanced={} after {} distinct workers", ack["advanced"], w + 1);
        }
    }
    let (_, summary) = call_json(&app, "GET", &format!("/sessions/{id}"), None).await;
    ensure!(summary["status"] == "completed" && summary["iteration"] == 15, "final summary {summary}");
    ensure!(summary["trace"].as_array().unwrap().len() == 15, "trace length");

    let id = create(&app, json!({"mode": "estimate", "domain": "synthetic", "n": 2, "seed": 2})).await?;
    let mut tasks = 0;
    loop {
        let (status, task) = call_json(&app, "GET", &format!("/sessions/{id}/task?worker=w"), None).await;
        if status == StatusCode::NO_CONTENT {
            break;
        }
        let pairs = task["pairs"].as_array().unwrap();
        let unique: HashSet<String> = pairs
            .iter()
            .map(|pr| {
                let (l, r) = (pr["left"].to_string(), pr["right"].to_string());
                if l < r { format!("{l}|{r}") } else { format!("{r}|{l}") }
            })
            .collect();
        ensure!(pairs.len() == 10 && unique.len() == 10, "task {}: {} pairs, {} unique", task["task_id"], pairs.len(), unique.len());
        let body = json!({"task_id": task["task_id"], "worker": "w", "answer": {"likert": vec![3u8; 10]}});
        call_json(&app, "POST", &format!("/sessions/{id}/responses"), Some(body)).await;
        tasks += 1;
    }
    ensure!(tasks == 200, "{tasks} pairwise tasks");

    ensure!(SUGGESTION_SAMPLES == 2000 && SUGGESTION_COUNT == 9, "suggestion constants");
    let (status, default) = call_json(&app, "GET", &format!("/sessions/{id}/suggestions"), None).await;
    ensure!(status == StatusCode::OK, "suggestions returned {status}");
    let (_, explicit) = call_json(&app, "GET", &format!("/sessions/{id}/suggestions?samples=2000&k=9"), None).await;
    ensure!(default.as_array().map(Vec::len) == Some(9), "{} suggestions", default);
    ensure!(default == explicit, "default suggestions differ from samples=2000&k=9");

    Ok("7 tasks/iteration, advance at the 5th distinct worker, 15 iterations; 200 tasks x 10 unique pairs; suggestions 2000 -> 9".into())
}

fn within_iteration_shuffle(events: &[(usize, Event)], seed: u64) -> Vec<(usize, Event)> {
    let mut shuffled = events.to_vec();
    let mut rng = Rng::new(seed);
    for chunk in shuffled[1..].chunks_mut(5) {
        for i in (1..chunk.len()).rev() {
            chunk.swap(i, rng.index(i + 1));
        }
    }
    shuffled
}

async fn event_sourcing() -> Outcome {
    let app = app();
    let sessions = [
        json!({"mode": "optimize", "domain": "synthetic", "n": 2, "seed": 11}),
        json!({"mode": "optimize", "domain": "photo", "seed": 12}),
        json!({"mode": "estimate", "domain": "synthetic", "n": 2, "seed": 13, "config": {"samples": 60, "tasks": 30, "refit_every": 50}}),
    ];
    let mut permutations = 0;
    for body in sessions {
        let id = create(&app, body.clone()).await?;
        let (status, live) = call_json(&app, "POST", &format!("/sessions/{id}/simulate"), Some(json!({}))).await;
        ensure!(status == StatusCode::OK, "simulate returned {status}: {live}");
        let (_, live) = call_json(&app, "GET", &format!("/sessions/{id}"), None).await;
        let (_, log) = call(&app, "GET", &format!("/sessions/{id}/log"), None).await;
        let events = read_events(log.as_slice()).map_err(|e| e.to_string())?;
        let replayed = Session::replay(&events).map_err(|e| e.to_string())?;
        ensure!(serde_json::to_value(replayed.summary()).unwrap() == live, "{body}: replayed summary differs");
        let again = Session::replay(&events).unwrap();
        ensure!(again == replayed, "{body}: replay is not deterministic");

        if replayed.optimizer().is_some() {
            for seed in 0..10 {
                let shuffled = within_iteration_shuffle(&events, seed);
                let permuted = Session::replay(&shuffled).map_err(|e| e.to_string())?;
                ensure!(permuted.optimizer() == replayed.optimizer(), "{body}: permutation {seed} changed the optimizer");
                permutations += 1;
            }
        }
    }
    Ok(format!("3 simulated logs replay to the live state; {permutations} within-iteration permutations leave the optimizer unchanged"))
}

fn ciede2000_pairs() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for line in SHARMA.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let v: Vec<f64> = line.split(',').skip(1).map(|s| s.trim().parse().unwrap()).collect();
        let (a, b) = ([v[0], v[1], v[2]], [v[3], v[4], v[5]]);
        worst = worst.max((ciede2000(a, b) - v[6]).abs()).max((ciede2000(b, a) - v[6]).abs());
        count += 1;
    }
    let msg = format!("{count} reference pairs, max deviation {worst:.2e} (<= 1e-4)");
    ensure!(count == 34 && worst <= 1e-4, "{msg}");
    Ok(msg)
}

fn enhancement_identity() -> Outcome {
    let base = Image::test_pattern(48, 32);
    ensure!(enhance(&base, &EnhanceParams::from_slice(&[0.5; 6]).unwrap()) == base, "all-0.5 render differs from base");
    let mut rng = Rng::new(11);
    for k in 0..1000 {
        let v: Vec<f64> = (0..6).map(|_| rng.uniform()).collect();
        let out = enhance(&base, &EnhanceParams::from_slice(&v).unwrap());
        ensure!(out.pixels().iter().flatten().all(|c| (0.0..=1.0).contains(c)), "draw {k} leaves [0,1]: {v:?}");
    }
    Ok("all-0.5 is bit-exact; 1000 random draws stay in [0,1]".into())
}

fn run(name: &str, check: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(msg) => {
            println!("PASS  {name}: {msg} [{secs:.1} s]");
            true
        }
        Err(msg) => {
            println!("FAIL  {name}: {msg} [{secs:.1} s]");
            false
        }
    }
}

fn main() -> ExitCode {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let results = [
        run("line-search convergence on the 2-D bump", bo_convergence),
        run("photo trial convergence", photo_trial_convergence),
        run("preference-field quality", field_quality),
        run("RBF exactness", rbf_exactness),
        run("GP correctness", gp_suite),
        run("median robustness", median_robustness),
        run("configuration exactness", || rt.block_on(configuration_exactness())),
        run("CIEDE2000 reference pairs", ciede2000_pairs),
        run("enhancement identity and range", enhancement_identity),
        run("event-sourcing determinism", || rt.block_on(event_sourcing())),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
