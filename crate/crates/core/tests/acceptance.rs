//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};

use thermobg::adapt::{
    adapt, decide, epsilon_star_approx, epsilon_star_exact, match_component, spawn_component, spawn_variance,
    update_matched, weight_step,
};
use thermobg::engine::initialize_grid;
use thermobg::eval::{accumulate, metrics};
use thermobg::io::{encode_pgm, mask_to_frame, parse_pgm};
use thermobg::persist::{decode_grid, encode_grid};
use thermobg::segment::{frames_to_background, StandingObject};
use thermobg::synth::{
    gen_mixture_samples, gen_video, three_gaussian_specs, update_base_specs, update_new_spec, Event, Intensity, Rect,
    Region, Scenario,
};
use thermobg::variational::{m_step, Responsibilities};
use thermobg::{
    fit, AdaptationConfig, BitDepth, ConfusionCounts, EngineConfig, FitConfig, Frame, GaussianComponent, HistoryPool,
    MixtureModel, SegmentationConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fit_cfg(n: usize, k_max: usize, seed: u64) -> FitConfig {
    FitConfig {
        history_len: n,
        k_max,
        rng_seed: seed,
        ..FitConfig::default()
    }
}

/// 1. Three well-separated groups, 300 samples, k_max = 10, over 100 seeds.
fn model_selection() -> Outcome {
    let specs = three_gaussian_specs();
    let mut exact_three = 0;
    let mut means_ok = 0;
    let mut slowest = 0.0f64;
    for seed in 0..100 {
        let data = gen_mixture_samples(&specs, seed).unwrap();
        let start = Instant::now();
        let report = fit(&data, &fit_cfg(300, 10, seed)).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let comps = report.model.components();
        if comps.len() == 3 {
            exact_three += 1;
            let mut means: Vec<f64> = comps.iter().map(|c| c.mean).collect();
            means.sort_by(f64::total_cmp);
            if means
                .iter()
                .zip(&specs)
                .all(|(m, s)| (m - s.mean).abs() <= 0.5 * s.stddev)
            {
                means_ok += 1;
            }
        }
    }
    outcome(
        exact_three >= 95 && means_ok == exact_three && slowest < 1.0,
        format!("K=3 on {exact_three}/100 seeds, means within 0.5 sd on {means_ok}, slowest fit {slowest:.3}s"),
    )
}

/// Runs the two-group fit plus a stream of new samples near 21.
fn adaptation_run(seed: u64, exact: bool) -> (MixtureModel, MixtureModel) {
    let history = gen_mixture_samples(&update_base_specs(), seed).unwrap();
    let mut model = fit(&history, &fit_cfg(100, 50, seed)).unwrap().model;
    let cfg = if exact {
        AdaptationConfig::exact()
    } else {
        AdaptationConfig::default()
    };
    let mut pool = HistoryPool::from_samples(100, history.iter().copied());
    let stream = gen_mixture_samples(&[update_new_spec(50)], seed + 10_000).unwrap();
    let mut after25 = None;
    for (i, &x) in stream.iter().enumerate() {
        adapt(&mut model, x, &cfg, Some(&mut pool)).unwrap();
        if i == 24 {
            after25 = Some(model.clone());
        }
    }
    (after25.unwrap(), model)
}

fn near(m: &MixtureModel, lo: f64, hi: f64) -> Option<&GaussianComponent> {
    m.components().iter().find(|c| (lo..=hi).contains(&c.mean))
}

/// 2. Third component emerges after 25 samples from N(21, 1), both modes.
fn adaptation_experiment() -> Outcome {
    let mut failures = Vec::new();
    let seeds = 0..20u64;
    for exact in [false, true] {
        for seed in seeds.clone() {
            let (m25, m50) = adaptation_run(seed, exact);
            let three = near(&m25, 20.0, 22.0).is_some()
                && near(&m25, 16.0 - 3.0, 16.0 + 3.0).is_some()
                && near(&m25, 50.0 - 4.0, 50.0 + 4.0).is_some();
            let grown = near(&m50, 20.0, 22.0).is_some_and(|c| c.weight > 25.0 / 150.0 * 0.5);
            if !(three && grown) {
                failures.push(format!("{}:{seed}", if exact { "exact" } else { "approx" }));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} of 40 runs (20 seeds x 2 modes) failed {failures:?}", failures.len()),
    )
}

/// 3. Exact pool count versus CDF approximation on random instances.
fn mode_equivalence() -> Outcome {
    let n = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let gamma = Gamma::new(2.0, 1.0).unwrap();
    let mut agree = 0;
    let mut rel = Vec::with_capacity(1000);
    let mut off_boundary = 0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=3usize);
        let raw: Vec<f64> = (0..k).map(|_| gamma.sample(&mut rng)).collect();
        let total: f64 = raw.iter().sum();
        let mut mu = 0.0;
        let parts: Vec<(f64, f64, f64)> = raw
            .iter()
            .map(|w| {
                mu += rng.random_range(30.0..60.0);
                (w / total, mu, rng.random_range(1.5f64..6.0))
            })
            .collect();
        let comps = parts
            .iter()
            .map(|&(w, m, s)| GaussianComponent::new(w, m, s * s).unwrap())
            .collect();
        let model = MixtureModel::new(comps, n, 256).unwrap();

        // stratified pool from the same mixture
        let mut pool = HistoryPool::new(n);
        let mut placed = 0;
        for (j, &(w, m, s)) in parts.iter().enumerate() {
            let count = if j + 1 == parts.len() {
                n - placed
            } else {
                ((w * n as f64).round() as usize).min(n - placed)
            };
            placed += count;
            let d = Normal::new(m, s).unwrap();
            for _ in 0..count {
                pool.push(d.sample(&mut rng));
            }
        }
        let pick = rng.random::<f64>();
        let mut acc = 0.0;
        let src = parts
            .iter()
            .find(|p| {
                acc += p.0;
                pick < acc
            })
            .unwrap_or(parts.last().unwrap());
        let x = Normal::new(src.1, src.2).unwrap().sample(&mut rng);

        let c = match_component(&model, x).index;
        let cfg = AdaptationConfig::default();
        let exact = epsilon_star_exact(&pool, x, &cfg);
        let approx = epsilon_star_approx(&model, c, x, &cfg);
        let (p, q) = (exact.prob(), approx.prob());
        let r = if p.max(q) > 0.0 { (p - q).abs() / p.max(q) } else { 0.0 };
        rel.push(r);
        let (de, da) = (decide(&model, c, x, &exact), decide(&model, c, x, &approx));
        if de == da {
            agree += 1;
        } else {
            let dens = model.components()[c].pdf(x);
            let close = |v: f64| v > 0.0 && (0.8..=1.25).contains(&(dens / v));
            if !(close(p) || close(q)) {
                if std::env::var_os("ACCEPTANCE_DEBUG").is_some() {
                    let comp = model.components()[c];
                    eprintln!(
                        "x={x:.3} comp=({:.3},{:.3},{:.3}) exact=({}, {p:.3e}) approx=({}, {q:.3e}) dens={dens:.3e}",
                        comp.weight,
                        comp.mean,
                        comp.std_dev(),
                        exact.epsilon,
                        approx.epsilon
                    );
                }
                off_boundary += 1;
            }
        }
    }
    rel.sort_by(f64::total_cmp);
    let within = rel.iter().filter(|&&r| r <= 0.2).count();
    let p98 = rel[979];
    outcome(
        agree >= 980 && within >= 980 && off_boundary == 0,
        format!(
            "decide agrees on {agree}/1000, rel diff <= 0.2 on {within}/1000 (98th pct {p98:.3}, median {:.3}), \
             {off_boundary} disagreements away from the boundary",
            rel[499]
        ),
    )
}

/// 4. ELBO monotone, fast convergence, stochastic responsibilities.
fn em_sanity() -> Outcome {
    let specs = three_gaussian_specs();
    let mut worst_drop = 0.0f64;
    let mut steps = 0;
    let mut max_iters = 0;
    let mut unconverged = 0;
    let mut row_err = 0.0f64;
    for seed in 0..100 {
        let data = gen_mixture_samples(&specs, seed).unwrap();
        let cfg = FitConfig {
            track_elbo: true,
            ..fit_cfg(300, 10, seed)
        };
        let r = fit(&data, &cfg).unwrap();
        for w in r.elbo_trace.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
            steps += 1;
        }
        max_iters = max_iters.max(r.iterations);
        unconverged += usize::from(!r.converged);
        row_err = row_err.max(r.max_row_error);
    }
    outcome(
        worst_drop <= 1e-8 && steps >= 100 && max_iters <= 20 && unconverged == 0 && row_err <= 1e-9,
        format!(
            "largest ELBO decrease {worst_drop:.2e} over {steps} steps, most iterations {max_iters}, \
             unconverged {unconverged}, row error {row_err:.1e}"
        ),
    )
}

/// 5. Closed-form values of the update, spawn and count formulas.
fn closed_forms() -> Outcome {
    let mut m = MixtureModel::new(
        vec![
            GaussianComponent::new(0.5, 10.0, 1.0).unwrap(),
            GaussianComponent::new(0.5, 40.0, 1.0).unwrap(),
        ],
        100,
        256,
    )
    .unwrap();
    update_matched(&mut m, 0, 10.0);
    let c = m.components()[0];
    let e1 = (c.weight - 0.505)
        .abs()
        .max((c.variance - 50.0 / 51.0).abs())
        .max((c.mean - 10.0).abs());

    let mut s = MixtureModel::single(0.0, 1.0, 100, 256).unwrap();
    spawn_component(&mut s, 50.0, 2);
    let e2 = (s.components()[1].variance - 1.25)
        .abs()
        .max((spawn_variance(2) - 1.25).abs());

    let labels: Vec<usize> = (0..100).map(|i| usize::from(i >= 60)).collect();
    let data: Vec<f64> = (0..100).map(|i| if i < 60 { 10.0 } else { 50.0 }).collect();
    let priors = thermobg::variational::default_priors(&data).unwrap().priors;
    let post = m_step(&Responsibilities::one_hot(&labels, 2), &data, &priors);
    let e3 = (post.lambda[0] - 61.0).abs().max((post.lambda[1] - 41.0).abs());

    let worst = e1.max(e2).max(e3);
    outcome(
        worst <= 1e-12,
        format!("zero-innovation err {e1:.1e}, spawn variance err {e2:.1e}, lambda err {e3:.1e}"),
    )
}

/// 6. Iterated weight recurrence against its closed forms, t <= 1000.
fn weight_dynamics() -> Outcome {
    let mut worst = 0.0f64;
    for &n in &[10usize, 100, 1000] {
        let nf = n as f64;
        for &w0 in &[0.01, 0.3, 0.9] {
            let (mut up, mut down) = (w0, w0);
            for t in 1..=1000 {
                up = weight_step(up, true, nf);
                down = weight_step(down, false, nf);
                let k = (1.0 - 1.0 / nf).powi(t);
                worst = worst.max((up - (1.0 - (1.0 - w0) * k)).abs());
                worst = worst.max((down - w0 * k).abs());
            }
        }
    }
    outcome(worst <= 1e-10, format!("largest deviation {worst:.2e}"))
}

/// 7. Frames until a standing object becomes background, against p_bg.
fn standing_object() -> Outcome {
    let scenario = StandingObject {
        background: MixtureModel::single(20.0, 4.0, 100, 256).unwrap(),
        intensity: 50.0,
        epsilon: 2,
        hold_spread: true,
        horizon: 10_000,
    };
    let count = |p: f64| {
        let cfg = SegmentationConfig {
            p_bg: p,
            ..SegmentationConfig::default()
        };
        frames_to_background(&scenario, &cfg)
    };
    let grid = [0.55, 0.6, 0.75, 0.99];
    let counts: Vec<Option<usize>> = grid.iter().map(|&p| count(p)).collect();
    let finite = counts.iter().all(Option::is_some);
    let decreasing = counts
        .windows(2)
        .all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if a > b));
    let low = count(0.52);
    let low_ok = low.is_some_and(|c| (10..=100).contains(&c));
    outcome(
        finite && decreasing && low_ok,
        format!("p_bg 0.52 -> {low:?}; 0.55/0.6/0.75/0.99 -> {counts:?}"),
    )
}

fn video_scenario(seed: u64) -> Scenario {
    Scenario {
        width: 80,
        height: 60,
        frames: 140,
        seed,
        bit_depth: 8,
        background: Intensity {
            mean: 50.0,
            stddev: 2.0,
        },
        regions: vec![Region {
            rect: Rect::from([0, 0, 80, 12]),
            modes: vec![
                Intensity {
                    mean: 30.0,
                    stddev: 2.0,
                },
                Intensity {
                    mean: 70.0,
                    stddev: 2.0,
                },
            ],
        }],
        events: vec![Event {
            rect: Rect::from([2, 25, 20, 20]),
            start: 100,
            end: 130,
            mean: 200.0,
            stddev: 3.0,
            velocity: [2.0, 0.5],
        }],
    }
}

fn video_config(workers: usize) -> EngineConfig {
    EngineConfig {
        fit: fit_cfg(100, 50, 7),
        workers,
        ..EngineConfig::default()
    }
}

/// 8. Moving hot object over a bimodal background.
fn end_to_end() -> Outcome {
    let s = video_scenario(11);
    let video = gen_video(&s).unwrap();
    let frames = video.frames.frames();
    let (mut grid, _) = initialize_grid(&frames[..100], video_config(0)).unwrap();
    let region = s.regions[0].rect;
    let mut bimodal = 0;
    let mut region_pixels = 0;
    for y in region.y..region.y + region.height {
        for x in region.x..region.x + region.width {
            region_pixels += 1;
            bimodal += usize::from(grid.model(x, y).len() == 2);
        }
    }
    let mut worst_f1 = f64::INFINITY;
    let mut worst_frame = 0;
    for (t, frame) in frames.iter().enumerate().skip(100) {
        let mask = grid.process_frame(frame).unwrap();
        if (100..130).contains(&t) {
            let m = metrics(&accumulate(&mask, &video.ground_truth[t]).unwrap());
            if m.f1 < worst_f1 {
                worst_f1 = m.f1;
                worst_frame = t;
            }
        }
    }
    outcome(
        worst_f1 >= 0.9 && bimodal == region_pixels,
        format!(
            "worst per-frame F1 {worst_f1:.4} (frame {worst_frame}); K=2 on {bimodal}/{region_pixels} bimodal pixels"
        ),
    )
}

fn run_bytes(workers: usize, exact: bool) -> (Vec<Vec<u8>>, String) {
    let s = Scenario {
        width: 32,
        height: 24,
        frames: 130,
        ..video_scenario(5)
    };
    let mut s = s;
    s.regions[0].rect = Rect::from([0, 0, 32, 6]);
    s.events[0].rect = Rect::from([0, 8, 12, 12]);
    s.events[0].velocity = [1.0, 0.0];
    let video = gen_video(&s).unwrap();
    let frames = video.frames.frames();
    let mut cfg = video_config(workers);
    if exact {
        cfg.adapt = AdaptationConfig::exact();
    }
    let (mut grid, _) = initialize_grid(&frames[..100], cfg).unwrap();
    let masks = frames[100..]
        .iter()
        .map(|f| encode_pgm(&mask_to_frame(&grid.process_frame(f).unwrap())))
        .collect();
    (masks, encode_grid(&grid))
}

/// 9. Byte-identical output across worker counts and repeated runs.
fn determinism() -> Outcome {
    let mut mismatches = Vec::new();
    for exact in [false, true] {
        let reference = run_bytes(1, exact);
        for workers in [1, 2, 8] {
            if run_bytes(workers, exact) != reference {
                mismatches.push(format!("{}:{workers}", if exact { "exact" } else { "approx" }));
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("masks and models compared for workers 1/2/8 in both modes, mismatches {mismatches:?}"),
    )
}

/// 10. Model, image and metric round-trips.
fn round_trips() -> Outcome {
    let s = video_scenario(3);
    let video = gen_video(&Scenario { frames: 110, ..s }).unwrap();
    let frames = video.frames.frames();
    let (mut grid, _) = initialize_grid(&frames[..100], video_config(0)).unwrap();
    for f in &frames[100..] {
        grid.process_frame(f).unwrap();
    }
    let text = encode_grid(&grid);
    let back = decode_grid(&text, video_config(0)).unwrap();
    let vimm = back == grid && encode_grid(&back) == text;

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut pgm = true;
    for _ in 0..200 {
        let depth = if rng.random() {
            BitDepth::Sixteen
        } else {
            BitDepth::Eight
        };
        let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
        let data = (0..w * h).map(|_| rng.random_range(0..depth.levels()) as u16).collect();
        let f = Frame::new(w, h, depth, data).unwrap();
        let bytes = encode_pgm(&f);
        let g = parse_pgm(&bytes).unwrap();
        pgm &= g == f && encode_pgm(&g) == bytes;
    }

    let mut identities = true;
    for _ in 0..10_000 {
        let c = ConfusionCounts {
            tp: rng.random_range(0..500),
            fp: rng.random_range(0..500),
            tn: rng.random_range(0..500),
            fn_: rng.random_range(0..500),
        };
        let m = metrics(&c);
        if c.fp + c.tn > 0 {
            identities &= (m.specificity + m.fpr - 1.0).abs() < 1e-12;
        }
        if c.tp + c.fn_ > 0 {
            identities &= (m.recall + m.fnr - 1.0).abs() < 1e-12;
        }
    }
    outcome(
        vimm && pgm && identities,
        format!("VIMM1 identity {vimm}, PGM identity {pgm}, metric identities {identities}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("model-selection recovery", model_selection),
        ("adaptation experiment", adaptation_experiment),
        ("exact vs memory-efficient equivalence", mode_equivalence),
        ("EM sanity", em_sanity),
        ("closed-form unit checks", closed_forms),
        ("weight-dynamics closed forms", weight_dynamics),
        ("standing-object latency", standing_object),
        ("end-to-end synthetic video", end_to_end),
        ("determinism and parallel invariance", determinism),
        ("round-trips", round_trips),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {verdict} {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
