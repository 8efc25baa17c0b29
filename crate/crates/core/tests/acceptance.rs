//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use beliefnav::grounder::{
    dummy_update, directional_update_with_angle, ground_chain, precise_update,
    precise_update_with_heads,
};
use beliefnav::nnet::finite_diff_check;
use beliefnav::trainer::{
    benchmark_composite, loss_term_gradient, loss_term_value, prepare_sample, LossTerm,
    PreparedSample, TrainOutcome,
};
use beliefnav::{
    build_adjacency, gen_composite, generate_dataset, office_map, train, AreaMap, BeliefGrid,
    GenConfig, Hyperparams, LanguageConfig, Lexicon, ModelParams, PlanError, TrainConfig,
    UpdateType,
};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0;
const TIME_BUDGET: Duration = Duration::from_secs(15 * 60);

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Trained {
    outcome: TrainOutcome,
    elapsed: Duration,
}

fn train_office(map: &AreaMap) -> Result<Trained, String> {
    let t0 = Instant::now();
    let lang = LanguageConfig::default();
    let data = generate_dataset(map, &lang.dictionary, &GenConfig { seed: SEED, ..GenConfig::default() })
        .map_err(|e| e.to_string())?;
    if data.samples.len() != 3200 {
        return Err(format!("expected 3200 samples, generated {}", data.samples.len()));
    }
    let lexicon = Lexicon::build(map, &lang, 128, SEED);
    let config = TrainConfig { seed: SEED, ..TrainConfig::default() };
    let outcome = train(&data.samples, map, lexicon, &config).map_err(|e| e.to_string())?;
    Ok(Trained { outcome, elapsed: t0.elapsed() })
}

fn precise_area(t: &Trained) -> Verdict {
    let acc = t.outcome.report.area_accuracy.unwrap_or(0.0);
    check(
        acc >= 0.85 && t.elapsed <= TIME_BUDGET,
        format!(
            "top-1 {:.2}% (need >= 85%), gen+train+eval {:.1?} (budget 15 min), holdout {}",
            100.0 * acc,
            t.elapsed,
            t.outcome.report.samples
        ),
    )
}

fn type_accuracy(t: &Trained) -> Verdict {
    let acc = t.outcome.report.type_accuracy;
    check(acc >= 0.95, format!("{:.2}% (need >= 95%)", 100.0 * acc))
}

fn direction_accuracy(t: &Trained) -> Verdict {
    let acc = t.outcome.report.direction_accuracy.unwrap_or(0.0);
    check(acc >= 0.90, format!("{:.2}% within pi/8 (need >= 90%)", 100.0 * acc))
}

fn supervises(term: LossTerm, s: &PreparedSample) -> bool {
    match term {
        LossTerm::Kind => true,
        LossTerm::Alpha => {
            s.update == UpdateType::Directional || (s.update == UpdateType::Precise && s.kappa == Some(true))
        }
        LossTerm::Kappa => s.update == UpdateType::Precise,
        LossTerm::Area => s.area.is_some(),
    }
}

fn gradient_checks(map: &AreaMap) -> Verdict {
    let data = generate_dataset(
        map,
        &LanguageConfig::default().dictionary,
        &GenConfig { k: 1, seed: 3, ..GenConfig::default() },
    )
    .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for seed in 0..10u64 {
        let lex = Lexicon::build(map, &LanguageConfig::default(), 64, seed);
        let params = ModelParams::new(lex, Hyperparams::default(), seed).map_err(|e| e.to_string())?;
        let prepared: Vec<PreparedSample> = data
            .samples
            .iter()
            .filter_map(|s| prepare_sample(s, map, &params.lexicon, &params.hyper).ok())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for term in LossTerm::ALL {
            let pool: Vec<&PreparedSample> = prepared.iter().filter(|s| supervises(term, s)).collect();
            let sample = pool[rng.random_range(0..pool.len())];
            let Ok(Some((_, grads))) = loss_term_gradient(&params, map, sample, term) else {
                return Err(format!("seed {seed}: {term:?} produced no gradient"));
            };
            let report = finite_diff_check(
                |store| {
                    loss_term_value(&params, store, map, sample, term)
                        .ok()
                        .flatten()
                        .unwrap_or(f64::NAN)
                },
                &params.store,
                &grads,
                1e-6,
            );
            worst = worst.max(report.max_relative_error);
            checks += 1;
        }
    }
    check(
        worst < 1e-3,
        format!("{checks} checks over 10 seeds x 4 losses, max relative error {worst:.2e} (need < 1e-3)"),
    )
}

fn fixture_oracle() -> Verdict {
    let hyper = Hyperparams::default();
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let fixtures = load_fixtures();
    for (name, fx) in &fixtures {
        let map = AreaMap::from_document(fx.map.clone()).map_err(|e| format!("{name}: {e}"))?;
        let lex = Lexicon::build(&map, &LanguageConfig::default(), 64, 5);
        for case in &fx.cases {
            let b = prior_grid(&map, &case.prior, fx.outside_mass);
            let u = lex.modifier_from_text(&case.modifier);
            let (_, detail) = precise_update_with_heads(&u, &b, &map, &lex, &hyper, case.alpha, case.kappa, case.beta)
                .map_err(|e| format!("{name}: {e}"))?;
            let oracle = precise_oracle(&map, &b, &case.modifier, case.alpha, case.kappa, case.beta, hyper.gamma_floor);
            for (a, o) in detail.weights.iter().zip(&oracle.weights) {
                worst = worst.max((a - o).abs());
            }
            cases += 1;
        }
    }
    check(
        worst < 1e-9 && fixtures.len() >= 4,
        format!("{} maps, {cases} cases, max |w - oracle| {worst:.2e} (need < 1e-9)", fixtures.len()),
    )
}

fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize) -> BeliefGrid {
    let mass: Vec<f64> = (0..w * h)
        .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() })
        .collect();
    BeliefGrid::from_mass(w, h, mass).expect("nonzero mass")
}

const PHRASES: [&str; 8] = [
    "the printer", "near", "of", "the east printer", "phone room", "the north", "cafe kitchen", "to",
];

fn invariant_suite() -> Verdict {
    let fixtures = load_fixtures();
    let quad = fixtures.iter().find(|(n, _)| n == "four_quadrants").ok_or("missing fixture")?;
    let map = AreaMap::from_document(quad.1.map.clone()).map_err(|e| e.to_string())?;
    let (w, h) = (map.grid().width, map.grid().height);
    let hyper = Hyperparams::default();
    let lex = Lexicon::build(&map, &LanguageConfig::default(), 64, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut failures: Vec<String> = Vec::new();
    let mut runs = 0;
    for trial in 0..200 {
        runs += 1;
        let b = random_grid(&mut rng, w, h);

        if dummy_update(&b).cells() != b.cells() {
            failures.push(format!("dummy identity, trial {trial}"));
        }

        let area = rng.random_range(0..map.area_count());
        let alpha = rng.random_range(-PI..PI);
        let anchor = map.uniform_over_area_index(area).map_err(|e| e.to_string())?;
        if let Ok(post) = directional_update_with_angle(&map, &anchor, alpha, &hyper) {
            let c = map.areas()[area].centroid();
            let leak = post.cells().iter().enumerate().any(|(i, &m)| {
                let (x, y) = cell_center(&map, i);
                (x - c.x) * alpha.cos() + (y - c.y) * alpha.sin() <= 0.0 && m != 0.0
            });
            if leak || (post.sum() - 1.0).abs() > 1e-6 {
                failures.push(format!("directional mask, trial {trial}"));
            }
        }

        let u = lex.modifier_from_text(PHRASES[trial % PHRASES.len()]);
        let beta = rng.random_range(0.01..20.0);
        if let Ok((post, d)) = precise_update_with_heads(&u, &b, &map, &lex, &hyper, alpha, 0.0, beta) {
            let base: Vec<f64> = d.attention.weights.iter().zip(&d.prior).map(|(a, p)| a * p).collect();
            let z: f64 = base.iter().sum();
            if d.weights.iter().zip(&base).any(|(x, y)| (x - y / z).abs() > 1e-12) {
                failures.push(format!("kappa=0 ranking, trial {trial}"));
            }
            if (post.sum() - 1.0).abs() > 1e-6 {
                failures.push(format!("precise normalization, trial {trial}"));
            }
            let scale = 10f64.powf(rng.random_range(-6.0..6.0));
            let scaled = BeliefGrid::from_mass(w, h, b.cells().iter().map(|c| c * scale).collect())
                .map_err(|e| e.to_string())?;
            let kappa = rng.random::<f64>();
            let a = precise_update_with_heads(&u, &b, &map, &lex, &hyper, alpha, kappa, beta);
            let s = precise_update_with_heads(&u, &scaled, &map, &lex, &hyper, alpha, kappa, beta);
            if let (Ok((_, a)), Ok((_, s))) = (a, s) {
                if a.weights.iter().zip(&s.weights).any(|(x, y)| (x - y).abs() > 1e-12) {
                    failures.push(format!("prior scale, trial {trial}"));
                }
            }
        }

        let params = ModelParams::new(lex.clone(), hyper.clone(), trial as u64 % 8).map_err(|e| e.to_string())?;
        let u1 = params.lexicon.modifier_from_text(PHRASES[rng.random_range(0..PHRASES.len())]);
        let u2 = params.lexicon.modifier_from_text(PHRASES[rng.random_range(0..PHRASES.len())]);
        let whole = ground_chain(&[u1.clone(), u2.clone()], map.dummy_prior(), &map, &params);
        let stepwise = ground_chain(&[u1], map.dummy_prior(), &map, &params).and_then(|t| {
            let b1 = t.final_belief().expect("one step").clone();
            ground_chain(&[u2], b1, &map, &params)
        });
        match (whole, stepwise) {
            (Ok(x), Ok(y)) => {
                if x.final_belief().map(BeliefGrid::cells) != y.final_belief().map(BeliefGrid::cells) {
                    failures.push(format!("chain composition, trial {trial}"));
                }
                if x.steps.iter().any(|s| (s.posterior.sum() - 1.0).abs() > 1e-6) {
                    failures.push(format!("chain normalization, trial {trial}"));
                }
            }
            (Err(_), Err(_)) => {}
            _ => failures.push(format!("chain composition outcome, trial {trial}")),
        }
        if precise_update(&params.lexicon.modifier_from_text("the printer"), &b, &map, &params)
            .map(|(p, _)| (p.sum() - 1.0).abs() > 1e-6)
            .unwrap_or(false)
        {
            failures.push(format!("model precise normalization, trial {trial}"));
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{runs} randomized trials x 6 properties, all hold")
        } else {
            format!("{} violations, first: {}", failures.len(), failures[0])
        },
    )
}

fn composite(map: &AreaMap, t: &Trained) -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for (steps, top1_min, top5_min) in [(1, 0.70, 0.90), (3, 0.70, 0.90), (5, 0.60, 0.85)] {
        let queries = gen_composite(map, 11, 100, steps, 1.0).map_err(|e| e.to_string())?;
        let report = benchmark_composite(&queries, map, &t.outcome.params);
        let row = report.any().ok_or("empty benchmark")?;
        let pass = queries.len() == 100 && row.top1 >= top1_min && row.top5 >= top5_min;
        ok &= pass;
        lines.push(format!(
            "steps {steps}: top1 {:.0}% top5 {:.0}% (need {:.0}/{:.0})",
            100.0 * row.top1,
            100.0 * row.top5,
            100.0 * top1_min,
            100.0 * top5_min
        ));
    }
    lines.push("human-query reference any-row 44.31% / 71.26%".into());
    check(ok, lines.join("; "))
}

fn planner(map: &AreaMap) -> Verdict {
    let tol = map.grid().resolution;
    let graph = build_adjacency(map, tol);
    let ids = graph.nodes().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut valid, mut unreachable) = (0, 0);
    for _ in 0..1000 {
        let s = &ids[rng.random_range(0..ids.len())];
        let g = &ids[rng.random_range(0..ids.len())];
        match graph.dfs_plan(s, g) {
            Ok(plan) => {
                let distinct: std::collections::BTreeSet<&String> = plan.iter().collect();
                let adjacent = plan.windows(2).all(|w| {
                    let a = vertices(&map.area(&w[0]).expect("known").polygon);
                    let b = vertices(&map.area(&w[1]).expect("known").polygon);
                    sampled_shared_length(&a, &b, tol, 2000) > tol * 1.01
                });
                if plan.first() == Some(s) && plan.last() == Some(g) && distinct.len() == plan.len() && adjacent {
                    valid += 1;
                } else {
                    return Err(format!("invalid plan {s} -> {g}: {plan:?}"));
                }
            }
            Err(PlanError::Unreachable { .. }) => unreachable += 1,
            Err(e) => return Err(format!("{s} -> {g}: {e}")),
        }
    }
    check(
        valid + unreachable == 1000,
        format!("{valid} valid plans, {unreachable} clean unreachable errors"),
    )
}

fn main() -> ExitCode {
    let map = office_map();
    let started = Instant::now();
    let trained = train_office(&map);
    let with_model = |f: fn(&Trained) -> Verdict| -> Verdict {
        trained.as_ref().map_err(|e| format!("training failed: {e}")).and_then(f)
    };
    let results: Vec<(&str, Verdict)> = vec![
        ("precise-area grounding", with_model(precise_area)),
        ("update-type classification", with_model(type_accuracy)),
        ("direction prediction", with_model(direction_accuracy)),
        ("loss gradients vs finite differences", gradient_checks(&map)),
        ("precise update vs brute-force oracle", fixture_oracle()),
        ("invariant suite", invariant_suite()),
        (
            "composite queries",
            trained.as_ref().map_err(|e| format!("training failed: {e}")).and_then(|t| composite(&map, t)),
        ),
        ("planner on 1000 random pairs", planner(&map)),
    ];
    let mut failed = 0;
    for (name, verdict) in &results {
        match verdict {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed in {:.1?}", results.len() - failed, results.len(), started.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
