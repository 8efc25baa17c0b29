mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use beliefnav::datagen::wrap_angle;
use beliefnav::grounder::HeadOutputs;
use beliefnav::nnet::finite_diff_check;
use beliefnav::trainer::{
    benchmark_with, loss_alpha, loss_alpha_training, loss_term_gradient, loss_term_value,
    prepare_sample, score_predictions, split_indices, LossTerm, PreparedSample, ALPHA_MARGIN,
};
use beliefnav::{
    generate_dataset, office_map, train, AreaMap, CompositeQuery, GenConfig, Hyperparams,
    LanguageConfig, Lexicon, ModelFile, ModelParams, TrainConfig, TrainingSample, UpdateType,
};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params_for(map: &AreaMap, seed: u64) -> ModelParams {
    let lex = Lexicon::build(map, &LanguageConfig::default(), 64, seed);
    ModelParams::new(lex, Hyperparams::default(), seed).unwrap()
}

fn applies(term: LossTerm, s: &PreparedSample) -> bool {
    match term {
        LossTerm::Kind => true,
        LossTerm::Alpha => match s.update {
            UpdateType::Directional => true,
            UpdateType::Precise => s.kappa == Some(true),
            _ => false,
        },
        LossTerm::Kappa => s.update == UpdateType::Precise,
        LossTerm::Area => s.area.is_some(),
    }
}

#[test]
fn every_loss_passes_finite_differences_on_ten_seeds() {
    let map = office_map();
    let data = generate_dataset(
        &map,
        &LanguageConfig::default().dictionary,
        &GenConfig { k: 1, seed: 3, ..GenConfig::default() },
    )
    .unwrap();
    for seed in 0..10u64 {
        let params = params_for(&map, seed);
        let prepared: Vec<PreparedSample> = data
            .samples
            .iter()
            .map(|s| prepare_sample(s, &map, &params.lexicon, &params.hyper).unwrap())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for term in LossTerm::ALL {
            let pool: Vec<&PreparedSample> = prepared.iter().filter(|s| applies(term, s)).collect();
            let sample = pool[rng.random_range(0..pool.len())];
            let (value, grads) = loss_term_gradient(&params, &map, sample, term).unwrap().unwrap();
            assert!(value.is_finite() && value >= 0.0);
            let check = finite_diff_check(
                |store| loss_term_value(&params, store, &map, sample, term).unwrap().unwrap(),
                &params.store,
                &grads,
                1e-6,
            );
            assert!(
                check.max_relative_error < 1e-3,
                "seed {seed} {term:?} on {:?}: {check:?}",
                sample.modifier.words().collect::<Vec<_>>()
            );
        }
    }
}

fn zero_params(map: &AreaMap) -> ModelParams {
    let mut params = params_for(map, 0);
    for p in params.store.params_mut() {
        p.value.iter_mut().for_each(|v| *v = 0.0);
    }
    params
}

fn set_bias(params: &mut ModelParams, name: &str, value: f64) {
    let k = params.store.params().iter().position(|p| p.name == name).unwrap();
    params.store.params_mut()[k].value = vec![value];
}

fn precise_sample(params: &ModelParams, text: &str, target: usize, base: Vec<f64>, kappa: bool) -> PreparedSample {
    PreparedSample {
        id: 0,
        modifier: params.lexicon.modifier_from_text(text),
        update: UpdateType::Precise,
        alpha: None,
        kappa: Some(kappa),
        area: Some((target, base)),
    }
}

#[test]
fn neutral_model_loss_values() {
    let map = office_map();
    let params = zero_params(&map);
    let s = precise_sample(&params, "the printer", 0, vec![1.0 / 80.0; 80], true);
    let value = |term| loss_term_value(&params, &params.store, &map, &s, term).unwrap().unwrap();
    assert!((value(LossTerm::Kind) - 4f64.ln()).abs() < 1e-12);
    assert!((value(LossTerm::Kappa) - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn area_loss_values() {
    let map = office_map();
    let mut params = zero_params(&map);
    // κ → 0 collapses γ to the floor, leaving the area weights at the base vector.
    set_bias(&mut params, "kappa_head.bias", -40.0);
    let uniform = precise_sample(&params, "the printer", 7, vec![1.0 / 80.0; 80], false);
    let v = loss_term_value(&params, &params.store, &map, &uniform, LossTerm::Area).unwrap().unwrap();
    assert!((v - 80f64.ln()).abs() < 1e-9, "{v}");

    let fx = load_fixtures().into_iter().find(|(n, _)| n == "two_rooms").unwrap().1;
    let toy = AreaMap::from_document(fx.map).unwrap();
    let mut params = zero_params(&toy);
    set_bias(&mut params, "kappa_head.bias", -40.0);
    let s = precise_sample(&params, "room", 0, vec![0.75 * 0.4, 0.25 * 0.6], false);
    let v = loss_term_value(&params, &params.store, &toy, &s, LossTerm::Area).unwrap().unwrap();
    assert!((v + (2.0f64 / 3.0).ln()).abs() < 1e-9, "{v}");

    let certain = precise_sample(&params, "room", 0, vec![1.0, 0.0], false);
    let v = loss_term_value(&params, &params.store, &toy, &certain, LossTerm::Area).unwrap().unwrap();
    assert!(v.abs() < 1e-12);
}

proptest! {
    #[test]
    fn alpha_loss_is_wrap_symmetric(a in -PI..PI, b in -PI..PI, k in -3i32..3) {
        let l = loss_alpha(a, b);
        prop_assert!(l >= 0.0);
        prop_assert!((l - loss_alpha(b, a)).abs() < 1e-12);
        let shifted = wrap_angle(a + 2.0 * PI * k as f64);
        prop_assert!((l - loss_alpha(shifted, b)).abs() < 1e-9);
        prop_assert!((l - loss_alpha(a, wrap_angle(b + 2.0 * PI * k as f64))).abs() < 1e-9);
    }

    #[test]
    fn alpha_loss_vanishes_inside_the_margin(a in -PI..PI, d in -ALPHA_MARGIN..ALPHA_MARGIN) {
        prop_assert_eq!(loss_alpha(a, wrap_angle(a + d)), 0.0);
    }

    #[test]
    fn training_form_agrees_within_half_a_turn(a in -PI..PI, b in -PI..PI) {
        let train = loss_alpha_training(a, b);
        if (a - b).abs() <= PI {
            prop_assert!((train - loss_alpha(a, b)).abs() < 1e-12);
        }
        prop_assert!(train >= loss_alpha(a, b) - 1e-12);
    }

    #[test]
    fn split_is_a_partition(n in 2usize..400, holdout in 0.01f64..0.99, seed in 0u64..1000) {
        let (train, hold) = split_indices(n, holdout, seed);
        let mut all: Vec<usize> = train.iter().chain(&hold).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(!train.is_empty() && !hold.is_empty());
        prop_assert_eq!(split_indices(n, holdout, seed), (train, hold));
    }
}

fn stub_heads(update: UpdateType, alpha: f64, kappa: f64) -> HeadOutputs {
    let mut type_probs = vec![0.0; 4];
    type_probs[update.index()] = 1.0;
    HeadOutputs { type_probs, alpha, kappa, beta: 1.0 }
}

#[test]
fn perfect_stub_scores_one_everywhere() {
    let fx = load_fixtures().into_iter().find(|(n, _)| n == "two_rooms").unwrap().1;
    let map = AreaMap::from_document(fx.map).unwrap();
    let lex = Lexicon::build(&map, &LanguageConfig::default(), 64, 0);
    let prior = Arc::new(prior_grid(&map, &[0.5, 0.5], 0.0));
    let base = |update, modifier: &str| TrainingSample {
        id: 0,
        modifier: modifier.into(),
        update,
        prior: None,
        posterior: None,
        alpha: None,
        kappa: None,
        target: None,
        competitor: None,
        key_area: None,
    };
    let samples = vec![
        base(UpdateType::Dummy, "of"),
        base(UpdateType::Proximity, "near"),
        TrainingSample { alpha: Some(2.0), ..base(UpdateType::Directional, "north west") },
        TrainingSample {
            kappa: Some(false),
            target: Some("1".into()),
            prior: Some(prior.clone()),
            ..base(UpdateType::Precise, "meeting room")
        },
        TrainingSample {
            kappa: Some(true),
            alpha: Some(0.0),
            target: Some("2".into()),
            prior: Some(prior),
            ..base(UpdateType::Precise, "east room")
        },
    ];
    let predictions: Vec<HeadOutputs> = samples
        .iter()
        .map(|s| {
            let k = if s.kappa == Some(true) { 1.0 } else { 0.0 };
            stub_heads(s.update, s.alpha.unwrap_or(0.0), k)
        })
        .collect();
    let r = score_predictions(&samples, &predictions, &map, &lex, &Hyperparams::default());
    assert_eq!(r.type_accuracy, 1.0);
    assert_eq!(r.area_accuracy, Some(1.0));
    assert_eq!(r.direction_accuracy, Some(1.0));
    assert_eq!(r.kappa_accuracy, Some(1.0));

    let r = score_predictions(&samples[..3], &predictions[..3], &map, &lex, &Hyperparams::default());
    assert_eq!(r.area_accuracy, None);
    assert_eq!(r.kappa_accuracy, None);
}

#[test]
fn all_gold_stub_benchmark_is_perfect() {
    let queries: Vec<CompositeQuery> = (0..6)
        .map(|i| CompositeQuery {
            instruction: format!("go to room {i}"),
            goal: i.to_string(),
            steps: [1, 3, 5][i % 3],
        })
        .collect();
    let report = benchmark_with(&queries, |q| (q.steps, Ok(vec![q.goal.clone()])));
    for row in &report.rows {
        assert_eq!((row.top1, row.top5), (1.0, 1.0));
    }
    assert_eq!(report.any().unwrap().queries, 6);
    assert!(report.failures.is_empty());
}

#[test]
fn short_training_run_reduces_loss_and_round_trips() {
    let map = office_map();
    let lang = LanguageConfig::default();
    let data = generate_dataset(&map, &lang.dictionary, &GenConfig { k: 2, seed: 9, ..GenConfig::default() }).unwrap();
    let config = TrainConfig { epochs: 4, seed: 2, ..TrainConfig::default() };
    let out = train(&data.samples, &map, Lexicon::build(&map, &lang, 128, 2), &config).unwrap();
    assert!(out.epoch_losses.last().unwrap() < out.epoch_losses.first().unwrap());
    let again = train(&data.samples, &map, Lexicon::build(&map, &lang, 128, 2), &config).unwrap();
    assert_eq!(out.params.store, again.params.store);

    let file = ModelFile::new(out.params.clone(), config.clone());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    file.save(&path).unwrap();
    let loaded = ModelFile::load(&path).unwrap();
    assert_eq!(loaded.params.store, out.params.store);
    assert_eq!(loaded.fingerprint, config.fingerprint());
    let u = loaded.params.lexicon.modifier_from_text("the north");
    assert_eq!(
        loaded.params.predict_direction(&u).unwrap(),
        out.params.predict_direction(&u).unwrap()
    );

    let mut tampered: serde_json::Value = serde_json::from_str(&file.to_json()).unwrap();
    tampered["fingerprint"] = serde_json::json!("0000");
    assert!(ModelFile::from_json(&tampered.to_string()).is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        TrainConfig { holdout: 0.0, ..TrainConfig::default() },
        TrainConfig { holdout: 1.0, ..TrainConfig::default() },
        TrainConfig { epochs: 0, ..TrainConfig::default() },
        TrainConfig { final_lr_fraction: 0.0, ..TrainConfig::default() },
        TrainConfig { learning_rate: -1.0, ..TrainConfig::default() },
    ];
    for c in bad {
        assert!(c.validate().is_err(), "{c:?}");
    }
    let c = TrainConfig::default();
    assert_eq!(c.learning_rate_at(0, 100), c.learning_rate);
    assert!((c.learning_rate_at(100, 100) - c.learning_rate * c.final_lr_fraction).abs() < 1e-15);
}
