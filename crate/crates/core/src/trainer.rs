//! Supervised losses, the training loop, evaluation metrics, the composite
//! benchmark, and model files.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::datagen::{wrap_angle, CompositeQuery, TrainingSample};
use crate::grounder::{
    attention_weights, ground, precise_update_with_heads, precise_weights_on_tape, top_k_areas,
    HeadOutputs, Hyperparams, ModelParams, UpdateError, UpdateType,
};
use crate::language::{Lexicon, Modifier};
use crate::map::{argmax, AreaMap};
use crate::nnet::{AdamState, Gradients, NnetError, ParamStore, Tape, Var};

/// Upper bound on the area loss when the target area receives (almost) no weight.
pub const AREA_LOSS_CAP: f64 = 50.0;

/// Dead zone of the direction loss.
pub const ALPHA_MARGIN: f64 = PI / 8.0;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("holdout fraction must lie in (0, 1), got {0}")]
    Holdout(f64),
    #[error("epochs must be at least 1")]
    Epochs,
    #[error("learning rate {0} and final fraction {1} must be positive, fraction at most 1")]
    LearningRate(f64, f64),
    #[error("sample {id}: {message}")]
    Sample { id: usize, message: String },
    #[error("non-finite loss on sample {0}")]
    NonFiniteLoss(usize),
    #[error(transparent)]
    Update(#[from] UpdateError),
    #[error(transparent)]
    Nnet(#[from] NnetError),
    #[error("model file: {0}")]
    ModelFile(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub kind: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub area: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            kind: 1.0,
            alpha: 1.0,
            kappa: 1.0,
            area: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// The step size follows a cosine from `learning_rate` down to
    /// `learning_rate * final_lr_fraction` over the run; 1 keeps it constant.
    pub final_lr_fraction: f64,
    pub epochs: usize,
    pub holdout: f64,
    pub seed: u64,
    pub loss_weights: LossWeights,
    /// Include the area loss on precise samples.
    pub area_loss: bool,
    pub hyper: Hyperparams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            final_lr_fraction: 0.01,
            epochs: 10,
            holdout: 0.1,
            seed: 0,
            loss_weights: LossWeights::default(),
            area_loss: true,
            hyper: Hyperparams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.holdout > 0.0 && self.holdout < 1.0) {
            return Err(TrainError::Holdout(self.holdout));
        }
        if self.epochs == 0 {
            return Err(TrainError::Epochs);
        }
        let (lr, frac) = (self.learning_rate, self.final_lr_fraction);
        if !(lr > 0.0 && lr.is_finite() && frac > 0.0 && frac <= 1.0) {
            return Err(TrainError::LearningRate(lr, frac));
        }
        Ok(())
    }

    /// Step size for update `step` of `total`.
    pub fn learning_rate_at(&self, step: usize, total: usize) -> f64 {
        let t = step as f64 / total.max(1) as f64;
        let floor = self.learning_rate * self.final_lr_fraction;
        floor + 0.5 * (self.learning_rate - floor) * (1.0 + (PI * t).cos())
    }

    /// Hex sha256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Margin direction loss `max(wrap(α − α*)² − (π/8)², 0)`.
pub fn loss_alpha(alpha: f64, target: f64) -> f64 {
    let d = wrap_angle(alpha - target);
    (d * d - ALPHA_MARGIN * ALPHA_MARGIN).max(0.0)
}

/// Target copy closest to `alpha` among those a prediction in (−π, π) can reach:
/// the target itself, and its 2π-shifted copy when the target lies within the
/// margin of the ±π seam. Equals the wrapped difference except when the wrapped
/// path would have to cross the seam to reach a target away from it.
pub fn reachable_difference(alpha: f64, target: f64) -> f64 {
    let target = wrap_angle(target);
    let mut best = alpha - target;
    for shifted in [target + 2.0 * PI, target - 2.0 * PI] {
        if shifted.abs() <= PI + ALPHA_MARGIN && (alpha - shifted).abs() < best.abs() {
            best = alpha - shifted;
        }
    }
    best
}

/// Training form of the direction loss, `max(d² − (π/8)², 0)` with `d` from
/// [`reachable_difference`].
pub fn loss_alpha_training(alpha: f64, target: f64) -> f64 {
    let d = reachable_difference(alpha, target);
    (d * d - ALPHA_MARGIN * ALPHA_MARGIN).max(0.0)
}

fn alpha_loss_on_tape(tape: &mut Tape, alpha: Var, target: f64) -> Var {
    let a = tape.scalar(alpha);
    let shift = (a - target) - reachable_difference(a, target);
    let d = tape.offset(alpha, -target - shift);
    let sq = tape.mul(d, d);
    let m = tape.offset(sq, -ALPHA_MARGIN * ALPHA_MARGIN);
    tape.relu(m)
}

/// One supervised term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossTerm {
    Kind,
    Alpha,
    Kappa,
    Area,
}

impl LossTerm {
    pub const ALL: [LossTerm; 4] = [LossTerm::Kind, LossTerm::Alpha, LossTerm::Kappa, LossTerm::Area];
}

/// Sample data precomputed once per training run.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub id: usize,
    pub modifier: Modifier,
    pub update: UpdateType,
    pub alpha: Option<f64>,
    pub kappa: Option<bool>,
    /// Index of the target area and `w̄ ⊙ w_{k−1}` for precise samples.
    pub area: Option<(usize, Vec<f64>)>,
}

pub fn prepare_sample(
    sample: &TrainingSample,
    map: &AreaMap,
    lexicon: &Lexicon,
    hyper: &Hyperparams,
) -> Result<PreparedSample, TrainError> {
    let fail = |message: String| TrainError::Sample {
        id: sample.id,
        message,
    };
    let modifier = lexicon.modifier_from_text(&sample.modifier);
    if modifier.is_empty() {
        return Err(fail("empty modifier".into()));
    }
    let area = match (sample.update, &sample.target, &sample.prior) {
        (UpdateType::Precise, Some(target), Some(prior)) => {
            let k = map
                .area_index(target)
                .ok_or_else(|| fail(format!("unknown target area {target}")))?;
            let w = map.gather_area_weights(prior.cells()).weights;
            let att = attention_weights(map, lexicon, &modifier, hyper.match_threshold).weights;
            Some((k, w.iter().zip(att).map(|(p, a)| p * a).collect()))
        }
        (UpdateType::Precise, _, _) => {
            return Err(fail("precise sample lacks a target or prior".into()))
        }
        _ => None,
    };
    Ok(PreparedSample {
        id: sample.id,
        modifier,
        update: sample.update,
        alpha: sample.alpha,
        kappa: sample.kappa,
        area,
    })
}

/// Builds `term` for `sample` on `tape`; `None` when the term does not apply.
pub fn loss_term_on_tape(
    params: &ModelParams,
    tape: &mut Tape,
    map: &AreaMap,
    sample: &PreparedSample,
    term: LossTerm,
) -> Result<Option<Var>, TrainError> {
    let inputs = params.embed(tape, &sample.modifier)?;
    let applies = match term {
        LossTerm::Kind => true,
        LossTerm::Alpha => match sample.update {
            UpdateType::Directional => sample.alpha.is_some(),
            UpdateType::Precise => sample.kappa == Some(true) && sample.alpha.is_some(),
            _ => false,
        },
        LossTerm::Kappa => sample.update == UpdateType::Precise && sample.kappa.is_some(),
        LossTerm::Area => sample.area.is_some(),
    };
    if !applies {
        return Ok(None);
    }
    let v = match term {
        LossTerm::Kind => {
            let logits = params.type_logits(tape, &inputs)?;
            let ls = tape.log_softmax(logits);
            let p = tape.pick(ls, sample.update.index());
            tape.scale(p, -1.0)
        }
        LossTerm::Alpha => {
            let a = params.alpha(tape, &inputs)?;
            alpha_loss_on_tape(tape, a, sample.alpha.expect("checked"))
        }
        LossTerm::Kappa => {
            let (k, _) = params.kappa_beta_logits(tape, &inputs)?;
            // −ln σ(z) = softplus(−z); −ln(1 − σ(z)) = softplus(z)
            let z = if sample.kappa == Some(true) {
                tape.scale(k, -1.0)
            } else {
                k
            };
            tape.softplus(z)
        }
        LossTerm::Area => {
            let (target, base) = sample.area.as_ref().expect("checked");
            let a = params.alpha(tape, &inputs)?;
            let (k, b) = params.kappa_beta(tape, &inputs)?;
            let w = precise_weights_on_tape(tape, map, a, k, b, base, params.hyper.gamma_floor);
            let p = tape.pick(w, *target);
            if -tape.scalar(p).ln() >= AREA_LOSS_CAP || tape.scalar(p) <= 0.0 {
                tape.constant(vec![AREA_LOSS_CAP])
            } else {
                let l = tape.ln(p);
                tape.scale(l, -1.0)
            }
        }
    };
    Ok(Some(v))
}

/// Value of one term under an arbitrary parameter store (for gradient checks).
pub fn loss_term_value(
    params: &ModelParams,
    store: &ParamStore,
    map: &AreaMap,
    sample: &PreparedSample,
    term: LossTerm,
) -> Result<Option<f64>, TrainError> {
    let mut tape = Tape::new(store);
    Ok(loss_term_on_tape(params, &mut tape, map, sample, term)?.map(|v| tape.scalar(v)))
}

/// Gradient of one term with respect to every parameter.
pub fn loss_term_gradient(
    params: &ModelParams,
    map: &AreaMap,
    sample: &PreparedSample,
    term: LossTerm,
) -> Result<Option<(f64, Gradients)>, TrainError> {
    let mut tape = Tape::new(&params.store);
    match loss_term_on_tape(params, &mut tape, map, sample, term)? {
        Some(v) => Ok(Some((tape.scalar(v), tape.backward(v)?))),
        None => Ok(None),
    }
}

/// Per-term loss values of one sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossParts {
    pub terms: BTreeMap<LossTerm, f64>,
}

/// Weighted sum of all applicable terms, its gradient, and the per-term values.
pub fn sample_loss(
    params: &ModelParams,
    map: &AreaMap,
    sample: &PreparedSample,
    config: &TrainConfig,
) -> Result<(f64, Gradients, LossParts), TrainError> {
    let mut tape = Tape::new(&params.store);
    let mut parts = LossParts::default();
    let mut total: Option<Var> = None;
    for term in LossTerm::ALL {
        if term == LossTerm::Area && !config.area_loss {
            continue;
        }
        let weight = match term {
            LossTerm::Kind => config.loss_weights.kind,
            LossTerm::Alpha => config.loss_weights.alpha,
            LossTerm::Kappa => config.loss_weights.kappa,
            LossTerm::Area => config.loss_weights.area,
        };
        if let Some(v) = loss_term_on_tape(params, &mut tape, map, sample, term)? {
            parts.terms.insert(term, tape.scalar(v));
            let scaled = tape.scale(v, weight);
            total = Some(match total {
                Some(t) => tape.add(t, scaled),
                None => scaled,
            });
        }
    }
    let total = total.expect("type loss always applies");
    let value = tape.scalar(total);
    if !value.is_finite() {
        return Err(TrainError::NonFiniteLoss(sample.id));
    }
    let grads = tape.backward(total)?;
    Ok((value, grads, parts))
}

/// Deterministic split into (train, holdout) index lists.
pub fn split_indices(n: usize, holdout: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_hold = ((n as f64) * holdout).round() as usize;
    let n_hold = n_hold.clamp(usize::from(n > 1), n.saturating_sub(1));
    let hold = idx.split_off(n - n_hold);
    (idx, hold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub type_accuracy: f64,
    /// Absent when no precise sample was evaluated.
    pub area_accuracy: Option<f64>,
    pub direction_accuracy: Option<f64>,
    pub kappa_accuracy: Option<f64>,
    pub mean_losses: BTreeMap<LossTerm, f64>,
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |v: Option<f64>| match v {
            Some(x) => format!("{:.2}%", 100.0 * x),
            None => "n/a".into(),
        };
        writeln!(f, "{:<22} {}", "samples", self.samples)?;
        writeln!(f, "{:<22} {}", "type accuracy", pct(Some(self.type_accuracy)))?;
        writeln!(f, "{:<22} {}", "precise area top-1", pct(self.area_accuracy))?;
        writeln!(f, "{:<22} {}", "direction within 22.5", pct(self.direction_accuracy))?;
        writeln!(f, "{:<22} {}", "indicator accuracy", pct(self.kappa_accuracy))?;
        for (term, v) in &self.mean_losses {
            writeln!(f, "{:<22} {v:.4}", format!("mean loss {term:?}").to_lowercase())?;
        }
        Ok(())
    }
}

/// Head outputs for one sample, used for scoring.
pub type Prediction = HeadOutputs;

/// Scores predictions against sample labels.
pub fn score_predictions(
    samples: &[TrainingSample],
    predictions: &[Prediction],
    map: &AreaMap,
    lexicon: &Lexicon,
    hyper: &Hyperparams,
) -> EvalReport {
    let mut type_hits = 0;
    let (mut area_hits, mut area_n) = (0, 0);
    let (mut dir_hits, mut dir_n) = (0, 0);
    let (mut kappa_hits, mut kappa_n) = (0, 0);
    let mut sums: BTreeMap<LossTerm, (f64, usize)> = BTreeMap::new();
    for (s, p) in samples.iter().zip(predictions) {
        let predicted = argmax(&p.type_probs);
        if predicted == s.update.index() {
            type_hits += 1;
        }
        let entry = sums.entry(LossTerm::Kind).or_default();
        entry.0 += -p.type_probs[s.update.index()].max(f64::MIN_POSITIVE).ln();
        entry.1 += 1;
        let alpha_supervised = match s.update {
            UpdateType::Directional => true,
            UpdateType::Precise => s.kappa == Some(true),
            _ => false,
        };
        if let (true, Some(target)) = (alpha_supervised, s.alpha) {
            dir_n += 1;
            if wrap_angle(p.alpha - target).abs() <= ALPHA_MARGIN + 1e-12 {
                dir_hits += 1;
            }
            let e = sums.entry(LossTerm::Alpha).or_default();
            e.0 += loss_alpha(p.alpha, target);
            e.1 += 1;
        }
        if s.update == UpdateType::Precise {
            if let Some(k) = s.kappa {
                kappa_n += 1;
                if (p.kappa > 0.5) == k {
                    kappa_hits += 1;
                }
                let q = if k { p.kappa } else { 1.0 - p.kappa };
                let e = sums.entry(LossTerm::Kappa).or_default();
                e.0 += -q.max(f64::MIN_POSITIVE).ln();
                e.1 += 1;
            }
            if let (Some(target), Some(prior)) = (&s.target, &s.prior) {
                area_n += 1;
                let u = lexicon.modifier_from_text(&s.modifier);
                if let Ok((_, detail)) = precise_update_with_heads(
                    &u, prior, map, lexicon, hyper, p.alpha, p.kappa, p.beta,
                ) {
                    let k = map.area_index(target);
                    if Some(argmax(&detail.weights)) == k {
                        area_hits += 1;
                    }
                    if let Some(k) = k {
                        let e = sums.entry(LossTerm::Area).or_default();
                        e.0 += (-detail.weights[k].ln()).min(AREA_LOSS_CAP);
                        e.1 += 1;
                    }
                }
            }
        }
    }
    let rate = |hits: usize, n: usize| (n > 0).then(|| hits as f64 / n as f64);
    EvalReport {
        samples: samples.len(),
        type_accuracy: rate(type_hits, samples.len()).unwrap_or(0.0),
        area_accuracy: rate(area_hits, area_n),
        direction_accuracy: rate(dir_hits, dir_n),
        kappa_accuracy: rate(kappa_hits, kappa_n),
        mean_losses: sums
            .into_iter()
            .map(|(t, (sum, n))| (t, sum / n as f64))
            .collect(),
    }
}

pub fn evaluate(
    params: &ModelParams,
    samples: &[TrainingSample],
    map: &AreaMap,
) -> Result<EvalReport, TrainError> {
    let predictions = samples
        .iter()
        .map(|s| params.heads(&params.lexicon.modifier_from_text(&s.modifier)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(score_predictions(
        samples,
        &predictions,
        map,
        &params.lexicon,
        &params.hyper,
    ))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub report: EvalReport,
    /// Mean weighted loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub train_indices: Vec<usize>,
    pub holdout_indices: Vec<usize>,
}

/// Trains from freshly initialized weights and evaluates on the holdout split.
pub fn train(
    samples: &[TrainingSample],
    map: &AreaMap,
    lexicon: Lexicon,
    config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    train_with_progress(samples, map, lexicon, config, |_, _| {})
}

/// As [`train`], calling `progress(epoch, mean_loss)` after each epoch.
pub fn train_with_progress(
    samples: &[TrainingSample],
    map: &AreaMap,
    lexicon: Lexicon,
    config: &TrainConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<TrainOutcome, TrainError> {
    if samples.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    config.validate()?;
    let mut params = ModelParams::new(lexicon, config.hyper.clone(), config.seed)
        .map_err(|e| TrainError::ModelFile(e.to_string()))?;
    let (train_idx, hold_idx) = split_indices(samples.len(), config.holdout, config.seed);
    let prepared = train_idx
        .iter()
        .map(|&i| prepare_sample(&samples[i], map, &params.lexicon, &params.hyper))
        .collect::<Result<Vec<_>, _>>()?;
    let mut adam = AdamState::new(&params.store, config.learning_rate);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let total_steps = config.epochs * prepared.len();
    let mut step = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for &i in &order {
            adam.learning_rate = config.learning_rate_at(step, total_steps);
            step += 1;
            let (loss, grads, _) = sample_loss(&params, map, &prepared[i], config)?;
            sum += loss;
            adam.step(&mut params.store, &grads)
                .map_err(|e| TrainError::Sample {
                    id: prepared[i].id,
                    message: e.to_string(),
                })?;
        }
        let mean = sum / prepared.len() as f64;
        epoch_losses.push(mean);
        progress(epoch, mean);
    }
    let holdout: Vec<TrainingSample> = hold_idx.iter().map(|&i| samples[i].clone()).collect();
    let report = evaluate(&params, &holdout, map)?;
    Ok(TrainOutcome {
        params,
        report,
        epoch_losses,
        train_indices: train_idx,
        holdout_indices: hold_idx,
    })
}

// ---------------------------------------------------------------------------
// Composite benchmark

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    /// `None` for the all-queries row.
    pub steps: Option<usize>,
    pub queries: usize,
    pub top1: f64,
    pub top5: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Queries that failed to parse or ground, with the error.
    pub failures: Vec<(String, String)>,
}

impl BenchReport {
    pub fn row(&self, steps: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.steps == Some(steps))
    }

    pub fn any(&self) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.steps.is_none())
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:>9} {:>8} {:>8}", "steps", "queries", "top1 %", "top5 %")?;
        for r in &self.rows {
            let steps = r.steps.map_or("any".to_string(), |s| s.to_string());
            writeln!(
                f,
                "{:<8} {:>9} {:>8.2} {:>8.2}",
                steps,
                r.queries,
                100.0 * r.top1,
                100.0 * r.top5
            )?;
        }
        Ok(())
    }
}

/// Grounds every query and tabulates top-1/top-5 hits per chain length.
pub fn benchmark_composite(
    queries: &[CompositeQuery],
    map: &AreaMap,
    params: &ModelParams,
) -> BenchReport {
    benchmark_with(queries, |q| {
        let steps = params
            .lexicon
            .parse_instruction(&q.instruction)
            .map(|c| c.len())
            .unwrap_or(q.steps);
        let ranked = ground(&q.instruction, map, params)
            .map(|t| top_k_areas(&t, 5))
            .map_err(|e| e.to_string());
        (steps, ranked)
    })
}

/// Benchmark over an arbitrary grounder returning `(chain length, top-5 ids)`.
pub fn benchmark_with(
    queries: &[CompositeQuery],
    mut grounder: impl FnMut(&CompositeQuery) -> (usize, Result<Vec<String>, String>),
) -> BenchReport {
    let mut buckets: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
    let mut failures = Vec::new();
    for q in queries {
        let (steps, ranked) = grounder(q);
        let e = buckets.entry(steps).or_default();
        e.0 += 1;
        match ranked {
            Ok(top) => {
                if top.first() == Some(&q.goal) {
                    e.1 += 1;
                }
                if top.iter().take(5).any(|id| *id == q.goal) {
                    e.2 += 1;
                }
            }
            Err(err) => failures.push((q.instruction.clone(), err)),
        }
    }
    let row = |steps, (n, t1, t5): (usize, usize, usize)| BenchRow {
        steps,
        queries: n,
        top1: if n > 0 { t1 as f64 / n as f64 } else { 0.0 },
        top5: if n > 0 { t5 as f64 / n as f64 } else { 0.0 },
    };
    let mut rows: Vec<BenchRow> = buckets.iter().map(|(&s, &c)| row(Some(s), c)).collect();
    let all = buckets
        .values()
        .fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    rows.push(row(None, all));
    BenchReport { rows, failures }
}

// ---------------------------------------------------------------------------
// Model files

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: u32,
    pub seed: u64,
    pub config: TrainConfig,
    pub fingerprint: String,
    pub params: ModelParams,
}

impl ModelFile {
    pub const FORMAT: u32 = 1;

    pub fn new(params: ModelParams, config: TrainConfig) -> Self {
        Self {
            format: Self::FORMAT,
            seed: config.seed,
            fingerprint: config.fingerprint(),
            config,
            params,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        let mut file: Self =
            serde_json::from_str(text).map_err(|e| TrainError::ModelFile(e.to_string()))?;
        if file.format != Self::FORMAT {
            return Err(TrainError::ModelFile(format!(
                "unsupported format {}",
                file.format
            )));
        }
        if file.fingerprint != file.config.fingerprint() {
            return Err(TrainError::ModelFile("config fingerprint mismatch".into()));
        }
        file.params.lexicon.rebuild_lookup();
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        std::fs::write(path, self.to_json()).map_err(|e| TrainError::ModelFile(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| TrainError::ModelFile(e.to_string()))?;
        Self::from_json(&text)
    }
}
