//! Modifier classification, the four belief-update functions, and the recursive
//! update chain that grounds a destination description.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{heading, Point};
use crate::language::{dot, Lexicon, Modifier, ParseError, OOV_INDEX};
use crate::map::{argmax, compare_ids, AreaMap, BeliefGrid, MapError};
use crate::nnet::{
    sigmoid, softmax, GruEncoder, Init, LinearHead, NnetError, ParamId, ParamStore, Tape, Var,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateType {
    Dummy = 0,
    Proximity = 1,
    Directional = 2,
    Precise = 3,
}

impl UpdateType {
    pub const ALL: [UpdateType; 4] = [
        UpdateType::Dummy,
        UpdateType::Proximity,
        UpdateType::Directional,
        UpdateType::Precise,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            UpdateType::Dummy => "dummy",
            UpdateType::Proximity => "proximity",
            UpdateType::Directional => "directional",
            UpdateType::Precise => "precise",
        }
    }
}

impl std::fmt::Display for UpdateType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UpdateError {
    #[error("modifier has no tokens")]
    EmptyModifier,
    #[error("precise update produced all-zero area weights ({0})")]
    DegeneratePrecise(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Nnet(#[from] NnetError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("step {step} ({modifier:?}): {source}")]
    Step {
        step: usize,
        modifier: String,
        #[source]
        source: UpdateError,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperparamError {
    #[error("match threshold must lie in (0, 1), got {0}")]
    MatchThreshold(f64),
    #[error("proximity scale must be positive, got {0}")]
    ProximityScale(f64),
    #[error("gamma floor must be positive, got {0}")]
    GammaFloor(f64),
    #[error("layer widths must be positive")]
    Width,
    #[error("dominance ratio must be at least 1, got {0}")]
    DominanceRatio(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// λ: match-embedding dot product above which two tokens count as a match.
    pub match_threshold: f64,
    /// ρ: per-axis Gaussian variance as a multiple of the prior area size.
    pub proximity_scale: f64,
    /// ε: floor added to the directional scaling factor.
    pub gamma_floor: f64,
    pub embedding_width: usize,
    pub hidden_width: usize,
    pub match_width: usize,
    /// A prior counts as precise when its top area holds at least this multiple
    /// of the runner-up's mass. At 1 every prior with mass inside some area is
    /// anchored on its most likely area.
    pub dominance_ratio: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            match_threshold: 0.5,
            proximity_scale: 1.0,
            gamma_floor: 1e-3,
            embedding_width: 32,
            hidden_width: 8,
            match_width: 128,
            dominance_ratio: 1.0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), HyperparamError> {
        if !(self.match_threshold > 0.0 && self.match_threshold < 1.0) {
            return Err(HyperparamError::MatchThreshold(self.match_threshold));
        }
        if !(self.proximity_scale > 0.0) {
            return Err(HyperparamError::ProximityScale(self.proximity_scale));
        }
        if !(self.gamma_floor > 0.0) {
            return Err(HyperparamError::GammaFloor(self.gamma_floor));
        }
        if self.embedding_width == 0 || self.hidden_width == 0 || self.match_width == 0 {
            return Err(HyperparamError::Width);
        }
        if !(self.dominance_ratio >= 1.0 && self.dominance_ratio.is_finite()) {
            return Err(HyperparamError::DominanceRatio(self.dominance_ratio));
        }
        Ok(())
    }
}

/// Lexicon, trainable weights, and hyperparameters of a grounding model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lexicon: Lexicon,
    pub hyper: Hyperparams,
    pub store: ParamStore,
    embeddings: ParamId,
    classifier: GruEncoder,
    type_head: LinearHead,
    direction: GruEncoder,
    direction_head: LinearHead,
    indicator: GruEncoder,
    kappa_head: LinearHead,
    beta_head: LinearHead,
}

/// Forward values of every head for one modifier.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutputs {
    pub type_probs: Vec<f64>,
    pub alpha: f64,
    pub kappa: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(lexicon: Lexicon, hyper: Hyperparams, seed: u64) -> Result<Self, HyperparamError> {
        hyper.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let (e, h) = (hyper.embedding_width, hyper.hidden_width);
        let embeddings = store.add("embeddings", lexicon.len(), e, Init::Glorot, &mut rng);
        let classifier = GruEncoder::new(&mut store, "classifier", e, h, &mut rng);
        let type_head = LinearHead::new(&mut store, "type_head", h, 4, &mut rng);
        let direction = GruEncoder::new(&mut store, "direction", e, h, &mut rng);
        let direction_head = LinearHead::new(&mut store, "direction_head", h, 1, &mut rng);
        let indicator = GruEncoder::new(&mut store, "indicator", e, h, &mut rng);
        let kappa_head = LinearHead::new(&mut store, "kappa_head", h, 1, &mut rng);
        let beta_head = LinearHead::new(&mut store, "beta_head", h, 1, &mut rng);
        Ok(Self {
            lexicon,
            hyper,
            store,
            embeddings,
            classifier,
            type_head,
            direction,
            direction_head,
            indicator,
            kappa_head,
            beta_head,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut params: Self = serde_json::from_str(text)?;
        params.lexicon.rebuild_lookup();
        Ok(params)
    }

    pub fn embedding_table(&self) -> ParamId {
        self.embeddings
    }

    /// Trainable embedding rows for the modifier's tokens.
    pub fn embed(&self, tape: &mut Tape, u: &Modifier) -> Result<Vec<Var>, UpdateError> {
        if u.is_empty() {
            return Err(UpdateError::EmptyModifier);
        }
        Ok(u.tokens
            .iter()
            .map(|t| tape.row(self.embeddings, t.vocab_index))
            .collect())
    }

    pub fn type_logits(&self, tape: &mut Tape, inputs: &[Var]) -> Result<Var, NnetError> {
        let h = self.classifier.forward(tape, inputs)?;
        self.type_head.forward(tape, h)
    }

    /// α = tanh(head) · π.
    pub fn alpha(&self, tape: &mut Tape, inputs: &[Var]) -> Result<Var, NnetError> {
        let h = self.direction.forward(tape, inputs)?;
        let raw = self.direction_head.forward(tape, h)?;
        let t = tape.tanh(raw);
        Ok(tape.scale(t, PI))
    }

    /// Raw indicator and shape head outputs from one shared encoder.
    pub fn kappa_beta_logits(&self, tape: &mut Tape, inputs: &[Var]) -> Result<(Var, Var), NnetError> {
        let h = self.indicator.forward(tape, inputs)?;
        let k = self.kappa_head.forward(tape, h)?;
        let b = self.beta_head.forward(tape, h)?;
        Ok((k, b))
    }

    /// (κ, β) = (σ(head_κ), exp(head_β)).
    pub fn kappa_beta(&self, tape: &mut Tape, inputs: &[Var]) -> Result<(Var, Var), NnetError> {
        let (k, b) = self.kappa_beta_logits(tape, inputs)?;
        Ok((tape.sigmoid(k), tape.exp(b)))
    }

    pub fn heads(&self, u: &Modifier) -> Result<HeadOutputs, UpdateError> {
        let mut tape = Tape::new(&self.store);
        let inputs = self.embed(&mut tape, u)?;
        let logits = self.type_logits(&mut tape, &inputs)?;
        let alpha = self.alpha(&mut tape, &inputs)?;
        let (kappa, beta) = self.kappa_beta(&mut tape, &inputs)?;
        Ok(HeadOutputs {
            type_probs: softmax(tape.value(logits)),
            alpha: tape.scalar(alpha),
            kappa: tape.scalar(kappa),
            beta: tape.scalar(beta),
        })
    }

    /// Most probable update type; ties go to the lower type.
    pub fn classify(&self, u: &Modifier) -> Result<UpdateType, UpdateError> {
        let mut tape = Tape::new(&self.store);
        let inputs = self.embed(&mut tape, u)?;
        let logits = self.type_logits(&mut tape, &inputs)?;
        let probs = softmax(tape.value(logits));
        Ok(UpdateType::from_index(argmax(&probs)).expect("four logits"))
    }

    pub fn predict_direction(&self, u: &Modifier) -> Result<f64, UpdateError> {
        let mut tape = Tape::new(&self.store);
        let inputs = self.embed(&mut tape, u)?;
        let a = self.alpha(&mut tape, &inputs)?;
        Ok(tape.scalar(a))
    }

    pub fn predict_kappa_beta(&self, u: &Modifier) -> Result<(f64, f64), UpdateError> {
        let mut tape = Tape::new(&self.store);
        let inputs = self.embed(&mut tape, u)?;
        let (k, b) = self.kappa_beta(&mut tape, &inputs)?;
        Ok((tape.scalar(k), tape.scalar(b)))
    }
}

/// Boundary vertex minimizing the projection onto `e_α`, in the unit frame.
fn min_projection_vertex(map: &AreaMap, alpha: f64) -> Point {
    let e = heading(alpha);
    map.boundary()
        .vertices()
        .iter()
        .map(|&v| map.normalize(v))
        .min_by(|a, b| a.dot(e).total_cmp(&b.dot(e)))
        .expect("boundary has vertices")
}

/// Directional scaling per area:
/// `γ(i) = (σ(x_iᵀe_α − min_{x∈B₀} xᵀe_α) + 1)^κ − 1 + βκ + ε`
/// with `x_i` the normalized area centroids.
pub fn gamma_factor(map: &AreaMap, alpha: f64, kappa: f64, beta: f64, epsilon: f64) -> Vec<f64> {
    let e = heading(alpha);
    let floor = min_projection_vertex(map, alpha).dot(e);
    (0..map.area_count())
        .map(|i| {
            let s = sigmoid(map.normalized_centroid(i).dot(e) - floor);
            (s + 1.0).powf(kappa) - 1.0 + beta * kappa + epsilon
        })
        .collect()
}

/// Attribute-match attention over areas.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    pub weights: Vec<f64>,
    pub counts: Vec<usize>,
    /// No token pair matched anywhere; `weights` is uniform.
    pub fallback: bool,
}

/// Counts modifier/attribute token pairs whose match embeddings have dot product
/// above λ, per area, and normalizes the counts.
pub fn attention_weights(
    map: &AreaMap,
    lexicon: &Lexicon,
    u: &Modifier,
    threshold: f64,
) -> Attention {
    let modifier_rows: Vec<&[f64]> = u
        .tokens
        .iter()
        .filter(|t| t.vocab_index != OOV_INDEX)
        .map(|t| lexicon.match_row(t.vocab_index))
        .collect();
    let counts: Vec<usize> = map
        .areas()
        .iter()
        .map(|area| {
            area.attribute_tokens()
                .iter()
                .map(|w| lexicon.index_of(w))
                .filter(|&i| i != OOV_INDEX)
                .map(|i| {
                    let row = lexicon.match_row(i);
                    modifier_rows
                        .iter()
                        .filter(|m| dot(row, m) > threshold)
                        .count()
                })
                .sum()
        })
        .collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        let n = counts.len() as f64;
        return Attention {
            weights: vec![1.0 / n; counts.len()],
            counts,
            fallback: true,
        };
    }
    Attention {
        weights: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        counts,
        fallback: false,
    }
}

/// `w_k ∝ γ ⊙ w̄ ⊙ w_{k−1}`, normalized.
pub fn combine_weights(gamma: &[f64], attention: &[f64], prior: &[f64]) -> Result<Vec<f64>, UpdateError> {
    let raw: Vec<f64> = gamma
        .iter()
        .zip(attention)
        .zip(prior)
        .map(|((g, a), p)| g * a * p)
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        let mut zeroed = Vec::new();
        for (name, v) in [("gamma", gamma), ("attention", attention), ("prior", prior)] {
            if v.iter().all(|&x| x == 0.0) {
                zeroed.push(name);
            }
        }
        let detail = if zeroed.is_empty() {
            "factors have disjoint support".to_string()
        } else {
            format!("zero factor: {}", zeroed.join(", "))
        };
        return Err(UpdateError::DegeneratePrecise(detail));
    }
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Differentiable `w_k` for fixed `base = w̄ ⊙ w_{k−1}`, as a normalized vector.
pub fn precise_weights_on_tape(
    tape: &mut Tape,
    map: &AreaMap,
    alpha: Var,
    kappa: Var,
    beta: Var,
    base: &[f64],
    epsilon: f64,
) -> Var {
    let a = tape.scalar(alpha);
    let v = min_projection_vertex(map, a);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..map.area_count())
        .map(|i| {
            let c = map.normalized_centroid(i);
            (c.x, c.y)
        })
        .unzip();
    let cos = tape.cos(alpha);
    let sin = tape.sin(alpha);
    let xs = tape.constant(xs);
    let ys = tape.constant(ys);
    let px = tape.mul(xs, cos);
    let py = tape.mul(ys, sin);
    let proj = tape.add(px, py);
    let vx = tape.scale(cos, v.x);
    let vy = tape.scale(sin, v.y);
    let floor = tape.add(vx, vy);
    let shifted = tape.sub(proj, floor);
    let s = tape.sigmoid(shifted);
    let s1 = tape.offset(s, 1.0);
    let ln = tape.ln(s1);
    let scaled = tape.mul(ln, kappa);
    let pow = tape.exp(scaled);
    let bk = tape.mul(beta, kappa);
    let gamma = tape.add(pow, bk);
    let gamma = tape.offset(gamma, epsilon - 1.0);
    let base = tape.constant(base.to_vec());
    let raw = tape.mul(gamma, base);
    let total = tape.sum(raw);
    tape.div(raw, total)
}

/// Centre and extent used by proximity and directional updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorAnchor {
    pub center: Point,
    pub size: f64,
    /// Dominant area when the prior is precise.
    pub area: Option<usize>,
}

/// Reduces a belief to an anchor: the dominant area's centroid and size when
/// it holds at least `ratio` times the runner-up's mass, otherwise the belief
/// mean and an effective size of `cell_area · exp(entropy)`.
pub fn prior_anchor(map: &AreaMap, b: &BeliefGrid, ratio: f64) -> PriorAnchor {
    let w = map.gather_area_weights(b.cells());
    if !w.degenerate {
        let top = w.argmax();
        let runner_up = w
            .weights
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != top)
            .map(|(_, &x)| x)
            .fold(0.0, f64::max);
        if w.weights[top] >= ratio * runner_up {
            let area = &map.areas()[top];
            return PriorAnchor {
                center: area.centroid(),
                size: area.size(),
                area: Some(top),
            };
        }
    }
    let grid = map.grid();
    PriorAnchor {
        center: b.mean(&grid),
        size: grid.cell_area() * b.entropy().exp(),
        area: None,
    }
}

pub fn dummy_update(b: &BeliefGrid) -> BeliefGrid {
    b.clone()
}

/// Gaussian around the prior anchor with per-axis variance `ρ·|B|`.
pub fn proximity_update(
    map: &AreaMap,
    b: &BeliefGrid,
    hyper: &Hyperparams,
) -> Result<BeliefGrid, UpdateError> {
    let anchor = prior_anchor(map, b, hyper.dominance_ratio);
    Ok(map.gaussian_grid(anchor.center, hyper.proximity_scale * anchor.size)?)
}

/// Proximity Gaussian restricted to the open half-plane in direction `alpha`.
pub fn directional_update_with_angle(
    map: &AreaMap,
    b: &BeliefGrid,
    alpha: f64,
    hyper: &Hyperparams,
) -> Result<BeliefGrid, UpdateError> {
    let anchor = prior_anchor(map, b, hyper.dominance_ratio);
    let g = map.gaussian_grid(anchor.center, hyper.proximity_scale * anchor.size)?;
    Ok(map.mask_half_plane(&g, anchor.center, alpha)?)
}

pub fn directional_update(
    u: &Modifier,
    b: &BeliefGrid,
    map: &AreaMap,
    params: &ModelParams,
) -> Result<BeliefGrid, UpdateError> {
    let alpha = params.predict_direction(u)?;
    directional_update_with_angle(map, b, alpha, &params.hyper)
}

/// Intermediate factors of one precise update.
#[derive(Debug, Clone, PartialEq)]
pub struct PreciseDetail {
    pub gamma: Vec<f64>,
    pub attention: Attention,
    pub prior: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Precise update with explicit head outputs.
pub fn precise_update_with_heads(
    u: &Modifier,
    b: &BeliefGrid,
    map: &AreaMap,
    lexicon: &Lexicon,
    hyper: &Hyperparams,
    alpha: f64,
    kappa: f64,
    beta: f64,
) -> Result<(BeliefGrid, PreciseDetail), UpdateError> {
    let prior = map.gather_area_weights(b.cells()).weights;
    let gamma = gamma_factor(map, alpha, kappa, beta, hyper.gamma_floor);
    let attention = attention_weights(map, lexicon, u, hyper.match_threshold);
    let weights = combine_weights(&gamma, &attention.weights, &prior)?;
    let grid = map.scatter_area_weights(&weights)?;
    Ok((
        grid,
        PreciseDetail {
            gamma,
            attention,
            prior,
            weights,
        },
    ))
}

pub fn precise_update(
    u: &Modifier,
    b: &BeliefGrid,
    map: &AreaMap,
    params: &ModelParams,
) -> Result<(BeliefGrid, PreciseDetail), UpdateError> {
    let alpha = params.predict_direction(u)?;
    let (kappa, beta) = params.predict_kappa_beta(u)?;
    precise_update_with_heads(u, b, map, &params.lexicon, &params.hyper, alpha, kappa, beta)
}

/// Result of applying one modifier.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub update: UpdateType,
    pub posterior: BeliefGrid,
    pub attention_fallback: bool,
}

/// Classifies `u` and runs exactly the selected update.
pub fn apply(
    u: &Modifier,
    b: &BeliefGrid,
    map: &AreaMap,
    params: &ModelParams,
) -> Result<StepOutcome, UpdateError> {
    let update = params.classify(u)?;
    let mut attention_fallback = false;
    let posterior = match update {
        UpdateType::Dummy => dummy_update(b),
        UpdateType::Proximity => proximity_update(map, b, &params.hyper)?,
        UpdateType::Directional => directional_update(u, b, map, params)?,
        UpdateType::Precise => {
            let (grid, detail) = precise_update(u, b, map, params)?;
            attention_fallback = detail.attention.fallback;
            grid
        }
    };
    Ok(StepOutcome {
        update,
        posterior,
        attention_fallback,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub modifier: String,
    pub update: UpdateType,
    pub posterior: BeliefGrid,
    pub attention_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedArea {
    pub id: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefTrace {
    pub steps: Vec<TraceStep>,
    pub ranked: Vec<RankedArea>,
}

impl BeliefTrace {
    pub fn final_belief(&self) -> Option<&BeliefGrid> {
        self.steps.last().map(|s| &s.posterior)
    }
}

/// Area weights of `b`, sorted descending with ties broken by area id.
pub fn rank_areas(map: &AreaMap, b: &BeliefGrid) -> Vec<RankedArea> {
    let w = map.gather_area_weights(b.cells());
    let mut ranked: Vec<RankedArea> = map
        .areas()
        .iter()
        .zip(w.weights)
        .map(|(a, weight)| RankedArea {
            id: a.id.clone(),
            weight,
        })
        .collect();
    ranked.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| compare_ids(&a.id, &b.id)));
    ranked
}

/// Folds `apply` over `chain` starting from `prior`.
pub fn ground_chain(
    chain: &[Modifier],
    prior: BeliefGrid,
    map: &AreaMap,
    params: &ModelParams,
) -> Result<BeliefTrace, GroundError> {
    let mut b = prior;
    let mut steps = Vec::with_capacity(chain.len());
    for (step, u) in chain.iter().enumerate() {
        let out = apply(u, &b, map, params).map_err(|source| GroundError::Step {
            step,
            modifier: u.raw.clone(),
            source,
        })?;
        b = out.posterior.clone();
        steps.push(TraceStep {
            modifier: u.raw.clone(),
            update: out.update,
            posterior: out.posterior,
            attention_fallback: out.attention_fallback,
        });
    }
    let ranked = rank_areas(map, &b);
    Ok(BeliefTrace { steps, ranked })
}

/// Parses an instruction and grounds its modifier chain from the dummy prior.
pub fn ground(
    instruction: &str,
    map: &AreaMap,
    params: &ModelParams,
) -> Result<BeliefTrace, GroundError> {
    let chain = params.lexicon.parse_instruction(instruction)?;
    ground_chain(&chain, map.dummy_prior(), map, params)
}

pub fn top_k_areas(trace: &BeliefTrace, k: usize) -> Vec<String> {
    trace.ranked.iter().take(k).map(|r| r.id.clone()).collect()
}
