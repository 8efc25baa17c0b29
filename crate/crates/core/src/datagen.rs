//! Synthetic single-step training samples and composite benchmark queries.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::Point;
use crate::grounder::UpdateType;
use crate::language::ModifierDictionary;
use crate::map::{compare_ids, Area, AreaMap, BeliefGrid, MapError};

/// Compass phrases indexed counter-clockwise from east in π/4 steps.
pub const COMPASS: [&str; 8] = [
    "east",
    "north east",
    "north",
    "north west",
    "west",
    "south west",
    "south",
    "south east",
];

/// Angle of compass index `i`, wrapped into [−π, π).
pub fn compass_angle(i: usize) -> f64 {
    wrap_angle(i as f64 * PI / 4.0)
}

/// Wraps an angle into [−π, π).
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Nearest compass index; an angle exactly between two directions takes the lower index.
pub fn compass_index(angle: f64) -> usize {
    let t = (angle / (PI / 4.0)).rem_euclid(8.0);
    let lo = (t.floor() as usize) % 8;
    let hi = (lo + 1) % 8;
    let frac = t - t.floor();
    if frac < 0.5 {
        lo
    } else if frac > 0.5 {
        hi
    } else {
        lo.min(hi)
    }
}

pub fn compass_phrase(angle: f64) -> &'static str {
    COMPASS[compass_index(angle)]
}

/// Angle of a compass phrase, ignoring a leading article.
pub fn parse_compass(phrase: &str) -> Option<f64> {
    let words = crate::language::normalize_words(phrase);
    let words: Vec<&str> = words
        .iter()
        .map(String::as_str)
        .skip_while(|w| *w == "the")
        .collect();
    let joined = words.join(" ");
    COMPASS.iter().position(|c| *c == joined).map(compass_angle)
}

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("modifier count per area must be at least 1")]
    ZeroK,
    #[error("areas must differ")]
    SameArea,
    #[error("composite step count must be 1, 3 or 5, got {0}")]
    StepCount(usize),
    #[error("could not satisfy the {steps}-step template after {attempts} attempts")]
    Unsatisfiable { steps: usize, attempts: usize },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("dataset io: {0}")]
    Io(#[from] std::io::Error),
    #[error("dataset line {line}: {message}")]
    Format { line: usize, message: String },
}

/// One synthetic single-update sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub id: usize,
    pub modifier: String,
    pub update: UpdateType,
    pub prior: Option<Arc<BeliefGrid>>,
    pub posterior: Option<Arc<BeliefGrid>>,
    pub alpha: Option<f64>,
    pub kappa: Option<bool>,
    pub target: Option<String>,
    pub competitor: Option<String>,
    pub key_area: Option<String>,
}

impl TrainingSample {
    fn new(update: UpdateType, modifier: String) -> Self {
        Self {
            id: 0,
            modifier,
            update,
            prior: None,
            posterior: None,
            alpha: None,
            kappa: None,
            target: None,
            competitor: None,
            key_area: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub k: usize,
    pub seed: u64,
    /// Locations drawn from a precise sample's prior to pick the two candidate areas.
    pub location_samples: usize,
    pub max_retries: usize,
    /// Probability that a precise modifier names the area by id or name.
    pub identifier_rate: f64,
    pub proximity_scale: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 0,
            location_samples: 256,
            max_retries: 10,
            identifier_rate: 0.2,
            proximity_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<TrainingSample>,
    /// Key areas whose precise sample could not be built, with the reason.
    pub skipped: Vec<String>,
}

/// Per-area grids reused across samples.
struct GridCache {
    uniform: Vec<Arc<BeliefGrid>>,
    gaussian: Vec<Arc<BeliefGrid>>,
}

impl GridCache {
    fn new(map: &AreaMap, scale: f64) -> Result<Self, MapError> {
        let mut uniform = Vec::new();
        let mut gaussian = Vec::new();
        for (k, a) in map.areas().iter().enumerate() {
            uniform.push(Arc::new(map.uniform_over_area_index(k)?));
            gaussian.push(Arc::new(map.gaussian_grid(a.centroid(), scale * a.size())?));
        }
        Ok(Self { uniform, gaussian })
    }
}

pub fn gen_dummy<R: Rng>(dictionary: &ModifierDictionary, rng: &mut R) -> TrainingSample {
    let u = dictionary.dummy.choose(rng).expect("dummy word list").clone();
    TrainingSample::new(UpdateType::Dummy, u)
}

pub fn gen_proximity<R: Rng>(
    map: &AreaMap,
    key: usize,
    dictionary: &ModifierDictionary,
    scale: f64,
    rng: &mut R,
) -> Result<TrainingSample, MapError> {
    let area = &map.areas()[key];
    let u = dictionary.proximity.choose(rng).expect("proximity word list").clone();
    let mut s = TrainingSample::new(UpdateType::Proximity, u);
    s.prior = Some(Arc::new(map.uniform_over_area_index(key)?));
    s.posterior = Some(Arc::new(map.gaussian_grid(area.centroid(), scale * area.size())?));
    s.key_area = Some(area.id.clone());
    Ok(s)
}

pub fn gen_directional<R: Rng>(
    map: &AreaMap,
    key: usize,
    scale: f64,
    rng: &mut R,
) -> Result<TrainingSample, MapError> {
    let area = &map.areas()[key];
    let alpha = rng.random_range(-PI..PI);
    let phrase = compass_phrase(alpha);
    let u = if rng.random_bool(0.5) {
        format!("the {phrase}")
    } else {
        phrase.to_string()
    };
    let g = map.gaussian_grid(area.centroid(), scale * area.size())?;
    let mut s = TrainingSample::new(UpdateType::Directional, u);
    s.prior = Some(Arc::new(map.uniform_over_area_index(key)?));
    s.posterior = Some(Arc::new(map.mask_half_plane(&g, area.centroid(), alpha)?));
    s.alpha = Some(alpha);
    s.key_area = Some(area.id.clone());
    Ok(s)
}

/// Modifier text locating `a1` against competitor `a2`, with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleModifier {
    pub text: String,
    /// A direction word is used as an adjective.
    pub kappa: bool,
    /// Compass angle of `a1` relative to `a2` when a direction word is used.
    pub alpha: Option<f64>,
}

fn with_article<R: Rng>(words: Vec<&str>, rng: &mut R) -> String {
    let mut out = Vec::with_capacity(words.len() + 1);
    if rng.random_bool(0.5) {
        out.push("the");
    }
    out.extend(words);
    out.join(" ")
}

/// Minimal modifier distinguishing `a1` from `a2`:
///
/// | condition               | template                      |
/// |-------------------------|-------------------------------|
/// | different category      | `[sub] category`              |
/// | different sub-category  | `[direction] [sub] category`  |
/// | same sub-category       | `direction [sub] category`    |
///
/// Bracketed parts appear with probability 0.5, except that the sub-category is
/// kept whenever it is what separates the two areas, and the direction is kept
/// whenever nothing else does. A leading article is added with probability 0.5.
pub fn modifier_from_rules<R: Rng>(
    a1: &Area,
    a2: &Area,
    rng: &mut R,
) -> Result<RuleModifier, DatagenError> {
    if a1.id == a2.id {
        return Err(DatagenError::SameArea);
    }
    let sub = a1.subcategory.as_deref();
    let (use_sub, use_dir) = if a1.category != a2.category {
        (sub.is_some() && rng.random_bool(0.5), false)
    } else if a1.subcategory != a2.subcategory {
        match sub {
            Some(_) => (true, rng.random_bool(0.5)),
            None => (false, true),
        }
    } else {
        (sub.is_some() && rng.random_bool(0.5), true)
    };
    let direction = a1.centroid().sub(a2.centroid());
    let index = compass_index(direction.y.atan2(direction.x));
    let mut words = Vec::new();
    if use_dir {
        words.extend(COMPASS[index].split(' '));
    }
    if use_sub {
        words.push(sub.expect("checked"));
    }
    words.push(&a1.category);
    Ok(RuleModifier {
        text: with_article(words, rng),
        kappa: use_dir,
        alpha: use_dir.then(|| compass_angle(index)),
    })
}

/// Id- or name-based modifier that singles out `a` on the whole map.
pub fn identifier_modifier<R: Rng>(a: &Area, rng: &mut R) -> String {
    let sub = a.subcategory.as_deref().filter(|_| rng.random_bool(0.5));
    let mut words: Vec<&str> = Vec::new();
    match &a.name {
        Some(name) if rng.random_bool(0.5) => {
            words.extend(name.split_whitespace());
            words.extend(sub);
            words.push(&a.category);
        }
        _ => {
            words.extend(sub);
            words.push(&a.category);
            words.push(&a.id);
        }
    }
    with_article(words, rng)
}

/// Two areas with the most hits among `m` locations drawn from `prior`.
fn top_two_areas<R: Rng>(
    map: &AreaMap,
    prior: &BeliefGrid,
    m: usize,
    rng: &mut R,
) -> Option<(usize, usize)> {
    let dist = WeightedIndex::new(prior.cells()).ok()?;
    let mut hits = vec![0usize; map.area_count()];
    for _ in 0..m {
        if let Some(k) = map.cell_owner(dist.sample(rng)) {
            hits[k] += 1;
        }
    }
    let mut order: Vec<usize> = (0..hits.len()).filter(|&k| hits[k] > 0).collect();
    order.sort_by(|&a, &b| {
        hits[b]
            .cmp(&hits[a])
            .then_with(|| compare_ids(&map.areas()[a].id, &map.areas()[b].id))
    });
    (order.len() >= 2).then(|| (order[0], order[1]))
}

fn precise_sample<R: Rng>(
    map: &AreaMap,
    key: usize,
    cache: &GridCache,
    config: &GenConfig,
    rng: &mut R,
) -> Result<Option<TrainingSample>, DatagenError> {
    let area = &map.areas()[key];
    for _ in 0..config.max_retries {
        let prior = if rng.random_bool(0.5) {
            cache.gaussian[key].clone()
        } else {
            let alpha = rng.random_range(-PI..PI);
            match map.mask_half_plane(&cache.gaussian[key], area.centroid(), alpha) {
                Ok(g) => Arc::new(g),
                Err(_) => continue,
            }
        };
        let Some((a1, a2)) = top_two_areas(map, &prior, config.location_samples, rng) else {
            continue;
        };
        let (first, second) = (&map.areas()[a1], &map.areas()[a2]);
        let rule = if rng.random_bool(config.identifier_rate) {
            RuleModifier {
                text: identifier_modifier(first, rng),
                kappa: false,
                alpha: None,
            }
        } else {
            modifier_from_rules(first, second, rng)?
        };
        let mut s = TrainingSample::new(UpdateType::Precise, rule.text);
        s.prior = Some(prior);
        s.posterior = Some(cache.uniform[a1].clone());
        s.alpha = rule.alpha;
        s.kappa = Some(rule.kappa);
        s.target = Some(first.id.clone());
        s.competitor = Some(second.id.clone());
        s.key_area = Some(area.id.clone());
        return Ok(Some(s));
    }
    Ok(None)
}

pub fn gen_precise<R: Rng>(
    map: &AreaMap,
    key: usize,
    config: &GenConfig,
    rng: &mut R,
) -> Result<Option<TrainingSample>, DatagenError> {
    let cache = GridCache::new(map, config.proximity_scale)?;
    precise_sample(map, key, &cache, config, rng)
}

/// One sample per update type, key area, and repetition; deterministic in `config.seed`.
pub fn generate_dataset(
    map: &AreaMap,
    dictionary: &ModifierDictionary,
    config: &GenConfig,
) -> Result<Dataset, DatagenError> {
    if config.k == 0 {
        return Err(DatagenError::ZeroK);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cache = GridCache::new(map, config.proximity_scale)?;
    let mut data = Dataset::default();
    for update in UpdateType::ALL {
        for key in 0..map.area_count() {
            let area = &map.areas()[key];
            for _ in 0..config.k {
                let sample = match update {
                    UpdateType::Dummy => {
                        let mut s = gen_dummy(dictionary, &mut rng);
                        s.key_area = Some(area.id.clone());
                        Some(s)
                    }
                    UpdateType::Proximity => {
                        let u = dictionary
                            .proximity
                            .choose(&mut rng)
                            .expect("proximity word list")
                            .clone();
                        let mut s = TrainingSample::new(UpdateType::Proximity, u);
                        s.prior = Some(cache.uniform[key].clone());
                        s.posterior = Some(cache.gaussian[key].clone());
                        s.key_area = Some(area.id.clone());
                        Some(s)
                    }
                    UpdateType::Directional => {
                        Some(gen_directional(map, key, config.proximity_scale, &mut rng)?)
                    }
                    UpdateType::Precise => precise_sample(map, key, &cache, config, &mut rng)?,
                };
                match sample {
                    Some(mut s) => {
                        s.id = data.samples.len();
                        data.samples.push(s);
                    }
                    None => data.skipped.push(format!(
                        "precise sample around {} skipped: fewer than two areas hit after {} retries",
                        area.id, config.max_retries
                    )),
                }
            }
        }
    }
    Ok(data)
}

// ---------------------------------------------------------------------------
// Dataset files

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum GridRef {
    Pgm(String),
    Rle(RleGrid),
}

/// Run-length encoded grid: `(value, count)` runs in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RleGrid {
    pub width: usize,
    pub height: usize,
    pub runs: Vec<(f64, usize)>,
}

impl RleGrid {
    pub fn encode(grid: &BeliefGrid) -> Self {
        let mut runs: Vec<(f64, usize)> = Vec::new();
        for &v in grid.cells() {
            match runs.last_mut() {
                Some((last, n)) if last.to_bits() == v.to_bits() => *n += 1,
                _ => runs.push((v, 1)),
            }
        }
        Self {
            width: grid.width(),
            height: grid.height(),
            runs,
        }
    }

    pub fn decode(&self) -> Result<BeliefGrid, MapError> {
        let mut cells = Vec::with_capacity(self.width * self.height);
        for &(v, n) in &self.runs {
            cells.extend(std::iter::repeat_n(v, n));
        }
        BeliefGrid::from_mass(self.width, self.height, cells)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SampleRecord {
    id: usize,
    modifier: String,
    update: UpdateType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior: Option<GridRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    posterior: Option<GridRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    competitor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    key_area: Option<String>,
}

pub const SAMPLES_FILE: &str = "samples.jsonl";
pub const GRID_DIR: &str = "grids";

/// Writes `dir/samples.jsonl`. Grids go to content-addressed PGM files under
/// `dir/grids/` or, with `inline`, into the line as run-length encoding.
pub fn write_dataset(dataset: &Dataset, dir: &Path, inline: bool) -> Result<PathBuf, DatagenError> {
    fs::create_dir_all(dir)?;
    if !inline {
        fs::create_dir_all(dir.join(GRID_DIR))?;
    }
    let mut written: HashMap<*const BeliefGrid, String> = HashMap::new();
    let mut grid_ref = |g: &Arc<BeliefGrid>| -> Result<GridRef, DatagenError> {
        if inline {
            return Ok(GridRef::Rle(RleGrid::encode(g)));
        }
        if let Some(name) = written.get(&Arc::as_ptr(g)) {
            return Ok(GridRef::Pgm(name.clone()));
        }
        let bytes = g.to_pgm();
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().take(16).map(|b| format!("{b:02x}")).collect();
        let name = format!("{GRID_DIR}/{hex}.pgm");
        let path = dir.join(&name);
        if !path.exists() {
            fs::write(&path, bytes)?;
        }
        written.insert(Arc::as_ptr(g), name.clone());
        Ok(GridRef::Pgm(name))
    };
    let path = dir.join(SAMPLES_FILE);
    let mut out = BufWriter::new(fs::File::create(&path)?);
    for s in &dataset.samples {
        let record = SampleRecord {
            id: s.id,
            modifier: s.modifier.clone(),
            update: s.update,
            prior: s.prior.as_ref().map(&mut grid_ref).transpose()?,
            posterior: s.posterior.as_ref().map(&mut grid_ref).transpose()?,
            alpha: s.alpha,
            kappa: s.kappa,
            target: s.target.clone(),
            competitor: s.competitor.clone(),
            key_area: s.key_area.clone(),
        };
        serde_json::to_writer(&mut out, &record).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(path)
}

/// Reads a dataset written by [`write_dataset`]; identical grid files are shared.
pub fn read_dataset(dir: &Path) -> Result<Dataset, DatagenError> {
    let file = fs::File::open(dir.join(SAMPLES_FILE))?;
    let mut cache: HashMap<String, Arc<BeliefGrid>> = HashMap::new();
    let mut samples = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |message: String| DatagenError::Format {
            line: n + 1,
            message,
        };
        let r: SampleRecord = serde_json::from_str(&line).map_err(|e| fail(e.to_string()))?;
        let mut load = |g: Option<GridRef>| -> Result<Option<Arc<BeliefGrid>>, DatagenError> {
            match g {
                None => Ok(None),
                Some(GridRef::Rle(rle)) => Ok(Some(Arc::new(
                    rle.decode().map_err(|e| fail(e.to_string()))?,
                ))),
                Some(GridRef::Pgm(name)) => {
                    if let Some(g) = cache.get(&name) {
                        return Ok(Some(g.clone()));
                    }
                    let bytes = fs::read(dir.join(&name))?;
                    let g = Arc::new(BeliefGrid::from_pgm(&bytes).map_err(|e| fail(e.to_string()))?);
                    cache.insert(name, g.clone());
                    Ok(Some(g))
                }
            }
        };
        let prior = load(r.prior)?;
        let posterior = load(r.posterior)?;
        samples.push(TrainingSample {
            id: r.id,
            modifier: r.modifier,
            update: r.update,
            prior,
            posterior,
            alpha: r.alpha,
            kappa: r.kappa,
            target: r.target,
            competitor: r.competitor,
            key_area: r.key_area,
        });
    }
    Ok(Dataset {
        samples,
        skipped: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Composite queries

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeQuery {
    pub instruction: String,
    pub goal: String,
    /// Modifier-chain length of the destination phrase.
    pub steps: usize,
}

/// Content words of a descriptor that match the area's attribute tokens.
fn match_count(area: &Area, words: &[&str]) -> usize {
    let attrs = area.attribute_tokens();
    words
        .iter()
        .map(|w| attrs.iter().filter(|a| a == w).count())
        .sum()
}

/// Reference scorer: attribute-match count times prior area mass.
/// Returns the winning area when every descriptor word matches it and its score
/// is at least twice the runner-up's.
fn oracle_winner(map: &AreaMap, words: &[&str], prior_mass: &[f64]) -> Option<usize> {
    let scores: Vec<f64> = map
        .areas()
        .iter()
        .zip(prior_mass)
        .map(|(a, &m)| match_count(a, words) as f64 * m)
        .collect();
    let best = crate::map::argmax(&scores);
    let runner_up = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .map(|(_, &s)| s)
        .fold(0.0, f64::max);
    let full = match_count(&map.areas()[best], words) == words.len();
    (full && scores[best] > 0.0 && scores[best] >= 2.0 * runner_up).then_some(best)
}

/// Descriptor words singling out `area` from the whole map (id or name based).
fn unique_descriptor<R: Rng>(map: &AreaMap, area: usize, rng: &mut R) -> Option<String> {
    let text = identifier_modifier(&map.areas()[area], rng);
    let words: Vec<String> = crate::language::normalize_words(&text);
    let content: Vec<&str> = words.iter().map(String::as_str).filter(|w| *w != "the").collect();
    let sizes: Vec<f64> = map.areas().iter().map(Area::size).collect();
    (oracle_winner(map, &content, &sizes) == Some(area)).then_some(text)
}

/// Category-level descriptor ("the phone room", "the printer").
fn category_descriptor(area: &Area) -> String {
    match &area.subcategory {
        Some(sub) => format!("the {sub} {}", area.category),
        None => format!("the {}", area.category),
    }
}

fn content_words(text: &str) -> Vec<String> {
    crate::language::normalize_words(text)
        .into_iter()
        .filter(|w| w != "the")
        .collect()
}

/// Synthesizes `n` instructions whose destination chains have `steps` modifiers.
///
/// * 1 step: `go to {X}` with X naming one area by id or name.
/// * 3 steps: `go to {X} near {Y}`.
/// * 5 steps: `go to {X} to the {D} of {Y}`.
///
/// Y is always an id/name descriptor. The gold area is accepted only when a
/// reference scorer (attribute-match count × area mass of the proximity or
/// half-plane Gaussian around Y) ranks it first by a factor of two, matches every
/// descriptor word, and, for directional queries, lies within 45° of D as seen
/// from Y.
pub fn gen_composite(
    map: &AreaMap,
    seed: u64,
    n: usize,
    steps: usize,
    proximity_scale: f64,
) -> Result<Vec<CompositeQuery>, DatagenError> {
    if ![1, 3, 5].contains(&steps) {
        return Err(DatagenError::StepCount(steps));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (steps as u64).wrapping_mul(0x9e37_79b9));
    let max_attempts = 1000 * n.max(1);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    let areas = map.areas();
    while out.len() < n {
        attempts += 1;
        if attempts > max_attempts {
            return Err(DatagenError::Unsatisfiable { steps, attempts });
        }
        let y = rng.random_range(0..areas.len());
        let Some(y_text) = unique_descriptor(map, y, &mut rng) else {
            continue;
        };
        if steps == 1 {
            out.push(CompositeQuery {
                instruction: format!("go to {y_text}"),
                goal: areas[y].id.clone(),
                steps,
            });
            continue;
        }
        let anchor = areas[y].centroid();
        let gaussian = map.gaussian_grid(anchor, proximity_scale * areas[y].size())?;
        let near: Vec<usize> = (0..areas.len())
            .filter(|&i| i != y && areas[i].centroid().distance(anchor) < 3.0 * (proximity_scale * areas[y].size()).sqrt())
            .collect();
        let Some(&goal) = near.choose(&mut rng) else {
            continue;
        };
        let x_text = category_descriptor(&areas[goal]);
        let x_words = content_words(&x_text);
        let x_refs: Vec<&str> = x_words.iter().map(String::as_str).collect();
        let (instruction, belief) = if steps == 3 {
            (format!("go to {x_text} near {y_text}"), gaussian)
        } else {
            let d = areas[goal].centroid().sub(anchor);
            let phrase = compass_phrase(d.y.atan2(d.x));
            let alpha = parse_compass(phrase).expect("compass phrase");
            let offset = wrap_angle(d.y.atan2(d.x) - alpha).abs();
            if offset > PI / 4.0 {
                continue;
            }
            let Ok(masked) = map.mask_half_plane(&gaussian, anchor, alpha) else {
                continue;
            };
            (format!("go to {x_text} to the {phrase} of {y_text}"), masked)
        };
        let mass = map.gather_area_weights(belief.cells()).weights;
        if oracle_winner(map, &x_refs, &mass) != Some(goal) {
            continue;
        }
        out.push(CompositeQuery {
            instruction,
            goal: areas[goal].id.clone(),
            steps,
        });
    }
    Ok(out)
}

/// Direction from `from` to `to` as a compass phrase.
pub fn relative_compass(from: Point, to: Point) -> &'static str {
    let d = to.sub(from);
    compass_phrase(d.y.atan2(d.x))
}
