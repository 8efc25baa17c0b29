//! Tokenization, the closed vocabulary, and decomposition of destination phrases
//! into modifier chains.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::map::AreaMap;

/// Vocabulary index reserved for out-of-vocabulary words.
pub const OOV_INDEX: usize = 0;
pub const OOV_TOKEN: &str = "<oov>";

/// Upper bound on the absolute dot product between distinct match-embedding rows.
const MATCH_ORTHOGONALITY: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("instruction is empty or has no destination phrase: {0:?}")]
    Unparseable(String),
    #[error("destination phrase is empty")]
    EmptyPhrase,
    #[error("unsupported construct {word:?} in {phrase:?}")]
    Unsupported { word: String, phrase: String },
    #[error("preposition {preposition:?} at position {position} has no head phrase on one side")]
    DanglingPreposition { preposition: String, position: usize },
    #[error("modifier {modifier:?} has {count} tokens, limit is {limit}")]
    ModifierTooLong {
        modifier: String,
        count: usize,
        limit: usize,
    },
}

/// Lowercases, turns punctuation into separators, and splits on whitespace.
pub fn normalize_words(text: &str) -> Vec<String> {
    text.chars()
        .map(|c| {
            if c.is_alphanumeric() {
                c.to_lowercase().next().unwrap_or(c)
            } else {
                ' '
            }
        })
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub vocab_index: usize,
}

/// One grammatical segment of a destination phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modifier {
    pub tokens: Vec<Token>,
    pub raw: String,
}

impl Modifier {
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Word lists for the restricted command grammar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrammarConfig {
    /// Motion-verb prefixes; `*` stands for one or more arbitrary words.
    pub verb_patterns: Vec<String>,
    /// Prepositions that split head phrases; multi-word entries match first.
    pub prepositions: Vec<String>,
    pub articles: Vec<String>,
    /// Words the grammar cannot ground (e.g. "between").
    pub unsupported: Vec<String>,
    /// Per-modifier token cap.
    pub max_modifier_tokens: usize,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        let words = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            verb_patterns: words(&[
                "go to",
                "navigate to",
                "head to",
                "move to",
                "drive to",
                "take me to",
                "bring * to",
                "deliver * to",
                "take * to",
            ]),
            prepositions: words(&["close to", "next to", "near", "besides", "beside", "to", "of"]),
            articles: words(&["the", "a", "an"]),
            unsupported: words(&["between", "among", "and", "or"]),
            max_modifier_tokens: crate::map::DEFAULT_TOKEN_CAP,
        }
    }
}

/// Modifier dictionary used by data generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModifierDictionary {
    pub dummy: Vec<String>,
    pub proximity: Vec<String>,
}

impl Default for ModifierDictionary {
    fn default() -> Self {
        Self {
            dummy: vec!["to".into(), "of".into()],
            proximity: vec!["besides".into(), "near".into(), "close to".into()],
        }
    }
}

/// Text configuration document for word lists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LanguageConfig {
    pub grammar: GrammarConfig,
    pub dictionary: ModifierDictionary,
}

impl LanguageConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

impl GrammarConfig {
    /// Strips the leading motion-verb phrase and returns the destination phrase,
    /// lowercased with punctuation removed.
    pub fn extract_destination(&self, instruction: &str) -> Result<String, ParseError> {
        let words = normalize_words(instruction);
        for pattern in &self.verb_patterns {
            let pat: Vec<&str> = pattern.split_whitespace().collect();
            if let Some(rest) = match_prefix(&pat, &words) {
                if rest >= words.len() {
                    return Err(ParseError::Unparseable(instruction.to_string()));
                }
                return Ok(words[rest..].join(" "));
            }
        }
        if words.is_empty() {
            return Err(ParseError::Unparseable(instruction.to_string()));
        }
        Ok(words.join(" "))
    }

    /// Splits a destination phrase on prepositions and orders the segments
    /// innermost dependency first: the deepest preposition objective, then each
    /// preposition, ending with the outermost head phrase.
    pub fn split_chain(&self, phrase: &str) -> Result<Vec<Vec<String>>, ParseError> {
        let words = normalize_words(phrase);
        if words.is_empty() {
            return Err(ParseError::EmptyPhrase);
        }
        if let Some(w) = words.iter().find(|w| self.unsupported.contains(w)) {
            return Err(ParseError::Unsupported {
                word: w.clone(),
                phrase: words.join(" "),
            });
        }
        let mut preps: Vec<Vec<&str>> = self
            .prepositions
            .iter()
            .map(|p| p.split_whitespace().collect())
            .collect();
        preps.sort_by_key(|p| std::cmp::Reverse(p.len()));

        let mut segments: Vec<Vec<String>> = Vec::new();
        let mut current: Vec<String> = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let hit = preps
                .iter()
                .find(|p| words[i..].starts_with_str(p))
                .map(|p| p.len());
            match hit {
                Some(n) => {
                    if current.is_empty() {
                        return Err(ParseError::DanglingPreposition {
                            preposition: words[i..i + n].join(" "),
                            position: i,
                        });
                    }
                    segments.push(std::mem::take(&mut current));
                    segments.push(words[i..i + n].to_vec());
                    i += n;
                }
                None => {
                    current.push(words[i].clone());
                    i += 1;
                }
            }
        }
        if current.is_empty() {
            let last = segments.pop().unwrap_or_default();
            return Err(ParseError::DanglingPreposition {
                preposition: last.join(" "),
                position: words.len() - last.len(),
            });
        }
        segments.push(current);
        segments.reverse();
        for s in &segments {
            if s.len() > self.max_modifier_tokens {
                return Err(ParseError::ModifierTooLong {
                    modifier: s.join(" "),
                    count: s.len(),
                    limit: self.max_modifier_tokens,
                });
            }
        }
        Ok(segments)
    }
}

trait StartsWithStr {
    fn starts_with_str(&self, pat: &[&str]) -> bool;
}

impl StartsWithStr for [String] {
    fn starts_with_str(&self, pat: &[&str]) -> bool {
        self.len() >= pat.len() && self.iter().zip(pat).all(|(a, b)| a == b)
    }
}

/// Matches a verb pattern at the start of `words`, returning where the rest begins.
fn match_prefix(pattern: &[&str], words: &[String]) -> Option<usize> {
    fn go(pattern: &[&str], words: &[String], pos: usize) -> Option<usize> {
        let Some((&head, tail)) = pattern.split_first() else {
            return Some(pos);
        };
        if head == "*" {
            // Lazy: consume at least one word, as few as possible.
            (pos + 1..=words.len()).find_map(|next| go(tail, words, next))
        } else if words.get(pos).map(String::as_str) == Some(head) {
            go(tail, words, pos + 1)
        } else {
            None
        }
    }
    go(pattern, words, 0)
}

/// Closed vocabulary with a frozen near-orthogonal match-embedding table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    words: Vec<String>,
    #[serde(skip)]
    lookup: HashMap<String, usize>,
    match_dim: usize,
    /// Row-major `words.len() × match_dim`, unit-norm rows.
    match_embeddings: Vec<f64>,
    pub grammar: GrammarConfig,
    pub dictionary: ModifierDictionary,
}

pub const DIRECTION_WORDS: [&str; 4] = ["north", "south", "east", "west"];

impl Lexicon {
    /// Builds the vocabulary from the map's attribute tokens, direction words,
    /// grammar words, and the modifier dictionary.
    pub fn build(map: &AreaMap, config: &LanguageConfig, match_dim: usize, seed: u64) -> Self {
        let mut set = BTreeSet::new();
        for area in map.areas() {
            set.extend(area.attribute_tokens());
        }
        set.extend(DIRECTION_WORDS.iter().map(|s| s.to_string()));
        let g = &config.grammar;
        let d = &config.dictionary;
        for phrase in g
            .prepositions
            .iter()
            .chain(&g.articles)
            .chain(&g.verb_patterns)
            .chain(&d.dummy)
            .chain(&d.proximity)
        {
            set.extend(normalize_words(phrase));
        }
        let mut words = vec![OOV_TOKEN.to_string()];
        words.extend(set);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table: Vec<f64> = Vec::with_capacity(words.len() * match_dim);
        for row in 0..words.len() {
            loop {
                let mut v: Vec<f64> = (0..match_dim).map(|_| gaussian(&mut rng)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= n);
                let ok = (0..row).all(|r| {
                    let prev = &table[r * match_dim..(r + 1) * match_dim];
                    dot(prev, &v).abs() < MATCH_ORTHOGONALITY
                });
                if ok {
                    table.extend(v);
                    break;
                }
            }
        }
        let mut lex = Self {
            words,
            lookup: HashMap::new(),
            match_dim,
            match_embeddings: table,
            grammar: config.grammar.clone(),
            dictionary: config.dictionary.clone(),
        };
        lex.rebuild_lookup();
        lex
    }

    /// Restores the word index after deserialization.
    pub fn rebuild_lookup(&mut self) {
        self.lookup = self
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn match_dim(&self) -> usize {
        self.match_dim
    }

    pub fn index_of(&self, word: &str) -> usize {
        self.lookup.get(word).copied().unwrap_or(OOV_INDEX)
    }

    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        normalize_words(text)
            .into_iter()
            .map(|w| Token {
                vocab_index: self.index_of(&w),
                text: w,
            })
            .collect()
    }

    pub fn modifier(&self, words: &[String]) -> Modifier {
        let raw = words.join(" ");
        Modifier {
            tokens: self.tokenize(&raw),
            raw,
        }
    }

    pub fn modifier_from_text(&self, text: &str) -> Modifier {
        self.modifier(&normalize_words(text))
    }

    pub fn match_row(&self, index: usize) -> &[f64] {
        &self.match_embeddings[index * self.match_dim..(index + 1) * self.match_dim]
    }

    /// Match embeddings of each token, one row per token.
    pub fn embed_match(&self, tokens: &[Token]) -> Vec<&[f64]> {
        tokens.iter().map(|t| self.match_row(t.vocab_index)).collect()
    }

    pub fn extract_destination(&self, instruction: &str) -> Result<String, ParseError> {
        self.grammar.extract_destination(instruction)
    }

    pub fn parse_modifier_chain(&self, phrase: &str) -> Result<Vec<Modifier>, ParseError> {
        Ok(self
            .grammar
            .split_chain(phrase)?
            .iter()
            .map(|seg| self.modifier(seg))
            .collect())
    }

    /// Destination extraction followed by chain parsing.
    pub fn parse_instruction(&self, instruction: &str) -> Result<Vec<Modifier>, ParseError> {
        let phrase = self.extract_destination(instruction)?;
        self.parse_modifier_chain(&phrase)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Standard normal sample via Box-Muller.
pub(crate) fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
