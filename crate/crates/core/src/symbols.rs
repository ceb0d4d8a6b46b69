//! Seeded symbol-replacement transformations of proofs.
//!
//! Only single Latin or Greek letters in math mode are treated as variables.
//! A symbol is renamed only when it occurs in both the statement and the
//! proof, and only inside the proof. Case variants share one key, so a map
//! `a -> b` also sends `A` to `B`. Double-struck letters, the constants `π`
//! and `e`, and an optional protected set are never touched.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, Font, PairRecord, Token, TokenKind};
use crate::seed;

#[derive(Debug, Error, PartialEq)]
pub enum SymbolError {
    #[error("fresh-name pool exhausted: need {needed}, have {available}")]
    PoolExhausted { needed: usize, available: usize },
    #[error("alpha must lie in [0, 1], got {0}")]
    BadAlpha(f64),
    #[error("unknown replacement level {0:?}")]
    UnknownLevel(String),
    #[error("protected-set line {line}: {message}")]
    ProtectedFormat { line: usize, message: String },
    #[error("pair {pair_id}: {source}")]
    InPair {
        pair_id: String,
        #[source]
        source: Box<SymbolError>,
    },
}

const LATIN: &str = "abcdefghijklmnopqrstuvwxyz";
// Final sigma and the lookalike/variant forms are left out so that every
// letter has a clean upper/lower pairing.
const GREEK: &str = "αβγδεζηθικλμνξοπρστυφχψω";
const CONSTANTS: &[char] = &['π', 'e'];

fn is_letter(c: char) -> bool {
    let lower = fold(c);
    LATIN.contains(lower) || GREEK.contains(lower)
}

fn fold(c: char) -> char {
    let mut it = c.to_lowercase();
    match (it.next(), it.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

fn upper(c: char) -> char {
    let mut it = c.to_uppercase();
    match (it.next(), it.next()) {
        (Some(u), None) => u,
        _ => c,
    }
}

/// A case-folded variable name together with its font channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolKey {
    base: String,
    font: Font,
}

impl SymbolKey {
    pub fn new(name: &str, font: Font) -> Option<SymbolKey> {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return None;
        }
        Some(SymbolKey { base: name.chars().map(fold).collect(), font })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn font(&self) -> Font {
        self.font
    }

    fn single_char(&self) -> Option<char> {
        let mut it = self.base.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => Some(c),
            _ => None,
        }
    }

    fn is_constant(&self) -> bool {
        self.single_char().is_some_and(|c| CONSTANTS.contains(&c))
    }
}

impl fmt::Display for SymbolKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.font.suffix() {
            None => write!(f, "{}", self.base),
            Some(s) => write!(f, "{}#{}", self.base, s),
        }
    }
}

/// Key of a token that is a replaceable variable, if it is one.
pub fn candidate_key(token: &Token) -> Option<SymbolKey> {
    if token.kind() != TokenKind::Math || token.font() == Font::DoubleStruck {
        return None;
    }
    let mut chars = token.surface().chars();
    let c = match (chars.next(), chars.next()) {
        (Some(c), None) if is_letter(c) => c,
        _ => return None,
    };
    Some(SymbolKey { base: fold(c).to_string(), font: token.font() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReplacementLevel {
    /// Nothing changes.
    Conservation,
    /// A fraction `alpha` of the shared symbols is renamed.
    Partial(f64),
    /// Every shared symbol is renamed.
    Full,
    /// Shared symbols are permuted among themselves with no fixed point.
    Transposition,
}

impl ReplacementLevel {
    pub const STANDARD: [&'static str; 4] = ["conservation", "partial", "full", "transposition"];

    pub fn alpha(&self) -> Option<f64> {
        match self {
            ReplacementLevel::Conservation => None,
            ReplacementLevel::Partial(a) => Some(*a),
            ReplacementLevel::Full => Some(1.0),
            ReplacementLevel::Transposition => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReplacementLevel::Conservation => "conservation",
            ReplacementLevel::Partial(_) => "partial",
            ReplacementLevel::Full => "full",
            ReplacementLevel::Transposition => "transposition",
        }
    }

    /// Parses a level name; `alpha` is used for `partial`.
    pub fn parse(name: &str, alpha: f64) -> Result<ReplacementLevel, SymbolError> {
        match name.trim().to_ascii_lowercase().as_str() {
            "conservation" => Ok(ReplacementLevel::Conservation),
            "partial" => {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(SymbolError::BadAlpha(alpha));
                }
                Ok(ReplacementLevel::Partial(alpha))
            }
            "full" => Ok(ReplacementLevel::Full),
            "transposition" => Ok(ReplacementLevel::Transposition),
            other => Err(SymbolError::UnknownLevel(other.to_owned())),
        }
    }
}

/// Domain-conventional symbols exempt from renaming.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProtectedSet {
    pub keys: BTreeSet<SymbolKey>,
    pub domain_label: String,
}

impl ProtectedSet {
    /// Probability theory: measure, expectation, variance, σ and ρ.
    pub fn probability() -> ProtectedSet {
        let keys = ["P", "E", "V", "σ", "ρ"].iter().filter_map(|s| SymbolKey::new(s, Font::Normal)).collect();
        ProtectedSet { keys, domain_label: "probability".into() }
    }

    pub fn contains(&self, key: &SymbolKey) -> bool {
        self.keys.contains(key)
    }

    fn protects_name(&self, base: &str) -> bool {
        self.keys.iter().any(|k| k.base == base)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<ProtectedSet, std::io::Error> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut set: ProtectedSet =
            text.parse().map_err(|e: SymbolError| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        set.domain_label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(set)
    }
}

impl FromStr for ProtectedSet {
    type Err = SymbolError;

    /// One symbol per line, `surface` or `surface#font`; `#` starts a comment.
    fn from_str(text: &str) -> Result<ProtectedSet, SymbolError> {
        let mut keys = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, font) = match line.split_once('#') {
                Some((n, f)) => {
                    let font = Font::from_suffix(f.trim()).ok_or_else(|| SymbolError::ProtectedFormat {
                        line: i + 1,
                        message: format!("unknown font {f:?}"),
                    })?;
                    (n.trim(), font)
                }
                None => (line, Font::Normal),
            };
            let key = SymbolKey::new(name, font)
                .ok_or_else(|| SymbolError::ProtectedFormat { line: i + 1, message: format!("bad symbol {name:?}") })?;
            keys.insert(key);
        }
        Ok(ProtectedSet { keys, domain_label: String::new() })
    }
}

/// A case-paired bijection over symbol keys for one proof.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReplacementMap {
    pub entries: BTreeMap<SymbolKey, SymbolKey>,
    pub seed: u64,
}

impl ReplacementMap {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, key: &SymbolKey) -> Option<&SymbolKey> {
        self.entries.get(key)
    }

    pub fn inverse(&self) -> ReplacementMap {
        ReplacementMap { entries: self.entries.iter().map(|(k, v)| (v.clone(), k.clone())).collect(), seed: self.seed }
    }
}

fn keys_in(tokens: &[Token]) -> BTreeSet<SymbolKey> {
    tokens.iter().filter_map(candidate_key).collect()
}

/// Variable keys occurring in both statement and proof, minus constants and
/// (when given) protected keys. Double-struck letters never qualify.
pub fn extract_shared_symbols(pair: &PairRecord, protected: Option<&ProtectedSet>) -> BTreeSet<SymbolKey> {
    let in_statement = keys_in(&pair.statement);
    keys_in(&pair.proof)
        .into_iter()
        .filter(|k| in_statement.contains(k))
        .filter(|k| !k.is_constant())
        .filter(|k| protected.is_none_or(|p| !p.contains(k)))
        .collect()
}

/// Folded single-letter names used anywhere in the pair's math, any font.
pub fn occupied_names(pair: &PairRecord) -> HashSet<char> {
    pair.statement
        .iter()
        .chain(&pair.proof)
        .filter(|t| t.is_math())
        .filter_map(|t| {
            let mut it = t.surface().chars();
            match (it.next(), it.next()) {
                (Some(c), None) => Some(fold(c)),
                _ => None,
            }
        })
        .collect()
}

/// Fresh-name candidates in draw order: shuffled Latin letters, then
/// shuffled Greek letters, each minus occupied, protected and constant names.
pub fn fresh_name_pool<R: Rng>(occupied: &HashSet<char>, protected: &ProtectedSet, rng: &mut R) -> Vec<char> {
    let usable = |c: &char| !occupied.contains(c) && !CONSTANTS.contains(c) && !protected.protects_name(&c.to_string());
    let mut latin: Vec<char> = LATIN.chars().filter(usable).collect();
    let mut greek: Vec<char> = GREEK.chars().filter(usable).collect();
    latin.shuffle(rng);
    greek.shuffle(rng);
    latin.extend(greek);
    latin
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Builds a replacement map with the fresh-name pool drawn from `seed`.
/// `occupied` lists names already used in the pair (see [`occupied_names`]).
pub fn build_replacement_map(
    shared: &BTreeSet<SymbolKey>,
    level: ReplacementLevel,
    protected: &ProtectedSet,
    occupied: &HashSet<char>,
    seed: u64,
) -> Result<ReplacementMap, SymbolError> {
    let mut rng = rng_for(seed);
    let pool = fresh_name_pool(occupied, protected, &mut rng);
    build_from_pool(shared, level, &pool, &mut rng, seed)
}

/// Same as [`build_replacement_map`] but with an explicit fresh-name pool,
/// consumed front to back.
pub fn build_replacement_map_with_pool(
    shared: &BTreeSet<SymbolKey>,
    level: ReplacementLevel,
    pool: &[char],
    seed: u64,
) -> Result<ReplacementMap, SymbolError> {
    build_from_pool(shared, level, pool, &mut rng_for(seed), seed)
}

fn round_half_away(x: f64) -> usize {
    x.round() as usize
}

fn build_from_pool<R: Rng>(
    shared: &BTreeSet<SymbolKey>,
    level: ReplacementLevel,
    pool: &[char],
    rng: &mut R,
    seed: u64,
) -> Result<ReplacementMap, SymbolError> {
    let mut entries = BTreeMap::new();
    let mut fresh = pool.iter().copied();
    let mut rename = |keys: &[&SymbolKey], entries: &mut BTreeMap<SymbolKey, SymbolKey>| {
        if keys.len() > pool.len() {
            return Err(SymbolError::PoolExhausted { needed: keys.len(), available: pool.len() });
        }
        for k in keys {
            let name = fresh.next().ok_or(SymbolError::PoolExhausted { needed: keys.len(), available: pool.len() })?;
            entries.insert((*k).clone(), SymbolKey { base: name.to_string(), font: k.font });
        }
        Ok(())
    };

    match level {
        ReplacementLevel::Conservation => {}
        ReplacementLevel::Full => {
            let keys: Vec<&SymbolKey> = shared.iter().collect();
            rename(&keys, &mut entries)?;
        }
        ReplacementLevel::Partial(alpha) => {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(SymbolError::BadAlpha(alpha));
            }
            let count = round_half_away(alpha * shared.len() as f64);
            let mut keys: Vec<&SymbolKey> = shared.iter().collect();
            keys.shuffle(rng);
            keys.truncate(count);
            keys.sort();
            rename(&keys, &mut entries)?;
        }
        ReplacementLevel::Transposition => {
            let mut by_font: BTreeMap<Font, Vec<&SymbolKey>> = BTreeMap::new();
            for k in shared {
                by_font.entry(k.font).or_default().push(k);
            }
            let mut singletons = Vec::new();
            for group in by_font.values() {
                if group.len() == 1 {
                    singletons.push(group[0]);
                    continue;
                }
                let perm = derangement(group.len(), rng);
                for (i, &j) in perm.iter().enumerate() {
                    entries.insert(group[i].clone(), group[j].clone());
                }
            }
            rename(&singletons, &mut entries)?;
        }
    }
    Ok(ReplacementMap { entries, seed })
}

/// Uniform random derangement of `0..n` (n >= 2) by rejection.
fn derangement<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(n >= 2);
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        perm.shuffle(rng);
        if perm.iter().enumerate().all(|(i, &j)| i != j) {
            return perm;
        }
    }
}

/// Rewrites mapped variables, keeping case and font. Length is preserved.
pub fn apply_replacement(proof: &[Token], map: &ReplacementMap) -> Vec<Token> {
    if map.is_empty() {
        return proof.to_vec();
    }
    proof
        .iter()
        .map(|t| {
            let Some(target) = candidate_key(t).and_then(|k| map.get(&k)) else {
                return t.clone();
            };
            let Some(c) = target.single_char() else {
                return t.clone();
            };
            let original = t.surface().chars().next().expect("non-empty surface");
            let c = if fold(original) != original { upper(c) } else { c };
            t.with_surface(c.to_string())
        })
        .collect()
}

/// Builds and applies the map for one pair under its own seed.
pub fn replace_pair(
    pair: &PairRecord,
    level: ReplacementLevel,
    protected: &ProtectedSet,
    pair_seed: u64,
) -> Result<(PairRecord, ReplacementMap), SymbolError> {
    let shared = extract_shared_symbols(pair, Some(protected));
    let map = build_replacement_map(&shared, level, protected, &occupied_names(pair), pair_seed)?;
    let proof = apply_replacement(&pair.proof, &map);
    Ok((PairRecord { proof, ..pair.clone() }, map))
}

/// Seed used for one pair; lets a single pair be replayed in isolation.
pub fn pair_seed(seed: u64, pair_id: &str) -> u64 {
    seed::derive(seed, pair_id)
}

/// Applies a replacement level to every proof of a corpus. Statements are
/// untouched. Pairs are processed in parallel; output is order-stable.
pub fn replace_corpus(
    corpus: &Corpus,
    level: ReplacementLevel,
    protected: &ProtectedSet,
    seed: u64,
) -> Result<Corpus, SymbolError> {
    if level == ReplacementLevel::Conservation {
        return Ok(corpus.clone());
    }
    let replaced: Vec<Result<PairRecord, SymbolError>> = corpus
        .pairs()
        .par_iter()
        .map(|p| {
            replace_pair(p, level, protected, pair_seed(seed, &p.pair_id))
                .map(|(q, _)| q)
                .map_err(|e| SymbolError::InPair { pair_id: p.pair_id.clone(), source: Box::new(e) })
        })
        .collect();
    let mut out = Vec::with_capacity(replaced.len());
    for r in replaced {
        out.push(r?);
    }
    let mut it = out.into_iter();
    Ok(corpus.map_pairs(|_| it.next().expect("same length")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Token {
        Token::math(s, Font::Normal).unwrap()
    }

    fn key(s: &str) -> SymbolKey {
        SymbolKey::new(s, Font::Normal).unwrap()
    }

    fn pair(statement: &[Token], proof: &[Token]) -> PairRecord {
        PairRecord {
            pair_id: "p".into(),
            article_id: "a".into(),
            categories: vec![],
            statement: statement.to_vec(),
            proof: proof.to_vec(),
        }
    }

    #[test]
    fn shared_is_intersection() {
        let p = pair(&[m("a"), m("n"), m("=")], &[m("a"), m("n"), m("t")]);
        let shared = extract_shared_symbols(&p, None);
        assert_eq!(shared, [key("a"), key("n")].into_iter().collect());
    }

    #[test]
    fn double_struck_and_constants_excluded() {
        let r = Token::math("R", Font::DoubleStruck).unwrap();
        let p = pair(&[r.clone(), m("π"), m("e"), m("x")], &[r, m("π"), m("E"), m("x")]);
        assert_eq!(extract_shared_symbols(&p, None), [key("x")].into_iter().collect());
    }

    #[test]
    fn protected_keys_excluded() {
        let p = pair(&[m("P"), m("σ"), m("x")], &[m("P"), m("σ"), m("x")]);
        let shared = extract_shared_symbols(&p, Some(&ProtectedSet::probability()));
        assert_eq!(shared, [key("x")].into_iter().collect());
    }

    #[test]
    fn multi_letter_names_are_not_candidates() {
        assert!(candidate_key(&m("sin")).is_none());
        assert!(candidate_key(&m("2")).is_none());
        assert!(candidate_key(&Token::text("a").unwrap()).is_none());
        assert!(candidate_key(&m("ς")).is_none());
        assert_eq!(candidate_key(&m("Σ")), Some(key("σ")));
    }

    #[test]
    fn conservation_is_empty() {
        let shared = [key("a"), key("n")].into_iter().collect();
        let map = build_replacement_map(
            &shared,
            ReplacementLevel::Conservation,
            &ProtectedSet::default(),
            &HashSet::new(),
            1,
        )
        .unwrap();
        assert!(map.is_empty());
    }

    #[test]
    fn case_and_font_preserved() {
        let mut map = ReplacementMap::default();
        map.entries.insert(key("a"), key("b"));
        let bold_a = Token::math("a", Font::Bold).unwrap();
        let out = apply_replacement(&[m("a"), m("A"), m("∑"), bold_a.clone()], &map);
        assert_eq!(out, vec![m("b"), m("B"), m("∑"), bold_a]);
    }

    #[test]
    fn map_then_inverse_restores() {
        let mut map = ReplacementMap::default();
        map.entries.insert(key("a"), key("b"));
        let proof = vec![m("a"), m("+"), m("A")];
        let there = apply_replacement(&proof, &map);
        assert_eq!(apply_replacement(&there, &map.inverse()), proof);
        assert_eq!(apply_replacement(&proof, &ReplacementMap::default()), proof);
    }

    #[test]
    fn partial_count_rounds_half_away() {
        let shared: BTreeSet<_> = ["a", "b", "c", "d"].iter().map(|s| key(s)).collect();
        let map = build_replacement_map(
            &shared,
            ReplacementLevel::Partial(0.5),
            &ProtectedSet::default(),
            &HashSet::from(['a', 'b', 'c', 'd']),
            9,
        )
        .unwrap();
        assert_eq!(map.len(), 2);
        let three: BTreeSet<_> = ["a", "b", "c"].iter().map(|s| key(s)).collect();
        let map =
            build_replacement_map(&three, ReplacementLevel::Partial(0.5), &ProtectedSet::default(), &HashSet::new(), 9)
                .unwrap();
        assert_eq!(map.len(), 2, "round(1.5) = 2");
    }

    #[test]
    fn transposition_single_key_falls_back_to_fresh_name() {
        let shared = [key("a")].into_iter().collect();
        let map = build_replacement_map_with_pool(&shared, ReplacementLevel::Transposition, &['q'], 0).unwrap();
        assert_eq!(map.get(&key("a")), Some(&key("q")));
    }

    #[test]
    fn pool_exhaustion() {
        let shared = [key("a"), key("b")].into_iter().collect();
        let err = build_replacement_map_with_pool(&shared, ReplacementLevel::Full, &['x'], 0).unwrap_err();
        assert_eq!(err, SymbolError::PoolExhausted { needed: 2, available: 1 });
    }

    #[test]
    fn fresh_pool_avoids_occupied_protected_constants() {
        let occupied: HashSet<char> = "abcdefghijklmnopqrstuvwxyz".chars().collect();
        let pool = fresh_name_pool(&occupied, &ProtectedSet::probability(), &mut rng_for(0));
        assert!(pool.iter().all(|c| GREEK.contains(*c)));
        assert!(!pool.contains(&'π') && !pool.contains(&'σ') && !pool.contains(&'ρ'));
        let pool = fresh_name_pool(&HashSet::new(), &ProtectedSet::probability(), &mut rng_for(0));
        assert!(!pool.contains(&'e') && !pool.contains(&'p') && !pool.contains(&'v'));
    }

    #[test]
    fn parse_protected_file() {
        let set: ProtectedSet = "# probability\nP\nσ\nx#bold\n".parse().unwrap();
        assert_eq!(set.keys.len(), 3);
        assert!(set.contains(&SymbolKey::new("x", Font::Bold).unwrap()));
        assert!("x#gothic".parse::<ProtectedSet>().is_err());
    }

    #[test]
    fn level_parsing() {
        assert_eq!(ReplacementLevel::parse("Full", 0.0).unwrap(), ReplacementLevel::Full);
        assert_eq!(ReplacementLevel::parse("partial", 0.5).unwrap(), ReplacementLevel::Partial(0.5));
        assert!(ReplacementLevel::parse("partial", 1.5).is_err());
        assert!(ReplacementLevel::parse("shuffle", 0.5).is_err());
    }
}
