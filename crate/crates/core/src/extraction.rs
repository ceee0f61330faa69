//! Gazetteer lookup plus honorific-triggered rule candidates.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{DiaryEntry, Span};
use crate::date::Date;
use crate::entity::EntityId;

pub const DEFAULT_HONORIFICS: [&str; 9] = [
    "Mr", "Mrs", "Capt", "Captain", "Dr", "Haji", "Agha", "Effendi", "Sheikh",
];

/// A word token with its byte span in the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub span: Span,
    pub folded: String,
}

fn is_connector(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Maximal runs of alphanumerics, allowing apostrophes and hyphens between
/// alphanumerics ("O'Brien", "Abdul-Karim").
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if !c.is_alphanumeric() {
            continue;
        }
        let mut end = start + c.len_utf8();
        loop {
            match chars.peek().copied() {
                Some((i, c)) if c.is_alphanumeric() => {
                    end = i + c.len_utf8();
                    chars.next();
                }
                Some((i, c)) if is_connector(c) => {
                    let after = text[i + c.len_utf8()..].chars().next();
                    if after.is_some_and(char::is_alphanumeric) {
                        end = i + c.len_utf8();
                        chars.next();
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        tokens.push(Token {
            span: Span::new(start, end),
            folded: text[start..end].to_lowercase(),
        });
    }
    tokens
}

/// Token-level normalization: case fold, drop leading honorifics, join with
/// single spaces. Punctuation outside tokens disappears.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalizer {
    honorifics: BTreeSet<String>,
}

impl Normalizer {
    pub fn new<S: AsRef<str>>(honorifics: &[S]) -> Self {
        Self {
            honorifics: honorifics
                .iter()
                .map(|h| h.as_ref().trim().trim_end_matches('.').to_lowercase())
                .filter(|h| !h.is_empty())
                .collect(),
        }
    }

    pub fn is_honorific(&self, folded: &str) -> bool {
        self.honorifics.contains(folded)
    }

    pub fn honorifics(&self) -> impl Iterator<Item = &str> {
        self.honorifics.iter().map(String::as_str)
    }

    fn join(tokens: &[Token]) -> String {
        let mut out = String::new();
        for (i, t) in tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&t.folded);
        }
        out
    }

    pub fn normalize(&self, text: &str) -> String {
        let tokens = tokenize(text);
        let skip = tokens
            .iter()
            .take_while(|t| self.is_honorific(&t.folded))
            .count();
        Self::join(&tokens[skip..])
    }

    /// Last token of a normalized form.
    pub fn surname_component(normalized: &str) -> Option<&str> {
        normalized.rsplit(' ').next().filter(|s| !s.is_empty())
    }
}

impl Default for Normalizer {
    fn default() -> Self {
        Self::new(&DEFAULT_HONORIFICS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasCollision {
    pub alias: String,
    pub first: EntityId,
    pub second: EntityId,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GazetteerError {
    #[error("alias collisions: {}", format_collisions(.0))]
    Collisions(Vec<AliasCollision>),
    #[error("alias {alias:?} of {id} is empty after normalization")]
    EmptyAlias { id: EntityId, alias: String },
}

fn format_collisions(collisions: &[AliasCollision]) -> String {
    let parts: Vec<String> = collisions
        .iter()
        .map(|c| alloc::format!("{:?} claimed by {} and {}", c.alias, c.first, c.second))
        .collect();
    parts.join("; ")
}

/// Normalized alias → entity lookup, matched longest-first over token runs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gazetteer {
    entries: BTreeMap<String, EntityId>,
    max_tokens: usize,
}

impl Gazetteer {
    /// Compile `(entity, alias)` pairs. Aliases are normalized here, so raw
    /// surface forms and already-normalized forms are both accepted.
    pub fn compile<'a, I>(aliases: I, normalizer: &Normalizer) -> Result<Self, GazetteerError>
    where
        I: IntoIterator<Item = (&'a EntityId, &'a str)>,
    {
        let mut entries: BTreeMap<String, EntityId> = BTreeMap::new();
        let mut collisions = Vec::new();
        for (id, alias) in aliases {
            let key = normalizer.normalize(alias);
            if key.is_empty() {
                return Err(GazetteerError::EmptyAlias {
                    id: id.clone(),
                    alias: alias.into(),
                });
            }
            match entries.get(&key) {
                Some(existing) if existing != id => collisions.push(AliasCollision {
                    alias: key,
                    first: existing.clone(),
                    second: id.clone(),
                }),
                Some(_) => {}
                None => {
                    entries.insert(key, id.clone());
                }
            }
        }
        if !collisions.is_empty() {
            return Err(GazetteerError::Collisions(collisions));
        }
        let max_tokens = entries
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(0);
        Ok(Self {
            entries,
            max_tokens,
        })
    }

    pub fn lookup(&self, normalized: &str) -> Option<&EntityId> {
        self.entries.get(normalized)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn aliases(&self) -> impl Iterator<Item = (&str, &EntityId)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heuristics {
    pub normalizer: Normalizer,
    /// Emit capitalized token runs after an honorific even when unknown.
    pub honorific_candidates: bool,
    pub max_candidate_tokens: usize,
}

impl Default for Heuristics {
    fn default() -> Self {
        Self {
            normalizer: Normalizer::default(),
            honorific_candidates: true,
            max_candidate_tokens: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MentionSource {
    Gazetteer,
    Honorific,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub surface: String,
    pub normalized: String,
    pub entry_date: Date,
    pub volume_id: String,
    /// Byte offsets into the entry text.
    pub span: Span,
    pub source: MentionSource,
}

/// Whether two adjacent tokens may belong to one name: only whitespace and
/// periods between them.
fn joinable(text: &str, a: &Token, b: &Token) -> bool {
    text[a.span.end..b.span.start]
        .chars()
        .all(|c| c.is_whitespace() || c == '.')
}

fn run_is_joined(text: &str, tokens: &[Token]) -> bool {
    tokens.windows(2).all(|w| joinable(text, &w[0], &w[1]))
}

fn starts_uppercase(text: &str, t: &Token) -> bool {
    text[t.span.start..].chars().next().is_some_and(char::is_uppercase)
}

fn longest_gazetteer_match(text: &str, tokens: &[Token], gazetteer: &Gazetteer) -> Option<usize> {
    let limit = gazetteer.max_tokens.min(tokens.len());
    (1..=limit).rev().find(|&len| {
        let run = &tokens[..len];
        run_is_joined(text, run) && gazetteer.lookup(&Normalizer::join(run)).is_some()
    })
}

/// All non-overlapping person mentions in one entry, in text order.
pub fn extract_mentions(entry: &DiaryEntry, gazetteer: &Gazetteer, rules: &Heuristics) -> Vec<Mention> {
    let text = entry.text.as_str();
    let tokens = tokenize(text);
    let norm = &rules.normalizer;
    let mut mentions = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut honorifics = 0;
        while i + honorifics < tokens.len()
            && norm.is_honorific(&tokens[i + honorifics].folded)
            && (honorifics == 0 || joinable(text, &tokens[i + honorifics - 1], &tokens[i + honorifics]))
        {
            honorifics += 1;
        }
        let name_start = i + honorifics;
        let attached = honorifics == 0
            || (name_start < tokens.len() && joinable(text, &tokens[name_start - 1], &tokens[name_start]));

        let mut found: Option<(usize, MentionSource)> = None;
        if attached && name_start < tokens.len() {
            if let Some(len) = longest_gazetteer_match(text, &tokens[name_start..], gazetteer) {
                found = Some((name_start + len, MentionSource::Gazetteer));
            } else if honorifics > 0 && rules.honorific_candidates {
                let mut end = name_start;
                while end < tokens.len()
                    && end - name_start < rules.max_candidate_tokens
                    && starts_uppercase(text, &tokens[end])
                    && !norm.is_honorific(&tokens[end].folded)
                    && (end == name_start
                        || (joinable(text, &tokens[end - 1], &tokens[end])
                            && longest_gazetteer_match(text, &tokens[end..], gazetteer).is_none()))
                {
                    end += 1;
                }
                if end > name_start {
                    found = Some((end, MentionSource::Honorific));
                }
            }
        }

        match found {
            Some((end, source)) => {
                let span = Span::new(tokens[i].span.start, tokens[end - 1].span.end);
                let surface = span.slice(text).to_string();
                let normalized = norm.normalize(&surface);
                debug_assert!(!normalized.is_empty());
                mentions.push(Mention {
                    surface,
                    normalized,
                    entry_date: entry.date,
                    volume_id: entry.volume_id.clone(),
                    span,
                    source,
                });
                i = end;
            }
            None => i += honorifics.max(1),
        }
    }
    mentions
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn entry(text: &str) -> DiaryEntry {
        DiaryEntry {
            volume_id: "v49".into(),
            date: "1891-05-05".parse().unwrap(),
            text: text.into(),
            source_span: Span::new(0, text.len()),
        }
    }

    fn gaz(pairs: &[(&str, &str)]) -> Gazetteer {
        let ids: Vec<EntityId> = pairs.iter().map(|(id, _)| EntityId::from(*id)).collect();
        Gazetteer::compile(
            ids.iter().zip(pairs.iter().map(|(_, a)| *a)),
            &Normalizer::default(),
        )
        .unwrap()
    }

    #[test]
    fn normalization() {
        let n = Normalizer::default();
        assert_eq!(n.normalize("Capt. Cowley"), "cowley");
        assert_eq!(n.normalize("  Haji   Abdul-Karim  Effendi, "), "abdul-karim effendi");
        assert_eq!(n.normalize("Mr"), "");
        assert_eq!(n.normalize("O'Brien."), "o'brien");
        assert_eq!(Normalizer::surname_component("henry lynch"), Some("lynch"));
    }

    #[test]
    fn compile_examples() {
        let empty = Gazetteer::compile(core::iter::empty(), &Normalizer::default()).unwrap();
        assert!(empty.is_empty());

        let g = gaz(&[("haddad_alexander", "Alexander"), ("haddad_alexander", "Alex")]);
        assert_eq!(g.lookup("alex"), Some(&EntityId::from("haddad_alexander")));
        assert_eq!(g.len(), 2);

        let a = EntityId::from("johnny_a");
        let b = EntityId::from("johnny_b");
        let err = Gazetteer::compile([(&a, "Johnny"), (&b, "Mr Johnny")], &Normalizer::default()).unwrap_err();
        match err {
            GazetteerError::Collisions(c) => {
                assert_eq!(c, vec![AliasCollision { alias: "johnny".into(), first: a, second: b }]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn honorific_absorbed_into_surface() {
        let g = gaz(&[("cowley", "Cowley"), ("alexander", "Alexander")]);
        let e = entry("Called on Capt Cowley and Alexander in the evening");
        let m = extract_mentions(&e, &g, &Heuristics::default());
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].surface, "Capt Cowley");
        assert_eq!(m[0].normalized, "cowley");
        assert_eq!(m[1].surface, "Alexander");
        assert_eq!(m[1].span.slice(&e.text), "Alexander");
    }

    #[test]
    fn no_candidates() {
        let g = gaz(&[("cowley", "Cowley")]);
        assert!(extract_mentions(&entry("it rained all day"), &g, &Heuristics::default()).is_empty());
    }

    #[test]
    fn honorific_without_name_yields_nothing() {
        let m = extract_mentions(&entry("Capt. went ashore"), &Gazetteer::default(), &Heuristics::default());
        assert!(m.is_empty());
    }

    #[test]
    fn candidate_run_stops_at_known_name() {
        let id = EntityId::new("ali");
        let g = Gazetteer::compile([(&id, "Ali")], &Normalizer::default()).unwrap();
        let m = extract_mentions(&entry("Met Capt Basil Ali there"), &g, &Heuristics::default());
        let got: Vec<(&str, MentionSource)> = m.iter().map(|m| (m.surface.as_str(), m.source)).collect();
        assert_eq!(got, vec![("Capt Basil", MentionSource::Honorific), ("Ali", MentionSource::Gazetteer)]);
    }

    #[test]
    fn rule_candidates_after_honorific() {
        let e = entry("Dined with Capt. Henry Lynch, then saw Sheikh Ali.");
        let m = extract_mentions(&e, &Gazetteer::default(), &Heuristics::default());
        let got: Vec<(&str, &str)> = m.iter().map(|m| (m.surface.as_str(), m.normalized.as_str())).collect();
        assert_eq!(got, vec![("Capt. Henry Lynch", "henry lynch"), ("Sheikh Ali", "ali")]);
        assert!(m.iter().all(|m| m.source == MentionSource::Honorific));

        let off = Heuristics {
            honorific_candidates: false,
            ..Heuristics::default()
        };
        assert!(extract_mentions(&e, &Gazetteer::default(), &off).is_empty());
    }

    #[test]
    fn sentence_initial_capitals_are_not_candidates() {
        let m = extract_mentions(&entry("Went to Basra. Rain."), &Gazetteer::default(), &Heuristics::default());
        assert!(m.is_empty());
    }

    #[test]
    fn longest_match_wins() {
        let g = gaz(&[("hl", "Henry Lynch"), ("lynch", "Lynch")]);
        let e = entry("met Henry Lynch and Lynch's clerk");
        let m = extract_mentions(&e, &g, &Heuristics::default());
        let surfaces: Vec<&str> = m.iter().map(|m| m.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["Henry Lynch"]);
        // "Lynch's" is one token and is not an alias.
    }

    #[test]
    fn names_do_not_join_across_commas() {
        let g = gaz(&[("hl", "Henry Lynch"), ("h", "Henry")]);
        let m = extract_mentions(&entry("Henry, Lynch"), &g, &Heuristics::default());
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].surface, "Henry");
    }
}
