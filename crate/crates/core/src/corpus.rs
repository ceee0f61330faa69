//! Segmentation of diary transcriptions into dated entries.
//!
//! A volume is a UTF-8 text in which some lines are date headings. Every
//! block of lines after a heading, up to the next heading, is the body of one
//! entry. Each entry's `source_span` covers its heading line and body, so the
//! spans of all entries plus the `discarded` ranges tile the source exactly.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::date::{month_from_name, Date};

/// Half-open byte range into a source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn slice<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiaryEntry {
    pub volume_id: String,
    pub date: Date,
    pub text: String,
    pub source_span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WarningKind {
    /// Non-blank text before the first heading; discarded.
    TextBeforeFirstHeading { bytes: usize },
    /// A heading whose captures do not form a real date. Its block is
    /// appended to the previous entry, or discarded if there is none.
    ImpossibleDate { heading: String },
    /// A heading with no body text; the heading is discarded.
    EmptyEntry { date: Date },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub volume_id: String,
    /// 1-based line number in the source.
    pub line: usize,
    #[serde(flatten)]
    pub kind: WarningKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("volume {volume_id}: invalid UTF-8 at byte {offset}")]
    InvalidUtf8 { volume_id: String, offset: usize },
    #[error("date pattern {pattern:?}: {message}")]
    BadPattern { pattern: String, message: String },
    #[error("date pattern {0:?} must define named captures year, month and day")]
    MissingCaptures(String),
    #[error("at least one date pattern is required")]
    NoPatterns,
}

pub const DEFAULT_DATE_PATTERNS: [&str; 2] = [
    r"(?P<year>\d{4})-(?P<month>\d{2})-(?P<day>\d{2})",
    r"(?:Monday|Tuesday|Wednesday|Thursday|Friday|Saturday|Sunday),?\s+(?P<day>\d{1,2})(?:st|nd|rd|th)?\s+(?P<month>[A-Za-z]+)\.?,?\s+(?P<year>\d{4})",
];

/// Ordered list of heading patterns; the first that matches a whole
/// (trimmed) line wins.
#[derive(Debug, Clone)]
pub struct DateGrammar {
    sources: Vec<String>,
    patterns: Vec<Regex>,
}

enum Heading {
    Valid(Date),
    Impossible,
}

impl DateGrammar {
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self, CorpusError> {
        if patterns.is_empty() {
            return Err(CorpusError::NoPatterns);
        }
        let mut compiled = Vec::with_capacity(patterns.len());
        for p in patterns {
            let p = p.as_ref();
            let re = Regex::new(&format!("^(?:{p})$")).map_err(|e| CorpusError::BadPattern {
                pattern: p.into(),
                message: e.to_string(),
            })?;
            let names: BTreeSet<&str> = re.capture_names().flatten().collect();
            if !["year", "month", "day"].iter().all(|n| names.contains(n)) {
                return Err(CorpusError::MissingCaptures(p.into()));
            }
            compiled.push(re);
        }
        Ok(Self {
            sources: patterns.iter().map(|p| p.as_ref().to_string()).collect(),
            patterns: compiled,
        })
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    fn classify(&self, line: &str) -> Option<Heading> {
        let line = line.trim();
        for re in &self.patterns {
            let Some(caps) = re.captures(line) else {
                continue;
            };
            let year = caps["year"].parse::<i32>().ok();
            let month = {
                let m = &caps["month"];
                m.parse::<u32>().ok().or_else(|| month_from_name(m))
            };
            let day = caps["day"].parse::<u32>().ok();
            return Some(match (year, month, day) {
                (Some(y), Some(m), Some(d)) => match Date::new(y, m, d) {
                    Ok(date) => Heading::Valid(date),
                    Err(_) => Heading::Impossible,
                },
                _ => Heading::Impossible,
            });
        }
        None
    }
}

impl Default for DateGrammar {
    fn default() -> Self {
        Self::new(&DEFAULT_DATE_PATTERNS).expect("default patterns are valid")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedVolume {
    pub entries: Vec<DiaryEntry>,
    pub warnings: Vec<ParseWarning>,
    /// Source ranges not covered by any entry.
    pub discarded: Vec<Span>,
}

struct Line<'a> {
    /// Content without the line terminator.
    content: &'a str,
    span: Span,
    number: usize,
}

fn lines(source: &str) -> impl Iterator<Item = Line<'_>> {
    let mut offset = 0;
    let mut number = 0;
    core::iter::from_fn(move || {
        if offset >= source.len() {
            return None;
        }
        let rest = &source[offset..];
        let len = rest.find('\n').map_or(rest.len(), |i| i + 1);
        let raw = &rest[..len];
        let content = raw.strip_suffix('\n').unwrap_or(raw);
        let content = content.strip_suffix('\r').unwrap_or(content);
        let span = Span::new(offset, offset + len);
        offset += len;
        number += 1;
        Some(Line {
            content,
            span,
            number,
        })
    })
}

fn body_text(lines: &[&str]) -> String {
    let first = lines.iter().position(|l| !l.trim().is_empty());
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    match (first, last) {
        (Some(a), Some(b)) => lines[a..=b].join("\n"),
        _ => String::new(),
    }
}

struct OpenEntry<'a> {
    date: Date,
    start: usize,
    end: usize,
    line: usize,
    body: Vec<&'a str>,
}

/// Split one volume into dated entries.
pub fn parse_diary(source: &str, volume_id: &str, grammar: &DateGrammar) -> ParsedVolume {
    let mut out = ParsedVolume::default();
    let mut prefix_end = 0usize;
    let mut prefix_nonblank = false;
    let mut current: Option<OpenEntry<'_>> = None;

    let warn = |out: &mut ParsedVolume, line: usize, kind: WarningKind| {
        out.warnings.push(ParseWarning {
            volume_id: volume_id.into(),
            line,
            kind,
        });
    };

    let close = |out: &mut ParsedVolume, entry: OpenEntry<'_>| {
        let text = body_text(&entry.body);
        let span = Span::new(entry.start, entry.end);
        if text.is_empty() {
            out.warnings.push(ParseWarning {
                volume_id: volume_id.into(),
                line: entry.line,
                kind: WarningKind::EmptyEntry { date: entry.date },
            });
            out.discarded.push(span);
        } else {
            out.entries.push(DiaryEntry {
                volume_id: volume_id.into(),
                date: entry.date,
                text,
                source_span: span,
            });
        }
    };

    for line in lines(source) {
        match grammar.classify(line.content) {
            Some(Heading::Valid(date)) => {
                if let Some(open) = current.take() {
                    close(&mut out, open);
                }
                current = Some(OpenEntry {
                    date,
                    start: line.span.start,
                    end: line.span.end,
                    line: line.number,
                    body: Vec::new(),
                });
            }
            heading => {
                if matches!(heading, Some(Heading::Impossible)) {
                    warn(
                        &mut out,
                        line.number,
                        WarningKind::ImpossibleDate {
                            heading: line.content.trim().into(),
                        },
                    );
                }
                match current.as_mut() {
                    Some(open) => {
                        open.body.push(line.content);
                        open.end = line.span.end;
                    }
                    None => {
                        prefix_end = line.span.end;
                        prefix_nonblank |= !line.content.trim().is_empty();
                    }
                }
            }
        }
    }
    if let Some(open) = current.take() {
        close(&mut out, open);
    }
    if prefix_end > 0 {
        out.discarded.insert(0, Span::new(0, prefix_end));
        if prefix_nonblank {
            let kind = WarningKind::TextBeforeFirstHeading { bytes: prefix_end };
            out.warnings.insert(
                0,
                ParseWarning {
                    volume_id: volume_id.into(),
                    line: 1,
                    kind,
                },
            );
        }
    }
    out.discarded.sort();
    out
}

/// Like [`parse_diary`] but from raw bytes, rejecting invalid UTF-8.
pub fn parse_diary_bytes(
    source: &[u8],
    volume_id: &str,
    grammar: &DateGrammar,
) -> Result<ParsedVolume, CorpusError> {
    let text = core::str::from_utf8(source).map_err(|e| CorpusError::InvalidUtf8 {
        volume_id: volume_id.into(),
        offset: e.valid_up_to(),
    })?;
    Ok(parse_diary(text, volume_id, grammar))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub entries: Vec<DiaryEntry>,
    pub volumes: BTreeSet<String>,
    pub warnings: Vec<ParseWarning>,
}

impl Corpus {
    /// Merge parsed volumes in volume-id order.
    pub fn from_volumes<I>(volumes: I) -> Self
    where
        I: IntoIterator<Item = (String, ParsedVolume)>,
    {
        let sorted: BTreeMap<String, ParsedVolume> = volumes.into_iter().collect();
        let mut corpus = Corpus::default();
        for (id, parsed) in sorted {
            corpus.entries.extend(parsed.entries);
            corpus.warnings.extend(parsed.warnings);
            corpus.volumes.insert(id);
        }
        corpus
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Issue {
    NonMonotonicDate {
        volume_id: String,
        entry: usize,
        previous: Date,
        date: Date,
    },
    DuplicateDate {
        volume_id: String,
        entry: usize,
        date: Date,
    },
    Gap {
        volume_id: String,
        entry: usize,
        from: Date,
        to: Date,
        days: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationConfig {
    /// Report consecutive entries more than this many days apart.
    pub max_gap_days: Option<i64>,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            max_gap_days: Some(31),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Report ordering problems within each volume. `entry` fields index
/// `corpus.entries`.
pub fn validate_corpus(corpus: &Corpus, config: &ValidationConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen: BTreeMap<&str, BTreeSet<Date>> = BTreeMap::new();
    let mut last: BTreeMap<&str, Date> = BTreeMap::new();
    for (i, entry) in corpus.entries.iter().enumerate() {
        let vol = entry.volume_id.as_str();
        let dates = seen.entry(vol).or_default();
        if !dates.insert(entry.date) {
            report.issues.push(Issue::DuplicateDate {
                volume_id: vol.into(),
                entry: i,
                date: entry.date,
            });
        } else if let Some(prev) = last.get(vol) {
            if entry.date < *prev {
                report.issues.push(Issue::NonMonotonicDate {
                    volume_id: vol.into(),
                    entry: i,
                    previous: *prev,
                    date: entry.date,
                });
            } else if let Some(max) = config.max_gap_days {
                let days = prev.days_until(&entry.date);
                if days > max {
                    report.issues.push(Issue::Gap {
                        volume_id: vol.into(),
                        entry: i,
                        from: *prev,
                        to: entry.date,
                        days,
                    });
                }
            }
        }
        last.insert(vol, entry.date);
    }
    report
}
