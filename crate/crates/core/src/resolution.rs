//! Coreference: the alias table, its decision log, mention resolution and
//! the review queue for unresolved forms.
//!
//! The table is a fold over decisions. A decision either applies completely,
//! producing a new table with `version + 1`, or fails and leaves the input
//! table untouched.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::context::{window, ContextSnippet, SNIPPET_RADIUS_CHARS};
use crate::corpus::Corpus;
use crate::digest::{canonical_bytes, Digest};
use crate::entity::EntityId;
use crate::extraction::{Mention, Normalizer};
use crate::provenance::{
    parse_canonical_line, split_log_lines, LedgerError, LogHeader, RecordBody, StepKind,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub display_name: String,
    pub aliases: BTreeSet<String>,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct TableData {
    version: u64,
    entities: BTreeMap<EntityId, EntityRecord>,
    retired: BTreeSet<EntityId>,
    ignored: BTreeSet<String>,
}

/// Canonical persons with pairwise-disjoint alias sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TableData", into = "TableData")]
pub struct AliasTable {
    data: TableData,
    alias_index: BTreeMap<String, EntityId>,
    surname_index: BTreeMap<String, BTreeSet<EntityId>>,
}

impl From<AliasTable> for TableData {
    fn from(t: AliasTable) -> Self {
        t.data
    }
}

impl TryFrom<TableData> for AliasTable {
    type Error = String;

    fn try_from(data: TableData) -> Result<Self, Self::Error> {
        let mut table = AliasTable {
            data,
            ..Default::default()
        };
        table.reindex();
        table.audit()?;
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolutionError {
    #[error("unknown entity {0}")]
    NotFound(EntityId),
    #[error("alias {alias:?} already belongs to {holder}")]
    AliasConflict { alias: String, holder: EntityId },
    #[error("entity id {0} is already in use")]
    IdConflict(EntityId),
    #[error("invalid decision: {0}")]
    Validation(String),
}

impl ResolutionError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ResolutionError::NotFound(_) => "not_found",
            ResolutionError::AliasConflict { .. } | ResolutionError::IdConflict(_) => "conflict",
            ResolutionError::Validation(_) => "validation",
        }
    }
}

fn is_normalized_form(form: &str) -> bool {
    !form.is_empty()
        && form.split(' ').all(|t| !t.is_empty())
        && !form.chars().any(|c| c.is_whitespace() && c != ' ')
        && form.to_lowercase() == form
}

fn check_form(form: &str) -> Result<(), ResolutionError> {
    if is_normalized_form(form) {
        Ok(())
    } else {
        Err(ResolutionError::Validation(format!(
            "{form:?} is not a normalized form (lowercase tokens separated by single spaces)"
        )))
    }
}

fn slug(display_name: &str) -> String {
    let mut out = String::new();
    for c in display_name.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') && !out.is_empty() {
            out.push('_');
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    if out.is_empty() {
        out.push_str("person");
    }
    out
}

impl AliasTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn version(&self) -> u64 {
        self.data.version
    }

    pub fn entities(&self) -> &BTreeMap<EntityId, EntityRecord> {
        &self.data.entities
    }

    pub fn entity(&self, id: &EntityId) -> Option<&EntityRecord> {
        self.data.entities.get(id)
    }

    pub fn contains(&self, id: &EntityId) -> bool {
        self.data.entities.contains_key(id)
    }

    pub fn is_retired(&self, id: &EntityId) -> bool {
        self.data.retired.contains(id)
    }

    pub fn ignored(&self) -> &BTreeSet<String> {
        &self.data.ignored
    }

    pub fn display_name(&self, id: &EntityId) -> Option<&str> {
        self.entity(id).map(|e| e.display_name.as_str())
    }

    /// Entity holding exactly this normalized alias.
    pub fn lookup(&self, normalized: &str) -> Option<&EntityId> {
        self.alias_index.get(normalized)
    }

    /// Entities with an alias whose last token is `token`.
    pub fn surname_candidates(&self, token: &str) -> Option<&BTreeSet<EntityId>> {
        self.surname_index.get(token)
    }

    /// `(entity, alias)` pairs, suitable for compiling a gazetteer.
    pub fn alias_pairs(&self) -> impl Iterator<Item = (&EntityId, &str)> {
        self.data
            .entities
            .iter()
            .flat_map(|(id, e)| e.aliases.iter().map(move |a| (id, a.as_str())))
    }

    pub fn digest(&self) -> Digest {
        Digest::of_value(self)
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical_bytes(self)
    }

    fn reindex(&mut self) {
        self.alias_index.clear();
        self.surname_index.clear();
        for (id, e) in &self.data.entities {
            for a in &e.aliases {
                self.alias_index.insert(a.clone(), id.clone());
                if let Some(s) = Normalizer::surname_component(a) {
                    self.surname_index.entry(s.into()).or_default().insert(id.clone());
                }
            }
        }
    }

    /// Full invariant check.
    pub fn audit(&self) -> Result<(), String> {
        let mut seen: BTreeMap<&str, &EntityId> = BTreeMap::new();
        for (id, e) in &self.data.entities {
            if e.display_name.trim().is_empty() {
                return Err(format!("{id}: empty display name"));
            }
            if self.data.retired.contains(id) {
                return Err(format!("{id}: both live and retired"));
            }
            for a in &e.aliases {
                if !is_normalized_form(a) {
                    return Err(format!("{id}: alias {a:?} is not normalized"));
                }
                if let Some(other) = seen.insert(a, id) {
                    return Err(format!("alias {a:?} held by {other} and {id}"));
                }
                if self.data.ignored.contains(a) {
                    return Err(format!("alias {a:?} of {id} is also ignored"));
                }
            }
        }
        Ok(())
    }

    fn require(&self, id: &EntityId) -> Result<&EntityRecord, ResolutionError> {
        self.entity(id).ok_or_else(|| ResolutionError::NotFound(id.clone()))
    }

    fn claim(&self, form: &str, for_id: Option<&EntityId>) -> Result<(), ResolutionError> {
        check_form(form)?;
        match self.lookup(form) {
            Some(holder) if Some(holder) != for_id => Err(ResolutionError::AliasConflict {
                alias: form.into(),
                holder: holder.clone(),
            }),
            _ => Ok(()),
        }
    }

    fn id_available(&self, id: &EntityId) -> bool {
        !self.contains(id) && !self.is_retired(id)
    }

    fn fresh_id(&self, display_name: &str) -> EntityId {
        let base = slug(display_name);
        let mut candidate = EntityId::new(base.clone());
        let mut n = 2;
        while !self.id_available(&candidate) {
            candidate = EntityId::new(format!("{base}_{n}"));
            n += 1;
        }
        candidate
    }

    fn mutate(&self, kind: &DecisionKind) -> Result<AliasTable, ResolutionError> {
        let mut next = self.clone();
        let data = &mut next.data;
        match kind {
            DecisionKind::MapTo { form, entity } => {
                self.require(entity)?;
                self.claim(form, Some(entity))?;
                data.ignored.remove(form);
                data.entities
                    .get_mut(entity)
                    .expect("checked")
                    .aliases
                    .insert(form.clone());
            }
            DecisionKind::NewEntity {
                id,
                display_name,
                aliases,
            } => {
                if display_name.trim().is_empty() {
                    return Err(ResolutionError::Validation("display name is empty".into()));
                }
                let id = match id {
                    Some(id) => {
                        if id.as_str().is_empty() || id.as_str().chars().any(char::is_whitespace) {
                            return Err(ResolutionError::Validation(format!("bad entity id {id:?}")));
                        }
                        if !self.id_available(id) {
                            return Err(ResolutionError::IdConflict(id.clone()));
                        }
                        id.clone()
                    }
                    None => self.fresh_id(display_name),
                };
                for a in aliases {
                    self.claim(a, None)?;
                    data.ignored.remove(a);
                }
                data.entities.insert(
                    id,
                    EntityRecord {
                        display_name: display_name.clone(),
                        aliases: aliases.iter().cloned().collect(),
                        notes: String::new(),
                    },
                );
            }
            DecisionKind::Merge { into, from } => {
                self.require(into)?;
                self.require(from)?;
                if into == from {
                    return Err(ResolutionError::Validation("cannot merge an entity into itself".into()));
                }
                let absorbed = data.entities.remove(from).expect("checked");
                let target = data.entities.get_mut(into).expect("checked");
                target.aliases.extend(absorbed.aliases);
                if !absorbed.notes.is_empty() {
                    if !target.notes.is_empty() {
                        target.notes.push('\n');
                    }
                    target.notes.push_str(&absorbed.notes);
                }
                data.retired.insert(from.clone());
            }
            DecisionKind::Split {
                entity,
                aliases,
                new_id,
                display_name,
            } => {
                let source = self.require(entity)?;
                if aliases.is_empty() {
                    return Err(ResolutionError::Validation("split needs at least one alias".into()));
                }
                if let Some(a) = aliases.iter().find(|a| !source.aliases.contains(*a)) {
                    return Err(ResolutionError::Validation(format!("{entity} has no alias {a:?}")));
                }
                if display_name.trim().is_empty() {
                    return Err(ResolutionError::Validation("display name is empty".into()));
                }
                if !self.id_available(new_id) {
                    return Err(ResolutionError::IdConflict(new_id.clone()));
                }
                let src = data.entities.get_mut(entity).expect("checked");
                for a in aliases {
                    src.aliases.remove(a);
                }
                data.entities.insert(
                    new_id.clone(),
                    EntityRecord {
                        display_name: display_name.clone(),
                        aliases: aliases.clone(),
                        notes: String::new(),
                    },
                );
            }
            DecisionKind::Ignore { form } => {
                self.claim(form, None)?;
                data.ignored.insert(form.clone());
            }
        }
        data.version += 1;
        next.reindex();
        debug_assert_eq!(next.audit(), Ok(()));
        Ok(next)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionKind {
    /// Attach a normalized form to an existing entity.
    MapTo { form: String, entity: EntityId },
    /// Create an entity; the id is derived from the display name if absent.
    NewEntity {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<EntityId>,
        display_name: String,
        #[serde(default)]
        aliases: Vec<String>,
    },
    /// Move every alias of `from` into `into` and retire `from`.
    Merge { into: EntityId, from: EntityId },
    /// Move a subset of aliases to a new entity.
    Split {
        entity: EntityId,
        aliases: BTreeSet<String>,
        new_id: EntityId,
        display_name: String,
    },
    /// Stop-list a form so it is never queued again.
    Ignore { form: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    #[serde(flatten)]
    pub kind: DecisionKind,
    pub actor: String,
    pub rationale: String,
    #[serde(default)]
    pub timestamp: String,
}

/// Apply one decision. On success returns the new table and the provenance
/// body describing the change; on failure the input is untouched.
pub fn apply_decision(
    table: &AliasTable,
    decision: &Decision,
) -> Result<(AliasTable, RecordBody), ResolutionError> {
    if decision.rationale.trim().is_empty() {
        return Err(ResolutionError::Validation("rationale is required".into()));
    }
    if decision.actor.trim().is_empty() {
        return Err(ResolutionError::Validation("actor is required".into()));
    }
    let next = table.mutate(&decision.kind)?;
    let params = serde_json::json!({
        "decision": serde_json::to_value(&decision.kind).expect("plain data"),
        "version_before": table.version(),
        "version_after": next.version(),
    });
    let record = RecordBody {
        step: StepKind::Decision,
        params,
        input_digest: table.digest(),
        output_digest: next.digest(),
        actor: decision.actor.clone(),
        rationale: decision.rationale.clone(),
        timestamp: decision.timestamp.clone(),
    };
    Ok((next, record))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ResolutionStatus {
    Resolved { entity: EntityId },
    Ambiguous { candidates: BTreeSet<EntityId> },
    Unknown,
    /// The form is on the stop-list.
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub mention: Mention,
    #[serde(flatten)]
    pub status: ResolutionStatus,
}

pub fn resolve_form(normalized: &str, table: &AliasTable) -> ResolutionStatus {
    if let Some(id) = table.lookup(normalized) {
        return ResolutionStatus::Resolved { entity: id.clone() };
    }
    if table.ignored().contains(normalized) {
        return ResolutionStatus::Ignored;
    }
    if let Some(candidates) = Normalizer::surname_component(normalized).and_then(|s| table.surname_candidates(s)) {
        if candidates.len() >= 2 {
            return ResolutionStatus::Ambiguous {
                candidates: candidates.clone(),
            };
        }
    }
    ResolutionStatus::Unknown
}

pub fn resolve_mention(mention: &Mention, table: &AliasTable) -> Resolution {
    Resolution {
        mention: mention.clone(),
        status: resolve_form(&mention.normalized, table),
    }
}

/// Resolutions of one corpus entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryResolutions {
    pub entry: usize,
    pub resolutions: Vec<Resolution>,
}

/// Resolve per-entry mention lists (parallel to `corpus.entries`).
pub fn resolve_corpus(mentions: &[Vec<Mention>], table: &AliasTable) -> Vec<EntryResolutions> {
    mentions
        .iter()
        .enumerate()
        .map(|(entry, ms)| EntryResolutions {
            entry,
            resolutions: ms.iter().map(|m| resolve_mention(m, table)).collect(),
        })
        .collect()
}

pub const QUEUE_CONTEXTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub normalized: String,
    #[serde(flatten)]
    pub status: ResolutionStatus,
    pub count: usize,
    pub surfaces: BTreeSet<String>,
    pub contexts: Vec<ContextSnippet>,
}

/// One item per distinct unresolved form, most frequent first, ties by form.
pub fn build_review_queue(corpus: &Corpus, resolutions: &[EntryResolutions]) -> Vec<ReviewItem> {
    let mut items: BTreeMap<&str, ReviewItem> = BTreeMap::new();
    for er in resolutions {
        let entry = &corpus.entries[er.entry];
        for r in &er.resolutions {
            if matches!(r.status, ResolutionStatus::Resolved { .. } | ResolutionStatus::Ignored) {
                continue;
            }
            let item = items.entry(r.mention.normalized.as_str()).or_insert_with(|| ReviewItem {
                normalized: r.mention.normalized.clone(),
                status: r.status.clone(),
                count: 0,
                surfaces: BTreeSet::new(),
                contexts: Vec::new(),
            });
            item.count += 1;
            item.surfaces.insert(r.mention.surface.clone());
            if item.contexts.len() < QUEUE_CONTEXTS {
                let (text, highlight) = window(&entry.text, r.mention.span, SNIPPET_RADIUS_CHARS);
                item.contexts.push(ContextSnippet {
                    entry: er.entry,
                    volume_id: entry.volume_id.clone(),
                    date: entry.date,
                    text,
                    highlight,
                });
            }
        }
    }
    let mut queue: Vec<ReviewItem> = items.into_values().collect();
    queue.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.normalized.cmp(&b.normalized)));
    queue
}

pub const DECISION_LOG_FORMAT: &str = "capta-aliases";

/// One accepted decision in `aliases.log`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRecord {
    pub seq: u64,
    pub prev_digest: Digest,
    pub decision: Decision,
    /// Table digest after applying the decision.
    pub table_digest: Digest,
    pub digest: Digest,
}

#[derive(Serialize)]
struct DecisionDigestFields<'a> {
    seq: u64,
    prev_digest: &'a Digest,
    decision: &'a Decision,
    table_digest: &'a Digest,
}

impl DecisionRecord {
    fn compute_digest(&self) -> Digest {
        Digest::of_value(&DecisionDigestFields {
            seq: self.seq,
            prev_digest: &self.prev_digest,
            decision: &self.decision,
            table_digest: &self.table_digest,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecisionLogError {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("record {seq}: {source}")]
    Rejected { seq: u64, source: ResolutionError },
    #[error("record {seq}: replayed table digest differs from the logged one")]
    Divergence { seq: u64 },
}

/// Hash-chained, append-only log of accepted decisions together with the
/// table they fold to.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecisionLog {
    records: Vec<DecisionRecord>,
    table: AliasTable,
}

impl DecisionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[DecisionRecord] {
        &self.records
    }

    pub fn table(&self) -> &AliasTable {
        &self.table
    }

    pub fn head(&self) -> Digest {
        self.records.last().map_or(Digest::ZERO, |r| r.digest)
    }

    /// Apply and, on success, append. Returns the appended record and the
    /// provenance body for the change.
    pub fn submit(&mut self, decision: Decision) -> Result<(&DecisionRecord, RecordBody), ResolutionError> {
        let (table, body) = apply_decision(&self.table, &decision)?;
        let mut record = DecisionRecord {
            seq: self.records.len() as u64 + 1,
            prev_digest: self.head(),
            decision,
            table_digest: table.digest(),
            digest: Digest::ZERO,
        };
        record.digest = record.compute_digest();
        self.records.push(record);
        self.table = table;
        Ok((self.records.last().expect("just pushed"), body))
    }

    /// Rebuild a log from records, re-applying every decision.
    pub fn replay<I: IntoIterator<Item = DecisionRecord>>(records: I) -> Result<Self, DecisionLogError> {
        let mut log = DecisionLog::new();
        for record in records {
            let seq = record.seq;
            if record.prev_digest != log.head() {
                return Err(LedgerError::ChainMismatch { seq }.into());
            }
            let expected = log.records.len() as u64 + 1;
            if seq != expected {
                return Err(LedgerError::Sequence { seq, expected }.into());
            }
            if record.compute_digest() != record.digest {
                return Err(LedgerError::Tampered { seq }.into());
            }
            let (table, _) = apply_decision(&log.table, &record.decision)
                .map_err(|source| DecisionLogError::Rejected { seq, source })?;
            if table.digest() != record.table_digest {
                return Err(DecisionLogError::Divergence { seq });
            }
            log.table = table;
            log.records.push(record);
        }
        Ok(log)
    }

    /// Table state after the first `version` decisions.
    pub fn table_at(&self, version: u64) -> Result<AliasTable, DecisionLogError> {
        let prefix = self.records.iter().take(version as usize).cloned();
        let log = Self::replay(prefix)?;
        if log.table.version() != version {
            return Err(DecisionLogError::Ledger(LedgerError::Sequence {
                seq: version,
                expected: log.table.version(),
            }));
        }
        Ok(log.table)
    }

    pub fn header_line() -> String {
        LogHeader::new(DECISION_LOG_FORMAT).to_line()
    }

    pub fn to_text(&self) -> String {
        let mut out = Self::header_line();
        out.push('\n');
        for r in &self.records {
            out.push_str(core::str::from_utf8(&canonical_bytes(r)).expect("JSON is UTF-8"));
            out.push('\n');
        }
        out
    }

    /// Serialized form of the most recent record, for appending to a file.
    pub fn last_line(&self) -> Option<String> {
        self.records
            .last()
            .map(|r| String::from_utf8(canonical_bytes(r)).expect("JSON is UTF-8"))
    }

    pub fn parse(text: &str) -> Result<Self, DecisionLogError> {
        let lines = split_log_lines(text, DECISION_LOG_FORMAT)?;
        let mut records = Vec::with_capacity(lines.len());
        for (i, line) in lines.into_iter().enumerate() {
            records.push(parse_canonical_line::<DecisionRecord>(line, i + 1)?);
        }
        Self::replay(records)
    }
}

impl core::fmt::Display for DecisionKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DecisionKind::MapTo { form, entity } => write!(f, "map {form:?} to {entity}"),
            DecisionKind::NewEntity { display_name, .. } => write!(f, "new entity {display_name:?}"),
            DecisionKind::Merge { into, from } => write!(f, "merge {from} into {into}"),
            DecisionKind::Split { entity, new_id, .. } => write!(f, "split {new_id} from {entity}"),
            DecisionKind::Ignore { form } => write!(f, "ignore {form:?}"),
        }
    }
}
