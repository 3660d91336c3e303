//! Term presence across epochs, administration attribution, change trends
//! and redirect/decay classification.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, Utc};
use regex::Regex;
use scraper::{Html, Node};
use serde::{Deserialize, Serialize};

use crate::epoch::{parse_instant, ymd};
use crate::url_keys::{
    depth_of, normalize_host, parse_http_url, registrable_domain, strip_www, Canonicalizer,
    DepthClass, UrlError, DEFAULT_HIGH_THRESHOLD,
};

const SKIPPED_ELEMENTS: &[&str] = &["script", "style", "noscript", "template", "head"];

/// Visible text of an HTML document: lowercased, entities decoded,
/// whitespace collapsed. Script, style and head content is dropped.
pub fn extract_text(body: &str) -> String {
    if body.trim().is_empty() {
        return String::new();
    }
    let doc = Html::parse_document(body);
    let mut out = String::new();
    for node in doc.tree.root().descendants() {
        let Node::Text(text) = node.value() else {
            continue;
        };
        let hidden = node.ancestors().any(|a| {
            a.value()
                .as_element()
                .is_some_and(|e| SKIPPED_ELEMENTS.contains(&e.name()))
        });
        if hidden {
            continue;
        }
        out.push(' ');
        out.push_str(text);
    }
    normalize_text(&out)
}

pub fn normalize_text(text: &str) -> String {
    text.replace('\u{a0}', " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Compiled word/phrase matcher.
#[derive(Debug, Clone)]
pub struct TermMatcher {
    term: String,
    re: Regex,
}

impl TermMatcher {
    /// `stemming` also accepts common English inflections of the last word.
    pub fn new(term: &str, stemming: bool) -> Self {
        let term = normalize_text(term);
        let words: Vec<String> = term.split(' ').map(regex::escape).collect();
        let suffix = if stemming { "(?:s|es|ed|ing)?" } else { "" };
        let pattern = format!(r"\b{}{suffix}\b", words.join(r"\s+"));
        TermMatcher {
            re: Regex::new(&pattern).expect("escaped term compiles"),
            term,
        }
    }

    pub fn term(&self) -> &str {
        &self.term
    }

    pub fn is_match(&self, text: &str) -> bool {
        !self.term.is_empty() && self.re.is_match(text)
    }
}

/// Case-insensitive word-boundary match; phrases tolerate any whitespace run.
pub fn term_present(text: &str, term: &str) -> bool {
    TermMatcher::new(term, false).is_match(&text.to_lowercase())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Administration {
    pub label: String,
    pub party: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WindowsError {
    #[error("administration windows must not be empty")]
    Empty,
    #[error("window {label:?} ends before it starts")]
    Inverted { label: String },
    #[error("windows {first:?} and {second:?} overlap or are out of order")]
    Overlap { first: String, second: String },
    #[error("cannot read windows file {path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdministrationWindows(pub Vec<Administration>);

impl Default for AdministrationWindows {
    fn default() -> Self {
        let admin = |label: &str, party: &str, start, end| Administration {
            label: label.into(),
            party: party.into(),
            start,
            end,
        };
        AdministrationWindows(vec![
            admin("Bush", "Republican", ymd(2001, 1, 20), ymd(2008, 6, 30)),
            admin("Obama", "Democratic", ymd(2008, 7, 1), ymd(2016, 6, 30)),
            admin("Trump", "Republican", ymd(2016, 7, 1), ymd(2020, 7, 31)),
        ])
    }
}

impl AdministrationWindows {
    pub fn validate(&self) -> Result<(), WindowsError> {
        if self.0.is_empty() {
            return Err(WindowsError::Empty);
        }
        for w in &self.0 {
            if w.end < w.start {
                return Err(WindowsError::Inverted {
                    label: w.label.clone(),
                });
            }
        }
        for pair in self.0.windows(2) {
            if pair[1].start <= pair[0].end {
                return Err(WindowsError::Overlap {
                    first: pair[0].label.clone(),
                    second: pair[1].label.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, WindowsError> {
        let read_err = |message: String| WindowsError::Read {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let raw: Vec<BTreeMap<String, String>> =
            serde_json::from_str(&text).map_err(|e| read_err(e.to_string()))?;
        let mut out = Vec::new();
        for (i, row) in raw.iter().enumerate() {
            let field = |name: &str| {
                row.get(name)
                    .cloned()
                    .ok_or_else(|| read_err(format!("entry {i}: missing field `{name}`")))
            };
            let instant = |name: &str| {
                let v = field(name)?;
                parse_instant(&v).map_err(|e| read_err(format!("entry {i}: field `{name}`: {e}")))
            };
            out.push(Administration {
                label: field("label")?,
                party: field("party").unwrap_or_default(),
                start: instant("start")?,
                end: instant("end")?,
            });
        }
        let windows = AdministrationWindows(out);
        windows.validate()?;
        Ok(windows)
    }

    /// Window covering `at`.
    pub fn at(&self, at: DateTime<Utc>) -> Option<&Administration> {
        self.0.iter().find(|w| w.start <= at && at <= w.end)
    }

    /// Window overlapping `[from, to]` the longest.
    pub fn dominant(&self, from: DateTime<Utc>, to: DateTime<Utc>) -> Option<&Administration> {
        self.0
            .iter()
            .map(|w| {
                let lo = w.start.max(from);
                let hi = w.end.min(to);
                ((hi - lo).num_seconds(), w)
            })
            .filter(|(overlap, _)| *overlap > 0)
            .max_by_key(|(overlap, _)| *overlap)
            .map(|(_, w)| w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TermCategory {
    Climate,
    Regulation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackedTerm {
    pub term: String,
    pub category: TermCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrackedTermList(pub Vec<TrackedTerm>);

impl TrackedTermList {
    pub fn new(terms: Vec<TrackedTerm>) -> Self {
        TrackedTermList(
            terms
                .into_iter()
                .map(|t| TrackedTerm {
                    term: normalize_text(&t.term),
                    category: t.category,
                })
                .collect(),
        )
    }

    /// The eight terms published with their deletion counts.
    pub fn published() -> Self {
        use TermCategory::*;
        let t = |term: &str, category| TrackedTerm {
            term: term.into(),
            category,
        };
        TrackedTermList(vec![
            t("regulation", Regulation),
            t("safety", Regulation),
            t("sustainable", Climate),
            t("emission", Climate),
            t("climate", Climate),
            t("economic", Regulation),
            t("pollution", Climate),
            t("wildfires", Climate),
        ])
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let terms: Vec<TrackedTerm> =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        if terms.is_empty() {
            return Err(format!("{}: term list is empty", path.display()));
        }
        Ok(TrackedTermList::new(terms))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AddedUnder {
    PriorAdmin,
    MiddleAdmin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletedTerm {
    pub term: String,
    pub added_under: AddedUnder,
    /// Administration label the addition is attributed to.
    pub administration: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PageCategory {
    Unchanged,
    ChangedNoTrackedDeletion,
    DeletedBothOrigins,
    DeletedMiddleOnly,
    DeletedPriorOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermChangeReport {
    pub page: String,
    pub agency: String,
    pub presence: BTreeMap<String, Vec<bool>>,
    pub deleted_terms: Vec<DeletedTerm>,
    /// Tokens present in the middle epoch and absent in the late one.
    pub deleted_tokens: BTreeSet<String>,
    pub changed: bool,
    pub page_category: PageCategory,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChangeError {
    #[error("no body for epoch {epoch} of {page}")]
    MissingEpochBody { page: String, epoch: String },
    #[error("change analysis needs exactly three epochs, got {0}")]
    EpochCount(usize),
}

/// Early, middle and late epochs with their target instants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochRoles {
    pub names: [String; 3],
    pub targets: [DateTime<Utc>; 3],
}

impl EpochRoles {
    pub fn from_epochs(epochs: &[crate::epoch::EpochSpec]) -> Result<Self, ChangeError> {
        match epochs {
            [a, b, c] => Ok(EpochRoles {
                names: [a.name.clone(), b.name.clone(), c.name.clone()],
                targets: [a.target, b.target, c.target],
            }),
            other => Err(ChangeError::EpochCount(other.len())),
        }
    }
}

impl Default for EpochRoles {
    fn default() -> Self {
        EpochRoles::from_epochs(&crate::epoch::default_epochs()).expect("three default epochs")
    }
}

#[derive(Debug, Clone)]
pub struct ChangeConfig {
    pub roles: EpochRoles,
    pub windows: AdministrationWindows,
    pub stemming: bool,
    pub min_token_len: usize,
    pub drop_stop_words: bool,
}

impl Default for ChangeConfig {
    fn default() -> Self {
        ChangeConfig {
            roles: EpochRoles::default(),
            windows: AdministrationWindows::default(),
            stemming: false,
            min_token_len: 3,
            drop_stop_words: false,
        }
    }
}

const STOP_WORDS: &[&str] = &[
    "the", "and", "for", "are", "but", "not", "you", "all", "any", "can", "had", "her", "was",
    "one", "our", "out", "has", "have", "this", "that", "with", "from", "they", "will", "were",
    "been", "their", "which", "there", "these", "what", "about", "into", "more", "other",
];

/// Whitespace tokens with edge punctuation trimmed.
pub fn tokens(text: &str, min_len: usize, drop_stop_words: bool) -> BTreeSet<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| t.chars().count() >= min_len)
        .filter(|t| !drop_stop_words || !STOP_WORDS.contains(t))
        .map(str::to_string)
        .collect()
}

/// Compares one page's three epoch texts (already extracted) against the
/// tracked vocabulary.
pub fn attribute_changes(
    page: &str,
    agency: &str,
    texts: &BTreeMap<String, String>,
    terms: &TrackedTermList,
    config: &ChangeConfig,
) -> Result<TermChangeReport, ChangeError> {
    let roles = &config.roles;
    let text_for = |i: usize| {
        texts
            .get(&roles.names[i])
            .ok_or_else(|| ChangeError::MissingEpochBody {
                page: page.to_string(),
                epoch: roles.names[i].clone(),
            })
    };
    let (early, middle, late) = (text_for(0)?, text_for(1)?, text_for(2)?);
    let prior_label = config.windows.at(roles.targets[0]).map(|w| w.label.clone());
    let middle_label = config
        .windows
        .dominant(roles.targets[0], roles.targets[1])
        .map(|w| w.label.clone());

    let mut presence = BTreeMap::new();
    let mut deleted_terms = Vec::new();
    for tracked in &terms.0 {
        let m = TermMatcher::new(&tracked.term, config.stemming);
        let p = [m.is_match(early), m.is_match(middle), m.is_match(late)];
        if p[1] && !p[2] {
            let (added_under, administration) = if p[0] {
                (AddedUnder::PriorAdmin, prior_label.clone())
            } else {
                (AddedUnder::MiddleAdmin, middle_label.clone())
            };
            deleted_terms.push(DeletedTerm {
                term: tracked.term.clone(),
                added_under,
                administration,
            });
        }
        presence.insert(tracked.term.clone(), p.to_vec());
    }
    let middle_tokens = tokens(middle, config.min_token_len, config.drop_stop_words);
    let late_tokens = tokens(late, config.min_token_len, false);
    let deleted_tokens = middle_tokens.difference(&late_tokens).cloned().collect();

    let changed = early != late;
    let has = |a: AddedUnder| deleted_terms.iter().any(|d| d.added_under == a);
    let page_category = match (has(AddedUnder::PriorAdmin), has(AddedUnder::MiddleAdmin)) {
        (true, true) => PageCategory::DeletedBothOrigins,
        (false, true) => PageCategory::DeletedMiddleOnly,
        (true, false) => PageCategory::DeletedPriorOnly,
        (false, false) if changed => PageCategory::ChangedNoTrackedDeletion,
        (false, false) => PageCategory::Unchanged,
    };
    Ok(TermChangeReport {
        page: page.to_string(),
        agency: agency.to_string(),
        presence,
        deleted_terms,
        deleted_tokens,
        changed,
        page_category,
    })
}

/// Page counts behind the category percentages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub total_pages: usize,
    pub changed: usize,
    pub with_deletions: usize,
    pub deleted_both: usize,
    pub deleted_middle_only: usize,
    pub deleted_prior_only: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryPercentages {
    pub percent_middle_only: Option<f64>,
    pub percent_any_middle: Option<f64>,
    pub percent_changed: Option<f64>,
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| (num as f64 * 1000.0 / den as f64).round() / 10.0)
}

impl CategoryCounts {
    /// Percentages rounded to one decimal; `None` for a zero denominator.
    pub fn percentages(&self) -> CategoryPercentages {
        CategoryPercentages {
            percent_middle_only: percent(self.deleted_middle_only, self.with_deletions),
            percent_any_middle: percent(
                self.deleted_both + self.deleted_middle_only,
                self.with_deletions,
            ),
            percent_changed: percent(self.changed, self.total_pages),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary {
    pub by_category: BTreeMap<PageCategory, usize>,
    pub counts: CategoryCounts,
    pub percentages: CategoryPercentages,
}

pub fn aggregate_categories(reports: &[TermChangeReport]) -> CategorySummary {
    let mut by_category = BTreeMap::new();
    let mut counts = CategoryCounts {
        total_pages: reports.len(),
        ..Default::default()
    };
    for r in reports {
        *by_category.entry(r.page_category).or_default() += 1;
        counts.changed += usize::from(r.changed);
        match r.page_category {
            PageCategory::DeletedBothOrigins => counts.deleted_both += 1,
            PageCategory::DeletedMiddleOnly => counts.deleted_middle_only += 1,
            PageCategory::DeletedPriorOnly => counts.deleted_prior_only += 1,
            _ => {}
        }
    }
    counts.with_deletions = counts.deleted_both + counts.deleted_middle_only + counts.deleted_prior_only;
    CategorySummary {
        by_category,
        percentages: counts.percentages(),
        counts,
    }
}

pub const DEFAULT_TREND_THRESHOLD: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeTrend {
    pub agency: String,
    pub term: String,
    pub page_count: usize,
}

/// (agency, token) pairs deleted on at least `threshold` distinct pages,
/// ordered by agency, then count descending, then token.
pub fn mine_trends(reports: &[TermChangeReport], threshold: usize) -> Vec<ChangeTrend> {
    let mut pages: BTreeMap<(&str, &str), BTreeSet<&str>> = BTreeMap::new();
    for r in reports {
        for t in &r.deleted_tokens {
            pages.entry((&r.agency, t)).or_default().insert(&r.page);
        }
    }
    let mut out: Vec<ChangeTrend> = pages
        .into_iter()
        .filter(|(_, p)| p.len() >= threshold)
        .map(|((agency, term), p)| ChangeTrend {
            agency: agency.into(),
            term: term.into(),
            page_count: p.len(),
        })
        .collect();
    out.sort_by(|a, b| {
        (&a.agency, std::cmp::Reverse(a.page_count), &a.term)
            .cmp(&(&b.agency, std::cmp::Reverse(b.page_count), &b.term))
    });
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackedTermRow {
    pub term: String,
    pub category: TermCategory,
    pub count: usize,
}

/// Pages on which each tracked term was added in the middle epoch and then
/// deleted; count descending, ties by term.
pub fn tracked_term_table(reports: &[TermChangeReport], tracked: &TrackedTermList) -> Vec<TrackedTermRow> {
    let mut rows: Vec<TrackedTermRow> = tracked
        .0
        .iter()
        .map(|t| TrackedTermRow {
            term: t.term.clone(),
            category: t.category,
            count: reports
                .iter()
                .filter(|r| {
                    r.deleted_terms
                        .iter()
                        .any(|d| d.term == t.term && d.added_under == AddedUnder::MiddleAdmin)
                })
                .count(),
        })
        .collect();
    rows.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.term.cmp(&b.term)));
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RedirectKind {
    NonWwwToWww,
    OldToNew3xx,
    OldToNew404,
    SubdomainChange,
    Sink,
    ErroneousIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RedirectCategory {
    Canonical,
    NonCanonical,
    Soft404,
    DataQuality,
}

impl RedirectKind {
    pub fn category(self) -> RedirectCategory {
        match self {
            RedirectKind::NonWwwToWww => RedirectCategory::Canonical,
            RedirectKind::OldToNew3xx | RedirectKind::OldToNew404 | RedirectKind::SubdomainChange => {
                RedirectCategory::NonCanonical
            }
            RedirectKind::Sink => RedirectCategory::Soft404,
            RedirectKind::ErroneousIndex => RedirectCategory::DataQuality,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedirectClassification {
    pub kind: RedirectKind,
    pub category: RedirectCategory,
}

impl From<RedirectKind> for RedirectClassification {
    fn from(kind: RedirectKind) -> Self {
        RedirectClassification {
            kind,
            category: kind.category(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HopKind {
    #[default]
    Http,
    Meta,
    Script,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedirectHop {
    pub url: String,
    #[serde(default)]
    pub status: Option<u16>,
    #[serde(default)]
    pub kind: HopKind,
}

/// A later-epoch request for an old URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResponse {
    pub status: u16,
    #[serde(default)]
    pub redirect_chain: Vec<RedirectHop>,
    pub final_url: String,
    #[serde(default)]
    pub final_body: Option<String>,
}

impl ProbeResponse {
    fn redirected(&self) -> bool {
        (300..400).contains(&self.status) || !self.redirect_chain.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecayError {
    #[error(transparent)]
    Url(#[from] UrlError),
    #[error("{0} still resolves to itself with status 200")]
    NotDecayed(String),
}

#[derive(Debug, Clone)]
pub struct DecayConfig {
    pub sink_sibling_threshold: usize,
    pub high_threshold: usize,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            sink_sibling_threshold: 3,
            high_threshold: DEFAULT_HIGH_THRESHOLD,
        }
    }
}

/// Classifies one decayed URL. `siblings_landing` is the number of other
/// redirected Deep probes whose final URL is this probe's final URL;
/// `flagged_erroneous` is the operator's index/text disagreement flag.
pub fn classify_decay(
    old_url: &str,
    response: &ProbeResponse,
    siblings_landing: usize,
    flagged_erroneous: bool,
    config: &DecayConfig,
) -> Result<RedirectClassification, DecayError> {
    let old = parse_http_url(old_url)?;
    let new = parse_http_url(&response.final_url)?;
    if flagged_erroneous {
        return Ok(RedirectKind::ErroneousIndex.into());
    }
    let old_depth = depth_of(&old, config.high_threshold).class;
    let new_depth = depth_of(&new, config.high_threshold).class;
    if response.redirected()
        && old_depth == DepthClass::Deep
        && new_depth == DepthClass::High
        && siblings_landing >= config.sink_sibling_threshold
    {
        return Ok(RedirectKind::Sink.into());
    }
    if response.status == 404 {
        return Ok(RedirectKind::OldToNew404.into());
    }
    let old_host = normalize_host(old.host_str().unwrap_or_default());
    let new_host = normalize_host(new.host_str().unwrap_or_default());
    let same_rest = old.path() == new.path() && old.query() == new.query();
    if !response.redirected() && old_host == new_host && same_rest {
        return Err(DecayError::NotDecayed(old_url.to_string()));
    }
    if old_host != new_host && strip_www(&old_host) == strip_www(&new_host) && same_rest {
        return Ok(RedirectKind::NonWwwToWww.into());
    }
    if strip_www(&old_host) != strip_www(&new_host)
        && registrable_domain(&old_host) == registrable_domain(&new_host)
    {
        return Ok(RedirectKind::SubdomainChange.into());
    }
    Ok(RedirectKind::OldToNew3xx.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub old_url: String,
    pub response: ProbeResponse,
    #[serde(default)]
    pub erroneous_index: bool,
}

/// Probes to classify plus sibling probes that only inform sink detection.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub probes: Vec<Probe>,
    #[serde(default)]
    pub siblings: Vec<Probe>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecayRow {
    pub old_url: String,
    pub final_url: String,
    pub kind: RedirectKind,
    pub category: RedirectCategory,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub counts: BTreeMap<RedirectKind, usize>,
    pub errors: Vec<String>,
}

pub fn classify_probes(set: &ProbeSet, config: &DecayConfig) -> DecayReport {
    let canon = Canonicalizer::default();
    let landing_key = |p: &Probe| -> Option<String> {
        if !p.response.redirected() {
            return None;
        }
        let old = parse_http_url(&p.old_url).ok()?;
        if depth_of(&old, config.high_threshold).class != DepthClass::Deep {
            return None;
        }
        canon.canonicalize(&p.response.final_url).ok().map(|k| k.key)
    };
    let mut landings: BTreeMap<String, usize> = BTreeMap::new();
    for p in set.probes.iter().chain(&set.siblings) {
        if let Some(k) = landing_key(p) {
            *landings.entry(k).or_default() += 1;
        }
    }
    let mut report = DecayReport::default();
    for p in &set.probes {
        let siblings = landing_key(p).map_or(0, |k| landings[&k] - 1);
        match classify_decay(&p.old_url, &p.response, siblings, p.erroneous_index, config) {
            Ok(c) => {
                *report.counts.entry(c.kind).or_default() += 1;
                report.rows.push(DecayRow {
                    old_url: p.old_url.clone(),
                    final_url: p.response.final_url.clone(),
                    kind: c.kind,
                    category: c.category,
                });
            }
            Err(e) => report.errors.push(e.to_string()),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_extraction() {
        assert_eq!(extract_text("<p>Climate&nbsp;Change</p>"), "climate change");
        let t = extract_text("<html><head><title>T</title><style>p{}</style></head><body><script>regulation()</script><p>Hi</p>\n\n<p>There</p></body></html>");
        assert_eq!(t, "hi there");
        assert!(!term_present(&t, "regulation"));
        assert_eq!(extract_text(""), "");
    }

    #[test]
    fn term_matching() {
        assert!(term_present("climate change mitigation", "climate"));
        assert!(!term_present("declimatize", "climate"));
        assert!(!term_present("climates", "climate"));
        assert!(TermMatcher::new("climate", true).is_match("climates"));
        assert!(term_present("climate   change", "climate change"));
        assert!(term_present("Climate\nChange", "climate change"));
    }

    fn texts(e: &str, m: &str, l: &str) -> BTreeMap<String, String> {
        BTreeMap::from([
            ("2008".to_string(), e.to_string()),
            ("2016".to_string(), m.to_string()),
            ("2020".to_string(), l.to_string()),
        ])
    }

    fn one_term(term: &str) -> TrackedTermList {
        TrackedTermList::new(vec![TrackedTerm {
            term: term.into(),
            category: TermCategory::Climate,
        }])
    }

    #[test]
    fn attribution_rules() {
        let cfg = ChangeConfig::default();
        let terms = one_term("climate");
        let r = attribute_changes("p", "epa.gov", &texts("air", "air climate", "air"), &terms, &cfg).unwrap();
        assert_eq!(r.deleted_terms[0].added_under, AddedUnder::MiddleAdmin);
        assert_eq!(r.deleted_terms[0].administration.as_deref(), Some("Obama"));
        assert_eq!(r.page_category, PageCategory::DeletedMiddleOnly);
        assert!(!r.changed);
        let r = attribute_changes("p", "epa.gov", &texts("climate", "climate", "air"), &terms, &cfg).unwrap();
        assert_eq!(r.deleted_terms[0].added_under, AddedUnder::PriorAdmin);
        assert_eq!(r.deleted_terms[0].administration.as_deref(), Some("Bush"));
        assert_eq!(r.page_category, PageCategory::DeletedPriorOnly);
        let r = attribute_changes("p", "epa.gov", &texts("same", "same", "same"), &terms, &cfg).unwrap();
        assert_eq!(r.page_category, PageCategory::Unchanged);
        assert!(r.deleted_terms.is_empty());
        let mut missing = texts("a", "b", "c");
        missing.remove("2016");
        assert!(matches!(
            attribute_changes("p", "epa.gov", &missing, &terms, &cfg),
            Err(ChangeError::MissingEpochBody { .. })
        ));
    }

    #[test]
    fn paper_percentages() {
        let c = CategoryCounts {
            total_pages: 1220,
            changed: 990,
            with_deletions: 740,
            deleted_both: 373,
            deleted_middle_only: 274,
            deleted_prior_only: 55,
        };
        let p = c.percentages();
        assert_eq!(p.percent_middle_only, Some(37.0));
        assert_eq!(p.percent_any_middle, Some(87.4));
        assert_eq!(p.percent_changed, Some(81.1));
        let empty = aggregate_categories(&[]);
        assert_eq!(empty.counts.total_pages, 0);
        assert_eq!(empty.percentages.percent_changed, None);
    }

    #[test]
    fn windows_validation() {
        assert!(AdministrationWindows::default().validate().is_ok());
        let mut w = AdministrationWindows::default();
        w.0.swap(0, 1);
        assert!(matches!(w.validate(), Err(WindowsError::Overlap { .. })));
        assert_eq!(AdministrationWindows::default().at(ymd(2016, 7, 1)).unwrap().label, "Trump");
    }

    #[test]
    fn decay_examples() {
        let cfg = DecayConfig::default();
        let redirect = |to: &str| ProbeResponse {
            status: 301,
            redirect_chain: vec![RedirectHop { url: to.into(), status: Some(200), kind: HopKind::Http }],
            final_url: to.into(),
            final_body: None,
        };
        let c = classify_decay("http://epa.gov/x", &redirect("http://www.epa.gov/x"), 0, false, &cfg).unwrap();
        assert_eq!(c, RedirectClassification { kind: RedirectKind::NonWwwToWww, category: RedirectCategory::Canonical });
        let c = classify_decay(
            "http://www.globalchange.gov/news/great-lakes",
            &redirect("http://www.globalchange.gov/"),
            3,
            false,
            &cfg,
        )
        .unwrap();
        assert_eq!(c, RedirectClassification { kind: RedirectKind::Sink, category: RedirectCategory::Soft404 });
        let c = classify_decay(
            "http://www.globalchange.gov/news/great-lakes",
            &redirect("http://www.globalchange.gov/"),
            2,
            false,
            &cfg,
        )
        .unwrap();
        assert_eq!(c.kind, RedirectKind::OldToNew3xx);
        let c = classify_decay("http://www.nps.gov/a", &redirect("http://home.nps.gov/a"), 0, false, &cfg).unwrap();
        assert_eq!(c.kind, RedirectKind::SubdomainChange);
        let gone = ProbeResponse { status: 404, redirect_chain: vec![], final_url: "http://epa.gov/new".into(), final_body: None };
        assert_eq!(classify_decay("http://epa.gov/old", &gone, 0, false, &cfg).unwrap().kind, RedirectKind::OldToNew404);
        assert_eq!(classify_decay("http://epa.gov/old", &gone, 0, true, &cfg).unwrap().kind, RedirectKind::ErroneousIndex);
        let ok = ProbeResponse { status: 200, redirect_chain: vec![], final_url: "http://epa.gov/old".into(), final_body: None };
        assert!(matches!(classify_decay("http://epa.gov/old", &ok, 0, false, &cfg), Err(DecayError::NotDecayed(_))));
        assert!(matches!(classify_decay("nope", &ok, 0, false, &cfg), Err(DecayError::Url(_))));
    }

    #[test]
    fn trends_and_table() {
        let cfg = ChangeConfig::default();
        let terms = TrackedTermList::published();
        let mut reports = Vec::new();
        for i in 0..6 {
            let agency = if i < 5 { "osha.gov" } else { "nih.gov" };
            reports.push(
                attribute_changes(&format!("p{i}"), agency, &texts("x", "exposure safety limits", "limits"), &terms, &cfg)
                    .unwrap(),
            );
        }
        let trends = mine_trends(&reports, 5);
        assert_eq!(
            trends,
            vec![
                ChangeTrend { agency: "osha.gov".into(), term: "exposure".into(), page_count: 5 },
                ChangeTrend { agency: "osha.gov".into(), term: "safety".into(), page_count: 5 },
            ]
        );
        assert!(mine_trends(&reports[..4], 5).is_empty());
        let table = tracked_term_table(&reports, &terms);
        assert_eq!(table[0].term, "safety");
        assert_eq!(table[0].count, 6);
        let zeros: Vec<&str> = table[1..].iter().map(|r| r.term.as_str()).collect();
        let mut sorted = zeros.clone();
        sorted.sort();
        assert_eq!(zeros, sorted);
    }
}
