//! Capture provenance: collection names → source groups, and distributions.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::assembler::SnapshotTuple;
use crate::backend::{BackendError, ProvenanceBackend};
use crate::memento::CaptureRef;
use crate::rate::RateLimiter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceGroup {
    LargeImportedCrawls,
    ArchiveIt,
    SmallImportedCrawls,
    InternalCrawls,
    EndOfTerm,
    ArchiveTeam,
    Social,
    Monitoring,
    SavePageNow,
    Unknown,
}

impl SourceGroup {
    pub const ALL: [SourceGroup; 10] = [
        SourceGroup::LargeImportedCrawls,
        SourceGroup::ArchiveIt,
        SourceGroup::SmallImportedCrawls,
        SourceGroup::InternalCrawls,
        SourceGroup::EndOfTerm,
        SourceGroup::ArchiveTeam,
        SourceGroup::Social,
        SourceGroup::Monitoring,
        SourceGroup::SavePageNow,
        SourceGroup::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceGroup::LargeImportedCrawls => "LargeImportedCrawls",
            SourceGroup::ArchiveIt => "ArchiveIt",
            SourceGroup::SmallImportedCrawls => "SmallImportedCrawls",
            SourceGroup::InternalCrawls => "InternalCrawls",
            SourceGroup::EndOfTerm => "EndOfTerm",
            SourceGroup::ArchiveTeam => "ArchiveTeam",
            SourceGroup::Social => "Social",
            SourceGroup::Monitoring => "Monitoring",
            SourceGroup::SavePageNow => "SavePageNow",
            SourceGroup::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for SourceGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One collection-name pattern (case-insensitive regex).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupingRule {
    pub pattern: String,
    pub group: SourceGroup,
    pub organization: String,
    /// Restricts the rule to one epoch name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<String>,
}

impl GroupingRule {
    fn new(pattern: &str, group: SourceGroup, organization: &str) -> Self {
        GroupingRule {
            pattern: pattern.into(),
            group,
            organization: organization.into(),
            epoch: None,
        }
    }

    fn in_epoch(mut self, epoch: &str) -> Self {
        self.epoch = Some(epoch.into());
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GroupingError {
    #[error("cannot read grouping table {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("grouping table {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("rule {index} pattern {pattern:?}: {source}")]
    Pattern {
        index: usize,
        pattern: String,
        source: regex::Error,
    },
}

/// Ordered rules; the first rule matching any collection decides.
#[derive(Debug, Clone)]
pub struct SourceGroupingTable {
    rules: Vec<GroupingRule>,
    compiled: Vec<Regex>,
}

fn default_rules() -> Vec<GroupingRule> {
    use SourceGroup::*;
    vec![
        GroupingRule::new(r"save\s*page\s*now|\bspn\b|liveweb", SavePageNow, "Internet Archive"),
        GroupingRule::new(r"archive\s*team|archiveteam", ArchiveTeam, "Archive Team"),
        GroupingRule::new(r"end[\s_-]*of[\s_-]*term|\beot\b", EndOfTerm, "End of Term"),
        GroupingRule::new(r"archive[\s-]*it", ArchiveIt, "Archive-It"),
        GroupingRule::new(r"alexa", LargeImportedCrawls, "Alexa"),
        GroupingRule::new(r"common\s*crawl", LargeImportedCrawls, "Common Crawl"),
        GroupingRule::new(r"perma\.?cc", LargeImportedCrawls, "Perma.cc"),
        GroupingRule::new(r"portuguese|arquivo\.pt", LargeImportedCrawls, "Portuguese Web Archive"),
        GroupingRule::new(r"\bina\b|inaweb", SmallImportedCrawls, "INA"),
        GroupingRule::new(r"\bimls\b", SmallImportedCrawls, "IMLS"),
        GroupingRule::new(r"\bnara\b", SmallImportedCrawls, "NARA"),
        GroupingRule::new(r"gdelt", InternalCrawls, "GDELT").in_epoch("2016"),
        GroupingRule::new(r"gdelt", Monitoring, "GDELT").in_epoch("2020"),
        GroupingRule::new(r"\bedgi\b", Monitoring, "EDGI"),
        GroupingRule::new(r"media\s*cloud", Monitoring, "Mediacloud"),
        GroupingRule::new(r"wikipedia", Social, "Wikipedia"),
        GroupingRule::new(r"twitter", Social, "Twitter"),
        GroupingRule::new(
            r"internet\s*archive|wide\s*crawl|survey\s*crawl|global\s*crawl|\bia[\s_-]",
            InternalCrawls,
            "Internet Archive",
        ),
    ]
}

impl Default for SourceGroupingTable {
    fn default() -> Self {
        SourceGroupingTable::from_rules(default_rules()).expect("default rules compile")
    }
}

/// Group and organization assigned to a capture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    pub group: SourceGroup,
    pub organization: Option<String>,
}

impl SourceGroupingTable {
    pub fn from_rules(rules: Vec<GroupingRule>) -> Result<Self, GroupingError> {
        let compiled = rules
            .iter()
            .enumerate()
            .map(|(index, r)| {
                RegexBuilder::new(&r.pattern)
                    .case_insensitive(true)
                    .build()
                    .map_err(|source| GroupingError::Pattern {
                        index,
                        pattern: r.pattern.clone(),
                        source,
                    })
            })
            .collect::<Result<_, _>>()?;
        Ok(SourceGroupingTable { rules, compiled })
    }

    /// Reads a JSON array of rules.
    pub fn load(path: &Path) -> Result<Self, GroupingError> {
        let text = std::fs::read_to_string(path).map_err(|source| GroupingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let rules: Vec<GroupingRule> =
            serde_json::from_str(&text).map_err(|source| GroupingError::Json {
                path: path.display().to_string(),
                source,
            })?;
        SourceGroupingTable::from_rules(rules)
    }

    pub fn rules(&self) -> &[GroupingRule] {
        &self.rules
    }

    pub fn classify(&self, collections: &[String], epoch: &str) -> Grouping {
        for (rule, re) in self.rules.iter().zip(&self.compiled) {
            if rule.epoch.as_deref().is_some_and(|e| e != epoch) {
                continue;
            }
            if collections.iter().any(|c| re.is_match(c)) {
                return Grouping {
                    group: rule.group,
                    organization: Some(rule.organization.clone()),
                };
            }
        }
        Grouping {
            group: SourceGroup::Unknown,
            organization: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub surt: String,
    pub agency: String,
    pub epoch: String,
    pub capture: CaptureRef,
    pub collections: Vec<String>,
    pub source_group: SourceGroup,
    pub organization: Option<String>,
    pub partner: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProvenanceError {
    #[error("provenance backend unreachable: {0}")]
    BackendUnreachable(BackendError),
    #[error("trend shapes need exactly three epochs, got {found}")]
    FewerThanThreeEpochs { found: usize },
}

/// Looks up one capture's provenance through the rate gate. A missing
/// record is classified Unknown with no collections.
pub fn fetch_provenance(
    backend: &dyn ProvenanceBackend,
    limiter: &RateLimiter,
    table: &SourceGroupingTable,
    tuple: &SnapshotTuple,
    epoch: &str,
    capture: &CaptureRef,
) -> Result<ProvenanceRecord, ProvenanceError> {
    limiter.acquire();
    let info = backend
        .provenance(&capture.uri_m)
        .map_err(ProvenanceError::BackendUnreachable)?
        .unwrap_or_default();
    let grouping = table.classify(&info.collections, epoch);
    Ok(ProvenanceRecord {
        surt: tuple.original.key.clone(),
        agency: tuple.agency.clone(),
        epoch: epoch.to_string(),
        capture: capture.clone(),
        collections: info.collections,
        source_group: grouping.group,
        organization: grouping.organization,
        partner: info.partner,
    })
}

#[derive(Debug, Clone, Default)]
pub struct ProvenanceRun {
    pub records: Vec<ProvenanceRecord>,
    pub errors: Vec<String>,
}

/// Provenance of every tuple's accepted capture in every epoch, in dataset order.
pub fn mine_provenance(
    tuples: &[SnapshotTuple],
    backend: &dyn ProvenanceBackend,
    limiter: &RateLimiter,
    table: &SourceGroupingTable,
) -> ProvenanceRun {
    let mut run = ProvenanceRun::default();
    for tuple in tuples {
        for (epoch, capture) in &tuple.captures {
            match fetch_provenance(backend, limiter, table, tuple, epoch, capture) {
                Ok(r) => run.records.push(r),
                Err(e) => run.errors.push(format!("{} {epoch}: {e}", tuple.original.key)),
            }
        }
    }
    run
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    Agency,
    Epoch,
    Partner,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DistributionRow {
    pub key: String,
    pub group: SourceGroup,
    pub organization: String,
    pub count: usize,
}

pub const NO_VALUE: &str = "(none)";

/// Counts per (dimension value, group, organization); only non-zero rows.
pub fn distribution(records: &[ProvenanceRecord], by: Dimension) -> Vec<DistributionRow> {
    let mut counts: BTreeMap<(String, SourceGroup, String), usize> = BTreeMap::new();
    for r in records {
        let key = match by {
            Dimension::Agency => r.agency.clone(),
            Dimension::Epoch => r.epoch.clone(),
            Dimension::Partner => r.partner.clone().unwrap_or_else(|| NO_VALUE.into()),
        };
        let org = r.organization.clone().unwrap_or_else(|| NO_VALUE.into());
        *counts.entry((key, r.source_group, org)).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|((key, group, organization), count)| DistributionRow {
            key,
            group,
            organization,
            count,
        })
        .collect()
}

/// Group totals for one dimension value.
pub fn group_counts(rows: &[DistributionRow], key: &str) -> BTreeMap<SourceGroup, usize> {
    let mut out = BTreeMap::new();
    for r in rows.iter().filter(|r| r.key == key) {
        *out.entry(r.group).or_default() += r.count;
    }
    out
}

/// Organization totals for one dimension value.
pub fn organization_counts(rows: &[DistributionRow], key: &str) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in rows.iter().filter(|r| r.key == key) {
        *out.entry(r.organization.clone()).or_default() += r.count;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrendShape {
    AlwaysGrowing,
    AlwaysShrinking,
    GrowThenShrink,
    ShrinkThenGrow,
}

/// Shape of a three-point series. A flat step takes the direction of the
/// other step; an entirely flat series counts as growing.
pub fn shape_of(a: usize, b: usize, c: usize) -> TrendShape {
    let sign = |x: usize, y: usize| (y as i64 - x as i64).signum();
    let (mut d1, mut d2) = (sign(a, b), sign(b, c));
    if d1 == 0 {
        d1 = d2;
    }
    if d2 == 0 {
        d2 = d1;
    }
    match (d1, d2) {
        (-1, -1) => TrendShape::AlwaysShrinking,
        (1, -1) => TrendShape::GrowThenShrink,
        (-1, 1) => TrendShape::ShrinkThenGrow,
        _ => TrendShape::AlwaysGrowing,
    }
}

pub fn trend_shape<K: Ord + Clone>(
    per_epoch: &BTreeMap<K, Vec<usize>>,
) -> Result<BTreeMap<K, TrendShape>, ProvenanceError> {
    per_epoch
        .iter()
        .map(|(k, series)| match series.as_slice() {
            [a, b, c] => Ok((k.clone(), shape_of(*a, *b, *c))),
            other => Err(ProvenanceError::FewerThanThreeEpochs { found: other.len() }),
        })
        .collect()
}

/// Per-group counts across `epochs`, in epoch order, for every group seen.
pub fn epoch_series(records: &[ProvenanceRecord], epochs: &[String]) -> BTreeMap<SourceGroup, Vec<usize>> {
    let mut out: BTreeMap<SourceGroup, Vec<usize>> = BTreeMap::new();
    for r in records {
        let Some(i) = epochs.iter().position(|e| *e == r.epoch) else {
            continue;
        };
        out.entry(r.source_group).or_insert_with(|| vec![0; epochs.len()])[i] += 1;
    }
    out
}

/// `provenance.csv` rendering of the records.
pub fn records_csv(records: &[ProvenanceRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "surt", "agency", "epoch", "archive", "datetime", "uri_m", "source_group", "organization",
        "partner", "collections",
    ])
    .expect("in-memory csv");
    for r in records {
        w.write_record([
            r.surt.as_str(),
            &r.agency,
            &r.epoch,
            &r.capture.archive_id,
            &r.capture.timestamp().to_string(),
            &r.capture.uri_m,
            r.source_group.as_str(),
            r.organization.as_deref().unwrap_or(""),
            r.partner.as_deref().unwrap_or(""),
            &r.collections.join("|"),
        ])
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify(c: &str, epoch: &str) -> SourceGroup {
        SourceGroupingTable::default()
            .classify(&[c.to_string()], epoch)
            .group
    }

    #[test]
    fn grouping_examples() {
        assert_eq!(classify("Archive Team", "2016"), SourceGroup::ArchiveTeam);
        assert_eq!(classify("alexa crawls", "2008"), SourceGroup::LargeImportedCrawls);
        assert_eq!(classify("Common Crawl", "2008"), SourceGroup::LargeImportedCrawls);
        assert_eq!(classify("End of Term 2008 Web Archive", "2008"), SourceGroup::EndOfTerm);
        assert_eq!(classify("GDELT Project", "2016"), SourceGroup::InternalCrawls);
        assert_eq!(classify("GDELT Project", "2020"), SourceGroup::Monitoring);
        assert_eq!(classify("Save Page Now", "2020"), SourceGroup::SavePageNow);
        assert_eq!(classify("Internet Archive wide crawl", "2008"), SourceGroup::InternalCrawls);
        assert_eq!(classify("EDGI monitoring", "2020"), SourceGroup::Monitoring);
        assert_eq!(classify("INA web", "2008"), SourceGroup::SmallImportedCrawls);
        assert_eq!(classify("something else", "2008"), SourceGroup::Unknown);
        let t = SourceGroupingTable::default();
        assert_eq!(t.classify(&[], "2008").group, SourceGroup::Unknown);
    }

    #[test]
    fn grouping_table_from_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("groups.json");
        std::fs::write(&path, r#"[{"pattern": "^x$", "group": "Social", "organization": "X"}]"#).unwrap();
        let t = SourceGroupingTable::load(&path).unwrap();
        assert_eq!(t.classify(&["X".into()], "2020").group, SourceGroup::Social);
        std::fs::write(&path, r#"[{"pattern": "(", "group": "Social", "organization": "X"}]"#).unwrap();
        assert!(matches!(SourceGroupingTable::load(&path), Err(GroupingError::Pattern { .. })));
    }

    #[test]
    fn shape_examples() {
        assert_eq!(shape_of(0, 2, 9), TrendShape::AlwaysGrowing);
        assert_eq!(shape_of(82, 40, 5), TrendShape::AlwaysShrinking);
        assert_eq!(shape_of(6, 2, 5), TrendShape::ShrinkThenGrow);
        assert_eq!(shape_of(2, 9, 3), TrendShape::GrowThenShrink);
        assert_eq!(shape_of(0, 0, 9), TrendShape::AlwaysGrowing);
        assert_eq!(shape_of(4, 4, 4), TrendShape::AlwaysGrowing);
        assert_eq!(shape_of(5, 5, 1), TrendShape::AlwaysShrinking);
        let short = BTreeMap::from([("x", vec![1, 2])]);
        assert_eq!(trend_shape(&short), Err(ProvenanceError::FewerThanThreeEpochs { found: 2 }));
    }

    // Oracle: enumerate every sign pair and compare against the rule table.
    #[test]
    fn shape_exhaustive_sign_pairs() {
        for a in 0..4usize {
            for b in 0..4usize {
                for c in 0..4usize {
                    let s1 = (b as i64 - a as i64).signum();
                    let s2 = (c as i64 - b as i64).signum();
                    let expected = match (s1, s2) {
                        (0, 0) | (1, 1) | (0, 1) | (1, 0) => TrendShape::AlwaysGrowing,
                        (-1, -1) | (0, -1) | (-1, 0) => TrendShape::AlwaysShrinking,
                        (1, -1) => TrendShape::GrowThenShrink,
                        (-1, 1) => TrendShape::ShrinkThenGrow,
                        _ => unreachable!(),
                    };
                    assert_eq!(shape_of(a, b, c), expected, "{a} {b} {c}");
                }
            }
        }
    }
}
