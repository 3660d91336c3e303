//! Archive timestamps, datetime windows and epoch specifications.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimeError {
    #[error("invalid 14-digit timestamp {0:?}")]
    Timestamp(String),
    #[error("invalid time bound {0:?}")]
    Bound(String),
    #[error("invalid datetime {0:?}")]
    Datetime(String),
    #[error("epoch {name:?}: target {target} outside window {start}..{end}")]
    TargetOutsideWindow {
        name: String,
        target: DateTime<Utc>,
        start: DateTime<Utc>,
        end: DateTime<Utc>,
    },
    #[error("epoch {name:?}: window start after end")]
    InvertedWindow { name: String },
}

/// 14-digit UTC archive timestamp (`YYYYMMDDhhmmss`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Timestamp(DateTime<Utc>);

impl Timestamp {
    pub fn new(dt: DateTime<Utc>) -> Self {
        Timestamp(dt)
    }

    pub fn parse14(s: &str) -> Result<Self, TimeError> {
        if s.len() != 14 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(TimeError::Timestamp(s.to_string()));
        }
        NaiveDateTime::parse_from_str(s, "%Y%m%d%H%M%S")
            .map(|naive| Timestamp(Utc.from_utc_datetime(&naive)))
            .map_err(|_| TimeError::Timestamp(s.to_string()))
    }

    pub fn datetime(&self) -> DateTime<Utc> {
        self.0
    }

    pub fn year(&self) -> i32 {
        self.0.year()
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y%m%d%H%M%S"))
    }
}

impl FromStr for Timestamp {
    type Err = TimeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timestamp::parse14(s)
    }
}

impl From<DateTime<Utc>> for Timestamp {
    fn from(dt: DateTime<Utc>) -> Self {
        Timestamp(dt)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Timestamp::parse14(&s).map_err(serde::de::Error::custom)
    }
}

/// Parses `2008`, `2008-01-01`, `2008-01-01T00:00:00Z` or a 14-digit timestamp.
pub fn parse_instant(s: &str) -> Result<DateTime<Utc>, TimeError> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc));
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight")));
    }
    if s.len() == 14 {
        return Timestamp::parse14(s).map(|t| t.datetime());
    }
    if s.len() == 4 {
        if let Ok(year) = s.parse::<i32>() {
            return Ok(year_start(year));
        }
    }
    Err(TimeError::Datetime(s.to_string()))
}

pub fn year_start(year: i32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).single().expect("valid year")
}

pub fn year_end(year: i32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(year, 12, 31, 23, 59, 59)
        .single()
        .expect("valid year")
}

pub fn ymd(year: i32, month: u32, day: u32) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(year, month, day, 0, 0, 0)
        .single()
        .expect("valid date")
}

/// Inclusive datetime range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl DateWindow {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Self {
        DateWindow { start, end }
    }

    pub fn years(first: i32, last: i32) -> Self {
        DateWindow::new(year_start(first), year_end(last))
    }

    pub fn calendar_year(year: i32) -> Self {
        DateWindow::years(year, year)
    }

    pub fn contains(&self, dt: DateTime<Utc>) -> bool {
        self.start <= dt && dt <= self.end
    }
}

/// One epoch of a snapshot tuple: a named window with a preferred instant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochSpec {
    pub name: String,
    pub window: DateWindow,
    pub target: DateTime<Utc>,
}

impl EpochSpec {
    pub fn new(name: impl Into<String>, window: DateWindow, target: DateTime<Utc>) -> Self {
        EpochSpec {
            name: name.into(),
            window,
            target,
        }
    }

    pub fn validate(&self) -> Result<(), TimeError> {
        if self.window.start > self.window.end {
            return Err(TimeError::InvertedWindow {
                name: self.name.clone(),
            });
        }
        if !self.window.contains(self.target) {
            return Err(TimeError::TargetOutsideWindow {
                name: self.name.clone(),
                target: self.target,
                start: self.window.start,
                end: self.window.end,
            });
        }
        Ok(())
    }
}

/// The 2008/2016/2020 triplet epochs.
///
/// The early window spans 2007–2008 to mirror the sticky crawler's accepted
/// years; later windows are calendar years targeted at July 1st.
pub fn default_epochs() -> Vec<EpochSpec> {
    vec![
        EpochSpec::new("2008", DateWindow::years(2007, 2008), ymd(2008, 1, 1)),
        EpochSpec::new("2016", DateWindow::calendar_year(2016), ymd(2016, 7, 1)),
        EpochSpec::new("2020", DateWindow::calendar_year(2020), ymd(2020, 7, 1)),
    ]
}

/// Picks the entry nearest `target`; earlier entries win ties.
pub fn nearest_to<T>(
    items: impl IntoIterator<Item = T>,
    target: DateTime<Utc>,
    at: impl Fn(&T) -> DateTime<Utc>,
) -> Option<T> {
    let mut best: Option<(i64, DateTime<Utc>, T)> = None;
    for item in items {
        let dt = at(&item);
        let distance = (dt - target).num_seconds().abs();
        let better = match &best {
            None => true,
            Some((d, bdt, _)) => distance < *d || (distance == *d && dt < *bdt),
        };
        if better {
            best = Some((distance, dt, item));
        }
    }
    best.map(|(_, _, item)| item)
}
