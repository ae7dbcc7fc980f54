//! Binary aesthetic judgments and per-page scores.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Good,
    Bad,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Good => "good",
            Verdict::Bad => "bad",
        }
    }
}

/// Page class derived from its score. A score of exactly 0.5 is left
/// unclassified and excluded from two-class tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PageClass {
    Good,
    Bad,
    Unclassified,
}

impl PageClass {
    pub fn from_score(score: f64) -> Self {
        if score > 0.5 {
            PageClass::Good
        } else if score < 0.5 {
            PageClass::Bad
        } else {
            PageClass::Unclassified
        }
    }
}

impl fmt::Display for PageClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PageClass::Good => "good",
            PageClass::Bad => "bad",
            PageClass::Unclassified => "unclassified",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PageScore {
    /// Fraction of "good" judgments.
    pub score: f64,
    pub class: PageClass,
    pub judgments: usize,
}

/// Judgments keyed by `(subject_id, page_id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingTable {
    judgments: BTreeMap<(String, String), Verdict>,
}

impl RatingTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one judgment; a second judgment for the same pair is an error.
    pub fn insert(
        &mut self,
        subject_id: impl Into<String>,
        page_id: impl Into<String>,
        verdict: Verdict,
    ) -> Result<()> {
        let key = (subject_id.into(), page_id.into());
        if self.judgments.contains_key(&key) {
            return Err(Error::validation(format!("duplicate judgment for subject {:?} on page {:?}", key.0, key.1)));
        }
        self.judgments.insert(key, verdict);
        Ok(())
    }

    pub fn judgments(&self) -> impl Iterator<Item = (&str, &str, Verdict)> {
        self.judgments.iter().map(|((s, p), v)| (s.as_str(), p.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    /// Scores for exactly the requested pages; a page without any judgment
    /// is an error naming that page.
    pub fn scores_for<'a>(&self, pages: impl IntoIterator<Item = &'a str>) -> Result<BTreeMap<String, PageScore>> {
        let all = aggregate_scores(self);
        pages
            .into_iter()
            .map(|p| {
                all.get(p)
                    .map(|s| (p.to_string(), *s))
                    .ok_or_else(|| Error::validation(format!("page {p:?} has no ratings")))
            })
            .collect()
    }
}

/// Per-page good-fraction score and class, over every page in the table.
pub fn aggregate_scores(table: &RatingTable) -> BTreeMap<String, PageScore> {
    let mut tallies: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for ((_, page), verdict) in &table.judgments {
        let t = tallies.entry(page.as_str()).or_default();
        t.1 += 1;
        if *verdict == Verdict::Good {
            t.0 += 1;
        }
    }
    tallies
        .into_iter()
        .map(|(page, (good, total))| {
            let score = good as f64 / total as f64;
            (page.to_string(), PageScore { score, class: PageClass::from_score(score), judgments: total })
        })
        .collect()
}

/// Reads a ratings CSV with header `subject_id,page_id,verdict`.
pub fn parse_ratings<R: Read>(reader: R) -> Result<RatingTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["subject_id", "page_id", "verdict"] {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header \"subject_id,page_id,verdict\", got {:?}",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut table = RatingTable::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(Error::Parse { line, message: format!("expected 3 columns, found {}", record.len()) });
        }
        let verdict = match &record[2] {
            "good" => Verdict::Good,
            "bad" => Verdict::Bad,
            other => return Err(Error::Parse { line, message: format!("verdict must be good or bad, got {other:?}") }),
        };
        if record[0].is_empty() || record[1].is_empty() {
            return Err(Error::Parse { line, message: "empty subject_id or page_id".into() });
        }
        table.insert(&record[0], &record[1], verdict).map_err(|e| Error::validation(format!("line {line}: {e}")))?;
    }
    Ok(table)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { len, expected_len, .. } => {
            Error::Parse { line, message: format!("expected {expected_len} columns, found {len}") }
        }
        other => Error::Parse { line, message: format!("{other:?}") },
    }
}

pub fn write_ratings<W: Write>(table: &RatingTable, mut out: W) -> Result<()> {
    writeln!(out, "subject_id,page_id,verdict")?;
    for (s, p, v) in table.judgments() {
        writeln!(out, "{s},{p},{}", v.as_str())?;
    }
    Ok(())
}
