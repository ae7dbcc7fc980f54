//! Tab-separated fixation tables.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{Dataset, Fixation, Recording, Screen};
use crate::error::{Error, Result};

const HEADER: [&str; 6] = ["subject_id", "page_id", "start_ms", "duration_ms", "x", "y"];

/// Reads a fixation table.
///
/// The first line must be the header `subject_id page_id start_ms
/// duration_ms x y` (tab separated). Blank lines are skipped. Rows are
/// grouped into one recording per `(subject, page)` and sorted by start time.
pub fn parse_fixation_table<R: BufRead>(reader: R, screen: Screen) -> Result<Dataset> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(Error::Parse { line: 1, message: "empty input, expected header".into() }),
    };
    let header_fields: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    if header_fields != HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {:?}, got {:?}", HEADER.join("\t"), header.trim_end()),
        });
    }

    let mut groups: BTreeMap<(String, String), Vec<(usize, Fixation)>> = BTreeMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != HEADER.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} columns, found {}", HEADER.len(), fields.len()),
            });
        }
        let number = |col: usize| -> Result<f64> {
            fields[col].trim().parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("{} is not a number: {:?}", HEADER[col], fields[col]),
            })
        };
        let (subject, page) = (fields[0].trim(), fields[1].trim());
        if subject.is_empty() || page.is_empty() {
            return Err(Error::Parse { line: line_no, message: "empty subject_id or page_id".into() });
        }
        let fixation = Fixation::new(number(2)?, number(3)?, number(4)?, number(5)?)
            .map_err(|e| Error::validation(format!("line {line_no}: {e}")))?;
        groups.entry((subject.to_string(), page.to_string())).or_default().push((line_no, fixation));
    }

    let mut recordings = Vec::with_capacity(groups.len());
    for ((subject, page), mut rows) in groups {
        rows.sort_by(|a, b| a.1.start_ms.total_cmp(&b.1.start_ms));
        if let Some(w) = rows.windows(2).find(|w| w[0].1.start_ms == w[1].1.start_ms) {
            return Err(Error::validation(format!(
                "line {}: duplicate fixation (subject {subject:?}, page {page:?}, start_ms {}), first seen on line {}",
                w[1].0.max(w[0].0),
                w[0].1.start_ms,
                w[1].0.min(w[0].0),
            )));
        }
        recordings.push(Recording::new(subject, page, rows.into_iter().map(|(_, f)| f).collect())?);
    }
    Dataset::new(screen, recordings)
}

/// Writes `dataset` in the canonical table layout: header, then one row per
/// fixation in `(page, subject, start)` order.
pub fn write_fixation_table<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    writeln!(out, "{}", HEADER.join("\t"))?;
    for rec in dataset.recordings() {
        for f in rec.fixations() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                rec.subject_id(),
                rec.page_id(),
                f.start_ms,
                f.duration_ms,
                f.x_px,
                f.y_px
            )?;
        }
    }
    Ok(())
}
