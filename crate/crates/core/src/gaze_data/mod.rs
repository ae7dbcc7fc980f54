//! Fixation records, recordings, datasets and rating aggregation.

mod ratings;
mod table;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub use ratings::{aggregate_scores, parse_ratings, write_ratings, PageClass, PageScore, RatingTable, Verdict};
pub use table::{parse_fixation_table, write_fixation_table};

/// One detected gaze event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fixation {
    /// Offset from stimulus onset, ms.
    pub start_ms: f64,
    pub duration_ms: f64,
    pub x_px: f64,
    pub y_px: f64,
}

impl Fixation {
    /// Checked constructor: `start_ms >= 0`, `duration_ms > 0`, all fields finite.
    pub fn new(start_ms: f64, duration_ms: f64, x_px: f64, y_px: f64) -> Result<Self> {
        if !start_ms.is_finite() || start_ms < 0.0 {
            return Err(Error::validation(format!("start_ms must be finite and >= 0, got {start_ms}")));
        }
        if !duration_ms.is_finite() || duration_ms <= 0.0 {
            return Err(Error::validation(format!("duration_ms must be finite and > 0, got {duration_ms}")));
        }
        if !x_px.is_finite() || !y_px.is_finite() {
            return Err(Error::validation(format!("coordinates must be finite, got ({x_px}, {y_px})")));
        }
        Ok(Fixation { start_ms, duration_ms, x_px, y_px })
    }

    pub fn end_ms(&self) -> f64 {
        self.start_ms + self.duration_ms
    }
}

/// Screen (and attention-map grid) size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Screen {
    pub width: usize,
    pub height: usize,
}

impl Screen {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation(format!("screen must be non-empty, got {width}x{height}")));
        }
        Ok(Screen { width, height })
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    /// Whether a position lies on a pixel of the screen.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64
    }
}

impl Default for Screen {
    fn default() -> Self {
        Screen { width: 1280, height: 800 }
    }
}

impl fmt::Display for Screen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for Screen {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::validation(format!("screen must look like WxH, got {s:?}")))?;
        let parse = |v: &str| {
            v.trim().parse::<usize>().map_err(|_| Error::validation(format!("screen must look like WxH, got {s:?}")))
        };
        Screen::new(parse(w)?, parse(h)?)
    }
}

/// One subject's time-ordered fixations on one page.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recording {
    subject_id: String,
    page_id: String,
    fixations: Vec<Fixation>,
}

impl Recording {
    /// Sorts the fixations by start time. Two fixations with the same start
    /// time are rejected.
    pub fn new(
        subject_id: impl Into<String>,
        page_id: impl Into<String>,
        mut fixations: Vec<Fixation>,
    ) -> Result<Self> {
        let subject_id = subject_id.into();
        let page_id = page_id.into();
        fixations.sort_by(|a, b| a.start_ms.total_cmp(&b.start_ms));
        if let Some(w) = fixations.windows(2).find(|w| w[0].start_ms == w[1].start_ms) {
            return Err(Error::validation(format!(
                "duplicate fixation start {} for subject {subject_id:?} on page {page_id:?}",
                w[0].start_ms
            )));
        }
        Ok(Recording { subject_id, page_id, fixations })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn page_id(&self) -> &str {
        &self.page_id
    }

    pub fn fixations(&self) -> &[Fixation] {
        &self.fixations
    }

    pub fn is_empty(&self) -> bool {
        self.fixations.is_empty()
    }

    /// End of the last fixation, or 0 for an empty recording.
    pub fn end_ms(&self) -> f64 {
        self.fixations.iter().map(Fixation::end_ms).fold(0.0, f64::max)
    }
}

/// Keeps the fixations that started before `t_ms`, clipping each duration so
/// that nothing extends past `t_ms`.
pub fn slice_recording(recording: &Recording, t_ms: f64) -> Recording {
    let fixations = recording
        .fixations
        .iter()
        .take_while(|f| f.start_ms < t_ms)
        .map(|f| Fixation { duration_ms: f.duration_ms.min(t_ms - f.start_ms), ..*f })
        .collect();
    Recording { subject_id: recording.subject_id.clone(), page_id: recording.page_id.clone(), fixations }
}

/// All recordings of a study on one screen geometry.
///
/// Recordings are kept sorted by `(page_id, subject_id)`, so each page's
/// recordings form one contiguous run.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    screen: Screen,
    recordings: Vec<Recording>,
    off_screen: usize,
}

impl Dataset {
    pub fn new(screen: Screen, mut recordings: Vec<Recording>) -> Result<Self> {
        recordings.sort_by(|a, b| (&a.page_id, &a.subject_id).cmp(&(&b.page_id, &b.subject_id)));
        if let Some(w) =
            recordings.windows(2).find(|w| w[0].page_id == w[1].page_id && w[0].subject_id == w[1].subject_id)
        {
            return Err(Error::validation(format!(
                "duplicate recording for subject {:?} on page {:?}",
                w[0].subject_id, w[0].page_id
            )));
        }
        let off_screen =
            recordings.iter().flat_map(|r| &r.fixations).filter(|f| !screen.contains(f.x_px, f.y_px)).count();
        Ok(Dataset { screen, recordings, off_screen })
    }

    pub fn screen(&self) -> Screen {
        self.screen
    }

    pub fn recordings(&self) -> &[Recording] {
        &self.recordings
    }

    /// Number of fixations whose position lies outside the screen. They are
    /// kept; their kernels contribute whatever mass lands inside the grid.
    pub fn off_screen_count(&self) -> usize {
        self.off_screen
    }

    pub fn fixation_count(&self) -> usize {
        self.recordings.iter().map(|r| r.fixations.len()).sum()
    }

    /// Page ids in sorted order.
    pub fn pages(&self) -> Vec<&str> {
        let mut pages: Vec<&str> = self.recordings.iter().map(|r| r.page_id.as_str()).collect();
        pages.dedup();
        pages
    }

    pub fn subjects(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.recordings.iter().map(|r| r.subject_id.as_str()).collect();
        set.into_iter().collect()
    }

    /// The recordings of one page, ordered by subject id. Empty if the page
    /// is unknown.
    pub fn page_recordings(&self, page_id: &str) -> &[Recording] {
        let start = self.recordings.partition_point(|r| r.page_id.as_str() < page_id);
        let end = self.recordings.partition_point(|r| r.page_id.as_str() <= page_id);
        &self.recordings[start..end]
    }

    /// Recordings grouped per page, in page order.
    pub fn by_page(&self) -> BTreeMap<&str, &[Recording]> {
        self.pages().into_iter().map(|p| (p, self.page_recordings(p))).collect()
    }

    /// A copy with every recording cut at `t_ms`.
    pub fn sliced(&self, t_ms: f64) -> Dataset {
        Dataset {
            screen: self.screen,
            recordings: self.recordings.iter().map(|r| slice_recording(r, t_ms)).collect(),
            off_screen: 0,
        }
        .recount()
    }

    fn recount(mut self) -> Self {
        let screen = self.screen;
        self.off_screen =
            self.recordings.iter().flat_map(|r| &r.fixations).filter(|f| !screen.contains(f.x_px, f.y_px)).count();
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(start: f64, dur: f64, x: f64, y: f64) -> Fixation {
        Fixation::new(start, dur, x, y).unwrap()
    }

    fn rec() -> Recording {
        Recording::new(
            "s1",
            "p1",
            vec![fx(0.0, 200.0, 10.0, 10.0), fx(250.0, 300.0, 40.0, 40.0), fx(900.0, 400.0, 5.0, 5.0)],
        )
        .unwrap()
    }

    #[test]
    fn fixation_rejects_bad_fields() {
        assert!(matches!(Fixation::new(100.0, -5.0, 10.0, 10.0), Err(Error::Validation(m)) if m.contains("duration")));
        assert!(Fixation::new(100.0, 0.0, 10.0, 10.0).is_err());
        assert!(Fixation::new(-1.0, 10.0, 10.0, 10.0).is_err());
        assert!(Fixation::new(0.0, 10.0, f64::NAN, 10.0).is_err());
        // off-screen is allowed at this level
        assert!(Fixation::new(0.0, 10.0, -50.0, 5000.0).is_ok());
    }

    #[test]
    fn screen_parses() {
        assert_eq!("1280x800".parse::<Screen>().unwrap(), Screen::default());
        assert_eq!("64X48".parse::<Screen>().unwrap(), Screen::new(64, 48).unwrap());
        assert!("1280".parse::<Screen>().is_err());
        assert!("0x5".parse::<Screen>().is_err());
    }

    #[test]
    fn slice_at_zero_is_empty() {
        assert!(slice_recording(&rec(), 0.0).is_empty());
    }

    #[test]
    fn slice_past_end_is_identity() {
        let r = rec();
        assert_eq!(slice_recording(&r, r.end_ms()), r);
        assert_eq!(slice_recording(&r, 1e9), r);
    }

    #[test]
    fn slice_clips_duration() {
        let r = rec();
        let s = slice_recording(&r, 1000.0);
        assert_eq!(s.fixations().len(), 3);
        assert_eq!(s.fixations()[2].duration_ms, 100.0);
        // original untouched
        assert_eq!(r.fixations()[2].duration_ms, 400.0);
        // a fixation starting exactly at t is excluded
        assert_eq!(slice_recording(&r, 900.0).fixations().len(), 2);
    }

    #[test]
    fn recording_sorts_and_rejects_duplicates() {
        let r = Recording::new("s", "p", vec![fx(50.0, 1.0, 0.0, 0.0), fx(10.0, 1.0, 0.0, 0.0)]).unwrap();
        assert_eq!(r.fixations()[0].start_ms, 10.0);
        assert!(Recording::new("s", "p", vec![fx(10.0, 1.0, 0.0, 0.0), fx(10.0, 2.0, 1.0, 1.0)]).is_err());
    }

    #[test]
    fn dataset_groups_and_flags() {
        let a = Recording::new("s2", "p1", vec![fx(0.0, 1.0, -3.0, 0.0)]).unwrap();
        let b = Recording::new("s1", "p2", vec![fx(0.0, 1.0, 3.0, 3.0)]).unwrap();
        let c = Recording::new("s1", "p1", vec![fx(0.0, 1.0, 3.0, 900.0)]).unwrap();
        let d = Dataset::new(Screen::default(), vec![a, b, c]).unwrap();
        assert_eq!(d.pages(), vec!["p1", "p2"]);
        assert_eq!(d.subjects(), vec!["s1", "s2"]);
        assert_eq!(d.off_screen_count(), 2);
        let p1: Vec<&str> = d.page_recordings("p1").iter().map(|r| r.subject_id()).collect();
        assert_eq!(p1, vec!["s1", "s2"]);
        assert!(d.page_recordings("nope").is_empty());
    }

    #[test]
    fn dataset_rejects_duplicate_pairs() {
        let a = Recording::new("s1", "p1", vec![fx(0.0, 1.0, 0.0, 0.0)]).unwrap();
        assert!(Dataset::new(Screen::default(), vec![a.clone(), a]).is_err());
    }
}
