//! Seeded synthetic studies and the untruncated reference entropy.
//!
//! A synthetic page is a mixture: with probability `1 − noise_level` a
//! fixation lands near one of the page's hotspots (isotropic Gaussian,
//! chosen by weight), otherwise uniformly anywhere on the screen. Durations
//! are log-normal. Every `(page, subject)` pair draws from its own ChaCha
//! stream, so output depends only on the seed and the spec.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::Deserialize;

use crate::entropy::shannon_entropy;
use crate::error::{Error, Result};
use crate::gaze_data::{slice_recording, Dataset, Fixation, PageClass, RatingTable, Recording, Screen, Verdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hotspot {
    pub x: f64,
    pub y: f64,
    /// Standard deviation of the fixation scatter, px.
    pub spread: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationModel {
    pub median_ms: f64,
    /// Standard deviation of `ln(duration)`.
    pub sigma_log: f64,
}

impl Default for DurationModel {
    fn default() -> Self {
        DurationModel { median_ms: 250.0, sigma_log: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPageSpec {
    pub page_id: String,
    pub hotspots: Vec<Hotspot>,
    pub noise_level: f64,
    pub fixations_per_subject: usize,
    pub durations: DurationModel,
    /// Declared quality; subjects rate the page good with probability
    /// `good_rate`.
    pub quality: PageClass,
    pub good_rate: f64,
}

impl SyntheticPageSpec {
    fn validate(&self) -> Result<()> {
        let id = &self.page_id;
        if id.is_empty() {
            return Err(Error::validation("page id is empty"));
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return Err(Error::validation(format!("page {id}: noise must be in [0, 1], got {}", self.noise_level)));
        }
        if self.hotspots.is_empty() && self.noise_level < 1.0 {
            return Err(Error::validation(format!("page {id}: no hotspots but noise < 1")));
        }
        for (i, h) in self.hotspots.iter().enumerate() {
            if !(h.weight > 0.0) || !(h.spread > 0.0) || !h.x.is_finite() || !h.y.is_finite() {
                return Err(Error::validation(format!(
                    "page {id}: hotspot {i} needs positive weight and spread and a finite center"
                )));
            }
        }
        if self.fixations_per_subject == 0 {
            return Err(Error::validation(format!("page {id}: fixations per subject must be at least 1")));
        }
        if !(self.durations.median_ms > 0.0) || !(self.durations.sigma_log >= 0.0) {
            return Err(Error::validation(format!("page {id}: duration median must be > 0 and sigma_log >= 0")));
        }
        if !(0.0..=1.0).contains(&self.good_rate) {
            return Err(Error::validation(format!("page {id}: good_rate must be in [0, 1]")));
        }
        Ok(())
    }
}

/// Timing knobs shared by all pages of a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    /// Recordings are cut at this time (ms) when set.
    pub span_ms: Option<f64>,
    /// Gap between the end of one fixation and the start of the next, ms.
    pub saccade_ms: f64,
    /// Number of opening fixations per recording drawn around the screen
    /// centre, whatever the page looks like.
    pub central_onset: usize,
}

/// Spread (px) of the opening fixations around the screen centre.
pub const CENTRAL_ONSET_SPREAD_PX: f64 = 60.0;

impl Default for Timing {
    fn default() -> Self {
        Timing { span_ms: None, saccade_ms: 40.0, central_onset: 0 }
    }
}

/// A complete synthetic study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub screen: Screen,
    pub n_subjects: usize,
    pub timing: Timing,
    pub pages: Vec<SyntheticPageSpec>,
}

impl StudySpec {
    pub fn generate(&self, seed: u64) -> Result<(Dataset, RatingTable)> {
        let dataset = generate_with(&self.pages, self.n_subjects, self.screen, self.timing, seed)?;
        let ratings = generate_ratings(&self.pages, self.n_subjects, seed)?;
        Ok((dataset, ratings))
    }
}

const FIXATION_STREAM: u64 = 0;
const RATING_STREAM: u64 = 1 << 62;
const LAYOUT_STREAM: u64 = 1 << 61;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn subject_id(index: usize, n_subjects: usize) -> String {
    let width = n_subjects.to_string().len();
    format!("s{:0width$}", index + 1)
}

/// Rounds to one decimal, landing on the double nearest that decimal.
fn round_tenth(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn simulate(spec: &SyntheticPageSpec, screen: Screen, timing: Timing, rng: &mut ChaCha8Rng) -> Result<Vec<Fixation>> {
    let weights = (!spec.hotspots.is_empty())
        .then(|| WeightedIndex::new(spec.hotspots.iter().map(|h| h.weight)))
        .transpose()
        .map_err(|e| Error::validation(format!("page {}: {e}", spec.page_id)))?;
    let durations = LogNormal::new(spec.durations.median_ms.ln(), spec.durations.sigma_log)
        .map_err(|e| Error::validation(format!("page {}: {e}", spec.page_id)))?;
    let mut start = 0.0;
    let mut out = Vec::with_capacity(spec.fixations_per_subject);
    let centre = Normal::new(0.0, CENTRAL_ONSET_SPREAD_PX).expect("positive spread");
    for i in 0..spec.fixations_per_subject {
        let noisy = rng.random::<f64>() < spec.noise_level;
        let (x, y) = match (&weights, noisy) {
            _ if i < timing.central_onset => {
                (screen.width as f64 / 2.0 + centre.sample(rng), screen.height as f64 / 2.0 + centre.sample(rng))
            }
            (Some(w), false) => {
                let h = spec.hotspots[w.sample(rng)];
                let n = Normal::new(0.0, h.spread).expect("validated spread");
                (h.x + n.sample(rng), h.y + n.sample(rng))
            }
            _ => (rng.random::<f64>() * screen.width as f64, rng.random::<f64>() * screen.height as f64),
        };
        let duration = durations.sample(rng).round().max(1.0);
        out.push(Fixation::new(start, duration, round_tenth(x), round_tenth(y))?);
        start += duration + timing.saccade_ms;
    }
    Ok(out)
}

/// Fixations for every `(page, subject)` with default timing (no span cut,
/// 40 ms between fixations).
pub fn generate_dataset(specs: &[SyntheticPageSpec], n_subjects: usize, screen: Screen, seed: u64) -> Result<Dataset> {
    generate_with(specs, n_subjects, screen, Timing::default(), seed)
}

pub fn generate_with(
    specs: &[SyntheticPageSpec],
    n_subjects: usize,
    screen: Screen,
    timing: Timing,
    seed: u64,
) -> Result<Dataset> {
    check_study(specs, n_subjects)?;
    let mut recordings = Vec::with_capacity(specs.len() * n_subjects);
    for (p, spec) in specs.iter().enumerate() {
        for s in 0..n_subjects {
            let mut rng = stream_rng(seed, FIXATION_STREAM | ((p as u64) << 32) | s as u64);
            let rec =
                Recording::new(subject_id(s, n_subjects), &spec.page_id, simulate(spec, screen, timing, &mut rng)?)?;
            recordings.push(match timing.span_ms {
                Some(t) => slice_recording(&rec, t),
                None => rec,
            });
        }
    }
    Dataset::new(screen, recordings)
}

/// One good/bad verdict per `(subject, page)`, good with the page's
/// `good_rate`.
pub fn generate_ratings(specs: &[SyntheticPageSpec], n_subjects: usize, seed: u64) -> Result<RatingTable> {
    check_study(specs, n_subjects)?;
    let mut table = RatingTable::new();
    for (p, spec) in specs.iter().enumerate() {
        let mut rng = stream_rng(seed, RATING_STREAM | p as u64);
        for s in 0..n_subjects {
            let v = if rng.random::<f64>() < spec.good_rate { Verdict::Good } else { Verdict::Bad };
            table.insert(subject_id(s, n_subjects), &spec.page_id, v)?;
        }
    }
    Ok(table)
}

fn check_study(specs: &[SyntheticPageSpec], n_subjects: usize) -> Result<()> {
    if n_subjects < 2 {
        return Err(Error::validation(format!("subjects must be at least 2, got {n_subjects}")));
    }
    if specs.is_empty() {
        return Err(Error::validation("no pages in study"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for s in specs {
        s.validate()?;
        if !seen.insert(&s.page_id) {
            return Err(Error::validation(format!("duplicate page id {:?}", s.page_id)));
        }
    }
    Ok(())
}

/// `count` hotspots placed uniformly inside the central 80% of the screen.
pub fn random_hotspots(seed: u64, page_index: usize, count: usize, spread: f64, screen: Screen) -> Vec<Hotspot> {
    let mut rng = stream_rng(seed, LAYOUT_STREAM | page_index as u64);
    let (w, h) = (screen.width as f64, screen.height as f64);
    (0..count)
        .map(|_| Hotspot {
            x: round_tenth(w * (0.1 + 0.8 * rng.random::<f64>())),
            y: round_tenth(h * (0.1 + 0.8 * rng.random::<f64>())),
            spread,
            weight: 1.0,
        })
        .collect()
}

/// A 40-page study in the shape of a typical aesthetics experiment: ten
/// noise levels 0.0, 0.1, …, 0.9 with four pages each, three hotspots per
/// page, 3000 ms viewing whose first fixation lands near the screen
/// centre. A page at noise `q` is rated good with
/// probability `0.95 − q`, so the twenty pages at `q <= 0.4` are declared
/// good and the rest bad.
pub fn noise_ladder_study(n_subjects: usize, screen: Screen, seed: u64) -> StudySpec {
    let mut pages = Vec::with_capacity(40);
    for level in 0..10 {
        let noise = level as f64 / 10.0;
        for k in 0..4 {
            let index = pages.len();
            let good_rate = (95 - 10 * level) as f64 / 100.0;
            pages.push(SyntheticPageSpec {
                page_id: format!("n{level}-{}", k + 1),
                hotspots: random_hotspots(seed, index, 3, 40.0, screen),
                noise_level: noise,
                fixations_per_subject: 20,
                durations: DurationModel::default(),
                quality: PageClass::from_score(good_rate),
                good_rate,
            });
        }
    }
    StudySpec {
        screen,
        n_subjects,
        timing: Timing { span_ms: Some(3000.0), saccade_ms: 40.0, central_onset: 1 },
        pages,
    }
}

// ---- study files ----

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyFile {
    #[serde(default)]
    screen: Option<String>,
    subjects: usize,
    #[serde(default)]
    span_ms: Option<f64>,
    #[serde(default)]
    saccade_ms: Option<f64>,
    #[serde(default)]
    central_onset: usize,
    #[serde(default)]
    durations: Option<DurationFile>,
    #[serde(default)]
    pages: Vec<PageFile>,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct DurationFile {
    median_ms: f64,
    sigma_log: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PageFile {
    id: String,
    noise: f64,
    quality: String,
    #[serde(default)]
    good_rate: Option<f64>,
    fixations: usize,
    #[serde(default)]
    repeat: Option<usize>,
    #[serde(default)]
    durations: Option<DurationFile>,
    #[serde(default)]
    hotspots: Vec<HotspotFile>,
    #[serde(default)]
    random_hotspots: Option<usize>,
    #[serde(default)]
    hotspot_spread: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HotspotFile {
    x: f64,
    y: f64,
    spread: f64,
    #[serde(default = "one")]
    weight: f64,
}

fn one() -> f64 {
    1.0
}

impl StudySpec {
    /// Parses a TOML study description. Random hotspot layouts are placed
    /// with `seed`.
    ///
    /// ```toml
    /// screen = "1280x800"
    /// subjects = 30
    /// span_ms = 3000
    /// central_onset = 1
    ///
    /// [[pages]]
    /// id = "clean"
    /// noise = 0.1
    /// quality = "good"
    /// fixations = 20
    /// random_hotspots = 3
    /// hotspot_spread = 40
    /// repeat = 4
    /// ```
    pub fn from_toml(text: &str, seed: u64) -> Result<StudySpec> {
        let file: StudyFile =
            toml::from_str(text).map_err(|e| Error::validation(format!("study spec: {}", e.message())))?;
        let screen = match &file.screen {
            Some(s) => s.parse().map_err(|e| Error::validation(format!("screen: {e}")))?,
            None => Screen::default(),
        };
        if file.subjects < 2 {
            return Err(Error::validation(format!("subjects: must be at least 2, got {}", file.subjects)));
        }
        if let Some(t) = file.span_ms {
            if !(t > 0.0) {
                return Err(Error::validation(format!("span_ms: must be positive, got {t}")));
            }
        }
        let saccade_ms = file.saccade_ms.unwrap_or(Timing::default().saccade_ms);
        if !(saccade_ms >= 0.0) {
            return Err(Error::validation(format!("saccade_ms: must be >= 0, got {saccade_ms}")));
        }
        if file.pages.is_empty() {
            return Err(Error::validation("pages: at least one [[pages]] entry is required"));
        }
        let default_durations = file
            .durations
            .map_or(DurationModel::default(), |d| DurationModel { median_ms: d.median_ms, sigma_log: d.sigma_log });

        let mut pages = Vec::new();
        for (i, p) in file.pages.iter().enumerate() {
            let field = |name: &str, msg: String| Error::validation(format!("pages[{i}].{name}: {msg}"));
            let quality = match p.quality.as_str() {
                "good" => PageClass::Good,
                "bad" => PageClass::Bad,
                other => return Err(field("quality", format!("must be good or bad, got {other:?}"))),
            };
            let good_rate = p.good_rate.unwrap_or(if quality == PageClass::Good { 0.8 } else { 0.2 });
            if PageClass::from_score(good_rate) != quality {
                return Err(field("good_rate", format!("{good_rate} contradicts quality {:?}", p.quality)));
            }
            if !(0.0..=1.0).contains(&p.noise) {
                return Err(field("noise", format!("must be in [0, 1], got {}", p.noise)));
            }
            if p.fixations == 0 {
                return Err(field("fixations", "must be at least 1".into()));
            }
            if !p.hotspots.is_empty() && p.random_hotspots.is_some() {
                return Err(field("random_hotspots", "give either hotspots or random_hotspots, not both".into()));
            }
            let repeat = p.repeat.unwrap_or(1);
            if repeat == 0 {
                return Err(field("repeat", "must be at least 1".into()));
            }
            let durations = p
                .durations
                .map_or(default_durations, |d| DurationModel { median_ms: d.median_ms, sigma_log: d.sigma_log });
            for k in 0..repeat {
                let page_id = if p.repeat.is_some() { format!("{}-{}", p.id, k + 1) } else { p.id.clone() };
                let hotspots = match p.random_hotspots {
                    Some(count) => {
                        let spread = p.hotspot_spread.unwrap_or(40.0);
                        random_hotspots(seed, pages.len(), count, spread, screen)
                    }
                    None => p
                        .hotspots
                        .iter()
                        .map(|h| Hotspot { x: h.x, y: h.y, spread: h.spread, weight: h.weight })
                        .collect(),
                };
                let spec = SyntheticPageSpec {
                    page_id,
                    hotspots,
                    noise_level: p.noise,
                    fixations_per_subject: p.fixations,
                    durations,
                    quality,
                    good_rate,
                };
                spec.validate().map_err(|e| field("hotspots", e.to_string()))?;
                pages.push(spec);
            }
        }
        let mut ids = BTreeMap::new();
        for p in &pages {
            if ids.insert(p.page_id.clone(), ()).is_some() {
                return Err(Error::validation(format!("pages: duplicate page id {:?}", p.page_id)));
            }
        }
        Ok(StudySpec {
            screen,
            n_subjects: file.subjects,
            timing: Timing { span_ms: file.span_ms, saccade_ms, central_onset: file.central_onset },
            pages,
        })
    }
}

/// Reference VAE: every fixation's kernel evaluated at every grid cell, no
/// truncation. Slow on purpose.
pub fn oracle_full_grid_entropy(fixations: &[Fixation], sigma_px: f64, screen: Screen) -> Result<f64> {
    if fixations.is_empty() {
        return Err(Error::EmptyInput);
    }
    let two_var = 2.0 * sigma_px * sigma_px;
    let mut grid = vec![0.0f64; screen.cells()];
    for y in 0..screen.height {
        for x in 0..screen.width {
            let mut m = 0.0;
            for f in fixations {
                let dx = x as f64 - f.x_px;
                let dy = y as f64 - f.y_px;
                m += f.duration_ms * (-(dx * dx + dy * dy) / two_var).exp();
            }
            grid[y * screen.width + x] = m;
        }
    }
    let total: f64 = grid.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NoMassInGrid { width: screen.width, height: screen.height });
    }
    for v in &mut grid {
        *v /= total;
    }
    Ok(shannon_entropy(&grid)?.bits())
}
