//! Per-page VAE/rVAE correlation with aesthetic scores, and how it moves with
//! viewing time, kernel width and the number of subjects.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::attention_map::{individual_vaes, page_vae_summary, pooled_vae, KernelConfig, PageVaeSummary};
use crate::error::{Error, Result};
use crate::format::{fmt12, fmt12_opt};
use crate::gaze_data::{Dataset, PageScore, RatingTable, Recording};
use crate::stats::pearson_r;

pub const DEFAULT_REPETITIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    TimeMs,
    SigmaPx,
    SubjectCount,
}

/// One page's metrics at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageValue {
    pub page_id: String,
    pub score: f64,
    pub vae: f64,
    pub bvae: f64,
    pub rvae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    /// Correlation of VAE with score; `None` when undefined (fewer than 3
    /// pages or no variance).
    pub r_vae: Option<f64>,
    pub r_rvae: Option<f64>,
    pub n_pages: usize,
    /// Pages left out at this point for lack of two contributing subjects.
    pub dropped_pages: Vec<String>,
    pub pages: Vec<PageValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    /// `axis_value,r_vae,r_rvae,n_pages`; undefined correlations are empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "axis_value,r_vae,r_rvae,n_pages")?;
        for p in &self.points {
            writeln!(out, "{},{},{},{}", fmt12(p.axis_value), fmt12_opt(p.r_vae), fmt12_opt(p.r_rvae), p.n_pages)?;
        }
        Ok(())
    }

    /// Per-page VAE and rVAE at every point, long format:
    /// `axis_value,page_id,score,vae,bvae,rvae`.
    pub fn write_page_curves<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "axis_value,page_id,score,vae,bvae,rvae")?;
        for p in &self.points {
            for v in &p.pages {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt12(p.axis_value),
                    v.page_id,
                    fmt12(v.score),
                    fmt12(v.vae),
                    fmt12(v.bvae),
                    fmt12(v.rvae)
                )?;
            }
        }
        Ok(())
    }
}

fn correlation(pages: &[PageValue], metric: impl Fn(&PageValue) -> f64) -> Option<f64> {
    let scores: Vec<f64> = pages.iter().map(|p| p.score).collect();
    let values: Vec<f64> = pages.iter().map(metric).collect();
    pearson_r(&scores, &values).ok()
}

fn point_from(
    axis_value: f64,
    summaries: Vec<(String, Option<PageVaeSummary>)>,
    scores: &BTreeMap<String, PageScore>,
) -> SweepPoint {
    let mut pages = Vec::new();
    let mut dropped_pages = Vec::new();
    for (page_id, summary) in summaries {
        match summary {
            Some(s) => {
                pages.push(PageValue { score: scores[&page_id].score, page_id, vae: s.vae, bvae: s.bvae, rvae: s.rvae })
            }
            None => dropped_pages.push(page_id),
        }
    }
    SweepPoint {
        axis_value,
        r_vae: correlation(&pages, |p| p.vae),
        r_rvae: correlation(&pages, |p| p.rvae),
        n_pages: pages.len(),
        dropped_pages,
        pages,
    }
}

fn drop_insufficient(r: Result<PageVaeSummary>) -> Result<Option<PageVaeSummary>> {
    match r {
        Ok(s) => Ok(Some(s)),
        Err(Error::Insufficient(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Per-page summaries for the whole dataset, in page order. Pages with fewer
/// than two usable subjects map to `None`.
pub fn page_summaries(dataset: &Dataset, kernel: &KernelConfig) -> Result<Vec<(String, Option<PageVaeSummary>)>> {
    let pages = dataset.pages();
    pages
        .par_iter()
        .map(|&p| {
            let s = drop_insufficient(page_vae_summary(dataset.page_recordings(p), kernel, dataset.screen()))?;
            Ok((p.to_string(), s))
        })
        .collect()
}

/// The unswept pipeline: per-page metrics and their correlation with score.
pub fn evaluate(dataset: &Dataset, ratings: &RatingTable, kernel: &KernelConfig) -> Result<SweepPoint> {
    let scores = ratings.scores_for(dataset.pages())?;
    Ok(point_from(f64::NAN, page_summaries(dataset, kernel)?, &scores))
}

fn check_ascending(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::validation(format!("{what} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation(format!("{what} grid must be finite")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation(format!("{what} grid must be strictly ascending")));
    }
    Ok(())
}

/// Correlations when only the fixations that started before each `t` (ms)
/// are kept, with durations clipped at `t`.
pub fn sweep_time(
    dataset: &Dataset,
    ratings: &RatingTable,
    kernel: &KernelConfig,
    t_grid: &[f64],
) -> Result<SweepCurve> {
    check_ascending(t_grid, "time")?;
    if t_grid[0] < 0.0 {
        return Err(Error::validation("time grid must be non-negative"));
    }
    let scores = ratings.scores_for(dataset.pages())?;
    let points = t_grid
        .iter()
        .map(|&t| Ok(point_from(t, page_summaries(&dataset.sliced(t), kernel)?, &scores)))
        .collect::<Result<_>>()?;
    Ok(SweepCurve { axis: SweepAxis::TimeMs, points })
}

/// Correlations for each kernel width in `sigma_grid` (pixels). Entries are
/// evaluated independently, so repeated values give repeated points.
pub fn sweep_sigma(
    dataset: &Dataset,
    ratings: &RatingTable,
    truncation_radius: f64,
    sigma_grid: &[f64],
) -> Result<SweepCurve> {
    if sigma_grid.is_empty() {
        return Err(Error::validation("sigma grid is empty"));
    }
    let scores = ratings.scores_for(dataset.pages())?;
    let points = sigma_grid
        .iter()
        .map(|&sigma| {
            let kernel = KernelConfig::new(sigma, truncation_radius)?;
            Ok(point_from(sigma, page_summaries(dataset, &kernel)?, &scores))
        })
        .collect::<Result<_>>()?;
    Ok(SweepCurve { axis: SweepAxis::SigmaPx, points })
}

/// Deterministic generator for repetition `rep` at subset size `size`.
fn subset_rng(seed: u64, size: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((size as u64) << 32) | rep as u64);
    rng
}

/// `size` distinct subject indices out of `n`, ascending.
pub fn draw_subset(seed: u64, n: usize, size: usize, rep: usize) -> Vec<usize> {
    let mut rng = subset_rng(seed, size, rep);
    let mut picked = rand::seq::index::sample(&mut rng, n, size).into_vec();
    picked.sort_unstable();
    picked
}

/// Mean correlation over `repetitions` random subject subsets of each size.
///
/// Individual VAEs do not depend on the subset and are computed once; only
/// the pooled map is rebuilt per subset. Each `(size, repetition)` pair has
/// its own random stream, so the result does not depend on evaluation order.
pub fn sweep_subjects(
    dataset: &Dataset,
    ratings: &RatingTable,
    kernel: &KernelConfig,
    sizes: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<SweepCurve> {
    let subjects = dataset.subjects();
    let n = subjects.len();
    if sizes.is_empty() {
        return Err(Error::validation("subject-count grid is empty"));
    }
    if let Some(&bad) = sizes.iter().find(|&&s| s < 2 || s > n) {
        return Err(Error::validation(format!("subset size {bad} outside [2, {n}]")));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("subject-count grid must be strictly ascending"));
    }
    if repetitions == 0 {
        return Err(Error::validation("repetitions must be at least 1"));
    }
    let scores = ratings.scores_for(dataset.pages())?;
    let screen = dataset.screen();

    type PageInputs<'a> = (&'a str, &'a [Recording], Vec<(String, Option<f64>)>);
    let pages: Vec<PageInputs> = dataset
        .pages()
        .into_iter()
        .map(|p| {
            let recs = dataset.page_recordings(p);
            Ok((p, recs, individual_vaes(recs, kernel, screen)?))
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let mut r_vae = RunningMean::default();
        let mut r_rvae = RunningMean::default();
        let mut n_pages = usize::MAX;
        let mut dropped: BTreeSet<String> = BTreeSet::new();
        let mut last_pages = Vec::new();
        for rep in 0..repetitions {
            let chosen: BTreeSet<&str> = draw_subset(seed, n, size, rep).into_iter().map(|i| subjects[i]).collect();
            let summaries: Vec<(String, Option<PageVaeSummary>)> = pages
                .par_iter()
                .map(|(page, recs, indiv)| {
                    let mut individual = Vec::new();
                    let mut contributing = Vec::new();
                    for (rec, entry) in recs.iter().zip(indiv) {
                        if chosen.contains(rec.subject_id()) {
                            if entry.1.is_some() {
                                contributing.push(rec);
                            }
                            individual.push(entry.clone());
                        }
                    }
                    if contributing.len() < 2 {
                        return Ok((page.to_string(), None));
                    }
                    let pooled = pooled_vae(&contributing, kernel, screen)?;
                    Ok((page.to_string(), drop_insufficient(PageVaeSummary::from_parts(page, pooled, individual))?))
                })
                .collect::<Result<_>>()?;
            let point = point_from(size as f64, summaries, &scores);
            if let Some(r) = point.r_vae {
                r_vae.push(r);
            }
            if let Some(r) = point.r_rvae {
                r_rvae.push(r);
            }
            n_pages = n_pages.min(point.n_pages);
            dropped.extend(point.dropped_pages);
            last_pages = point.pages;
        }
        points.push(SweepPoint {
            axis_value: size as f64,
            r_vae: r_vae.value(),
            r_rvae: r_rvae.value(),
            n_pages,
            dropped_pages: dropped.into_iter().collect(),
            pages: last_pages,
        });
    }
    Ok(SweepCurve { axis: SweepAxis::SubjectCount, points })
}

/// Incremental mean; a run of identical inputs returns that input exactly.
#[derive(Debug, Default)]
struct RunningMean {
    n: usize,
    mean: f64,
}

impl RunningMean {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.mean += (x - self.mean) / self.n as f64;
    }

    fn value(&self) -> Option<f64> {
        (self.n > 0).then_some(self.mean)
    }
}
