//! End-to-end per-page metrics and their relation to scores.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::aoi::{page_aoi_model, PriorMode, DEFAULT_AOI_RADIUS_PX};
use crate::attention_map::{page_vae_summary, KernelConfig, PageVaeSummary};
use crate::descriptive::{descriptive_indices, DescriptiveIndices};
use crate::error::{Error, Result};
use crate::format::{fmt12_opt, round_sig};
use crate::gaze_data::{Dataset, PageClass, RatingTable};
use crate::stats::{one_way_anova, pearson_r, AnovaResult};

/// Labels of the score/index correlation block.
pub const CORRELATION_LABELS: [&str; 5] = ["score", "fixNum", "VAE", "bVAE", "rVAE"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub kernel: KernelConfig,
    pub aoi_radius_px: f64,
    pub prior_mode: PriorMode,
    /// Cut every recording at this time before analysis.
    pub slice_ms: Option<f64>,
    /// Echoed only; the report itself draws no random numbers.
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            kernel: KernelConfig::default(),
            aoi_radius_px: DEFAULT_AOI_RADIUS_PX,
            prior_mode: PriorMode::default(),
            slice_ms: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub sigma_px: f64,
    pub truncation_radius: f64,
    pub aoi_radius_px: f64,
    pub prior_mode: PriorMode,
    pub slice_ms: Option<f64>,
    pub seed: u64,
    pub screen: String,
    /// Input name → SHA-256 hex digest, as supplied by the caller.
    pub inputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarkovSummary {
    pub aoi_count: usize,
    pub h_bits: f64,
    pub h_max_bits: f64,
    pub h_relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageReport {
    pub page_id: String,
    pub score: f64,
    pub class: PageClass,
    pub judgments: usize,
    pub n_subjects: usize,
    pub vae: Option<f64>,
    pub bvae: Option<f64>,
    pub rvae: Option<f64>,
    pub individual_vaes: BTreeMap<String, f64>,
    pub excluded_subjects: Vec<String>,
    pub markov: Option<MarkovSummary>,
    pub descriptive: DescriptiveIndices,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationBlock {
    pub labels: Vec<String>,
    /// Pairwise-complete Pearson r; `None` where undefined.
    pub matrix: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreTest {
    pub n_pages: usize,
    pub r: Option<f64>,
    /// Good vs bad pages; unclassified pages are left out.
    pub anova: Option<AnovaResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub config: ConfigEcho,
    pub off_screen_fixations: usize,
    pub pages: Vec<PageReport>,
    pub correlations: CorrelationBlock,
    pub score_tests: BTreeMap<String, ScoreTest>,
    pub warnings: Vec<String>,
}

/// Computes every per-page metric and the score correlation/ANOVA tables.
///
/// Fails if any page of `dataset` has no ratings. Pages without two usable
/// subjects keep null VAE fields and add a warning.
pub fn build_report(
    dataset: &Dataset,
    ratings: &RatingTable,
    config: &AnalysisConfig,
    inputs: BTreeMap<String, String>,
) -> Result<MetricsReport> {
    let sliced;
    let dataset = match config.slice_ms {
        Some(t) => {
            if !(t >= 0.0) {
                return Err(Error::validation(format!("slice time must be >= 0, got {t}")));
            }
            sliced = dataset.sliced(t);
            &sliced
        }
        None => dataset,
    };
    let scores = ratings.scores_for(dataset.pages())?;
    let screen = dataset.screen();

    let per_page: Vec<(PageReport, Vec<String>)> = dataset
        .pages()
        .par_iter()
        .map(|&page| {
            let recs = dataset.page_recordings(page);
            let score = scores[page];
            let mut warnings = Vec::new();
            let vae = match page_vae_summary(recs, &config.kernel, screen) {
                Ok(s) => Some(s),
                Err(Error::Insufficient(msg)) => {
                    warnings.push(msg);
                    None
                }
                Err(e) => return Err(e),
            };
            let aoi = page_aoi_model(recs, config.aoi_radius_px, config.prior_mode)?;
            let descriptive = descriptive_indices(recs, &aoi.aois);
            let markov = aoi.entropy.map(|e| MarkovSummary {
                aoi_count: aoi.aois.len(),
                h_bits: e.h_bits,
                h_max_bits: e.h_max_bits,
                h_relative: e.h_relative,
            });
            if markov.is_none() {
                warnings.push(format!("page {page:?}: transition entropy undefined ({} AOIs)", aoi.aois.len()));
            }
            if let Some(s) = &vae {
                for subject in &s.excluded_subjects {
                    warnings.push(format!("page {page:?}: subject {subject:?} has no fixation mass on screen"));
                }
            }
            let (v, b, r, individual, excluded) = match vae {
                Some(PageVaeSummary { vae, bvae, rvae, individual_vaes, excluded_subjects, .. }) => {
                    (Some(vae), Some(bvae), Some(rvae), individual_vaes.into_iter().collect(), excluded_subjects)
                }
                None => (None, None, None, BTreeMap::new(), Vec::new()),
            };
            Ok((
                PageReport {
                    page_id: page.to_string(),
                    score: score.score,
                    class: score.class,
                    judgments: score.judgments,
                    n_subjects: recs.len(),
                    vae: v,
                    bvae: b,
                    rvae: r,
                    individual_vaes: individual,
                    excluded_subjects: excluded,
                    markov,
                    descriptive,
                },
                warnings,
            ))
        })
        .collect::<Result<_>>()?;

    let mut pages = Vec::with_capacity(per_page.len());
    let mut warnings = Vec::new();
    for (p, w) in per_page {
        pages.push(p);
        warnings.extend(w);
    }

    let columns: [fn(&PageReport) -> Option<f64>; 5] =
        [|p| Some(p.score), |p| Some(p.descriptive.fix_num as f64), |p| p.vae, |p| p.bvae, |p| p.rvae];
    let matrix = columns
        .iter()
        .enumerate()
        .map(|(i, a)| {
            columns.iter().enumerate().map(|(j, b)| if i == j { Some(1.0) } else { paired_r(&pages, a, b) }).collect()
        })
        .collect();
    let correlations = CorrelationBlock { labels: CORRELATION_LABELS.iter().map(|s| s.to_string()).collect(), matrix };

    let mut score_tests = BTreeMap::new();
    for (name, metric) in metric_columns() {
        score_tests.insert(name.to_string(), score_test(&pages, metric));
    }

    Ok(MetricsReport {
        config: ConfigEcho {
            sigma_px: config.kernel.sigma_px,
            truncation_radius: config.kernel.truncation_radius,
            aoi_radius_px: config.aoi_radius_px,
            prior_mode: config.prior_mode,
            slice_ms: config.slice_ms,
            seed: config.seed,
            screen: screen.to_string(),
            inputs,
        },
        off_screen_fixations: dataset.off_screen_count(),
        pages,
        correlations,
        score_tests,
        warnings,
    })
}

type Metric = Box<dyn Fn(&PageReport) -> Option<f64>>;

fn metric_columns() -> Vec<(&'static str, Metric)> {
    let mut out: Vec<(&'static str, Metric)> = (0..8)
        .map(|k| {
            let name = DescriptiveIndices::default_names()[k];
            let f: Metric = Box::new(move |p: &PageReport| p.descriptive.named()[k].1);
            (name, f)
        })
        .collect();
    out.push(("VAE", Box::new(|p: &PageReport| p.vae)));
    out.push(("bVAE", Box::new(|p: &PageReport| p.bvae)));
    out.push(("rVAE", Box::new(|p: &PageReport| p.rvae)));
    out.push(("transition entropy (relative)", Box::new(|p: &PageReport| p.markov.map(|m| m.h_relative))));
    out
}

fn paired_r(
    pages: &[PageReport],
    a: impl Fn(&PageReport) -> Option<f64>,
    b: impl Fn(&PageReport) -> Option<f64>,
) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = pages.iter().filter_map(|p| Some((a(p)?, b(p)?))).unzip();
    pearson_r(&xs, &ys).ok()
}

fn score_test(pages: &[PageReport], metric: impl Fn(&PageReport) -> Option<f64>) -> ScoreTest {
    let present: Vec<(&PageReport, f64)> = pages.iter().filter_map(|p| Some((p, metric(p)?))).collect();
    let r = paired_r(pages, |p| Some(p.score), &metric);
    let good: Vec<f64> = present.iter().filter(|(p, _)| p.class == PageClass::Good).map(|(_, v)| *v).collect();
    let bad: Vec<f64> = present.iter().filter(|(p, _)| p.class == PageClass::Bad).map(|(_, v)| *v).collect();
    ScoreTest { n_pages: present.len(), r, anova: one_way_anova(&good, &bad).ok() }
}

fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                *v = serde_json::Number::from_f64(round_sig(f, 12)).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_numbers),
        Value::Object(o) => o.values_mut().for_each(round_numbers),
        _ => {}
    }
}

impl MetricsReport {
    /// Pretty JSON with sorted keys and floats at 12 significant digits.
    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::contract(format!("report serialization: {e}")))?;
        round_numbers(&mut v);
        let mut s =
            serde_json::to_string_pretty(&v).map_err(|e| Error::contract(format!("report serialization: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    /// One row per page with the eight descriptive indices.
    pub fn write_indices_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let names = DescriptiveIndices::default_names();
        writeln!(out, "page_id,{}", names.join(","))?;
        for p in &self.pages {
            let values: Vec<String> = p.descriptive.named().iter().map(|(_, v)| fmt12_opt(*v)).collect();
            writeln!(out, "{},{}", p.page_id, values.join(","))?;
        }
        Ok(())
    }
}
