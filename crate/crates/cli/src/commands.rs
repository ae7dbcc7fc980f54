use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use gazentropy::aoi::{page_aoi_model, write_sequences_tsv};
use gazentropy::attention_map::{build_attention_map, KernelConfig};
use gazentropy::gaze_data::{
    parse_fixation_table, parse_ratings, slice_recording, write_fixation_table, write_ratings, Dataset, Fixation,
    Screen,
};
use gazentropy::report::{build_report, AnalysisConfig};
use gazentropy::sweep::{sweep_sigma, sweep_subjects, sweep_time};
use gazentropy::synth::StudySpec;
use gazentropy::{Error, Result};

use crate::output::{open, sha256_file, write_atomic};
use crate::{AoiArgs, AxisArg, HeatmapArgs, KernelArgs, ReportArgs, SweepArgs, SynthArgs};

fn kernel(args: &KernelArgs) -> Result<KernelConfig> {
    KernelConfig::new(args.sigma, args.truncation)
}

fn load_fixations(path: &Path, screen: Screen) -> Result<Dataset> {
    parse_fixation_table(open(path)?, screen).map_err(|e| with_file(path, e))
}

fn load_ratings(path: &Path) -> Result<gazentropy::gaze_data::RatingTable> {
    parse_ratings(open(path)?).map_err(|e| with_file(path, e))
}

fn with_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, message } => Error::Parse { line, message: format!("{}: {message}", path.display()) },
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        other => other,
    }
}

pub fn report(a: ReportArgs) -> Result<()> {
    let config = AnalysisConfig {
        kernel: kernel(&a.kernel)?,
        aoi_radius_px: a.aoi_radius,
        prior_mode: a.prior_mode.into(),
        slice_ms: a.slice_ms,
        seed: a.seed,
    };
    let dataset = load_fixations(&a.fixations, a.kernel.screen)?;
    let ratings = load_ratings(&a.ratings)?;
    let inputs = BTreeMap::from([
        ("fixations".to_string(), sha256_file(&a.fixations)?),
        ("ratings".to_string(), sha256_file(&a.ratings)?),
    ]);
    let report = build_report(&dataset, &ratings, &config, inputs)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let json = report.to_json()?;
    if let Some(csv) = &a.indices_csv {
        write_atomic(csv, |w| report.write_indices_csv(w))?;
    }
    write_atomic(&a.out, |w| Ok(w.write_all(json.as_bytes())?))
}

pub fn heatmap(a: HeatmapArgs) -> Result<()> {
    let kernel = kernel(&a.kernel)?;
    let dataset = load_fixations(&a.fixations, a.kernel.screen)?;
    let recordings = dataset.page_recordings(&a.page);
    if recordings.is_empty() {
        return Err(Error::Validation(format!("page {:?} not found in {}", a.page, a.fixations.display())));
    }
    for s in &a.subjects {
        if !recordings.iter().any(|r| r.subject_id() == s) {
            return Err(Error::Validation(format!("subject {s:?} has no recording on page {:?}", a.page)));
        }
    }
    let fixations: Vec<Fixation> = recordings
        .iter()
        .filter(|r| a.subjects.is_empty() || a.subjects.iter().any(|s| s == r.subject_id()))
        .flat_map(|r| match a.slice_ms {
            Some(t) => slice_recording(r, t).fixations().to_vec(),
            None => r.fixations().to_vec(),
        })
        .collect();
    let map = build_attention_map(&fixations, &kernel, dataset.screen())?;
    let pgm = map.to_pgm();
    write_atomic(&a.out, |w| Ok(w.write_all(&pgm)?))
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let kernel = kernel(&a.kernel)?;
    let dataset = load_fixations(&a.fixations, a.kernel.screen)?;
    let ratings = load_ratings(&a.ratings)?;
    let curve = match a.axis {
        AxisArg::Time => {
            let grid = a.grid.unwrap_or_else(|| (1..=6).map(|k| k as f64 * 500.0).collect());
            sweep_time(&dataset, &ratings, &kernel, &grid)?
        }
        AxisArg::Sigma => {
            let grid = a.grid.unwrap_or_else(|| (1..=12).map(|k| k as f64 * 10.0).collect());
            sweep_sigma(&dataset, &ratings, a.kernel.truncation, &grid)?
        }
        AxisArg::Subjects => {
            let sizes = a.sizes.unwrap_or_else(|| (2..=dataset.subjects().len()).collect());
            sweep_subjects(&dataset, &ratings, &kernel, &sizes, a.repetitions, a.seed)?
        }
    };
    if let Some(path) = &a.curves {
        write_atomic(path, |w| curve.write_page_curves(w))?;
    }
    write_atomic(&a.out, |w| curve.write_csv(w))
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let text =
        fs::read_to_string(&a.spec).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", a.spec.display())))?;
    let study = StudySpec::from_toml(&text, a.seed).map_err(|e| with_file(&a.spec, e))?;
    let (dataset, ratings) = study.generate(a.seed)?;
    fs::create_dir_all(&a.out_dir)?;
    write_atomic(&a.out_dir.join("fixations.tsv"), |w| write_fixation_table(&dataset, w))?;
    write_atomic(&a.out_dir.join("ratings.csv"), |w| write_ratings(&ratings, w))
}

pub fn aoi(a: AoiArgs) -> Result<()> {
    let dataset = load_fixations(&a.fixations, a.screen)?;
    let recordings = dataset.page_recordings(&a.page);
    if recordings.is_empty() {
        return Err(Error::Validation(format!("page {:?} not found in {}", a.page, a.fixations.display())));
    }
    let model = page_aoi_model(recordings, a.aoi_radius, Default::default())?;
    write_atomic(&a.out_aois, |w| model.aois.write_tsv(w))?;
    write_atomic(&a.out_sequences, |w| write_sequences_tsv(&model.sequences, w))
}
