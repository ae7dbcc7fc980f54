//! The eight traditional fixation, saccade and AOI indices, pooled per page.

use serde::Serialize;

use crate::aoi::AoiSet;
use crate::gaze_data::Recording;

/// Euclidean distances between consecutive fixation positions.
pub fn saccade_lengths(recording: &Recording) -> Vec<f64> {
    recording.fixations().windows(2).map(|w| (w[1].x_px - w[0].x_px).hypot(w[1].y_px - w[0].y_px)).collect()
}

/// Mean, or `None` for an empty sample.
pub fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation (n − 1 denominator), or `None` below two values.
pub fn sample_std(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptiveIndices {
    pub fix_num: usize,
    pub dur_mean: Option<f64>,
    pub dur_std: Option<f64>,
    pub sacc_len_mean: Option<f64>,
    pub sacc_len_std: Option<f64>,
    pub aoi_num: usize,
    pub aoi_fixnum_mean: Option<f64>,
    pub aoi_fixnum_std: Option<f64>,
}

const INDEX_NAMES: [&str; 8] = [
    "number of fixations",
    "mean of duration",
    "std of duration",
    "mean of saccade length",
    "std of saccade length",
    "number of AOIs",
    "mean of AOI fixNum",
    "std of AOI fixNum",
];

impl DescriptiveIndices {
    pub fn default_names() -> [&'static str; 8] {
        INDEX_NAMES
    }

    /// Row names and values in the customary table order.
    pub fn named(&self) -> [(&'static str, Option<f64>); 8] {
        let values = [
            Some(self.fix_num as f64),
            self.dur_mean,
            self.dur_std,
            self.sacc_len_mean,
            self.sacc_len_std,
            Some(self.aoi_num as f64),
            self.aoi_fixnum_mean,
            self.aoi_fixnum_std,
        ];
        std::array::from_fn(|i| (INDEX_NAMES[i], values[i]))
    }
}

/// Indices over the pooled fixations and saccades of every recording of a
/// page. Saccades never cross recordings.
pub fn descriptive_indices(recordings: &[Recording], aois: &AoiSet) -> DescriptiveIndices {
    let durations: Vec<f64> = recordings.iter().flat_map(|r| r.fixations().iter().map(|f| f.duration_ms)).collect();
    let saccades: Vec<f64> = recordings.iter().flat_map(saccade_lengths).collect();
    let aoi_counts: Vec<f64> = aois.aois().iter().map(|a| a.fix_count() as f64).collect();
    DescriptiveIndices {
        fix_num: durations.len(),
        dur_mean: mean(&durations),
        dur_std: sample_std(&durations),
        sacc_len_mean: mean(&saccades),
        sacc_len_std: sample_std(&saccades),
        aoi_num: aois.len(),
        aoi_fixnum_mean: mean(&aoi_counts),
        aoi_fixnum_std: sample_std(&aoi_counts),
    }
}
