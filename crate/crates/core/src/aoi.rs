//! Areas of interest and first-order gaze-transition entropy.
//!
//! AOIs come from a greedy, time-ordered centroid clustering: each fixation
//! joins the nearest AOI whose centroid lies within the radius (the centroid
//! then moves to the duration-weighted mean of its members), otherwise it
//! opens a new AOI. Labels are 1-based in order of first appearance.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaze_data::{Fixation, Recording};

pub const DEFAULT_AOI_RADIUS_PX: f64 = 80.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aoi {
    pub label: usize,
    pub centroid_x: f64,
    pub centroid_y: f64,
    /// Indices into the fixation slice passed to [`cluster_aoi`].
    pub members: Vec<usize>,
    #[serde(skip)]
    weight: f64,
}

impl Aoi {
    pub fn fix_count(&self) -> usize {
        self.members.len()
    }

    fn distance(&self, x: f64, y: f64) -> f64 {
        (self.centroid_x - x).hypot(self.centroid_y - y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AoiSet {
    pub radius_px: f64,
    aois: Vec<Aoi>,
}

impl AoiSet {
    /// Builds a set from explicit centroids, labelled 1.. in order.
    pub fn from_centroids(radius_px: f64, centroids: &[(f64, f64)]) -> Self {
        let aois = centroids
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Aoi { label: i + 1, centroid_x: x, centroid_y: y, members: Vec::new(), weight: 0.0 })
            .collect();
        AoiSet { radius_px, aois }
    }

    pub fn aois(&self) -> &[Aoi] {
        &self.aois
    }

    pub fn len(&self) -> usize {
        self.aois.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aois.is_empty()
    }

    /// Total number of clustered fixations.
    pub fn clustered_count(&self) -> usize {
        self.aois.iter().map(Aoi::fix_count).sum()
    }

    /// Label of the AOI whose centroid is closest to `(x, y)`; lower labels win
    /// ties. `None` only for an empty set.
    pub fn nearest(&self, x: f64, y: f64) -> Option<usize> {
        nearest_index(&self.aois, x, y, f64::INFINITY).map(|i| self.aois[i].label)
    }

    /// Writes `aoi_id centroid_x centroid_y fix_count` rows, tab separated.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "aoi_id\tcentroid_x\tcentroid_y\tfix_count")?;
        for a in &self.aois {
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                a.label,
                crate::format::fmt12(a.centroid_x),
                crate::format::fmt12(a.centroid_y),
                a.fix_count()
            )?;
        }
        Ok(())
    }
}

fn nearest_index(aois: &[Aoi], x: f64, y: f64, within: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, a) in aois.iter().enumerate() {
        let d = a.distance(x, y);
        if d <= within && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Clusters fixations into AOIs, visiting them in start-time order (input
/// order breaks ties).
pub fn cluster_aoi(fixations: &[Fixation], radius_px: f64) -> Result<AoiSet> {
    if !(radius_px > 0.0) || !radius_px.is_finite() {
        return Err(Error::validation(format!("AOI radius must be positive, got {radius_px}")));
    }
    let mut order: Vec<usize> = (0..fixations.len()).collect();
    order.sort_by(|&a, &b| fixations[a].start_ms.total_cmp(&fixations[b].start_ms));

    let mut aois: Vec<Aoi> = Vec::new();
    for idx in order {
        let f = &fixations[idx];
        match nearest_index(&aois, f.x_px, f.y_px, radius_px) {
            Some(i) => {
                let a = &mut aois[i];
                let w = a.weight + f.duration_ms;
                a.centroid_x = (a.centroid_x * a.weight + f.x_px * f.duration_ms) / w;
                a.centroid_y = (a.centroid_y * a.weight + f.y_px * f.duration_ms) / w;
                a.weight = w;
                a.members.push(idx);
            }
            None => aois.push(Aoi {
                label: aois.len() + 1,
                centroid_x: f.x_px,
                centroid_y: f.y_px,
                members: vec![idx],
                weight: f.duration_ms,
            }),
        }
    }
    Ok(AoiSet { radius_px, aois })
}

/// Pools the fixations of a page's recordings (recording order, then time)
/// and clusters them.
pub fn cluster_page(recordings: &[Recording], radius_px: f64) -> Result<AoiSet> {
    let pooled: Vec<Fixation> = recordings.iter().flat_map(|r| r.fixations().iter().copied()).collect();
    cluster_aoi(&pooled, radius_px)
}

/// A subject's AOI visits with consecutive repeats collapsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AoiSequence {
    pub subject_id: String,
    labels: Vec<usize>,
}

impl AoiSequence {
    /// Collapses adjacent duplicate labels.
    pub fn new(subject_id: impl Into<String>, labels: impl IntoIterator<Item = usize>) -> Self {
        let mut out: Vec<usize> = Vec::new();
        for l in labels {
            if out.last() != Some(&l) {
                out.push(l);
            }
        }
        AoiSequence { subject_id: subject_id.into(), labels: out }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.labels.windows(2).map(|w| (w[0], w[1]))
    }
}

impl fmt::Display for AoiSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.labels.iter().enumerate() {
            if i > 0 {
                f.write_str(" - ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Parses `"6 - 7 - 11"` style label lists.
impl FromStr for AoiSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .split('-')
            .map(|t| t.trim().parse::<usize>().map_err(|_| Error::validation(format!("bad AOI label {t:?} in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(AoiSequence::new("", labels))
    }
}

/// Maps each fixation of `recording` to its nearest AOI centroid and collapses
/// repeats.
pub fn aoi_sequence(recording: &Recording, aois: &AoiSet) -> AoiSequence {
    AoiSequence::new(recording.subject_id(), recording.fixations().iter().filter_map(|f| aois.nearest(f.x_px, f.y_px)))
}

pub fn write_sequences_tsv<W: Write>(sequences: &[AoiSequence], mut out: W) -> Result<()> {
    writeln!(out, "subject_id\tsequence")?;
    for s in sequences {
        writeln!(out, "{}\t{s}", s.subject_id)?;
    }
    Ok(())
}

/// How the prior `P(i)` of AOI `i` is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorMode {
    /// Share of all transitions that leave `i`.
    #[default]
    TransitionSource,
    /// Share of all sequence elements equal to `i`, terminal ones included.
    Occurrence,
    /// Share of sequences that start at `i`.
    SequenceStart,
}

impl FromStr for PriorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "transition-source" => Ok(PriorMode::TransitionSource),
            "occurrence" => Ok(PriorMode::Occurrence),
            "sequence-start" => Ok(PriorMode::SequenceStart),
            _ => Err(Error::validation(format!(
                "prior mode must be transition-source, occurrence or sequence-start, got {s:?}"
            ))),
        }
    }
}

/// First-order Markov model over AOI labels `1..=n`. Index `i - 1` holds AOI `i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionModel {
    pub n: usize,
    /// Row-stochastic `p_ij`; rows without outgoing transitions are zero.
    pub matrix: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
    pub counts: Vec<Vec<u64>>,
}

impl TransitionModel {
    pub fn p(&self, from: usize, to: usize) -> f64 {
        self.matrix[from - 1][to - 1]
    }

    pub fn total_transitions(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn estimate_transition_model(sequences: &[AoiSequence], n: usize) -> Result<TransitionModel> {
    estimate_transition_model_with(sequences, n, PriorMode::default())
}

/// Counts inter-AOI transitions, `p_ij = count(i→j) / count(i→·)`.
pub fn estimate_transition_model_with(
    sequences: &[AoiSequence],
    n: usize,
    prior_mode: PriorMode,
) -> Result<TransitionModel> {
    if n < 2 {
        return Err(Error::contract(format!("transition model needs at least 2 AOIs, got {n}")));
    }
    let mut counts = vec![vec![0u64; n]; n];
    let mut prior_counts = vec![0u64; n];
    for s in sequences {
        if let Some(&bad) = s.labels().iter().find(|&&l| l == 0 || l > n) {
            return Err(Error::contract(format!("AOI label {bad} outside 1..={n}")));
        }
        for (a, b) in s.transitions() {
            counts[a - 1][b - 1] += 1;
        }
        match prior_mode {
            PriorMode::TransitionSource => {
                for (a, _) in s.transitions() {
                    prior_counts[a - 1] += 1;
                }
            }
            PriorMode::Occurrence => {
                for &l in s.labels() {
                    prior_counts[l - 1] += 1;
                }
            }
            PriorMode::SequenceStart => {
                if let Some(&l) = s.labels().first() {
                    prior_counts[l - 1] += 1;
                }
            }
        }
    }
    let total: u64 = counts.iter().flatten().sum();
    if total == 0 {
        return Err(Error::Insufficient("no inter-AOI transitions".into()));
    }
    let matrix = counts
        .iter()
        .map(|row| {
            let out: u64 = row.iter().sum();
            row.iter().map(|&c| if out == 0 { 0.0 } else { c as f64 / out as f64 }).collect()
        })
        .collect();
    let prior_total: u64 = prior_counts.iter().sum();
    let priors = prior_counts.iter().map(|&c| c as f64 / prior_total as f64).collect();
    Ok(TransitionModel { n, matrix, priors, counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarkovEntropy {
    pub h_bits: f64,
    /// Entropy of the uniform chain: `log₂(n − 1)`.
    pub h_max_bits: f64,
    pub h_relative: f64,
}

/// `H = −Σᵢ P(i) Σ_{j≠i} p_ij log₂ p_ij`, normalized by the uniform chain.
pub fn markov_entropy(model: &TransitionModel) -> Result<MarkovEntropy> {
    if model.n < 2 {
        return Err(Error::contract(format!("Markov entropy needs at least 2 AOIs, got {}", model.n)));
    }
    let mut h = 0.0;
    for (i, row) in model.matrix.iter().enumerate() {
        let row_h: f64 = row.iter().enumerate().filter(|&(j, &p)| j != i && p > 0.0).map(|(_, &p)| p * p.log2()).sum();
        h -= model.priors[i] * row_h;
    }
    let h = h.max(0.0);
    let h_max = ((model.n - 1) as f64).log2();
    let h_relative = if h_max > 0.0 { (h / h_max).clamp(0.0, 1.0) } else { 0.0 };
    Ok(MarkovEntropy { h_bits: h, h_max_bits: h_max, h_relative })
}

/// AOIs, sequences and transition entropy for one page.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageAoiModel {
    pub aois: AoiSet,
    pub sequences: Vec<AoiSequence>,
    /// `None` when the page has fewer than two AOIs or no transitions.
    pub entropy: Option<MarkovEntropy>,
}

pub fn page_aoi_model(recordings: &[Recording], radius_px: f64, prior_mode: PriorMode) -> Result<PageAoiModel> {
    let aois = cluster_page(recordings, radius_px)?;
    let sequences: Vec<AoiSequence> = recordings.iter().map(|r| aoi_sequence(r, &aois)).collect();
    let entropy = match estimate_transition_model_with(&sequences, aois.len(), prior_mode) {
        Ok(model) => Some(markov_entropy(&model)?),
        Err(Error::Contract(_) | Error::Insufficient(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(PageAoiModel { aois, sequences, entropy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fixes(points: &[(f64, f64)]) -> Vec<Fixation> {
        points.iter().enumerate().map(|(i, &(x, y))| Fixation::new(i as f64 * 100.0, 100.0, x, y).unwrap()).collect()
    }

    fn seqs(rows: &[&[usize]]) -> Vec<AoiSequence> {
        rows.iter().map(|r| AoiSequence::new("", r.iter().copied())).collect()
    }

    #[test]
    fn one_disc_one_aoi() {
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let a = i as f64 * 0.7;
                (500.0 + 18.0 * a.cos() * (i as f64 / 10.0), 300.0 + 18.0 * a.sin() * (i as f64 / 10.0))
            })
            .collect();
        let set = cluster_aoi(&fixes(&pts), 80.0).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.aois()[0].fix_count(), 10);
    }

    #[test]
    fn two_discs_two_aois() {
        let mut pts = Vec::new();
        for i in 0..6 {
            let dx = (i % 3) as f64 * 8.0 - 8.0;
            pts.push((200.0 + dx, 300.0 + dx));
            pts.push((700.0 - dx, 300.0 + dx));
        }
        let set = cluster_aoi(&fixes(&pts), 80.0).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.clustered_count(), 12);
        assert_eq!(set.aois()[0].label, 1);
        assert_abs_diff_eq!(set.aois()[0].centroid_x, 200.0, epsilon = 1e-9);
    }

    // Oracle: the greedy rule re-implemented with plain tuples.
    fn greedy_count(points: &[(f64, f64, f64)], radius: f64) -> usize {
        let mut cents: Vec<(f64, f64, f64)> = Vec::new();
        for &(x, y, d) in points {
            let mut best: Option<(usize, f64)> = None;
            for (k, c) in cents.iter().enumerate() {
                let dist = ((c.0 - x).powi(2) + (c.1 - y).powi(2)).sqrt();
                if dist <= radius && best.is_none_or(|b| dist < b.1) {
                    best = Some((k, dist));
                }
            }
            match best {
                Some((k, _)) => {
                    let c = cents[k];
                    let w = c.2 + d;
                    cents[k] = ((c.0 * c.2 + x * d) / w, (c.1 * c.2 + y * d) / w, w);
                }
                None => cents.push((x, y, d)),
            }
        }
        cents.len()
    }

    #[test]
    fn collinear_chain_matches_oracle() {
        let pts: Vec<(f64, f64)> = (0..15).map(|i| (50.0 + 60.0 * i as f64, 400.0)).collect();
        let set = cluster_aoi(&fixes(&pts), 80.0).unwrap();
        let oracle = greedy_count(&pts.iter().map(|&(x, y)| (x, y, 100.0)).collect::<Vec<_>>(), 80.0);
        assert_eq!(set.len(), oracle);
        assert_eq!(set.len(), 8);
    }

    #[test]
    fn clustering_follows_time_not_input_order() {
        let f = vec![
            Fixation::new(200.0, 100.0, 100.0, 0.0).unwrap(),
            Fixation::new(0.0, 100.0, 0.0, 0.0).unwrap(),
            Fixation::new(100.0, 100.0, 60.0, 0.0).unwrap(),
        ];
        let set = cluster_aoi(&f, 80.0).unwrap();
        // 0 opens AOI 1, 60 joins (centroid 30), 100 is 70 away → joins
        assert_eq!(set.len(), 1);
        assert_eq!(set.aois()[0].members, vec![1, 2, 0]);
    }

    #[test]
    fn sequence_collapses_repeats() {
        let set = AoiSet::from_centroids(80.0, &(1..=11).map(|i| (i as f64 * 100.0, 100.0)).collect::<Vec<_>>());
        let rec =
            Recording::new("s", "p", fixes(&[(300.0, 100.0), (305.0, 98.0), (500.0, 110.0), (900.0, 100.0)])).unwrap();
        let s = aoi_sequence(&rec, &set);
        assert_eq!(s.labels(), &[3, 5, 9]);
        assert_eq!(s.to_string(), "3 - 5 - 9");

        let rec = Recording::new("s", "p", fixes(&[(300.0, 100.0), (310.0, 100.0)])).unwrap();
        assert_eq!(aoi_sequence(&rec, &set).labels(), &[3]);

        let rec =
            Recording::new("s", "p", fixes(&[(100.0, 100.0), (200.0, 100.0), (100.0, 100.0), (200.0, 100.0)])).unwrap();
        assert_eq!(aoi_sequence(&rec, &set).labels(), &[1, 2, 1, 2]);

        let empty = Recording::new("s", "p", vec![]).unwrap();
        assert!(aoi_sequence(&empty, &set).is_empty());
    }

    #[test]
    fn sequence_text_round_trip() {
        let s: AoiSequence = "6 - 7 - 11".parse().unwrap();
        assert_eq!(s.labels(), &[6, 7, 11]);
        assert_eq!(s.to_string(), "6 - 7 - 11");
        assert!("6 - x".parse::<AoiSequence>().is_err());
    }

    #[test]
    fn alternating_pair_is_deterministic() {
        let m = estimate_transition_model(&seqs(&[&[1, 2, 1, 2]]), 2).unwrap();
        assert_eq!(m.p(1, 2), 1.0);
        assert_eq!(m.p(2, 1), 1.0);
        let h = markov_entropy(&m).unwrap();
        assert_eq!(h.h_bits, 0.0);
        assert_eq!(h.h_relative, 0.0);
    }

    #[test]
    fn uniform_chain_is_maximal() {
        // every ordered pair i != j exactly once
        let n = 11;
        let mut rows = Vec::new();
        for i in 1..=n {
            for j in 1..=n {
                if i != j {
                    rows.push(vec![i, j]);
                }
            }
        }
        let rows: Vec<&[usize]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = estimate_transition_model(&seqs(&rows), n).unwrap();
        let h = markov_entropy(&m).unwrap();
        assert_abs_diff_eq!(h.h_bits, 10f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(h.h_relative, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_cycle_has_zero_entropy() {
        let m = estimate_transition_model(&seqs(&[&[1, 2, 3, 4, 1, 2, 3, 4, 1]]), 4).unwrap();
        let h = markov_entropy(&m).unwrap();
        assert_eq!(h.h_bits, 0.0);
        assert_eq!(h.h_relative, 0.0);
    }

    #[test]
    fn model_errors() {
        assert!(estimate_transition_model(&seqs(&[&[1, 2]]), 1).is_err());
        assert!(matches!(estimate_transition_model(&seqs(&[&[1], &[2]]), 2), Err(Error::Insufficient(_))));
        assert!(matches!(estimate_transition_model(&seqs(&[&[1, 3]]), 2), Err(Error::Contract(_))));
    }

    #[test]
    fn prior_modes() {
        let s = seqs(&[&[1, 2, 3], &[2, 3]]);
        let m = estimate_transition_model_with(&s, 3, PriorMode::TransitionSource).unwrap();
        assert_eq!(m.priors, vec![1.0 / 3.0, 2.0 / 3.0, 0.0]);
        let m = estimate_transition_model_with(&s, 3, PriorMode::Occurrence).unwrap();
        assert_eq!(m.priors, vec![0.2, 0.4, 0.4]);
        let m = estimate_transition_model_with(&s, 3, PriorMode::SequenceStart).unwrap();
        assert_eq!(m.priors, vec![0.5, 0.5, 0.0]);
        assert_eq!("occurrence".parse::<PriorMode>().unwrap(), PriorMode::Occurrence);
    }

    fn arb_sequences() -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
        (3usize..8)
            .prop_flat_map(|n| (Just(n), proptest::collection::vec(proptest::collection::vec(1..=n, 2..12), 1..10)))
    }

    proptest! {
        #[test]
        fn rows_stochastic_and_entropy_bounded((n, raw) in arb_sequences()) {
            let s: Vec<AoiSequence> = raw.iter().map(|r| AoiSequence::new("", r.iter().copied())).collect();
            if let Ok(m) = estimate_transition_model(&s, n) {
                for (i, row) in m.matrix.iter().enumerate() {
                    prop_assert_eq!(row[i], 0.0);
                    let sum: f64 = row.iter().sum();
                    prop_assert!(sum == 0.0 || (sum - 1.0).abs() < 1e-9);
                }
                prop_assert!((m.priors.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                let h = markov_entropy(&m).unwrap();
                prop_assert!((0.0..=1.0).contains(&h.h_relative));
            }
        }

        #[test]
        fn order_invariant_and_permutation_equivariant((n, raw) in arb_sequences(), seed in any::<u64>()) {
            let s: Vec<AoiSequence> = raw.iter().map(|r| AoiSequence::new("", r.iter().copied())).collect();
            let Ok(m) = estimate_transition_model(&s, n) else { return Ok(()); };
            let h = markov_entropy(&m).unwrap();

            let mut rev = s.clone();
            rev.reverse();
            prop_assert_eq!(&estimate_transition_model(&rev, n).unwrap(), &m);

            // relabel with a seeded permutation
            let mut perm: Vec<usize> = (1..=n).collect();
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (state >> 33) as usize % (i + 1));
            }
            let relabeled: Vec<AoiSequence> =
                s.iter().map(|q| AoiSequence::new("", q.labels().iter().map(|&l| perm[l - 1]))).collect();
            let pm = estimate_transition_model(&relabeled, n).unwrap();
            for i in 1..=n {
                for j in 1..=n {
                    prop_assert_eq!(pm.p(perm[i - 1], perm[j - 1]), m.p(i, j));
                }
            }
            let ph = markov_entropy(&pm).unwrap();
            prop_assert!((ph.h_bits - h.h_bits).abs() < 1e-12);
            prop_assert!((ph.h_relative - h.h_relative).abs() < 1e-12);
        }

        #[test]
        fn clustering_is_deterministic(pts in proptest::collection::vec((0.0f64..1280.0, 0.0f64..800.0), 1..60)) {
            let f = fixes(&pts);
            let a = cluster_aoi(&f, 80.0).unwrap();
            let b = cluster_aoi(&f, 80.0).unwrap();
            prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            prop_assert_eq!(a.clustered_count(), f.len());
            let labels: Vec<usize> = a.aois().iter().map(|x| x.label).collect();
            prop_assert_eq!(labels, (1..=a.len()).collect::<Vec<_>>());
        }
    }
}
