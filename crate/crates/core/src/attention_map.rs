//! Duration-weighted Gaussian-mixture attention maps and their entropy.
//!
//! Every fixation `(x₀, y₀, d)` adds `d·exp(-((x-x₀)² + (y-y₀)²) / 2σ²)` to each
//! pixel cell within `truncation_radius·σ` of it (a Chebyshev box clipped to
//! the grid). Cells are evaluated at integer coordinates, mass outside the
//! grid is dropped, and the grid is finally normalized to sum to 1.
//!
//! Accumulation is serial in fixation order, so a given input always yields
//! the same bits no matter how many threads the caller uses.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{compensated_sum, shannon_entropy, EntropyValue};
use crate::error::{Error, Result};
use crate::gaze_data::{Fixation, Recording, Screen};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelConfig {
    pub sigma_px: f64,
    /// Cutoff as a multiple of `sigma_px`.
    pub truncation_radius: f64,
}

impl KernelConfig {
    pub const DEFAULT_SIGMA_PX: f64 = 30.0;
    pub const DEFAULT_TRUNCATION: f64 = 5.0;
    pub const MIN_TRUNCATION: f64 = 3.0;

    pub fn new(sigma_px: f64, truncation_radius: f64) -> Result<Self> {
        if !(sigma_px > 0.0) || !sigma_px.is_finite() {
            return Err(Error::validation(format!("sigma must be a positive number of pixels, got {sigma_px}")));
        }
        if !(truncation_radius >= Self::MIN_TRUNCATION) {
            return Err(Error::validation(format!(
                "truncation radius must be at least {}, got {truncation_radius}",
                Self::MIN_TRUNCATION
            )));
        }
        Ok(KernelConfig { sigma_px, truncation_radius })
    }

    pub fn with_sigma(sigma_px: f64) -> Result<Self> {
        Self::new(sigma_px, Self::DEFAULT_TRUNCATION)
    }

    fn cutoff_px(&self) -> f64 {
        self.sigma_px * self.truncation_radius
    }
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { sigma_px: Self::DEFAULT_SIGMA_PX, truncation_radius: Self::DEFAULT_TRUNCATION }
    }
}

/// Inclusive bounding box of the cells that may be non-zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Support {
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

impl Support {
    fn full(width: usize, height: usize) -> Self {
        Support { x0: 0, x1: width - 1, y0: 0, y1: height - 1 }
    }

    fn union(self, other: Support) -> Support {
        Support {
            x0: self.x0.min(other.x0),
            x1: self.x1.max(other.x1),
            y0: self.y0.min(other.y0),
            y1: self.y1.max(other.y1),
        }
    }
}

/// A normalized probability grid over screen pixels, row-major with row 0 at
/// the top.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    width: usize,
    height: usize,
    cells: Vec<f64>,
    support: Support,
}

impl AttentionMap {
    /// Wraps an explicit probability grid. Cells must be non-negative and sum
    /// to 1 within the entropy tolerance.
    pub fn from_cells(screen: Screen, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != screen.cells() {
            return Err(Error::contract(format!(
                "expected {} cells for {screen}, got {}",
                screen.cells(),
                cells.len()
            )));
        }
        // validates non-negativity and total mass
        shannon_entropy(&cells)?;
        Ok(AttentionMap {
            width: screen.width,
            height: screen.height,
            cells,
            support: Support::full(screen.width, screen.height),
        })
    }

    /// The uniform distribution over the grid.
    pub fn uniform(screen: Screen) -> Self {
        let p = 1.0 / screen.cells() as f64;
        AttentionMap {
            width: screen.width,
            height: screen.height,
            cells: vec![p; screen.cells()],
            support: Support::full(screen.width, screen.height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.cells[y * self.width + x]
    }

    /// Coordinates of the largest cell; the first one in row-major order wins
    /// ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &p) in self.cells.iter().enumerate() {
            if p > self.cells[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width)
    }

    fn support_rows(&self) -> impl Iterator<Item = &[f64]> {
        let s = self.support;
        (s.y0..=s.y1).map(move |y| &self.cells[y * self.width + s.x0..=y * self.width + s.x1])
    }

    /// Binary PGM (`P5`, maxval 255): `floor(255 · p / max p)` per cell,
    /// rows top to bottom. The peak cell is always 255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let header = format!("P5\n{} {}\n255\n", self.width, self.height);
        let max = self.cells.iter().copied().fold(0.0, f64::max);
        let mut out = Vec::with_capacity(header.len() + self.cells.len());
        out.extend_from_slice(header.as_bytes());
        out.extend(self.cells.iter().map(|&p| {
            if max > 0.0 {
                (p / max * 255.0).floor().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        }));
        out
    }
}

/// Cell index range `[lo, hi]` covered by a kernel centered at `c` along an
/// axis of `len` cells, or `None` if the box misses the axis.
fn axis_range(c: f64, cutoff: f64, len: usize) -> Option<(usize, usize)> {
    let lo = (c - cutoff).ceil().max(0.0);
    let hi = (c + cutoff).floor().min(len as f64 - 1.0);
    (lo <= hi).then_some((lo as usize, hi as usize))
}

fn gaussian_profile(c: f64, lo: usize, hi: usize, two_var: f64) -> Vec<f64> {
    (lo..=hi)
        .map(|i| {
            let d = i as f64 - c;
            (-(d * d) / two_var).exp()
        })
        .collect()
}

/// Builds the normalized attention map of `fixations` on a `screen`-sized
/// grid.
///
/// Fails with [`Error::EmptyInput`] for no fixations and with
/// [`Error::NoMassInGrid`] when every kernel box misses the grid.
pub fn build_attention_map(fixations: &[Fixation], kernel: &KernelConfig, screen: Screen) -> Result<AttentionMap> {
    if fixations.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (width, height) = (screen.width, screen.height);
    let cutoff = kernel.cutoff_px();
    let two_var = 2.0 * kernel.sigma_px * kernel.sigma_px;
    let mut cells = vec![0.0f64; width * height];
    let mut support: Option<Support> = None;

    for f in fixations {
        let (Some((x0, x1)), Some((y0, y1))) = (axis_range(f.x_px, cutoff, width), axis_range(f.y_px, cutoff, height))
        else {
            continue;
        };
        let gx = gaussian_profile(f.x_px, x0, x1, two_var);
        let gy = gaussian_profile(f.y_px, y0, y1, two_var);
        for (y, wy) in (y0..=y1).zip(&gy) {
            let amp = f.duration_ms * wy;
            let row = &mut cells[y * width + x0..=y * width + x1];
            for (c, wx) in row.iter_mut().zip(&gx) {
                *c += amp * wx;
            }
        }
        let b = Support { x0, x1, y0, y1 };
        support = Some(support.map_or(b, |s| s.union(b)));
    }

    let Some(support) = support else {
        return Err(Error::NoMassInGrid { width, height });
    };
    let mut map = AttentionMap { width, height, cells, support };
    let total: f64 = map.support_rows().flat_map(|r| r.iter()).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::NoMassInGrid { width, height });
    }
    for y in support.y0..=support.y1 {
        for c in &mut map.cells[y * width + support.x0..=y * width + support.x1] {
            *c /= total;
        }
    }
    Ok(map)
}

/// Visual attention entropy: the Shannon entropy of the whole grid.
pub fn vae(map: &AttentionMap) -> EntropyValue {
    // Cells outside the support are exactly zero and contribute nothing.
    let h = compensated_sum(map.support_rows().flat_map(|r| r.iter()).filter(|&&p| p > 0.0).map(|&p| p * p.log2()));
    let bound = (map.width as f64 * map.height as f64).log2();
    EntropyValue::from_bits((-h).clamp(0.0, bound))
}

/// VAE of one set of fixations, or `None` if none of their kernel mass lands
/// on the grid.
pub fn fixations_vae(fixations: &[Fixation], kernel: &KernelConfig, screen: Screen) -> Result<Option<f64>> {
    match build_attention_map(fixations, kernel, screen) {
        Ok(map) => Ok(Some(vae(&map).bits())),
        Err(Error::EmptyInput | Error::NoMassInGrid { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Page-level VAE, its per-subject base (bVAE) and their ratio (rVAE).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageVaeSummary {
    pub page_id: String,
    /// Entropy of the map pooling every contributing subject's fixations.
    pub vae: f64,
    /// `(subject_id, VAE)` for each contributing subject, in recording order.
    pub individual_vaes: Vec<(String, f64)>,
    /// Mean of the individual VAEs.
    pub bvae: f64,
    /// `vae / bvae`.
    pub rvae: f64,
    /// Subjects dropped because none of their fixations put mass on the grid.
    pub excluded_subjects: Vec<String>,
}

impl PageVaeSummary {
    /// Assembles a summary from precomputed entropies.
    ///
    /// `individual` holds one entry per subject; `None` marks a subject with no
    /// usable fixations. Needs at least two usable subjects.
    pub fn from_parts(page_id: &str, pooled_vae: f64, individual: Vec<(String, Option<f64>)>) -> Result<Self> {
        let mut individual_vaes = Vec::with_capacity(individual.len());
        let mut excluded_subjects = Vec::new();
        for (subject, v) in individual {
            match v {
                Some(v) => individual_vaes.push((subject, v)),
                None => excluded_subjects.push(subject),
            }
        }
        if individual_vaes.len() < 2 {
            return Err(Error::Insufficient(format!(
                "page {page_id:?} has {} subject(s) with usable fixations, need 2",
                individual_vaes.len()
            )));
        }
        let bvae = individual_vaes.iter().map(|(_, v)| v).sum::<f64>() / individual_vaes.len() as f64;
        if !(bvae > 0.0) {
            return Err(Error::contract(format!("page {page_id:?}: base VAE is {bvae}, rVAE undefined")));
        }
        Ok(PageVaeSummary {
            page_id: page_id.to_string(),
            vae: pooled_vae,
            individual_vaes,
            bvae,
            rvae: pooled_vae / bvae,
            excluded_subjects,
        })
    }
}

/// Per-subject VAEs, in recording order.
pub fn individual_vaes(
    recordings: &[Recording],
    kernel: &KernelConfig,
    screen: Screen,
) -> Result<Vec<(String, Option<f64>)>> {
    recordings
        .par_iter()
        .map(|r| Ok((r.subject_id().to_string(), fixations_vae(r.fixations(), kernel, screen)?)))
        .collect()
}

/// VAE of the map pooling all given recordings (in the given order).
pub fn pooled_vae(recordings: &[&Recording], kernel: &KernelConfig, screen: Screen) -> Result<f64> {
    let pooled: Vec<Fixation> = recordings.iter().flat_map(|r| r.fixations().iter().copied()).collect();
    Ok(vae(&build_attention_map(&pooled, kernel, screen)?).bits())
}

/// VAE, bVAE and rVAE for the recordings of one page.
///
/// Subjects without usable fixations are excluded (and listed); fewer than
/// two remaining subjects is an error.
pub fn page_vae_summary(recordings: &[Recording], kernel: &KernelConfig, screen: Screen) -> Result<PageVaeSummary> {
    let page_id = match recordings.first() {
        Some(r) => r.page_id().to_string(),
        None => return Err(Error::Insufficient("no recordings for page".into())),
    };
    if let Some(other) = recordings.iter().find(|r| r.page_id() != page_id) {
        return Err(Error::contract(format!("recordings mix pages {page_id:?} and {:?}", other.page_id())));
    }
    let individual = individual_vaes(recordings, kernel, screen)?;
    let contributing: Vec<&Recording> =
        recordings.iter().zip(&individual).filter(|(_, (_, v))| v.is_some()).map(|(r, _)| r).collect();
    if contributing.len() < 2 {
        return PageVaeSummary::from_parts(&page_id, f64::NAN, individual);
    }
    let pooled = pooled_vae(&contributing, kernel, screen)?;
    PageVaeSummary::from_parts(&page_id, pooled, individual)
}
