//! Correlation and analysis of variance.

pub mod special;

use serde::Serialize;

use crate::error::{Error, Result};

pub use special::{f_cdf, f_survival, regularized_incomplete_beta};

/// Pearson product-moment correlation.
///
/// Needs equal lengths of at least 3 and non-zero variance in both inputs.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::contract(format!("length mismatch: {} vs {}", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::Insufficient(format!("correlation needs at least 3 pairs, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::contract("correlation inputs must be finite"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first variable"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second variable"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Average ranks, 1-based; tied values share the mean of their ranks.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<f64> {
    pearson_r(&ranks(xs), &ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnovaResult {
    pub ss_between: f64,
    pub ss_error: f64,
    pub ss_total: f64,
    pub df_between: usize,
    pub df_error: usize,
    pub ms_between: f64,
    pub ms_error: f64,
    pub f: f64,
    /// `P(F > f)` under the null hypothesis.
    pub p: f64,
}

/// Two-class one-way ANOVA.
pub fn one_way_anova(group_a: &[f64], group_b: &[f64]) -> Result<AnovaResult> {
    one_way_anova_groups(&[group_a, group_b])
}

/// One-way ANOVA over `k >= 2` groups of at least 2 values each.
pub fn one_way_anova_groups(groups: &[&[f64]]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::Insufficient(format!("ANOVA needs at least 2 groups, got {}", groups.len())));
    }
    if let Some((i, g)) = groups.iter().enumerate().find(|(_, g)| g.len() < 2) {
        return Err(Error::Insufficient(format!("ANOVA group {i} has {} value(s), need 2", g.len())));
    }
    if groups.iter().flat_map(|g| g.iter()).any(|v| !v.is_finite()) {
        return Err(Error::contract("ANOVA inputs must be finite"));
    }
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_error = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (m - grand) * (m - grand);
        ss_error += g.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    }
    let ss_total: f64 = groups.iter().flat_map(|g| g.iter()).map(|x| (x - grand) * (x - grand)).sum();
    if !(ss_error > 0.0) {
        return Err(Error::ZeroVariance("ANOVA within-group values"));
    }
    let df_between = groups.len() - 1;
    let df_error = n - groups.len();
    let ms_between = ss_between / df_between as f64;
    let ms_error = ss_error / df_error as f64;
    let f = ms_between / ms_error;
    let p = f_survival(f, df_between as f64, df_error as f64);
    Ok(AnovaResult { ss_between, ss_error, ss_total, df_between, df_error, ms_between, ms_error, f, p })
}
