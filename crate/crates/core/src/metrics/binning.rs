use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Equal-width bins over the observed value range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    /// Bin index of each input value, in input order.
    pub assignment: Vec<usize>,
    pub requested: usize,
    /// Set when fewer distinct values than requested bins forced a merge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl Binning {
    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.bins()];
        for &b in &self.assignment {
            c[b] += 1;
        }
        c
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

/// Splits `values` into `k` equal-width bins. With fewer than `k` distinct
/// values the bin count drops to the number of distinct values. The top
/// edge belongs to the last bin.
pub fn bin_by_traversability(values: &[f64], k: usize) -> Result<Binning, MetricsError> {
    if k < 2 {
        return Err(MetricsError::TooFewBins(k));
    }
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut distinct = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let bins = k.min(distinct.len());
    let warning = (bins < k).then(|| format!("only {} distinct traversability values; using {bins} bins instead of {k}", distinct.len()));
    if let Some(w) = &warning {
        tracing::warn!("{w}");
    }
    let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
    if bins == 1 {
        return Ok(Binning { edges: vec![lo, hi], assignment: vec![0; values.len()], requested: k, warning });
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| lo + i as f64 * width).collect();
    edges.push(hi);
    let assignment = values
        .iter()
        .map(|&v| {
            // Start from the arithmetic guess, then settle against the stored
            // edges so rounding never disagrees with them.
            let mut b = (((v - lo) / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
            while b > 0 && v < edges[b] {
                b -= 1;
            }
            while b + 1 < bins && v >= edges[b + 1] {
                b += 1;
            }
            b
        })
        .collect();
    Ok(Binning { edges, assignment, requested: k, warning })
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// side is constant or the lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
