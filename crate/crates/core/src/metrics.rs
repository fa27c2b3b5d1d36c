//! Quality metrics of a squared envelope spectrum and display transforms.

use crate::error::{Error, Result};
use crate::spectrum::CyclicGrid;

/// Lower edge of the range searched for the spectrum maximum (M3).
pub const M3_RANGE_START: f64 = 0.5;

/// Inputs shared by all four metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    pub alpha_c: f64,
    pub alpha_extraneous: f64,
    pub n_h: usize,
    pub band_width: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams { alpha_c: 1.0, alpha_extraneous: 5.72, n_h: 10, band_width: 0.1 }
    }
}

/// `None` marks a metric whose reference quantity is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    /// harmonic mean / median of the spectrum
    pub m1: Option<f64>,
    /// harmonic mean / extraneous component
    pub m2: Option<f64>,
    /// harmonic mean / largest amplitude in `[0.5, 20 alpha_c]`
    pub m3: Option<f64>,
    /// 1 / population variance of the harmonic amplitudes
    pub m4: Option<f64>,
    pub alpha_c: f64,
    pub alpha_extraneous: f64,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den).filter(|v| v.is_finite())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Largest amplitude with cyclic order in `[lo, hi]`.
pub fn range_max(b: &[f64], grid: &CyclicGrid, lo: f64, hi: f64) -> Result<f64> {
    let idx = grid.indices_within(lo, hi).ok_or(Error::EmptyBand { lo, hi })?;
    Ok(b[idx].iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}

fn band_peak(b: &[f64], grid: &CyclicGrid, centre: f64, width: f64) -> Result<f64> {
    let (lo, hi) = (centre - 0.5 * width, centre + 0.5 * width);
    if hi > grid.alpha_max() + crate::spectrum::EDGE_TOL * grid.delta_alpha() {
        return Err(Error::BandOutsideGrid { lo, hi, alpha_max: grid.alpha_max() });
    }
    range_max(b, grid, lo, hi)
}

/// Peak amplitude inside each band `k alpha_c +- band_width / 2`, `k = 1..=n_h`.
pub fn harmonic_amplitudes(
    b: &[f64],
    grid: &CyclicGrid,
    alpha_c: f64,
    n_h: usize,
    band_width: f64,
) -> Result<Vec<f64>> {
    if b.len() != grid.n_f() {
        return Err(Error::InvalidInput("amplitudes and grid differ in length".into()));
    }
    (1..=n_h).map(|k| band_peak(b, grid, k as f64 * alpha_c, band_width)).collect()
}

pub fn compute_metrics(b: &[f64], grid: &CyclicGrid, p: &MetricParams) -> Result<MetricsReport> {
    if p.n_h == 0 {
        return Err(Error::Config("metrics need at least one harmonic".into()));
    }
    let top = 20.0 * p.alpha_c;
    if grid.alpha_max() + crate::spectrum::EDGE_TOL * grid.delta_alpha() < top {
        return Err(Error::BandOutsideGrid { lo: M3_RANGE_START, hi: top, alpha_max: grid.alpha_max() });
    }
    let harmonics = harmonic_amplitudes(b, grid, p.alpha_c, p.n_h, p.band_width)?;
    let n = harmonics.len() as f64;
    let mean = harmonics.iter().sum::<f64>() / n;
    let variance = harmonics.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n;
    let extraneous = band_peak(b, grid, p.alpha_extraneous, p.band_width)?;
    let peak = range_max(b, grid, M3_RANGE_START, top)?;
    Ok(MetricsReport {
        m1: ratio(mean, median(b)),
        m2: ratio(mean, extraneous),
        m3: ratio(mean, peak),
        m4: ratio(1.0, variance),
        alpha_c: p.alpha_c,
        alpha_extraneous: p.alpha_extraneous,
    })
}

/// `ln(b / median(b))`, with non-positive ratios floored at the smallest
/// positive double.
pub fn log_median_normalized(b: &[f64]) -> Vec<f64> {
    let med = median(b);
    b.iter()
        .map(|v| {
            let r = if med > 0.0 { v / med } else { 0.0 };
            r.max(f64::MIN_POSITIVE).ln()
        })
        .collect()
}

/// Min-max normalization of each row to `[0, 1]`; constant rows become zeros.
pub fn normalize_rows(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                return vec![0.0; row.len()];
            }
            row.iter().map(|v| (v - lo) / (hi - lo)).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::build_grid;
    use approx::assert_relative_eq;

    fn grid() -> CyclicGrid {
        build_grid(0.05, 20.5).unwrap()
    }

    #[test]
    fn flat_spectrum() {
        let g = grid();
        let b = vec![3.0; g.n_f()];
        let m = compute_metrics(&b, &g, &MetricParams::default()).unwrap();
        assert_eq!(m.m1, Some(1.0));
        assert_eq!(m.m2, Some(1.0));
        assert_eq!(m.m3, Some(1.0));
        assert_eq!(m.m4, None);
        assert_eq!(harmonic_amplitudes(&b, &g, 1.0, 10, 0.1).unwrap(), vec![3.0; 10]);
    }

    #[test]
    fn extraneous_ratio() {
        let g = grid();
        let mut b = vec![1.0; g.n_f()];
        for k in 1..=10 {
            b[g.nearest(k as f64)] = 2.0;
        }
        b[g.nearest(5.72)] = 4.0;
        let m = compute_metrics(&b, &g, &MetricParams::default()).unwrap();
        assert_eq!(m.m2, Some(0.5));
        assert_eq!(m.m3, Some(0.5));
        assert_eq!(m.m4, None);
    }

    #[test]
    fn peak_pick_tolerates_offset() {
        let g = grid();
        let mut b = vec![1.0; g.n_f()];
        b[g.nearest(3.0) + 1] = 9.0; // 3.05, on the band edge
        let h = harmonic_amplitudes(&b, &g, 1.0, 4, 0.1).unwrap();
        assert_eq!(h, vec![1.0, 1.0, 9.0, 1.0]);
        assert!(harmonic_amplitudes(&b, &g, 1.0, 30, 0.1).is_err());
    }

    #[test]
    fn m4_is_population_precision() {
        let g = grid();
        let mut b = vec![1.0; g.n_f()];
        b[g.nearest(1.0)] = 2.0;
        b[g.nearest(2.0)] = 4.0;
        let p = MetricParams { n_h: 2, ..Default::default() };
        let m = compute_metrics(&b, &g, &p).unwrap();
        assert_relative_eq!(m.m4.unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn zero_spectrum_gives_sentinels() {
        let g = grid();
        let m = compute_metrics(&vec![0.0; g.n_f()], &g, &MetricParams::default()).unwrap();
        assert_eq!((m.m1, m.m2, m.m3, m.m4), (None, None, None, None));
    }

    #[test]
    fn grid_must_reach_twenty_orders() {
        let g = build_grid(0.05, 11.0).unwrap();
        assert!(compute_metrics(&vec![1.0; g.n_f()], &g, &MetricParams::default()).is_err());
    }

    #[test]
    fn row_normalization() {
        let out = normalize_rows(&[vec![1.0, 3.0, 5.0], vec![2.0, 2.0]]);
        assert_eq!(out, vec![vec![0.0, 0.5, 1.0], vec![0.0, 0.0]]);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        let l = log_median_normalized(&[1.0, 2.0, 4.0]);
        assert_relative_eq!(l[2], 2f64.ln());
        assert_eq!(l[1], 0.0);
    }
}
