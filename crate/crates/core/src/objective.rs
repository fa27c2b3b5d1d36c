//! Cyclic-order weighting matrices and the envelope-spectrum signal-to-noise
//! objective
//!
//! ```text
//! psi = (w_s^T C_s b) / (w_n^T C_n b)
//! ```
//!
//! for the five named variants. Weighting matrices are stored as sparse rows.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectrum::{CyclicGrid, SesResult, EDGE_TOL};

/// Target cyclic order, number of harmonics and band width, all in shaft
/// orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub alpha_c: f64,
    pub n_h: usize,
    pub band_width: f64,
}

impl Default for BandSpec {
    fn default() -> Self {
        BandSpec { alpha_c: 1.0, n_h: 10, band_width: 0.1 }
    }
}

impl BandSpec {
    pub fn new(alpha_c: f64, n_h: usize, band_width: f64) -> Result<Self> {
        let spec = BandSpec { alpha_c, n_h, band_width };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_c.is_finite() && self.alpha_c > 0.0) {
            return Err(Error::Config(format!("alpha_c must be positive, got {}", self.alpha_c)));
        }
        if self.n_h == 0 {
            return Err(Error::Config("at least one harmonic must be targeted".into()));
        }
        if !(self.band_width.is_finite() && self.band_width > 0.0) {
            return Err(Error::Config(format!(
                "band width must be positive, got {}",
                self.band_width
            )));
        }
        Ok(())
    }

    /// Inclusive edges of the band around harmonic `k` (1-based).
    pub fn band(&self, k: usize) -> (f64, f64) {
        let centre = k as f64 * self.alpha_c;
        (centre - 0.5 * self.band_width, centre + 0.5 * self.band_width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumeratorMode {
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Ics2,
    MeanNf,
    MeanNp,
    MaxNf,
    MaxNp,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::Ics2, Variant::MeanNf, Variant::MeanNp, Variant::MaxNf, Variant::MaxNp];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ics2 => "GES2N-ICS2",
            Variant::MeanNf => "GES2N-Mean-Nf",
            Variant::MeanNp => "GES2N-Mean-Np",
            Variant::MaxNf => "GES2N-Max-Nf",
            Variant::MaxNp => "GES2N-Max-Np",
        }
    }

    pub fn numerator_mode(self) -> NumeratorMode {
        match self {
            Variant::MeanNf | Variant::MeanNp => NumeratorMode::Mean,
            Variant::Ics2 | Variant::MaxNf | Variant::MaxNp => NumeratorMode::Max,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// A variant together with its noise-estimation range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantConfig {
    pub variant: Variant,
    pub alpha_n_min: f64,
    pub alpha_n_max: f64,
}

impl VariantConfig {
    pub fn new(variant: Variant, bands: &BandSpec) -> Self {
        let top = (bands.n_h + 1) as f64 * bands.alpha_c;
        let (alpha_n_min, alpha_n_max) = match variant {
            Variant::Ics2 => (0.0, 0.0),
            Variant::MeanNf | Variant::MaxNf => (0.0, top),
            Variant::MeanNp | Variant::MaxNp => (0.5, top),
        };
        VariantConfig { variant, alpha_n_min, alpha_n_max }
    }
}

/// Sparse row: `(grid index, weight)` pairs in ascending index order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightRow {
    pub entries: Vec<(usize, f64)>,
}

impl WeightRow {
    pub fn apply(&self, b: &[f64]) -> f64 {
        self.entries.iter().map(|(l, w)| w * b[*l]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub rows: Vec<WeightRow>,
    pub n_f: usize,
}

impl WeightMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Sum of all entries.
    pub fn total(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.entries.iter().map(|e| e.1)).sum()
    }

    /// `C b`
    pub fn apply(&self, b: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.apply(b)).collect()
    }

    /// `w^T C b`
    pub fn weighted_sum(&self, w: &[f64], b: &[f64]) -> f64 {
        self.rows.iter().zip(w).map(|(r, wm)| wm * r.apply(b)).sum()
    }

    /// Dense `w^T C`, one value per grid point.
    pub fn weighted_columns(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_f];
        for (r, wm) in self.rows.iter().zip(w) {
            for (l, v) in &r.entries {
                out[*l] += wm * v;
            }
        }
        out
    }

    /// Grid indices with a nonzero entry in any row.
    pub fn support(&self) -> Vec<bool> {
        let mut out = vec![false; self.n_f];
        for r in &self.rows {
            for (l, v) in &r.entries {
                if *v != 0.0 {
                    out[*l] = true;
                }
            }
        }
        out
    }

    /// Dense copy, mostly for tests and reports.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut row = vec![0.0; self.n_f];
                for (l, v) in &r.entries {
                    row[*l] = *v;
                }
                row
            })
            .collect()
    }

    fn scaled(&self, factor: f64) -> WeightMatrix {
        WeightMatrix {
            rows: self
                .rows
                .iter()
                .map(|r| WeightRow { entries: r.entries.iter().map(|(l, v)| (*l, v * factor)).collect() })
                .collect(),
            n_f: self.n_f,
        }
    }
}

fn check_in_grid(lo: f64, hi: f64, grid: &CyclicGrid) -> Result<()> {
    if hi > grid.alpha_max() + EDGE_TOL * grid.delta_alpha() {
        return Err(Error::BandOutsideGrid { lo, hi, alpha_max: grid.alpha_max() });
    }
    Ok(())
}

/// 0/1 matrix with one row per targeted harmonic band.
pub fn build_numerator_base(spec: &BandSpec, grid: &CyclicGrid) -> Result<WeightMatrix> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.n_h);
    for k in 1..=spec.n_h {
        let (lo, hi) = spec.band(k);
        check_in_grid(lo, hi, grid)?;
        let idx = grid.indices_within(lo, hi).ok_or(Error::EmptyBand { lo, hi })?;
        rows.push(WeightRow { entries: idx.map(|l| (l, 1.0)).collect() });
    }
    Ok(WeightMatrix { rows, n_f: grid.n_f() })
}

/// Mean mode divides the base by its entry count over all bands; max mode
/// keeps, per band, only the bin with the largest amplitude. Ties go to the
/// lowest cyclic order.
pub fn process_numerator(base: &WeightMatrix, b: &[f64], mode: NumeratorMode) -> WeightMatrix {
    match mode {
        NumeratorMode::Mean => base.scaled(1.0 / base.total()),
        NumeratorMode::Max => WeightMatrix {
            rows: base
                .rows
                .iter()
                .map(|r| {
                    let mut best: Option<(usize, f64)> = None;
                    for (l, w) in &r.entries {
                        let v = w * b[*l];
                        if best.map_or(true, |(_, bv)| v > bv) {
                            best = Some((*l, v));
                        }
                    }
                    WeightRow { entries: best.map(|(l, _)| vec![(l, 1.0)]).unwrap_or_default() }
                })
                .collect(),
            n_f: base.n_f,
        },
    }
}

/// Single-row noise weighting over `[alpha_n_min, alpha_n_max]` minus the
/// numerator bands, mean-normalized.
pub fn build_denominator(
    cfg: &VariantConfig,
    numerator_base: &WeightMatrix,
    grid: &CyclicGrid,
) -> Result<WeightMatrix> {
    let (lo, hi) = (cfg.alpha_n_min, cfg.alpha_n_max);
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi >= lo) {
        return Err(Error::Config(format!("invalid noise range [{lo}, {hi}]")));
    }
    check_in_grid(lo, hi, grid)?;
    let excluded = numerator_base.support();
    let support: Vec<usize> = grid
        .indices_within(lo, hi)
        .into_iter()
        .flatten()
        .filter(|l| !excluded[*l])
        .collect();
    if support.is_empty() {
        return Err(Error::EmptyDenominator { lo, hi });
    }
    let w = 1.0 / support.len() as f64;
    Ok(WeightMatrix {
        rows: vec![WeightRow { entries: support.into_iter().map(|l| (l, w)).collect() }],
        n_f: grid.n_f(),
    })
}

/// Everything that defines one objective on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightingSpec {
    pub variant: VariantConfig,
    pub bands: BandSpec,
    pub numerator_base: WeightMatrix,
    /// Processed numerator weights. In max mode this is the selection made
    /// at construction (from a flat spectrum) until refreshed.
    pub c_s: WeightMatrix,
    pub c_n: WeightMatrix,
    pub w_s: Vec<f64>,
    pub w_n: Vec<f64>,
    pub mode: NumeratorMode,
    pub data_dependent: bool,
}

impl WeightingSpec {
    pub fn new(variant: VariantConfig, bands: BandSpec, grid: &CyclicGrid) -> Result<Self> {
        let numerator_base = build_numerator_base(&bands, grid)?;
        let c_n = build_denominator(&variant, &numerator_base, grid)?;
        let mode = variant.variant.numerator_mode();
        let c_s = process_numerator(&numerator_base, &vec![1.0; grid.n_f()], mode);
        Ok(WeightingSpec {
            w_s: vec![1.0; numerator_base.n_rows()],
            w_n: vec![1.0; c_n.n_rows()],
            variant,
            bands,
            numerator_base,
            c_s,
            c_n,
            mode,
            data_dependent: mode == NumeratorMode::Max,
        })
    }

    pub fn n_f(&self) -> usize {
        self.c_n.n_f
    }

    /// Numerator weights for amplitudes `b`: the stored matrix in mean mode,
    /// a fresh per-band argmax selection in max mode.
    pub fn numerator_for(&self, b: &[f64]) -> WeightMatrix {
        if self.data_dependent {
            process_numerator(&self.numerator_base, b, NumeratorMode::Max)
        } else {
            self.c_s.clone()
        }
    }

    /// Copy with the numerator refreshed from `b`.
    pub fn refreshed(&self, b: &[f64]) -> WeightingSpec {
        WeightingSpec { c_s: self.numerator_for(b), ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub psi: f64,
    pub log_psi: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// Objective value together with the numerator weights it was computed with.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveEval {
    pub value: ObjectiveValue,
    pub c_s: WeightMatrix,
}

impl ObjectiveEval {
    /// Selected grid index per band (max mode), or `None` in mean mode.
    pub fn selection(&self) -> Vec<usize> {
        self.c_s.rows.iter().filter_map(|r| (r.entries.len() == 1).then(|| r.entries[0].0)).collect()
    }
}

pub fn evaluate_amplitudes(b: &[f64], ws: &WeightingSpec) -> Result<ObjectiveEval> {
    if b.len() != ws.n_f() {
        return Err(Error::InvalidInput(format!(
            "{} amplitudes for weights over {} grid points",
            b.len(),
            ws.n_f()
        )));
    }
    let c_s = ws.numerator_for(b);
    let numerator = c_s.weighted_sum(&ws.w_s, b);
    let denominator = ws.c_n.weighted_sum(&ws.w_n, b);
    if !(denominator.is_finite() && denominator > 0.0) {
        return Err(Error::DegenerateDenominator(denominator));
    }
    let value = ObjectiveValue {
        psi: numerator / denominator,
        log_psi: numerator.ln() - denominator.ln(),
        numerator,
        denominator,
    };
    Ok(ObjectiveEval { value, c_s })
}

pub fn evaluate_objective(ses: &SesResult, ws: &WeightingSpec) -> Result<ObjectiveEval> {
    evaluate_amplitudes(&ses.b, ws)
}
