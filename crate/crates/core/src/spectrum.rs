//! Order-domain squared envelope spectrum via the velocity-synchronous DFT.
//!
//! Row `m` of the velocity-synchronous matrix weights sample `n` by
//! `omega[n] / (fs * theta[L_y - 1])` and projects it onto
//! `exp(-j * alpha[m] * theta[n])`. The matrix is never stored: the phases
//! are generated per sample as powers of `exp(-j * delta_alpha * theta[n])`,
//! re-anchored by direct evaluation every [`ANCHOR_EVERY`] bins.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::signal::{AngleProfile, FilteredSignal};

const SAMPLE_CHUNK: usize = 512;
const ANCHOR_EVERY: usize = 64;

/// Slack used for inclusive band edges, as a fraction of the grid spacing.
pub(crate) const EDGE_TOL: f64 = 1e-9;

/// Uniform cyclic-order grid `alpha[k] = k * delta_alpha`, in shaft orders.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicGrid {
    delta_alpha: f64,
    alpha: Vec<f64>,
}

impl CyclicGrid {
    /// Grid of `n_f` points with spacing `delta_alpha`.
    pub fn with_len(delta_alpha: f64, n_f: usize) -> Result<Self> {
        if !(delta_alpha.is_finite() && delta_alpha > 0.0) {
            return Err(Error::InvalidInput(format!(
                "cyclic-order resolution must be positive, got {delta_alpha}"
            )));
        }
        if n_f < 2 {
            return Err(Error::InvalidInput("a cyclic grid needs at least two points".into()));
        }
        Ok(CyclicGrid {
            delta_alpha,
            alpha: (0..n_f).map(|k| k as f64 * delta_alpha).collect(),
        })
    }

    pub fn delta_alpha(&self) -> f64 {
        self.delta_alpha
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn n_f(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha_max(&self) -> f64 {
        *self.alpha.last().expect("grid is never empty")
    }

    /// Indices of grid points inside `[lo, hi]`, both ends inclusive.
    /// Returns `None` if no grid point falls inside.
    pub fn indices_within(&self, lo: f64, hi: f64) -> Option<RangeInclusive<usize>> {
        let eps = EDGE_TOL * self.delta_alpha;
        let first = ((lo - eps) / self.delta_alpha).ceil().max(0.0);
        let last = ((hi + eps) / self.delta_alpha).floor();
        if last < 0.0 || first > last {
            return None;
        }
        let first = first as usize;
        let last = (last as usize).min(self.n_f() - 1);
        if first > last {
            return None;
        }
        Some(first..=last)
    }

    /// Index of the grid point closest to `alpha`.
    pub fn nearest(&self, alpha: f64) -> usize {
        ((alpha / self.delta_alpha).round().max(0.0) as usize).min(self.n_f() - 1)
    }
}

pub fn build_grid(delta_alpha: f64, alpha_max: f64) -> Result<CyclicGrid> {
    if !(delta_alpha.is_finite() && delta_alpha > 0.0 && alpha_max.is_finite() && alpha_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "grid needs positive resolution and range, got ({delta_alpha}, {alpha_max})"
        )));
    }
    let steps = (alpha_max / delta_alpha + EDGE_TOL).floor();
    if steps < 1.0 {
        return Err(Error::InvalidInput(format!(
            "alpha_max {alpha_max} is below the resolution {delta_alpha}"
        )));
    }
    CyclicGrid::with_len(delta_alpha, steps as usize + 1)
}

/// One cycle per shaft revolution spanned by the first `l_y` samples.
pub fn default_resolution(theta: &AngleProfile, l_y: usize) -> Result<f64> {
    if l_y == 0 || l_y > theta.len() {
        return Err(Error::InvalidInput(format!(
            "filtered length {l_y} is outside the angle profile of {} samples",
            theta.len()
        )));
    }
    let span = theta.at(l_y - 1);
    if span <= 0.0 {
        return Err(Error::ZeroAngleSpan);
    }
    Ok(2.0 * PI / span)
}

/// Matrix-free velocity-synchronous DFT over the first `l_y` samples of a
/// record, on a fixed cyclic grid.
#[derive(Debug, Clone)]
pub struct VsOperator {
    grid: CyclicGrid,
    /// `omega[n] / (fs * theta[L_y - 1])`
    weight: Vec<f64>,
    theta: Vec<f64>,
    /// `exp(-j * delta_alpha * theta[n])`
    step: Vec<Complex64>,
    exec: Exec,
}

impl VsOperator {
    pub fn new(
        omega: &[f64],
        theta: &AngleProfile,
        fs: f64,
        l_y: usize,
        grid: CyclicGrid,
        exec: Exec,
    ) -> Result<Self> {
        if l_y == 0 || omega.len() < l_y || theta.len() < l_y {
            return Err(Error::InvalidInput(format!(
                "speed/angle channels ({} / {} samples) do not cover {l_y} samples",
                omega.len(),
                theta.len()
            )));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidSampleRate(fs));
        }
        let span = theta.at(l_y - 1);
        if span <= 0.0 {
            return Err(Error::ZeroAngleSpan);
        }
        let scale = 1.0 / (fs * span);
        let theta = theta.theta()[..l_y].to_vec();
        let da = grid.delta_alpha();
        Ok(VsOperator {
            weight: omega[..l_y].iter().map(|w| w * scale).collect(),
            step: theta.iter().map(|t| Complex64::from_polar(1.0, -da * t)).collect(),
            theta,
            grid,
            exec,
        })
    }

    pub fn grid(&self) -> &CyclicGrid {
        &self.grid
    }

    /// Number of samples the operator consumes.
    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    fn phase(&self, m: usize, n: usize) -> Complex64 {
        Complex64::from_polar(1.0, -self.grid.alpha()[m] * self.theta[n])
    }

    /// `V * signal`, one complex value per grid point.
    pub fn forward(&self, signal: &[f64]) -> Result<Vec<Complex64>> {
        if signal.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "signal has {} samples, operator expects {}",
                signal.len(),
                self.len()
            )));
        }
        let n_f = self.grid.n_f();
        let partials = self.exec.map_chunks(self.len(), SAMPLE_CHUNK, |range| {
            let mut cur: Vec<Complex64> = range
                .clone()
                .map(|n| Complex64::new(self.weight[n] * signal[n], 0.0))
                .collect();
            let amp: Vec<f64> = cur.iter().map(|c| c.re).collect();
            let steps = &self.step[range.clone()];
            let mut out = vec![Complex64::new(0.0, 0.0); n_f];
            for (m, slot) in out.iter_mut().enumerate() {
                if m > 0 && m % ANCHOR_EVERY == 0 {
                    for (i, n) in range.clone().enumerate() {
                        cur[i] = self.phase(m, n) * amp[i];
                    }
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for c in &cur {
                    acc += c;
                }
                *slot = acc;
                for (c, s) in cur.iter_mut().zip(steps) {
                    *c *= s;
                }
            }
            out
        });
        let mut total = vec![Complex64::new(0.0, 0.0); n_f];
        for part in partials {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
        Ok(total)
    }

    /// Per-sample real projection `weight[n] * Re(sum_m coeffs[m] * phase[m, n])`,
    /// i.e. `Re(V^T coeffs)`. Trailing zero coefficients are skipped.
    pub fn adjoint_real(&self, coeffs: &[Complex64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.grid.n_f() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for a grid of {} points",
                coeffs.len(),
                self.grid.n_f()
            )));
        }
        let zero = Complex64::new(0.0, 0.0);
        let used = coeffs.iter().rposition(|c| *c != zero).map_or(0, |i| i + 1);
        let mut out = vec![0.0; self.len()];
        if used == 0 {
            return Ok(out);
        }
        let coeffs = &coeffs[..used];
        self.exec.fill_chunks(&mut out, SAMPLE_CHUNK, |off, chunk| {
            for (i, v) in chunk.iter_mut().enumerate() {
                let n = off + i;
                let p = self.step[n];
                // Horner in p, re-anchored per block of ANCHOR_EVERY bins
                let mut total = zero;
                for block_start in (0..used).step_by(ANCHOR_EVERY) {
                    let block = &coeffs[block_start..(block_start + ANCHOR_EVERY).min(used)];
                    let mut acc = zero;
                    for c in block.iter().rev() {
                        acc = acc * p + c;
                    }
                    total += if block_start == 0 {
                        acc
                    } else {
                        acc * self.phase(block_start, n)
                    };
                }
                *v = self.weight[n] * total.re;
            }
        });
        Ok(out)
    }

    /// Squared envelope spectrum of `y`: `|V (y * y)|^2` per grid point.
    pub fn ses(&self, y: &[f64]) -> Result<SesResult> {
        let squared: Vec<f64> = y.iter().map(|v| v * v).collect();
        let spectrum = self.forward(&squared)?;
        Ok(SesResult::from_spectrum(spectrum, self.grid.clone()))
    }
}

/// Squared envelope spectrum amplitudes with the complex spectrum they came
/// from.
#[derive(Debug, Clone, PartialEq)]
pub struct SesResult {
    pub b: Vec<f64>,
    pub grid: CyclicGrid,
    pub spectrum: Vec<Complex64>,
}

impl SesResult {
    pub fn from_spectrum(spectrum: Vec<Complex64>, grid: CyclicGrid) -> Self {
        let b = spectrum.iter().map(|s| s.norm_sqr()).collect();
        SesResult { b, grid, spectrum }
    }

    /// Amplitudes only, e.g. reloaded from a file.
    pub fn from_amplitudes(b: Vec<f64>, grid: CyclicGrid) -> Result<Self> {
        if b.len() != grid.n_f() {
            return Err(Error::InvalidInput(format!(
                "{} amplitudes for a grid of {} points",
                b.len(),
                grid.n_f()
            )));
        }
        if let Some(i) = b.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput(format!("amplitude {i} is negative or non-finite")));
        }
        Ok(SesResult { b, grid, spectrum: Vec::new() })
    }
}

pub fn vs_dft(
    signal: &[f64],
    omega: &[f64],
    theta: &AngleProfile,
    fs: f64,
    grid: &CyclicGrid,
) -> Result<Vec<Complex64>> {
    VsOperator::new(omega, theta, fs, signal.len(), grid.clone(), Exec::default())?.forward(signal)
}

pub fn squared_envelope_spectrum(
    y: &FilteredSignal,
    omega: &[f64],
    theta: &AngleProfile,
    fs: f64,
    grid: &CyclicGrid,
) -> Result<SesResult> {
    if y.is_empty() {
        return Err(Error::InvalidInput("empty filtered signal".into()));
    }
    if y.offset != 0 {
        return Err(Error::InvalidInput("filtered signal must start at the first speed sample".into()));
    }
    VsOperator::new(omega, theta, fs, y.len(), grid.clone(), Exec::default())?.ses(&y.y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ramp(len: usize, fs: f64) -> (Vec<f64>, AngleProfile) {
        let omega: Vec<f64> = (0..len).map(|n| 30.0 + 20.0 * n as f64 / len as f64).collect();
        let theta = AngleProfile::from_speed(&omega, fs).unwrap();
        (omega, theta)
    }

    #[test]
    fn grid_construction() {
        let g = build_grid(0.5, 2.0).unwrap();
        assert_eq!(g.alpha(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(build_grid(0.025, 11.0).unwrap().n_f(), 441);
        assert_eq!(build_grid(0.1, 0.1).unwrap().alpha(), &[0.0, 0.1]);
        assert!(build_grid(0.0, 1.0).is_err());
        assert!(build_grid(0.1, -1.0).is_err());
        assert!(build_grid(0.5, 0.2).is_err());
    }

    #[test]
    fn inclusive_band_lookup() {
        let g = build_grid(0.05, 3.0).unwrap();
        assert_eq!(g.indices_within(1.95, 2.05), Some(39..=41));
        assert_eq!(g.indices_within(0.96, 0.99), None);
        assert_eq!(g.indices_within(-1.0, 0.0), Some(0..=0));
        assert_eq!(g.indices_within(2.99, 10.0), Some(60..=60));
        assert_eq!(g.nearest(1.01), 20);
    }

    #[test]
    fn resolution_from_revolutions() {
        let theta = AngleProfile::from_speed(&[20.0 * PI; 11], 10.0).unwrap();
        // theta[10] = 20 pi: ten revolutions
        assert_relative_eq!(default_resolution(&theta, 11).unwrap(), 0.1, max_relative = 1e-14);
        let theta = AngleProfile::from_speed(&[2.0 * PI; 2], 1.0).unwrap();
        assert_relative_eq!(default_resolution(&theta, 2).unwrap(), 1.0, max_relative = 1e-14);
        assert!(default_resolution(&theta, 3).is_err());
        assert_eq!(default_resolution(&theta, 1), Err(Error::ZeroAngleSpan));
    }

    #[test]
    fn dc_bin_is_weighted_mean() {
        let fs = 200.0;
        let (omega, theta) = ramp(300, fs);
        let grid = build_grid(0.1, 1.0).unwrap();
        let out = vs_dft(&vec![1.0; 300], &omega, &theta, fs, &grid).unwrap();
        let expected: f64 = omega.iter().sum::<f64>() / (fs * theta.at(299));
        assert_relative_eq!(out[0].re, expected, max_relative = 1e-12);
        assert!(out[0].im.abs() < 1e-15);
    }

    #[test]
    fn zero_signal_gives_zero() {
        let (omega, theta) = ramp(100, 50.0);
        let grid = build_grid(0.2, 3.0).unwrap();
        let out = vs_dft(&[0.0; 100], &omega, &theta, 50.0, &grid).unwrap();
        assert!(out.iter().all(|c| c.norm() == 0.0));
        let y = FilteredSignal { y: vec![0.0; 100], offset: 0 };
        let s = squared_envelope_spectrum(&y, &omega, &theta, 50.0, &grid).unwrap();
        assert!(s.b.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn recurrence_stays_close_to_direct_evaluation() {
        let fs = 1000.0;
        let (omega, theta) = ramp(2000, fs);
        let grid = build_grid(0.01, 3.0).unwrap(); // 301 bins, several re-anchors
        let sig: Vec<f64> = (0..2000).map(|n| ((n * 37 % 101) as f64 / 50.0) - 1.0).collect();
        let op = VsOperator::new(&omega, &theta, fs, 2000, grid.clone(), Exec::Sequential).unwrap();
        let fast = op.forward(&sig).unwrap();
        let scale = 1.0 / (fs * theta.at(1999));
        for m in [0usize, 1, 63, 64, 65, 200, 300] {
            let mut direct = Complex64::new(0.0, 0.0);
            for n in 0..2000 {
                direct += Complex64::from_polar(scale * omega[n] * sig[n], -grid.alpha()[m] * theta.at(n));
            }
            assert!((fast[m] - direct).norm() <= 1e-9 * direct.norm().max(1e-3), "bin {m}");
        }
    }

    #[test]
    fn adjoint_matches_inner_product() {
        let fs = 500.0;
        let (omega, theta) = ramp(700, fs);
        let grid = build_grid(0.05, 8.0).unwrap();
        let op = VsOperator::new(&omega, &theta, fs, 700, grid, Exec::Sequential).unwrap();
        let sig: Vec<f64> = (0..700).map(|n| (n as f64 * 0.17).sin()).collect();
        let coeffs: Vec<Complex64> = (0..op.grid().n_f())
            .map(|m| Complex64::new((m as f64 * 0.3).cos(), (m as f64 * 0.7).sin()))
            .collect();
        // Re(coeffs^T (V s)) == (Re(V^T coeffs))^T s
        let lhs: f64 = op.forward(&sig).unwrap().iter().zip(&coeffs).map(|(a, c)| (a * c).re).sum();
        let rhs: f64 = op.adjoint_real(&coeffs).unwrap().iter().zip(&sig).map(|(a, b)| a * b).sum();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }

    #[test]
    fn quartic_homogeneity() {
        let fs = 400.0;
        let (omega, theta) = ramp(512, fs);
        let grid = build_grid(0.1, 5.0).unwrap();
        let op = VsOperator::new(&omega, &theta, fs, 512, grid, Exec::Sequential).unwrap();
        let y: Vec<f64> = (0..512).map(|n| (n as f64 * 0.9).sin() * (1.0 + (n as f64 * 0.05).cos())).collect();
        let c = -1.7;
        let yc: Vec<f64> = y.iter().map(|v| c * v).collect();
        let b = op.ses(&y).unwrap().b;
        let bc = op.ses(&yc).unwrap().b;
        for (p, q) in b.iter().zip(&bc) {
            assert_relative_eq!(*q, c.powi(4) * p, max_relative = 1e-12);
        }
    }

    #[test]
    fn ses_finds_modulation_order() {
        // tone at 25 samples/cycle, amplitude modulated once per revolution
        let fs = 1000.0;
        let omega = vec![2.0 * PI * 5.0; 4000];
        let theta = AngleProfile::from_speed(&omega, fs).unwrap();
        let y: Vec<f64> = (0..4000)
            .map(|n| (1.0 + 0.8 * theta.at(n).cos()) * (2.0 * PI * 40.0 * n as f64 / fs).sin())
            .collect();
        let da = default_resolution(&theta, 4000).unwrap();
        let grid = build_grid(da, 4.0).unwrap();
        let s = squared_envelope_spectrum(&FilteredSignal { y, offset: 0 }, &omega, &theta, fs, &grid).unwrap();
        let lo = grid.indices_within(0.5, 4.0).unwrap();
        let peak = lo.max_by(|a, b| s.b[*a].total_cmp(&s.b[*b])).unwrap();
        assert_eq!(peak, grid.nearest(1.0));
    }
}
