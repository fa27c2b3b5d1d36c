//! Measured-signal data model, shaft angle integration and matrix-free FIR
//! filtering.
//!
//! The filter convention is the convolution-matrix product `y = X g` with
//! `X[n, k] = x[n + D - 1 - k]` and `L_y = L - D - 1` output samples.

use crate::error::{Error, Result};
use crate::exec::Exec;

const FILTER_CHUNK: usize = 1024;

/// A vibration record with its reference-shaft speed channel.
#[derive(Debug, Clone, PartialEq)]
pub struct VibrationRecord {
    x: Vec<f64>,
    fs: f64,
    omega: Vec<f64>,
}

impl VibrationRecord {
    /// `x` is acceleration (arbitrary units), `fs` in Hz, `omega` in rad/s.
    pub fn new(x: Vec<f64>, fs: f64, omega: Vec<f64>) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidSampleRate(fs));
        }
        if x.len() != omega.len() {
            return Err(Error::InvalidInput(format!(
                "signal has {} samples but speed channel has {}",
                x.len(),
                omega.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InvalidInput("a record needs at least two samples".into()));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite signal value at sample {i}")));
        }
        check_speed(&omega)?;
        Ok(VibrationRecord { x, fs, omega })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Time of sample `n` in seconds.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 / self.fs
    }
}

fn check_speed(omega: &[f64]) -> Result<()> {
    match omega.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        Some(index) => Err(Error::InvalidSpeed { index }),
        None => Ok(()),
    }
}

/// Instantaneous shaft angle in radians, `theta[0] == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleProfile {
    theta: Vec<f64>,
}

impl AngleProfile {
    /// Trapezoidal integration of a speed channel sampled at `fs`.
    pub fn from_speed(omega: &[f64], fs: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidSampleRate(fs));
        }
        check_speed(omega)?;
        let mut theta = Vec::with_capacity(omega.len());
        let mut acc = 0.0;
        for (n, w) in omega.iter().enumerate() {
            if n > 0 {
                acc += (w + omega[n - 1]) / (2.0 * fs);
            }
            theta.push(acc);
        }
        Ok(AngleProfile { theta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Angle reached at sample `n`.
    pub fn at(&self, n: usize) -> f64 {
        self.theta[n]
    }
}

pub fn integrate_angle(record: &VibrationRecord) -> Result<AngleProfile> {
    AngleProfile::from_speed(record.omega(), record.fs())
}

/// Unconstrained coefficients `h` and their unit-norm image `g = h / |h|`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    h: Vec<f64>,
    g: Vec<f64>,
}

impl FilterState {
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.h, self.g)
    }
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub fn normalize_filter(h: &[f64]) -> Result<FilterState> {
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("filter has non-finite coefficients".into()));
    }
    let norm = l2_norm(h);
    if norm == 0.0 {
        return Err(Error::ZeroFilter);
    }
    Ok(FilterState {
        h: h.to_vec(),
        g: h.iter().map(|v| v / norm).collect(),
    })
}

/// Output of [`fir_filter`].
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredSignal {
    pub y: Vec<f64>,
    /// Index into the input time axis of the speed/angle sample paired with
    /// `y[0]`. Always 0: sample `n` of the output uses `omega[n]`, `theta[n]`.
    pub offset: usize,
}

impl FilteredSignal {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Output length for a record of `len` samples and a filter of `filter_len`
/// taps, or an error when it would be empty.
pub fn filtered_len(len: usize, filter_len: usize) -> Result<usize> {
    if filter_len == 0 || len <= filter_len + 1 {
        return Err(Error::SignalTooShort { len, filter_len });
    }
    Ok(len - filter_len - 1)
}

pub fn fir_filter(x: &[f64], g: &[f64], exec: Exec) -> Result<FilteredSignal> {
    let d = g.len();
    let ly = filtered_len(x.len(), d)?;
    let mut y = vec![0.0; ly];
    exec.fill_chunks(&mut y, FILTER_CHUNK, |off, out| {
        for (i, v) in out.iter_mut().enumerate() {
            let n = off + i;
            // x[n + d - 1 - k] for k = 0..d, walked backwards from the newest sample
            let window = &x[n..n + d];
            let mut acc = 0.0;
            for (gk, xv) in g.iter().zip(window.iter().rev()) {
                acc += xv * gk;
            }
            *v = acc;
        }
    });
    Ok(FilteredSignal { y, offset: 0 })
}

/// Transposed filter product `X^T z` for a filter of `filter_len` taps,
/// where `z` has one entry per filtered sample.
pub fn fir_adjoint(x: &[f64], z: &[f64], filter_len: usize, exec: Exec) -> Result<Vec<f64>> {
    let ly = filtered_len(x.len(), filter_len)?;
    if z.len() != ly {
        return Err(Error::InvalidInput(format!(
            "adjoint input has {} samples, expected {ly}",
            z.len()
        )));
    }
    let mut out = vec![0.0; filter_len];
    exec.fill_chunks(&mut out, 8, |off, chunk| {
        for (i, v) in chunk.iter_mut().enumerate() {
            let k = off + i;
            let lagged = &x[filter_len - 1 - k..filter_len - 1 - k + ly];
            *v = dot(lagged, z);
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn constant_speed_angle_is_exact() {
        let p = AngleProfile::from_speed(&[2.0 * PI; 3], 1.0).unwrap();
        assert_eq!(p.theta(), &[0.0, 2.0 * PI, 4.0 * PI]);
        let p = AngleProfile::from_speed(&[0.001, 0.001], 1000.0).unwrap();
        assert_relative_eq!(p.at(1), 1e-6, max_relative = 1e-15);
    }

    #[test]
    fn ramp_angle_matches_closed_form() {
        // 10 -> 20 rad/s over one second: integral is 15 rad
        let fs = 100.0;
        let omega: Vec<f64> = (0..=100).map(|n| 10.0 + 10.0 * n as f64 / fs).collect();
        let p = AngleProfile::from_speed(&omega, fs).unwrap();
        assert_relative_eq!(*p.theta().last().unwrap(), 15.0, max_relative = 1e-6);
    }

    #[test]
    fn angle_rejects_bad_inputs() {
        assert_eq!(
            AngleProfile::from_speed(&[1.0, 1.0], 0.0),
            Err(Error::InvalidSampleRate(0.0))
        );
        assert_eq!(
            AngleProfile::from_speed(&[1.0, f64::NAN], 1.0),
            Err(Error::InvalidSpeed { index: 1 })
        );
        assert!(VibrationRecord::new(vec![0.0; 3], 1.0, vec![1.0; 2]).is_err());
        assert!(VibrationRecord::new(vec![0.0], 1.0, vec![1.0]).is_err());
        assert!(VibrationRecord::new(vec![0.0; 2], -1.0, vec![1.0; 2]).is_err());
    }

    #[test]
    fn fir_small_cases() {
        let y = fir_filter(&[1.0, 2.0, 3.0, 4.0], &[1.0, 0.0], Exec::Sequential).unwrap();
        assert_eq!(y.y, vec![2.0]);
        assert_eq!(y.offset, 0);

        let x: Vec<f64> = (0..20).map(|v| (v as f64).sin()).collect();
        let mut g = vec![0.0; 5];
        g[0] = 1.0;
        let y = fir_filter(&x, &g, Exec::default()).unwrap();
        assert_eq!(y.len(), 20 - 5 - 1);
        for (n, v) in y.y.iter().enumerate() {
            assert_eq!(*v, x[n + 4]);
        }
    }

    #[test]
    fn fir_rejects_empty_output() {
        assert_eq!(
            fir_filter(&[1.0, 2.0, 3.0], &[1.0, 1.0], Exec::Sequential),
            Err(Error::SignalTooShort { len: 3, filter_len: 2 })
        );
    }

    #[test]
    fn normalization() {
        let f = normalize_filter(&[3.0, 4.0]).unwrap();
        assert_eq!(f.g(), &[0.6, 0.8]);
        assert_eq!(f.h(), &[3.0, 4.0]);
        let f = normalize_filter(&[0.0, 0.0, -5.0]).unwrap();
        assert_eq!(f.g(), &[0.0, 0.0, -1.0]);
        assert_eq!(normalize_filter(&[0.0, 0.0]), Err(Error::ZeroFilter));
        let a = normalize_filter(&[0.3, -1.2, 2.0]).unwrap();
        let b = normalize_filter(&[0.3 * 7.5, -1.2 * 7.5, 2.0 * 7.5]).unwrap();
        for (p, q) in a.g().iter().zip(b.g()) {
            assert_relative_eq!(p, q, max_relative = 1e-15);
        }
    }

    #[test]
    fn adjoint_is_transpose() {
        let x: Vec<f64> = (0..40).map(|v| ((v * 7 % 11) as f64) - 5.0).collect();
        let g: Vec<f64> = (0..6).map(|v| v as f64 * 0.5 - 1.0).collect();
        let z: Vec<f64> = (0..33).map(|v| (v as f64 * 0.3).cos()).collect();
        let y = fir_filter(&x, &g, Exec::Sequential).unwrap();
        let xt_z = fir_adjoint(&x, &z, 6, Exec::Sequential).unwrap();
        // <X g, z> == <g, X^T z>
        assert_relative_eq!(dot(&y.y, &z), dot(&g, &xt_z), max_relative = 1e-12);
    }
}
