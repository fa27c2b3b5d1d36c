//! Analytical gradient of `ln psi` with respect to the filter coefficients,
//! plus a central-difference checker.
//!
//! With `S = V (y * y)` and `b = |S|^2`, the derivative of `ln psi` with
//! respect to `g` is
//!
//! ```text
//! sum_m r[m] * 2 Re(conj(S[m]) dS[m]/dg),   dS/dg = 2 V (y * X)
//! ```
//!
//! where `r = w_s^T C_s / (w_s^T C_s b) - w_n^T C_n / (w_n^T C_n b)`.
//! Reordering the sums gives `X^T z` with
//! `z[n] = 4 y[n] Re(sum_m r[m] conj(S[m]) V[m, n])`, so the
//! `N_f x L_y` and `L_y x D` matrices are never formed. The numerator
//! weights are held fixed at their current selection (max mode included).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::objective::{ObjectiveEval, WeightingSpec};
use crate::signal::{dot, fir_adjoint, l2_norm};
use crate::spectrum::{SesResult, VsOperator};

/// Intermediate quantities of one gradient evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientWorkspace {
    pub row_weights: Vec<f64>,
    pub grad_g: Vec<f64>,
    pub grad_h: Vec<f64>,
}

/// Per-bin derivative of `ln psi` with respect to `b`.
pub fn row_weights(ws: &WeightingSpec, eval: &ObjectiveEval) -> Vec<f64> {
    let num = eval.c_s.weighted_columns(&ws.w_s);
    let den = ws.c_n.weighted_columns(&ws.w_n);
    let (sn, sd) = (eval.value.numerator, eval.value.denominator);
    num.iter().zip(&den).map(|(a, c)| a / sn - c / sd).collect()
}

/// A spectrum tied to the filter that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CachedSes {
    pub g: Vec<f64>,
    pub y: Vec<f64>,
    pub ses: SesResult,
}

impl CachedSes {
    pub fn matches(&self, g: &[f64]) -> bool {
        self.g.len() == g.len() && self.g.iter().zip(g).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Gradient of `ln psi` with respect to the unit-norm coefficients `g`.
pub fn grad_log_psi_wrt_g(
    x: &[f64],
    g: &[f64],
    op: &VsOperator,
    row_weights: &[f64],
    cached: &CachedSes,
    exec: Exec,
) -> Result<Vec<f64>> {
    if !cached.matches(g) {
        return Err(Error::StaleCache);
    }
    let coeffs: Vec<Complex64> = row_weights
        .iter()
        .zip(&cached.ses.spectrum)
        .map(|(r, s)| s.conj() * *r)
        .collect();
    let proj = op.adjoint_real(&coeffs)?;
    let z: Vec<f64> = proj.iter().zip(&cached.y).map(|(p, y)| 4.0 * y * p).collect();
    fir_adjoint(x, &z, g.len(), exec)
}

/// Chain rule through `g = h / |h|`: applies `(|h|^2 I - h h^T) / |h|^3`.
pub fn grad_log_psi_wrt_h(h: &[f64], grad_g: &[f64]) -> Result<Vec<f64>> {
    if h.len() != grad_g.len() {
        return Err(Error::InvalidInput("gradient and filter lengths differ".into()));
    }
    let norm_sq = dot(h, h);
    if norm_sq == 0.0 {
        return Err(Error::ZeroFilter);
    }
    let norm = norm_sq.sqrt();
    let radial = dot(h, grad_g) / norm_sq;
    Ok(grad_g.iter().zip(h).map(|(gg, hh)| (gg - radial * hh) / norm).collect())
}

/// Outcome of a central-difference check.
#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub max_rel_error: f64,
    /// `(analytic, finite difference)` directional derivatives.
    pub pairs: Vec<(f64, f64)>,
}

/// Default central-difference step for a point `h`.
pub fn default_fd_step(h: &[f64]) -> f64 {
    1e-6 * l2_norm(h).max(1.0)
}

/// Compares `grad . d` with `(f(h + s d) - f(h - s d)) / 2s` along
/// `directions` random unit vectors drawn from `seed`.
pub fn finite_difference_check<F>(
    mut f: F,
    h: &[f64],
    grad: &[f64],
    directions: usize,
    step: f64,
    seed: u64,
) -> FdReport
where
    F: FnMut(&[f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(directions);
    let mut worst: f64 = 0.0;
    for _ in 0..directions {
        let mut d: Vec<f64> = (0..h.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = l2_norm(&d);
        d.iter_mut().for_each(|v| *v /= n);
        let plus: Vec<f64> = h.iter().zip(&d).map(|(a, b)| a + step * b).collect();
        let minus: Vec<f64> = h.iter().zip(&d).map(|(a, b)| a - step * b).collect();
        let fd = (f(&plus) - f(&minus)) / (2.0 * step);
        let an = dot(grad, &d);
        let scale = an.abs().max(fd.abs());
        let err = if scale == 0.0 { 0.0 } else { (an - fd).abs() / scale };
        worst = worst.max(err);
        pairs.push((an, fd));
    }
    FdReport { max_rel_error: worst, pairs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn projector_annihilates_radial_direction() {
        let mut e1 = vec![0.0; 4];
        e1[0] = 1.0;
        let mut e2 = vec![0.0; 4];
        e2[1] = 1.0;
        assert_eq!(grad_log_psi_wrt_h(&e1, &e1).unwrap(), vec![0.0; 4]);
        assert_eq!(grad_log_psi_wrt_h(&e1, &e2).unwrap(), e2);
        assert_eq!(grad_log_psi_wrt_h(&[0.0; 4], &e2), Err(Error::ZeroFilter));
    }

    #[test]
    fn projector_matches_dense_matrix() {
        let h = [0.3, -1.1, 2.0, 0.7, -0.4];
        let gg = [1.0, 0.5, -0.25, 2.0, 0.1];
        let n2: f64 = h.iter().map(|v| v * v).sum();
        let n3 = n2 * n2.sqrt();
        let mut dense = [0.0; 5];
        for i in 0..5 {
            for j in 0..5 {
                let m = (if i == j { n2 } else { 0.0 } - h[i] * h[j]) / n3;
                dense[i] += m * gg[j];
            }
        }
        let got = grad_log_psi_wrt_h(&h, &gg).unwrap();
        for (a, b) in got.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(dot(&got, &h).abs() < 1e-12);
    }

    #[test]
    fn fd_check_on_quadratic() {
        let h = [0.5, -1.0, 2.0, 0.25];
        let grad: Vec<f64> = h.iter().map(|v| 2.0 * v).collect();
        let rep = finite_difference_check(|p| dot(p, p), &h, &grad, 6, 1e-5, 3);
        assert!(rep.max_rel_error < 1e-9, "{rep:?}");
        assert_eq!(rep.pairs.len(), 6);
        assert_relative_eq!(default_fd_step(&[3.0, 4.0]), 5e-6);
    }
}
