//! The full filter-design objective: coefficients -> filtered signal ->
//! squared envelope spectrum -> `ln psi`, with its analytical gradient.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::gradient::{grad_log_psi_wrt_g, grad_log_psi_wrt_h, row_weights, CachedSes};
use crate::objective::{evaluate_objective, BandSpec, ObjectiveEval, Variant, VariantConfig, WeightingSpec};
use crate::signal::{filtered_len, fir_filter, normalize_filter, AngleProfile, VibrationRecord};
use crate::spectrum::{build_grid, default_resolution, CyclicGrid, VsOperator};

/// Optional overrides for the optimization grid.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GridOptions {
    pub delta_alpha: Option<f64>,
    pub alpha_max: Option<f64>,
}

/// Objective-only default range: the top of the noise band.
pub fn objective_alpha_max(bands: &BandSpec) -> f64 {
    (bands.n_h + 1) as f64 * bands.alpha_c
}

/// Range needed when metrics are also computed.
pub fn metrics_alpha_max(bands: &BandSpec) -> f64 {
    (20.0 * bands.alpha_c + bands.band_width).max(objective_alpha_max(bands))
}

/// One evaluation of the pipeline at a unit-norm filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterEvaluation {
    pub cache: CachedSes,
    pub objective: ObjectiveEval,
}

impl FilterEvaluation {
    pub fn log_psi(&self) -> f64 {
        self.objective.value.log_psi
    }

    pub fn psi(&self) -> f64 {
        self.objective.value.psi
    }
}

#[derive(Debug, Clone)]
pub struct DesignProblem {
    x: Vec<f64>,
    filter_len: usize,
    op: VsOperator,
    weights: WeightingSpec,
    exec: Exec,
}

impl DesignProblem {
    pub fn new(
        record: &VibrationRecord,
        theta: &AngleProfile,
        variant: Variant,
        bands: BandSpec,
        filter_len: usize,
        grid: GridOptions,
        exec: Exec,
    ) -> Result<Self> {
        bands.validate()?;
        if filter_len < 2 {
            return Err(Error::Config(format!("filter length must be at least 2, got {filter_len}")));
        }
        let l_y = filtered_len(record.len(), filter_len)?;
        let delta_alpha = match grid.delta_alpha {
            Some(d) => d,
            None => default_resolution(theta, l_y)?,
        };
        // one extra bin so the floor in `build_grid` cannot cut the noise band
        let alpha_max = grid.alpha_max.unwrap_or_else(|| objective_alpha_max(&bands) + delta_alpha);
        let grid = build_grid(delta_alpha, alpha_max)?;
        let weights = WeightingSpec::new(VariantConfig::new(variant, &bands), bands, &grid)?;
        let op = VsOperator::new(record.omega(), theta, record.fs(), l_y, grid, exec)?;
        Ok(DesignProblem { x: record.x().to_vec(), filter_len, op, weights, exec })
    }

    pub fn filter_len(&self) -> usize {
        self.filter_len
    }

    pub fn grid(&self) -> &CyclicGrid {
        self.op.grid()
    }

    pub fn weights(&self) -> &WeightingSpec {
        &self.weights
    }

    pub fn operator(&self) -> &VsOperator {
        &self.op
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Evaluates at unit-norm coefficients `g`.
    pub fn evaluate(&self, g: &[f64]) -> Result<FilterEvaluation> {
        if g.len() != self.filter_len {
            return Err(Error::InvalidInput(format!(
                "filter has {} taps, problem expects {}",
                g.len(),
                self.filter_len
            )));
        }
        let y = fir_filter(&self.x, g, self.exec)?.y;
        let ses = self.op.ses(&y)?;
        let objective = evaluate_objective(&ses, &self.weights)?;
        Ok(FilterEvaluation { cache: CachedSes { g: g.to_vec(), y, ses }, objective })
    }

    /// Evaluates at unconstrained coefficients `h`.
    pub fn evaluate_h(&self, h: &[f64]) -> Result<FilterEvaluation> {
        let state = normalize_filter(h)?;
        self.evaluate(state.g())
    }

    pub fn log_psi_h(&self, h: &[f64]) -> Result<f64> {
        Ok(self.evaluate_h(h)?.log_psi())
    }

    /// Gradient of `ln psi` with respect to `g` at a cached evaluation.
    pub fn grad_g(&self, eval: &FilterEvaluation) -> Result<Vec<f64>> {
        let r = row_weights(&self.weights, &eval.objective);
        grad_log_psi_wrt_g(&self.x, &eval.cache.g, &self.op, &r, &eval.cache, self.exec)
    }

    /// `ln psi` and its gradient with respect to `h`.
    pub fn log_psi_and_grad_h(&self, h: &[f64]) -> Result<(f64, Vec<f64>, FilterEvaluation)> {
        let eval = self.evaluate_h(h)?;
        let gg = self.grad_g(&eval)?;
        let gh = grad_log_psi_wrt_h(h, &gg)?;
        Ok((eval.log_psi(), gh, eval))
    }
}
