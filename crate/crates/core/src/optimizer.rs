//! Filter initialisation and the nonlinear conjugate-gradient minimizer.
//!
//! The minimizer is Polak-Ribiere+ with periodic restarts and a backtracking
//! Armijo line search driven by quadratic interpolation through `f(0)`,
//! `f'(0)` and the latest trial; on a quadratic objective this lands on the
//! exact line minimizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::design::DesignProblem;
use crate::error::{Error, Result};
use crate::signal::{dot, l2_norm, normalize_filter, FilterState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Prediction-error filter of the raw signal.
    Lpc,
    Impulse,
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    /// Length of the first trial step relative to `max(|h|, 1)`.
    pub initial_step: f64,
    pub contraction: f64,
    pub sufficient_decrease: f64,
    /// Smallest trial step length relative to `max(|h|, 1)`.
    pub min_step: f64,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch { initial_step: 0.1, contraction: 0.5, sufficient_decrease: 1e-4, min_step: 1e-18 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub filter_len: usize,
    pub init: Init,
    pub line_search: LineSearch,
    /// Steepest-descent restart period; `None` means the problem dimension.
    pub restart_every: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            tol: 1e-12,
            max_iter: 1500,
            filter_len: 256,
            init: Init::Lpc,
            line_search: LineSearch::default(),
            restart_every: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.filter_len < 2 {
            return Err(Error::Config(format!("filter length must be at least 2, got {}", self.filter_len)));
        }
        let ls = &self.line_search;
        if !(ls.initial_step > 0.0
            && ls.contraction > 0.0
            && ls.contraction < 1.0
            && ls.sufficient_decrease > 0.0
            && ls.sufficient_decrease < 1.0
            && ls.min_step > 0.0)
        {
            return Err(Error::Config("invalid line-search parameters".into()));
        }
        if self.restart_every == Some(0) {
            return Err(Error::Config("restart period must be positive".into()));
        }
        Ok(())
    }
}

/// Biased autocorrelation `r[k] = sum_n x[n] x[n + k] / L` for `k < lags`.
pub fn autocorrelation(x: &[f64], lags: usize) -> Vec<f64> {
    let len = x.len() as f64;
    (0..lags.min(x.len())).map(|k| x[..x.len() - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / len).collect()
}

/// Levinson-Durbin solution of the Yule-Walker equations: predictor
/// coefficients `a[1..=order]` with `x[n] ~ sum_k a[k] x[n - k]`.
pub fn levinson_durbin(r: &[f64], order: usize) -> Result<Vec<f64>> {
    if r.len() <= order {
        return Err(Error::InvalidInput(format!("{} autocorrelation lags for order {order}", r.len())));
    }
    let mut err = r[0];
    if !(err > 0.0) {
        return Err(Error::SingularAutocorrelation { order: 0 });
    }
    let mut a = vec![0.0; order];
    let mut prev = vec![0.0; order];
    for i in 0..order {
        let acc: f64 = (0..i).map(|j| a[j] * r[i - j]).sum();
        let k = (r[i + 1] - acc) / err;
        prev[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if !(err > 0.0) {
            return Err(Error::SingularAutocorrelation { order: i + 1 });
        }
    }
    Ok(a)
}

/// Prediction-error filter `[1, -a_1, ..., -a_{D-1}]` of `x`.
pub fn lpc_init(x: &[f64], filter_len: usize) -> Result<Vec<f64>> {
    if filter_len < 2 {
        return Err(Error::Config(format!("filter length must be at least 2, got {filter_len}")));
    }
    if x.len() <= 2 * filter_len {
        return Err(Error::SignalTooShort { len: x.len(), filter_len });
    }
    let r = autocorrelation(x, filter_len);
    let a = levinson_durbin(&r, filter_len - 1)?;
    Ok(std::iter::once(1.0).chain(a.iter().map(|v| -v)).collect())
}

pub fn initial_filter(x: &[f64], filter_len: usize, init: Init) -> Result<Vec<f64>> {
    match init {
        Init::Lpc => lpc_init(x, filter_len),
        Init::Impulse => {
            let mut h = vec![0.0; filter_len];
            h[0] = 1.0;
            Ok(h)
        }
        Init::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..filter_len).map(|_| StandardNormal.sample(&mut rng)).collect())
        }
    }
}

/// A point returned by an [`Objective`].
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Data-dependent choices made by the objective (e.g. max-mode bins);
    /// a change between iterates is recorded as a switch.
    pub selection: Vec<usize>,
}

/// Something to minimize.
pub trait Objective {
    fn value(&mut self, h: &[f64]) -> Result<f64>;
    fn evaluate(&mut self, h: &[f64]) -> Result<Point>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    Degenerate,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iterate {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub switched: bool,
}

/// Trace of a generic minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub iterates: Vec<Iterate>,
    pub h: Vec<f64>,
    pub status: Status,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, a| m.max(a.abs()))
}

fn axpy(h: &[f64], step: f64, d: &[f64]) -> Vec<f64> {
    h.iter().zip(d).map(|(a, b)| a + step * b).collect()
}

struct Accepted {
    step: f64,
    h: Vec<f64>,
}

enum SearchFailure {
    /// Every trial stayed within `sqrt(eps)` (relative) of the start value.
    Stalled,
    Failed,
}

/// Minimizer of the quadratic through `f0`, `slope` at 0 and `v` at `alpha`.
fn interpolate(f0: f64, slope: f64, alpha: f64, v: f64) -> Option<f64> {
    let curvature = v - f0 - slope * alpha;
    let aq = -slope * alpha * alpha / (2.0 * curvature);
    (curvature > 0.0 && aq.is_finite() && aq > 0.0).then_some(aq)
}

/// Backtracking Armijo search along `d` from `h`. Rejected trials shrink the
/// step to the interpolated minimizer, kept within `[0.1, contraction]` of
/// the previous trial; an accepted step is refined once by interpolation.
fn line_search<O: Objective>(
    obj: &mut O,
    h: &[f64],
    f0: f64,
    slope: f64,
    d: &[f64],
    first: f64,
    ls: &LineSearch,
) -> std::result::Result<Accepted, SearchFailure> {
    let scale = l2_norm(h).max(1.0);
    let dnorm = l2_norm(d);
    let min_step = ls.min_step * scale / dnorm;
    let trial = |obj: &mut O, a: f64| -> (Vec<f64>, f64) {
        let p = axpy(h, a, d);
        let v = obj.value(&p).unwrap_or(f64::INFINITY);
        (p, if v.is_finite() { v } else { f64::INFINITY })
    };
    let armijo = |a: f64, v: f64| v <= f0 + ls.sufficient_decrease * a * slope;

    let flat_band = f64::EPSILON.sqrt() * f0.abs().max(1.0);
    let mut flat = true;
    let mut alpha = first;
    while alpha >= min_step {
        let (p, v) = trial(obj, alpha);
        flat &= (v - f0).abs() <= flat_band;
        if armijo(alpha, v) {
            if let Some(aq) = interpolate(f0, slope, alpha, v).filter(|&a| a != alpha) {
                let (pq, vq) = trial(obj, aq);
                if vq < v && armijo(aq, vq) {
                    return Ok(Accepted { step: aq, h: pq });
                }
            }
            return Ok(Accepted { step: alpha, h: p });
        }
        let shrink = alpha * ls.contraction;
        alpha = match interpolate(f0, slope, alpha, v) {
            Some(aq) => aq.clamp(shrink.min(0.1 * alpha), shrink),
            None => alpha * ls.contraction,
        };
    }
    Err(if flat { SearchFailure::Stalled } else { SearchFailure::Failed })
}

/// Minimizes `obj` from `h0`.
pub fn minimize_objective<O: Objective>(obj: &mut O, h0: Vec<f64>, cfg: &OptimizerConfig) -> Result<MinimizeResult> {
    cfg.validate()?;
    let dim = h0.len();
    let restart = cfg.restart_every.unwrap_or(dim).max(1);
    let ls = &cfg.line_search;
    let mut h = h0;
    let mut point = match obj.evaluate(&h) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("objective undefined at the initial point: {e}");
            return Ok(MinimizeResult { iterates: Vec::new(), h, status: Status::Degenerate });
        }
    };
    let mut iterates = vec![Iterate {
        iteration: 0,
        value: point.value,
        grad_norm: inf_norm(&point.grad),
        step: 0.0,
        switched: false,
    }];
    let grad_small = |p: &Point| inf_norm(&p.grad) < cfg.tol * p.value.abs().max(1.0);
    if grad_small(&point) {
        return Ok(MinimizeResult { iterates, h, status: Status::Converged });
    }

    let mut dir: Vec<f64> = point.grad.iter().map(|v| -v).collect();
    let mut prev: Option<(f64, f64)> = None; // (step, slope) of the last accepted step
    let mut since_restart = 0;
    for k in 1..=cfg.max_iter {
        let mut slope = dot(&point.grad, &dir);
        let mut steepest = since_restart == 0;
        if !(slope < 0.0) {
            dir = point.grad.iter().map(|v| -v).collect();
            slope = dot(&point.grad, &dir);
            steepest = true;
            since_restart = 0;
        }
        let scale = l2_norm(&h).max(1.0);
        let default_first = ls.initial_step * scale / l2_norm(&dir);
        let first = match prev {
            Some((a, s)) => {
                let guess = a * s / slope;
                if guess.is_finite() && guess > 0.0 {
                    guess.min(10.0 * default_first.max(a))
                } else {
                    default_first
                }
            }
            _ => default_first,
        };
        let mut accepted = line_search(obj, &h, point.value, slope, &dir, first, ls);
        if accepted.is_err() && !steepest {
            log::debug!("iteration {k}: line search failed along the conjugate direction, restarting");
            dir = point.grad.iter().map(|v| -v).collect();
            slope = dot(&point.grad, &dir);
            since_restart = 0;
            let first = ls.initial_step * scale / l2_norm(&dir);
            accepted = line_search(obj, &h, point.value, slope, &dir, first, ls);
        }
        let acc = match accepted {
            Ok(acc) => acc,
            Err(SearchFailure::Stalled) => {
                log::info!("iteration {k}: objective flat to rounding along steepest descent");
                return Ok(MinimizeResult { iterates, h, status: Status::Converged });
            }
            Err(SearchFailure::Failed) => {
                log::warn!("iteration {k}: no sufficient decrease along steepest descent");
                return Ok(MinimizeResult { iterates, h, status: Status::Degenerate });
            }
        };
        let next = match obj.evaluate(&acc.h) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("iteration {k}: objective failed at the accepted point: {e}");
                return Ok(MinimizeResult { iterates, h, status: Status::Degenerate });
            }
        };
        let decrease = point.value - next.value;
        let switched = next.selection != point.selection;
        if switched {
            log::debug!("iteration {k}: band selection switched");
        }
        iterates.push(Iterate {
            iteration: k,
            value: next.value,
            grad_norm: inf_norm(&next.grad),
            step: acc.step * l2_norm(&dir),
            switched,
        });
        prev = Some((acc.step, slope));
        h = acc.h;

        // Polak-Ribiere+ update
        let beta = {
            let num: f64 = next.grad.iter().zip(&point.grad).map(|(a, b)| a * (a - b)).sum();
            (num / dot(&point.grad, &point.grad)).max(0.0)
        };
        since_restart += 1;
        if since_restart >= restart {
            since_restart = 0;
            dir = next.grad.iter().map(|v| -v).collect();
        } else {
            dir = next.grad.iter().zip(&dir).map(|(g, d)| -g + beta * d).collect();
        }
        point = next;

        if grad_small(&point) || decrease <= cfg.tol * (point.value + decrease).abs() {
            return Ok(MinimizeResult { iterates, h, status: Status::Converged });
        }
    }
    Ok(MinimizeResult { iterates, h, status: Status::MaxIter })
}

/// `-ln psi` over unconstrained coefficients, caching the last evaluation.
pub struct FilterObjective<'a> {
    problem: &'a DesignProblem,
    last: Option<(Vec<f64>, crate::design::FilterEvaluation)>,
}

impl<'a> FilterObjective<'a> {
    pub fn new(problem: &'a DesignProblem) -> Self {
        FilterObjective { problem, last: None }
    }

    fn eval(&mut self, h: &[f64]) -> Result<&crate::design::FilterEvaluation> {
        let hit = matches!(&self.last, Some((lh, _)) if lh.as_slice() == h);
        if !hit {
            let e = self.problem.evaluate_h(h)?;
            self.last = Some((h.to_vec(), e));
        }
        Ok(&self.last.as_ref().expect("just stored").1)
    }
}

impl Objective for FilterObjective<'_> {
    fn value(&mut self, h: &[f64]) -> Result<f64> {
        Ok(-self.eval(h)?.log_psi())
    }

    fn evaluate(&mut self, h: &[f64]) -> Result<Point> {
        let eval = self.eval(h)?.clone();
        let gg = self.problem.grad_g(&eval)?;
        let gh = crate::gradient::grad_log_psi_wrt_h(h, &gg)?;
        Ok(Point {
            value: -eval.log_psi(),
            grad: gh.into_iter().map(|v| -v).collect(),
            selection: eval.objective.selection(),
        })
    }
}

/// Result of a filter design run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    /// `(iteration, -ln psi, gradient infinity-norm, step length, switched)`
    pub iterates: Vec<Iterate>,
    pub initial: FilterState,
    pub final_state: FilterState,
    pub status: Status,
}

impl OptimizationTrace {
    pub fn iterations(&self) -> usize {
        self.iterates.last().map_or(0, |i| i.iteration)
    }
}

/// Designs a filter for `problem`, starting from `cfg.init`.
pub fn minimize(problem: &DesignProblem, cfg: &OptimizerConfig) -> Result<OptimizationTrace> {
    if cfg.filter_len != problem.filter_len() {
        return Err(Error::Config(format!(
            "optimizer filter length {} differs from the problem's {}",
            cfg.filter_len,
            problem.filter_len()
        )));
    }
    let h0 = initial_filter(problem.x(), cfg.filter_len, cfg.init)?;
    let initial = normalize_filter(&h0)?;
    let mut obj = FilterObjective::new(problem);
    let res = minimize_objective(&mut obj, h0, cfg)?;
    Ok(OptimizationTrace {
        iterates: res.iterates,
        initial,
        final_state: normalize_filter(&res.h)?,
        status: res.status,
    })
}
