//! Optimal FIR filter design for enhancing rotating-machinery fault
//! signatures under time-varying speed.
//!
//! A filter `g` (unit norm) is applied to a vibration record, the squared
//! envelope spectrum of the output is computed in the cyclic-order domain
//! with the velocity-synchronous DFT, and a ratio of weighted spectral
//! amplitudes (targeted harmonic bands over a noise region) is maximized with
//! a conjugate-gradient method and analytical gradients.
//!
//! Heavy kernels (filtering, the velocity-synchronous transform and its
//! adjoint) run on rayon with the default `parallel` feature; without it, or
//! with [`Exec::Sequential`], they run on the calling thread with identical
//! results.

pub mod design;
pub mod error;
pub mod exec;
pub mod gradient;
pub mod io;
pub mod metrics;
pub mod objective;
pub mod optimizer;
pub mod signal;
pub mod spectrum;
pub mod synth;

pub use design::{DesignProblem, FilterEvaluation, GridOptions};
pub use error::{Error, Result};
pub use exec::Exec;
pub use metrics::{compute_metrics, MetricParams, MetricsReport};
pub use objective::{BandSpec, NumeratorMode, Variant, VariantConfig, WeightingSpec};
pub use optimizer::{minimize, Init, OptimizationTrace, OptimizerConfig, Status};
pub use signal::{fir_filter, integrate_angle, normalize_filter, AngleProfile, FilterState, VibrationRecord};
pub use spectrum::{build_grid, CyclicGrid, SesResult, VsOperator};
pub use synth::{generate, SpeedProfile, SynthConfig};
