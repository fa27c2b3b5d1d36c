//! The `run` command: load a record, design a filter, write artifacts.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use ges2n_core::design::metrics_alpha_max;
use ges2n_core::io::{columns_to_csv, fmt_f64, read_record, write_atomic};
use ges2n_core::optimizer::Iterate;
use ges2n_core::signal::filtered_len;
use ges2n_core::{
    build_grid, compute_metrics, fir_filter, integrate_angle, minimize, BandSpec, CyclicGrid, DesignProblem, Exec,
    GridOptions, Init, MetricParams, MetricsReport, OptimizerConfig, Status, Variant, VibrationRecord, VsOperator,
};
use serde::Serialize;

use crate::config::KeyValues;
use crate::error::{CliError, CliResult};

/// Smallest zero-padded length of the filter response.
pub const FRF_POINTS: usize = 4096;

pub const RUN_KEYS: &[&str] = &[
    "input",
    "variant",
    "alpha-c",
    "nh",
    "band-width",
    "filter-length",
    "tol",
    "max-iter",
    "init",
    "seed",
    "extraneous-order",
    "delta-alpha",
    "alpha-max",
    "out",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub variant: Variant,
    pub bands: BandSpec,
    pub optimizer: OptimizerConfig,
    pub extraneous_order: f64,
    pub delta_alpha: Option<f64>,
    pub alpha_max: Option<f64>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            variant: Variant::MaxNp,
            bands: BandSpec::default(),
            optimizer: OptimizerConfig::default(),
            extraneous_order: MetricParams::default().alpha_extraneous,
            delta_alpha: None,
            alpha_max: None,
            out: None,
        }
    }
}

fn parse_init(name: &str, seed: u64) -> CliResult<Init> {
    match name {
        "lpc" => Ok(Init::Lpc),
        "impulse" => Ok(Init::Impulse),
        "random" => Ok(Init::Random { seed }),
        other => Err(CliError::Config(format!("unknown init `{other}`; expected lpc, impulse or random"))),
    }
}

impl RunConfig {
    /// Reads the run keys of `kv`; absent keys keep their defaults. Other
    /// keys are ignored.
    pub fn from_keys(kv: &KeyValues) -> CliResult<Self> {
        let d = RunConfig::default();
        let variant = match kv.raw("variant") {
            Some(v) => v.parse::<Variant>()?,
            None => d.variant,
        };
        let bands = BandSpec {
            alpha_c: kv.get_or("alpha-c", d.bands.alpha_c)?,
            n_h: kv.get_or("nh", d.bands.n_h)?,
            band_width: kv.get_or("band-width", d.bands.band_width)?,
        };
        bands.validate()?;
        let seed = kv.get_or("seed", 0u64)?;
        let init = parse_init(kv.raw("init").unwrap_or("lpc"), seed)?;
        let optimizer = OptimizerConfig {
            tol: kv.get_or("tol", d.optimizer.tol)?,
            max_iter: kv.get_or("max-iter", d.optimizer.max_iter)?,
            filter_len: kv.get_or("filter-length", d.optimizer.filter_len)?,
            init,
            ..d.optimizer
        };
        optimizer.validate()?;
        Ok(RunConfig {
            input: kv.get::<PathBuf>("input")?,
            variant,
            bands,
            optimizer,
            extraneous_order: kv.get_or("extraneous-order", d.extraneous_order)?,
            delta_alpha: kv.get("delta-alpha")?,
            alpha_max: kv.get("alpha-max")?,
            out: kv.get::<PathBuf>("out")?,
        })
    }

    pub fn metric_params(&self) -> MetricParams {
        MetricParams {
            alpha_c: self.bands.alpha_c,
            alpha_extraneous: self.extraneous_order,
            n_h: self.bands.n_h,
            band_width: self.bands.band_width,
        }
    }
}

/// Flat metrics record written to `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsFile {
    pub variant: String,
    pub status: String,
    pub iterations: usize,
    pub filter_length: usize,
    pub delta_alpha: f64,
    pub psi_initial: f64,
    pub psi_final: f64,
    pub alpha_c: f64,
    pub alpha_extraneous: f64,
    pub m1_raw: Option<f64>,
    pub m2_raw: Option<f64>,
    pub m3_raw: Option<f64>,
    pub m4_raw: Option<f64>,
    pub m1_filtered: Option<f64>,
    pub m2_filtered: Option<f64>,
    pub m3_filtered: Option<f64>,
    pub m4_filtered: Option<f64>,
}

/// Everything a run produces, before it is written anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: Status,
    pub iterates: Vec<Iterate>,
    pub g: Vec<f64>,
    pub fs: f64,
    pub filtered: Vec<f64>,
    pub metrics_grid: CyclicGrid,
    pub ses_raw: Vec<f64>,
    pub ses_filtered: Vec<f64>,
    pub raw: MetricsReport,
    pub filtered_metrics: MetricsReport,
    pub psi_initial: f64,
    pub psi_final: f64,
    pub variant: Variant,
}

impl RunOutcome {
    pub fn iterations(&self) -> usize {
        self.iterates.last().map_or(0, |i| i.iteration)
    }

    pub fn metrics_file(&self) -> MetricsFile {
        MetricsFile {
            variant: self.variant.name().to_string(),
            status: self.status.as_str().to_string(),
            iterations: self.iterations(),
            filter_length: self.g.len(),
            delta_alpha: self.metrics_grid.delta_alpha(),
            psi_initial: self.psi_initial,
            psi_final: self.psi_final,
            alpha_c: self.raw.alpha_c,
            alpha_extraneous: self.raw.alpha_extraneous,
            m1_raw: self.raw.m1,
            m2_raw: self.raw.m2,
            m3_raw: self.raw.m3,
            m4_raw: self.raw.m4,
            m1_filtered: self.filtered_metrics.m1,
            m2_filtered: self.filtered_metrics.m2,
            m3_filtered: self.filtered_metrics.m3,
            m4_filtered: self.filtered_metrics.m4,
        }
    }
}

/// Designs a filter for `record` and meters raw and filtered spectra on a
/// grid that reaches `20 alpha_c` and the extraneous band.
pub fn execute(record: &VibrationRecord, cfg: &RunConfig, exec: Exec) -> CliResult<RunOutcome> {
    let d = cfg.optimizer.filter_len;
    let theta = integrate_angle(record)?;
    let grid_opts = GridOptions { delta_alpha: cfg.delta_alpha, alpha_max: cfg.alpha_max };
    let problem = DesignProblem::new(record, &theta, cfg.variant, cfg.bands, d, grid_opts, exec)?;
    let trace = minimize(&problem, &cfg.optimizer)?;
    let psi_of = |it: Option<&Iterate>| it.map_or(f64::NAN, |i| (-i.value).exp());

    let l_y = filtered_len(record.len(), d)?;
    let params = cfg.metric_params();
    let top = metrics_alpha_max(&cfg.bands)
        .max(params.alpha_extraneous + params.band_width)
        .max(cfg.alpha_max.unwrap_or(0.0));
    let metrics_grid = build_grid(problem.grid().delta_alpha(), top)?;
    let op = VsOperator::new(record.omega(), &theta, record.fs(), l_y, metrics_grid.clone(), exec)?;
    let filtered = fir_filter(record.x(), trace.final_state.g(), exec)?.y;
    let ses_raw = op.ses(&record.x()[..l_y])?.b;
    let ses_filtered = op.ses(&filtered)?.b;
    let raw = compute_metrics(&ses_raw, &metrics_grid, &params)?;
    let filtered_metrics = compute_metrics(&ses_filtered, &metrics_grid, &params)?;
    Ok(RunOutcome {
        status: trace.status,
        psi_initial: psi_of(trace.iterates.first()),
        psi_final: psi_of(trace.iterates.last()),
        iterates: trace.iterates,
        g: trace.final_state.g().to_vec(),
        fs: record.fs(),
        filtered,
        metrics_grid,
        ses_raw,
        ses_filtered,
        raw,
        filtered_metrics,
        variant: cfg.variant,
    })
}

/// `(frequency Hz, |G|)` for `0..=fs/2` from a direct DFT of `g` zero-padded
/// to `max(4096, D)` points, scaled to unit L2 norm.
pub fn frequency_response(g: &[f64], fs: f64) -> (Vec<f64>, Vec<f64>) {
    let n = FRF_POINTS.max(g.len());
    let bins = n / 2 + 1;
    let freq: Vec<f64> = (0..bins).map(|k| k as f64 * fs / n as f64).collect();
    let mut mag: Vec<f64> = (0..bins)
        .map(|k| {
            let w = -2.0 * PI * k as f64 / n as f64;
            let (re, im) = g.iter().enumerate().fold((0.0, 0.0), |(re, im), (i, c)| {
                let ph = w * i as f64;
                (re + c * ph.cos(), im + c * ph.sin())
            });
            re.hypot(im)
        })
        .collect();
    let norm = mag.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        mag.iter_mut().for_each(|v| *v /= norm);
    }
    (freq, mag)
}

pub fn trace_csv(iterates: &[Iterate]) -> String {
    let mut out = String::from("iteration,neg_log_psi,grad_inf_norm,step,switched\n");
    for it in iterates {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            it.iteration,
            fmt_f64(it.value),
            fmt_f64(it.grad_norm),
            fmt_f64(it.step),
            u8::from(it.switched)
        ));
    }
    out
}

pub fn metrics_json(m: &MetricsFile) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(m).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes every artifact of `outcome` into `dir`.
pub fn write_artifacts(dir: &Path, outcome: &RunOutcome) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let time: Vec<f64> = (0..outcome.filtered.len()).map(|n| n as f64 / outcome.fs).collect();
    let taps: Vec<f64> = (0..outcome.g.len()).map(|i| i as f64).collect();
    let alpha = outcome.metrics_grid.alpha();
    let (freq, mag) = frequency_response(&outcome.g, outcome.fs);
    let files = [
        ("filtered.csv", columns_to_csv(&["time", "y"], &[&time, &outcome.filtered])),
        ("filter.csv", columns_to_csv(&["tap", "g"], &[&taps, &outcome.g])),
        ("ses_raw.csv", columns_to_csv(&["alpha", "b"], &[alpha, &outcome.ses_raw])),
        ("ses_filtered.csv", columns_to_csv(&["alpha", "b"], &[alpha, &outcome.ses_filtered])),
        ("frf.csv", columns_to_csv(&["freq_hz", "magnitude"], &[&freq, &mag])),
        ("trace.csv", trace_csv(&outcome.iterates)),
        ("metrics.json", metrics_json(&outcome.metrics_file())?),
    ];
    for (name, body) in files {
        write_atomic(&dir.join(name), body.as_bytes())?;
    }
    Ok(())
}

/// Full `run` command. A degenerate optimization still writes its artifacts
/// and then reports the dedicated error.
pub fn run(cfg: &RunConfig) -> CliResult<RunOutcome> {
    let input = cfg.input.as_ref().ok_or_else(|| CliError::Config("missing --input".into()))?;
    let out = cfg.out.as_ref().ok_or_else(|| CliError::Config("missing --out".into()))?;
    let record = read_record(input)?;
    let outcome = execute(&record, cfg, Exec::default())?;
    write_artifacts(out, &outcome)?;
    log::info!(
        "{}: {} after {} iterations, psi {} -> {}",
        cfg.variant,
        outcome.status.as_str(),
        outcome.iterations(),
        outcome.psi_initial,
        outcome.psi_final
    );
    if outcome.status == Status::Degenerate {
        return Err(CliError::Degenerate(format!(
            "optimizer stopped without progress after {} iterations",
            outcome.iterations()
        )));
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_response_is_flat_and_unit_norm() {
        let (f, m) = frequency_response(&[1.0, 0.0, 0.0], 1000.0);
        assert_eq!(f.len(), FRF_POINTS / 2 + 1);
        assert_eq!(f[f.len() - 1], 500.0);
        let expect = 1.0 / (m.len() as f64).sqrt();
        assert!(m.iter().all(|v| (v - expect).abs() < 1e-15));
    }

    #[test]
    fn long_filters_pad_to_their_length() {
        let g = vec![0.1; 5000];
        let (f, _) = frequency_response(&g, 1.0);
        assert_eq!(f.len(), 2501);
    }

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = RunConfig::from_keys(&KeyValues::default()).unwrap();
        assert_eq!(cfg.optimizer.filter_len, 256);
        assert_eq!(cfg.optimizer.max_iter, 1500);
        assert_eq!(cfg.optimizer.tol, 1e-12);
        assert_eq!(cfg.bands, BandSpec::default());
        let kv = KeyValues::parse("variant = GES2N-Mean-Nf\ninit = random\nseed = 4\nnh = 3").unwrap();
        let cfg = RunConfig::from_keys(&kv).unwrap();
        assert_eq!(cfg.variant, Variant::MeanNf);
        assert_eq!(cfg.optimizer.init, Init::Random { seed: 4 });
        assert_eq!(cfg.bands.n_h, 3);
        let bad = KeyValues::parse("variant = GES2N-Foo").unwrap();
        assert_eq!(RunConfig::from_keys(&bad).unwrap_err().exit_code(), 2);
    }
}
