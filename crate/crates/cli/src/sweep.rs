//! The `sweep` command: a grid of runs over filter length, cyclic-order
//! resolution and band width, summarized in one table.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ges2n_core::io::{fmt_f64, read_record, write_atomic};
use ges2n_core::{Exec, VibrationRecord};

use crate::config::KeyValues;
use crate::error::{CliError, CliResult};
use crate::run::{execute, RunConfig, RunOutcome, RUN_KEYS};

pub const SWEEP_KEYS: &[&str] = &["synth-config", "jobs"];

/// One cell of the grid. `delta_alpha = None` means the record's own
/// resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub filter_len: usize,
    pub delta_alpha: Option<f64>,
    pub band_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: RunConfig,
    pub cells: Vec<Cell>,
    pub synth_config: Option<PathBuf>,
    pub jobs: usize,
}

fn parse_resolution(s: &str) -> CliResult<Option<f64>> {
    if s.trim() == "auto" {
        return Ok(None);
    }
    s.trim()
        .parse()
        .map(Some)
        .map_err(|_| CliError::Config(format!("cannot parse delta-alpha `{s}`; use a number or `auto`")))
}

impl SweepSpec {
    /// `filter-length`, `delta-alpha` and `band-width` may hold
    /// comma-separated lists; every other run key is shared by all cells.
    /// Relative `input` and `synth-config` paths resolve against `base_dir`.
    pub fn from_keys(kv: &KeyValues, base_dir: &Path) -> CliResult<Self> {
        let known: Vec<&str> = RUN_KEYS.iter().chain(SWEEP_KEYS).copied().collect();
        kv.check_known(&known)?;
        let axes = ["filter-length", "delta-alpha", "band-width"];
        let mut shared = KeyValues::default();
        for key in kv.keys().filter(|k| RUN_KEYS.contains(k) && !axes.contains(k)) {
            shared.set(key, kv.raw(key).unwrap_or_default());
        }
        let mut base = RunConfig::from_keys(&shared)?;
        base.input = base.input.map(|p| base_dir.join(p));
        let lengths = kv.list::<usize>("filter-length")?.unwrap_or(vec![base.optimizer.filter_len]);
        let widths = kv.list::<f64>("band-width")?.unwrap_or(vec![base.bands.band_width]);
        let resolutions = match kv.raw("delta-alpha") {
            Some(v) => v.split(',').map(parse_resolution).collect::<CliResult<Vec<_>>>()?,
            None => vec![None],
        };
        let mut cells = Vec::new();
        for &filter_len in &lengths {
            for &delta_alpha in &resolutions {
                for &band_width in &widths {
                    cells.push(Cell { filter_len, delta_alpha, band_width });
                }
            }
        }
        let synth_config = kv.get::<PathBuf>("synth-config")?.map(|p| base_dir.join(p));
        if base.input.is_some() == synth_config.is_some() {
            return Err(CliError::Config("a sweep needs exactly one of `input` or `synth-config`".into()));
        }
        Ok(SweepSpec { base, cells, synth_config, jobs: kv.get_or("jobs", 1)? })
    }

    fn cell_config(&self, cell: &Cell) -> RunConfig {
        let mut cfg = self.base.clone();
        cfg.optimizer.filter_len = cell.filter_len;
        cfg.delta_alpha = cell.delta_alpha;
        cfg.bands.band_width = cell.band_width;
        cfg
    }
}

#[derive(Debug)]
pub struct CellResult {
    pub cell: Cell,
    pub outcome: CliResult<RunOutcome>,
    pub seconds: f64,
}

fn run_cell(spec: &SweepSpec, record: &VibrationRecord, cell: Cell) -> CellResult {
    let start = Instant::now();
    let cfg = spec.cell_config(&cell);
    let outcome = cfg.optimizer.validate().map_err(CliError::from).and_then(|_| execute(record, &cfg, Exec::Sequential));
    if let Err(e) = &outcome {
        log::warn!("cell {cell:?} failed: {e}");
    }
    CellResult { cell, outcome, seconds: start.elapsed().as_secs_f64() }
}

/// Runs every cell, at most `spec.jobs` at a time. Each cell is sequential
/// inside; results come back in grid order.
pub fn execute_sweep(spec: &SweepSpec, record: &VibrationRecord) -> CliResult<Vec<CellResult>> {
    if spec.jobs == 0 {
        return Err(CliError::Config("jobs must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.jobs)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(pool.install(|| spec.cells.par_iter().map(|c| run_cell(spec, record, *c)).collect()))
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(spec.cells.iter().map(|c| run_cell(spec, record, *c)).collect())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt_f64)
}

pub fn summary_csv(results: &[CellResult]) -> String {
    let mut out = String::from(
        "filter_length,delta_alpha,band_width,status,psi_final,m1,m2,m3,m4,iterations,wall_seconds,error\n",
    );
    for r in results {
        let c = &r.cell;
        let lead = format!("{},{},{}", c.filter_len, opt(c.delta_alpha), fmt_f64(c.band_width));
        let row = match &r.outcome {
            Ok(o) => {
                let m = &o.filtered_metrics;
                format!(
                    "{lead},{},{},{},{},{},{},{},{},",
                    o.status.as_str(),
                    fmt_f64(o.psi_final),
                    opt(m.m1),
                    opt(m.m2),
                    opt(m.m3),
                    opt(m.m4),
                    o.iterations(),
                    fmt_f64(r.seconds)
                )
            }
            Err(e) => format!(
                "{lead},failed,,,,,,,{},\"{}\"",
                fmt_f64(r.seconds),
                e.to_string().replace('"', "'")
            ),
        };
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn run(kv: &KeyValues, base_dir: &Path, out: &Path) -> CliResult<Vec<CellResult>> {
    let spec = SweepSpec::from_keys(kv, base_dir)?;
    let record = match (&spec.base.input, &spec.synth_config) {
        (Some(p), _) => read_record(p)?,
        (None, Some(p)) => crate::synth::synthesize(&KeyValues::load(p)?)?,
        (None, None) => unreachable!("checked when the spec was built"),
    };
    let results = execute_sweep(&spec, &record)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    write_atomic(&out.join("summary.csv"), summary_csv(&results).as_bytes())?;
    let failed = results.iter().filter(|r| r.outcome.is_err()).count();
    log::info!("sweep finished: {} cells, {failed} failed", results.len());
    Ok(results)
}
