//! The `synth` command: synthetic records from a key-value description.

use std::path::Path;

use ges2n_core::io::write_record;
use ges2n_core::{generate, SpeedProfile, SynthConfig, VibrationRecord};

use crate::config::KeyValues;
use crate::error::{CliError, CliResult};

pub const SYNTH_KEYS: &[&str] = &[
    "fs",
    "duration",
    "speed",
    "fault-order",
    "fault-carrier-hz",
    "fault-snr-db",
    "extraneous-order",
    "extraneous-carrier-hz",
    "extraneous-snr-db",
    "noise-db",
    "burst-len",
    "slip",
    "seed",
    "out",
];

/// `constant W`, `ramp W0 W1` or `piecewise T:W, T:W, ...` (rad/s).
pub fn parse_speed(text: &str) -> CliResult<SpeedProfile> {
    let bad = || CliError::Config(format!("cannot parse speed profile `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let (kind, rest) = text.trim().split_once(char::is_whitespace).ok_or_else(bad)?;
    match kind {
        "constant" => Ok(SpeedProfile::Constant(num(rest)?)),
        "ramp" => {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            match parts.as_slice() {
                [a, b] => Ok(SpeedProfile::Ramp(num(a)?, num(b)?)),
                _ => Err(bad()),
            }
        }
        "piecewise" => rest
            .split(',')
            .map(|p| {
                let (t, w) = p.split_once(':').ok_or_else(bad)?;
                Ok((num(t)?, num(w)?))
            })
            .collect::<CliResult<Vec<_>>>()
            .map(SpeedProfile::Piecewise),
        _ => Err(bad()),
    }
}

pub fn synth_config(kv: &KeyValues) -> CliResult<SynthConfig> {
    kv.check_known(SYNTH_KEYS)?;
    let d = SynthConfig::default();
    let speed = match kv.raw("speed") {
        Some(s) => parse_speed(s)?,
        None => d.speed.clone(),
    };
    let cfg = SynthConfig {
        fs: kv.get_or("fs", d.fs)?,
        duration: kv.get_or("duration", d.duration)?,
        speed,
        fault_order: kv.get_or("fault-order", d.fault_order)?,
        fault_carrier_hz: kv.get_or("fault-carrier-hz", d.fault_carrier_hz)?,
        fault_snr_db: kv.get_or("fault-snr-db", d.fault_snr_db)?,
        extraneous_order: kv.get_or("extraneous-order", d.extraneous_order)?,
        extraneous_carrier_hz: kv.get_or("extraneous-carrier-hz", d.extraneous_carrier_hz)?,
        extraneous_snr_db: kv.get_or("extraneous-snr-db", d.extraneous_snr_db)?,
        noise_db: kv.get_or("noise-db", d.noise_db)?,
        burst_len: kv.get_or("burst-len", d.burst_len)?,
        slip: kv.get_or("slip", d.slip)?,
        seed: kv.get_or("seed", d.seed)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn synthesize(kv: &KeyValues) -> CliResult<VibrationRecord> {
    Ok(generate(&synth_config(kv)?)?.record)
}

pub fn run(kv: &KeyValues, out: &Path) -> CliResult<()> {
    let record = synthesize(kv)?;
    write_record(out, &record)?;
    log::info!("wrote {} samples to {}", record.len(), out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_profiles_parse() {
        assert_eq!(parse_speed("constant 62.5").unwrap(), SpeedProfile::Constant(62.5));
        assert_eq!(parse_speed("ramp 50 75").unwrap(), SpeedProfile::Ramp(50.0, 75.0));
        assert_eq!(
            parse_speed("piecewise 0:50, 1.5:60").unwrap(),
            SpeedProfile::Piecewise(vec![(0.0, 50.0), (1.5, 60.0)])
        );
        assert!(parse_speed("ramp 50").is_err());
        assert!(parse_speed("spin 3").is_err());
    }

    #[test]
    fn keys_override_defaults() {
        let kv = KeyValues::parse("noise_db = -inf\nfault-snr-db = -3\nseed = 9").unwrap();
        let cfg = synth_config(&kv).unwrap();
        assert_eq!(cfg.noise_db, f64::NEG_INFINITY);
        assert_eq!(cfg.fault_snr_db, -3.0);
        assert_eq!(cfg.seed, 9);
        assert!(synth_config(&KeyValues::parse("colour = red").unwrap()).is_err());
    }
}
