use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use super::{run, RunMetrics, SimConfig, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Beta,
    Gamma,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
            SweepParam::Gamma => "gamma",
        }
    }

    /// Copy of `config` with this parameter set to `value`.
    pub fn apply(self, config: &SimConfig, value: f64) -> Result<SimConfig, SimError> {
        let mut c = config.clone();
        match self {
            SweepParam::Alpha => c.params.alpha = value,
            SweepParam::Beta => c.params.beta = value,
            SweepParam::Gamma => {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= f64::from(u32::MAX)) {
                    return Err(SimError::ConfigInvalid(format!("gamma must be a whole number, got {value}")));
                }
                c.params.gamma = value as u32;
            }
        }
        Ok(c)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "beta" => Ok(SweepParam::Beta),
            "gamma" => Ok(SweepParam::Gamma),
            _ => Err(format!("unknown sweep parameter {s:?}, expected alpha, beta or gamma")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub avg_service_time_s: f64,
    /// Service time over the largest service time in the sweep.
    pub normalized_service_time: f64,
    pub avg_pf_analytical: f64,
    pub avg_pf_empirical: f64,
}

impl SweepRow {
    /// Rows in `values` order; `metrics[i]` belongs to `values[i]`.
    pub fn table(values: &[f64], metrics: &[RunMetrics]) -> Vec<SweepRow> {
        let max = metrics
            .iter()
            .map(|m| m.avg_service_time_s)
            .filter(|t| t.is_finite())
            .fold(0.0, f64::max);
        values
            .iter()
            .zip(metrics)
            .map(|(&value, m)| SweepRow {
                value,
                avg_service_time_s: m.avg_service_time_s,
                normalized_service_time: if max > 0.0 { m.avg_service_time_s / max } else { f64::NAN },
                avg_pf_analytical: m.avg_pf_analytical,
                avg_pf_empirical: m.avg_pf_empirical,
            })
            .collect()
    }
}

/// Run for the `index`-th sweep value, seeded with the base seed plus `index`.
pub fn sweep_point(config: &SimConfig, param: SweepParam, value: f64, index: usize) -> Result<RunMetrics, SimError> {
    let mut c = param.apply(config, value)?;
    c.seed = config.seed.wrapping_add(index as u64);
    run(&c)
}

/// One independent run per value, in order.
pub fn sweep(config: &SimConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>, SimError> {
    if values.is_empty() {
        return Err(SimError::ConfigInvalid("sweep has no values".into()));
    }
    let metrics = values
        .iter()
        .enumerate()
        .map(|(i, &v)| sweep_point(config, param, v, i))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepRow::table(values, &metrics))
}

pub fn write_sweep_csv<W: Write>(w: W, param: SweepParam, rows: &[SweepRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        param.name(),
        "avg_service_time_s",
        "normalized_service_time",
        "avg_pf_analytical",
        "avg_pf_empirical",
    ])?;
    for r in rows {
        out.write_record([
            r.value.to_string(),
            r.avg_service_time_s.to_string(),
            r.normalized_service_time.to_string(),
            r.avg_pf_analytical.to_string(),
            r.avg_pf_empirical.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
