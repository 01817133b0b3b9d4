//! Report rows and their CSV form. Column order follows field order.

use std::io::Write;

use serde::Serialize;

use crate::error::CliError;

/// One row per designed scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub scenario: String,
    /// Number of sensors `J`.
    pub sites: usize,
    /// Total qubits `N`.
    pub qubits: u64,
    /// Signal coefficient index `k*`.
    pub signal_index: usize,
    pub qfi_optimal: f64,
    /// Optimum of the same array with no noise constraints.
    pub qfi_noiseless: f64,
    pub max_noise_residual: f64,
    /// Dimensions of the twirl blocks of the optimal probe, e.g. `1x2`.
    pub block_census: String,
    pub advantage_ratio: Option<f64>,
}

impl ReportRow {
    pub fn check_finite(&self) -> Result<(), CliError> {
        let fields = [
            self.qfi_optimal,
            self.qfi_noiseless,
            self.max_noise_residual,
        ];
        if fields
            .iter()
            .chain(&self.advantage_ratio)
            .all(|x| x.is_finite())
        {
            Ok(())
        } else {
            Err(CliError::Check(format!(
                "non-finite value in report for {}",
                self.scenario
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRow {
    pub scenario: String,
    pub qfi_pure: f64,
    pub qfi_twirled: f64,
    pub purity: f64,
    /// Empty for single-branch probes.
    pub parity_fisher: Option<f64>,
    /// `agree`, `skipped` or `unrealizable`.
    pub oracle: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdvantageRow {
    #[serde(rename = "J")]
    pub sites: usize,
    pub optimal_qfi: f64,
    pub max_product_qfi: f64,
    pub ratio: f64,
    pub bound: f64,
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(rows: &[T], path: &std::path::Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write_csv(rows, file)
}

/// Up to nine decimals, trailing zeros dropped.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x != 0.0 && (x.abs() >= 1e9 || x.abs() < 1e-6) {
        return format!("{x:.3e}");
    }
    let s = format!("{x:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

pub fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|&x| fmt_num(x)).collect();
    format!("({})", parts.join(", "))
}
