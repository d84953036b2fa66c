pub mod calibrate;
pub mod lower;
pub mod upper;

use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Ceiling on `t` for exact mixing-time measurements in the harnesses.
pub const MIXING_MAX_T: usize = 100_000;

/// Serializes rows as RFC 4180 CSV with a header row, even when empty.
pub fn rows_to_csv<T: Serialize>(columns: &[&str], rows: &[T]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::runtime(format!("csv: {e}"));
    w.write_record(columns).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::runtime(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv<T: Serialize>(path: &Path, columns: &[&str], rows: &[T]) -> CliResult<()> {
    crate::io::write_text(path, &rows_to_csv(columns, rows)?)
}

pub const LOWER_COLUMNS: [&str; 15] = [
    "gamma_lb",
    "eps",
    "c_lb",
    "kl",
    "threshold",
    "t_multiplier",
    "t",
    "trials",
    "errors",
    "error_rate",
    "instance_trials",
    "wrong_action_fraction",
    "mean_gain_gap",
    "additivity_residual",
    "error",
];

#[cfg(test)]
mod tests {
    use super::*;
    use upper::{ResultRow, RESULT_COLUMNS};

    #[test]
    fn header_present_and_columns_line_up() {
        let empty: Vec<ResultRow> = Vec::new();
        let text = rows_to_csv(&RESULT_COLUMNS, &empty).unwrap();
        assert_eq!(text.trim_end(), RESULT_COLUMNS.join(","));
        let row = ResultRow {
            instance_id: "a,b".into(),
            trial_seed: 1,
            gamma_lb: None,
            model_hash: "h".into(),
            t_mix_input: Some(2),
            t_mix_measured: None,
            eps: 0.1,
            gamma: None,
            samples_per_pair: None,
            total_samples: None,
            policy_gain: None,
            optimal_gain: None,
            gap: None,
            per_state_correct_fraction: None,
            wallclock_ms: 0,
            error: String::new(),
        };
        let text = rows_to_csv(&RESULT_COLUMNS, &[row]).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert!(line.starts_with("\"a,b\",1,,h,2,,0.1,"));
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(rdr.records().next().unwrap().unwrap().len(), RESULT_COLUMNS.len());
    }
}
