use ::csv as csv_crate;
use std::io::Write;
use std::path::Path;

use super::{AnalyticOverlay, ClassEstimate, HarnessError, SweepResult, SweepRow};

pub const CSV_HEADER: [&str; 21] = [
    "scenario",
    "capacity",
    "c_log_c",
    "gamma_p",
    "gamma_s",
    "policy",
    "lookahead",
    "runs",
    "slots_per_run",
    "outage_slots_primary",
    "measured_slots",
    "p_hat_primary",
    "ci_low_primary",
    "ci_high_primary",
    "p_hat_secondary",
    "ci_low_secondary",
    "ci_high_secondary",
    "analytic_exact",
    "analytic_log_lower",
    "analytic_log_upper",
    "empirical_diversity",
];

// `{:e}` prints the shortest digits that parse back to the same f64.
fn real(x: f64) -> String {
    format!("{x:e}")
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

fn record(row: &SweepRow) -> Vec<String> {
    let p = row.primary;
    let s = row.secondary;
    vec![
        row.scenario.clone(),
        row.capacity.to_string(),
        real(row.c_log_c()),
        real(row.gamma_p),
        opt_real(row.gamma_s),
        row.policy.clone().unwrap_or_default(),
        row.lookahead.clone(),
        row.runs.to_string(),
        row.slots_per_run.to_string(),
        p.map(|e| e.outage_slots.to_string()).unwrap_or_default(),
        p.map(|e| e.measured_slots.to_string()).unwrap_or_default(),
        opt_real(p.map(|e| e.p_hat)),
        opt_real(p.map(|e| e.ci_low)),
        opt_real(p.map(|e| e.ci_high)),
        opt_real(s.map(|e| e.p_hat)),
        opt_real(s.map(|e| e.ci_low)),
        opt_real(s.map(|e| e.ci_high)),
        opt_real(row.analytic.exact),
        opt_real(row.analytic.log_lower),
        opt_real(row.analytic.log_upper),
        opt_real(row.empirical_diversity),
    ]
}

/// Writes header and rows to any sink.
pub fn write_csv<W: Write>(result: &SweepResult, sink: W) -> Result<(), csv_crate::Error> {
    let mut w = csv_crate::WriterBuilder::new().terminator(csv_crate::Terminator::Any(b'\n')).from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for row in &result.rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the CSV to `path`, creating or truncating it.
pub fn export_csv(result: &SweepResult, path: &Path) -> Result<(), HarnessError> {
    let io = |source: std::io::Error| HarnessError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::create(path).map_err(io)?;
    write_csv(result, std::io::BufWriter::new(file)).map_err(|e| match e.into_kind() {
        csv_crate::ErrorKind::Io(source) => io(source),
        other => io(std::io::Error::other(format!("{other:?}"))),
    })
}

/// Reads back what [`write_csv`] produced. Secondary outage counts are not
/// stored, so they are recovered as `round(p_hat * measured_slots)`.
pub fn parse_csv(text: &str) -> Result<SweepResult, HarnessError> {
    let mut reader = csv_crate::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| HarnessError::Csv { line: 1, message: e.to_string() })?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(HarnessError::Csv { line: 1, message: "unexpected header".into() });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| HarnessError::Csv { line, message: e.to_string() })?;
        rows.push(parse_record(&rec).map_err(|message| HarnessError::Csv { line, message })?);
    }
    Ok(SweepResult { rows })
}

fn parse_record(rec: &csv_crate::StringRecord) -> Result<SweepRow, String> {
    let field = |i: usize| rec.get(i).ok_or_else(|| format!("missing column {}", CSV_HEADER[i]));
    let opt = |i: usize| -> Result<Option<&str>, String> {
        field(i).map(|f| if f.is_empty() { None } else { Some(f) })
    };
    let num = |i: usize| -> Result<Option<f64>, String> {
        opt(i)?
            .map(|f| f.parse::<f64>().map_err(|e| format!("{}: {e}", CSV_HEADER[i])))
            .transpose()
    };
    let int = |i: usize| -> Result<Option<u64>, String> {
        opt(i)?
            .map(|f| f.parse::<u64>().map_err(|e| format!("{}: {e}", CSV_HEADER[i])))
            .transpose()
    };
    let required = |v: Option<u64>, i: usize| v.ok_or_else(|| format!("{} is empty", CSV_HEADER[i]));

    let measured = int(10)?;
    let primary = match (int(9)?, measured, num(11)?, num(12)?, num(13)?) {
        (Some(outage_slots), Some(measured_slots), Some(p_hat), Some(ci_low), Some(ci_high)) => {
            Some(ClassEstimate { outage_slots, measured_slots, p_hat, ci_low, ci_high })
        }
        (None, None, None, None, None) => None,
        _ => return Err("primary columns partially filled".into()),
    };
    let secondary = match (num(14)?, num(15)?, num(16)?) {
        (Some(p_hat), Some(ci_low), Some(ci_high)) => {
            let measured_slots = measured.ok_or("secondary columns need measured_slots")?;
            let outage_slots = (p_hat * measured_slots as f64).round() as u64;
            Some(ClassEstimate { outage_slots, measured_slots, p_hat, ci_low, ci_high })
        }
        (None, None, None) => None,
        _ => return Err("secondary columns partially filled".into()),
    };
    Ok(SweepRow {
        scenario: field(0)?.to_string(),
        capacity: required(int(1)?, 1)?,
        gamma_p: num(3)?.ok_or("gamma_p is empty")?,
        gamma_s: num(4)?,
        policy: opt(5)?.map(str::to_string),
        lookahead: field(6)?.to_string(),
        runs: required(int(7)?, 7)?,
        slots_per_run: required(int(8)?, 8)?,
        primary,
        secondary,
        analytic: AnalyticOverlay { exact: num(17)?, log_lower: num(18)?, log_upper: num(19)? },
        empirical_diversity: num(20)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_string(result: &SweepResult) -> String {
        let mut buf = Vec::new();
        write_csv(result, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn empty_result_is_header_only() {
        let text = to_string(&SweepResult::default());
        assert_eq!(text, format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn header_matches_schema() {
        assert_eq!(
            CSV_HEADER.join(","),
            "scenario,capacity,c_log_c,gamma_p,gamma_s,policy,lookahead,runs,slots_per_run,\
             outage_slots_primary,measured_slots,p_hat_primary,ci_low_primary,ci_high_primary,\
             p_hat_secondary,ci_low_secondary,ci_high_secondary,analytic_exact,\
             analytic_log_lower,analytic_log_upper,empirical_diversity"
        );
    }

    #[test]
    fn unwritable_path_is_named() {
        let path = Path::new("/nonexistent-dir/out.csv");
        let err = export_csv(&SweepResult::default(), path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }

    #[test]
    fn reals_use_scientific_notation() {
        assert_eq!(real(0.1), "1e-1");
        assert_eq!(real(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
    }
}
