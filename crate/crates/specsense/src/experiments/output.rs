//! Plot-ready delimited-text output. One header row per file; every float
//! is serialized with 9 significant digits so reruns are bit-identical.

use std::io::{self, Write};

use super::{ConvergenceStudy, RobustnessOutcome, RocStudy, SensitivityTable};

/// 9-significant-digit float formatting used in every data file.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// `roc.csv`: rule, threshold_db, pf, pf_stderr, pm, pm_stderr, trials_h0,
/// trials_h1.
pub fn write_roc_csv<W: Write>(study: &RocStudy, out: &mut W) -> io::Result<()> {
    writeln!(
        out,
        "rule,threshold_db,pf,pf_stderr,pm,pm_stderr,trials_h0,trials_h1"
    )?;
    for curve in &study.curves {
        for point in &curve.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                curve.rule.label(),
                fmt_float(point.threshold_db),
                fmt_float(point.pf.value),
                fmt_float(point.pf.stderr),
                fmt_float(point.pm.value),
                fmt_float(point.pm.stderr),
                study.trials_h0,
                study.trials_h1,
            )?;
        }
    }
    Ok(())
}

/// `sensitivity.csv`: rule, snr_db, lambda_db, pd, pd_stderr, pf, pf_stderr,
/// trials_h1, trials_h0.
pub fn write_sensitivity_csv<W: Write>(table: &SensitivityTable, out: &mut W) -> io::Result<()> {
    writeln!(
        out,
        "rule,snr_db,lambda_db,pd,pd_stderr,pf,pf_stderr,trials_h1,trials_h0"
    )?;
    for row in &table.rows {
        for cell in &row.cells {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                cell.rule.label(),
                fmt_float(row.snr_db),
                fmt_float(cell.lambda_db),
                fmt_float(cell.pd.value),
                fmt_float(cell.pd.stderr),
                fmt_float(cell.pf_check.value),
                fmt_float(cell.pf_check.stderr),
                cell.pd.trials_effective,
                cell.pf_check.trials_effective,
            )?;
        }
    }
    Ok(())
}

/// `robustness.csv`: rule, lambda_db, snr_db, pm, pm_stderr, pf, pf_stderr,
/// trials_h1, trials_h0.
pub fn write_robustness_csv<W: Write>(outcome: &RobustnessOutcome, out: &mut W) -> io::Result<()> {
    writeln!(
        out,
        "rule,lambda_db,snr_db,pm,pm_stderr,pf,pf_stderr,trials_h1,trials_h0"
    )?;
    for curve in &outcome.curves {
        for row in &curve.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                curve.rule.label(),
                fmt_float(curve.lambda_db),
                fmt_float(row.snr_db),
                fmt_float(row.pm.value),
                fmt_float(row.pm.stderr),
                fmt_float(row.pf.value),
                fmt_float(row.pf.stderr),
                row.pm.trials_effective,
                row.pf.trials_effective,
            )?;
        }
    }
    Ok(())
}

/// `convergence.csv`: epsilon, failure_probability, repetitions,
/// median_iterations, q1_iterations, q3_iterations, converged_fraction.
pub fn write_convergence_csv<W: Write>(study: &ConvergenceStudy, out: &mut W) -> io::Result<()> {
    writeln!(
        out,
        "epsilon,failure_probability,repetitions,median_iterations,q1_iterations,q3_iterations,converged_fraction"
    )?;
    for row in &study.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_float(row.epsilon),
            fmt_float(row.failure_probability),
            row.repetitions,
            fmt_float(row.median_iterations),
            fmt_float(row.q1_iterations),
            fmt_float(row.q3_iterations),
            fmt_float(row.converged_fraction),
        )?;
    }
    Ok(())
}
