//! CSV and text emitters. Numbers are written in Rust's shortest round-trip
//! form, which is locale-independent and parses back to the same bits.

use std::io::Write;

use ksgd_core::diagnostics::DiagnosticsSeries;
use ksgd_core::experiments::SweepRow;
use ksgd_core::model::{gamma_admissible, EstimateConstants};
use ksgd_core::{RunOutcome, RunStatus};

/// Fixed leading columns of `series.csv`; `lp_u_<p>` columns follow.
pub const SERIES_HEAD: &[&str] = &["t", "mass", "min_u", "linf_u", "linf_v", "w1inf_v"];
/// Fixed trailing columns of `series.csv`.
pub const SERIES_TAIL: &[&str] = &[
    "grad_energy_p",
    "taxis_term",
    "pplus1",
    "sink_integral",
    "clip_mass",
    "msr_lhs",
    "msr_rhs",
];
/// Trailing columns of `sweep.csv`, after one column per axis.
pub const SWEEP_TAIL: &[&str] = &["status", "sup_linf_u", "sup_mass", "t_final"];

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Column label for an exponent: `2.0` becomes `2`, `2.5` stays `2.5`.
pub fn p_label(p: f64) -> String {
    if p.fract() == 0.0 && p.abs() < 1e15 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

pub fn series_header(p_list: &[f64]) -> Vec<String> {
    SERIES_HEAD
        .iter()
        .map(|s| s.to_string())
        .chain(p_list.iter().map(|&p| format!("lp_u_{}", p_label(p))))
        .chain(SERIES_TAIL.iter().map(|s| s.to_string()))
        .collect()
}

pub fn write_series<W: Write>(out: W, series: &DiagnosticsSeries) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(series_header(&series.p_list))?;
    for r in &series.records {
        let mut row = vec![
            num(r.t),
            num(r.mass),
            num(r.min_u),
            num(r.linf_u),
            num(r.linf_v),
            num(r.w1inf_v),
        ];
        row.extend(r.lp_u.iter().map(|&x| num(x)));
        row.extend(
            [
                r.grad_energy_p,
                r.taxis_term,
                r.pplus1,
                r.sink_integral,
                r.clip_mass,
                r.msr_lhs,
                r.msr_rhs,
            ]
            .map(num),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn status_line(outcome: &RunOutcome) -> String {
    let status = outcome.status.name();
    match outcome.status {
        RunStatus::Completed => format!("{status} t={} steps={}", num(outcome.final_state.t), outcome.steps),
        RunStatus::BlowUpDetected(t)
        | RunStatus::StepFloorHit(t)
        | RunStatus::LinearSolveFailure(t)
        | RunStatus::NumericalFailure(t) => format!("{status} t={} steps={}", num(t), outcome.steps),
    }
}

/// `outcome.txt`: the status line, then `key = value` constants. Constants
/// that cannot be derived for the configured model are written as `n/a`.
pub fn outcome_text(outcome: &RunOutcome, constants: Option<&EstimateConstants>) -> String {
    let mut text = status_line(outcome);
    text.push('\n');
    let opt = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), num);
    let c = constants;
    let exponent = c.and_then(|c| c.exponent);
    let lines = [
        ("C1", opt(c.map(|c| c.c1))),
        ("C2", opt(c.map(|c| c.c2))),
        ("C3", opt(c.map(|c| c.c3))),
        ("m0", opt(c.map(|c| c.m0))),
        ("p", opt(exponent.map(|e| e.p))),
        ("theta", opt(exponent.map(|e| e.theta))),
        ("theta_check", opt(c.and_then(|c| c.theta_check))),
        ("C_f", opt(c.map(|c| c.c_f))),
        ("C_g", opt(c.map(|c| c.c_g))),
        ("sup_linf_u", num(outcome.series.sup_linf_u())),
        ("clip_mass_total", num(outcome.clip_mass_total)),
    ];
    for (k, v) in lines {
        text.push_str(&format!("{k} = {v}\n"));
    }
    text
}

pub fn sweep_header(axes: &[(String, Vec<f64>)]) -> Vec<String> {
    axes.iter()
        .map(|(k, _)| k.clone())
        .chain(SWEEP_TAIL.iter().map(|s| s.to_string()))
        .collect()
}

pub fn write_sweep<W: Write>(
    out: W,
    axes: &[(String, Vec<f64>)],
    rows: &[SweepRow],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_header(axes))?;
    for r in rows {
        let mut row: Vec<String> = r.values.iter().map(|&x| num(x)).collect();
        row.push(r.status.clone());
        row.push(num(r.sup_linf_u));
        row.push(num(r.sup_mass));
        row.push(num(r.t_final));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Positions of the γ and c axes, when both are swept.
pub fn gamma_c_axes(axes: &[(String, Vec<f64>)]) -> Option<(usize, usize)> {
    let g = axes.iter().position(|(k, _)| k == "source.gamma")?;
    let c = axes.iter().position(|(k, _)| k == "source.c")?;
    Some((g, c))
}

/// γ×c matrix of `sup ‖u‖∞`, one row per γ, one column per c. With more than
/// two axes the first row matching each (γ, c) pair is used.
pub fn write_gamma_c_matrix<W: Write>(
    out: W,
    axes: &[(String, Vec<f64>)],
    rows: &[SweepRow],
    n_dim: usize,
) -> csv::Result<()> {
    let Some((gi, ci)) = gamma_c_axes(axes) else {
        return Ok(());
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["gamma".to_string(), "admissible".to_string()];
    header.extend(axes[ci].1.iter().map(|&c| format!("c={}", num(c))));
    w.write_record(&header)?;
    for &gamma in &axes[gi].1 {
        let mut row = vec![num(gamma), gamma_admissible(n_dim, gamma).to_string()];
        for &c in &axes[ci].1 {
            let cell = rows
                .iter()
                .find(|r| r.values[gi] == gamma && r.values[ci] == c)
                .map_or(f64::NAN, |r| r.sup_linf_u);
            row.push(num(cell));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.0, 0.1, 1e-300, 123456789.125, -2.5e17, f64::MAX] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
            assert!(!num(x).contains(','));
        }
    }

    #[test]
    fn series_columns_in_order() {
        let h = series_header(&[2.0, 3.5]);
        assert_eq!(
            h.join(","),
            "t,mass,min_u,linf_u,linf_v,w1inf_v,lp_u_2,lp_u_3.5,grad_energy_p,taxis_term,pplus1,sink_integral,clip_mass,msr_lhs,msr_rhs"
        );
    }

    #[test]
    fn sweep_columns_in_order() {
        let axes = vec![("source.c".to_string(), vec![0.0, 1.0])];
        assert_eq!(sweep_header(&axes).join(","), "source.c,status,sup_linf_u,sup_mass,t_final");
    }
}
