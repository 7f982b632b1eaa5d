//! CSV and summary output of a simulation log.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::grasp::RightInverseKind;
use crate::sim::SimLog;

/// Terminal-error threshold used for the convergence flags of [`Summary`].
pub const CONVERGENCE_TOL: f64 = 1e-3;

/// `t,e_p_norm,e_O,e_v_norm,h_int_norm,h_int_norm_th2,V,constraint_residual,u_norm_1..u_norm_N`.
pub fn csv_header(agent_count: usize) -> String {
    let mut cols: Vec<String> =
        ["t", "e_p_norm", "e_O", "e_v_norm", "h_int_norm", "h_int_norm_th2", "V", "constraint_residual"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    cols.extend((1..=agent_count).map(|i| format!("u_norm_{i}")));
    cols.join(",")
}

/// Writes the header and one row per sample, numbers with 17 significant digits.
pub fn write_csv<W: Write>(log: &SimLog, mut out: W) -> io::Result<()> {
    writeln!(out, "{}", csv_header(log.agent_count))?;
    let mut line = String::new();
    for s in &log.samples {
        line.clear();
        let fixed = [s.t, s.e_p_norm, s.e_o, s.e_v_norm, s.h_int_norm, s.h_int_norm_th2, s.lyapunov, s.constraint_residual];
        for (k, x) in fixed.iter().chain(&s.u_norms).enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&format!("{x:.16e}"));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalErrors {
    pub t: f64,
    pub e_p_norm: f64,
    pub e_o: f64,
    pub e_v_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFlags {
    pub position: bool,
    pub orientation: bool,
    pub velocity: bool,
}

/// Headline numbers of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub agents: usize,
    pub samples: usize,
    pub right_inverse: RightInverseKind,
    pub terminal: TerminalErrors,
    pub converged: ConvergenceFlags,
    pub max_h_int_norm: f64,
    pub max_h_int_norm_th2: f64,
    pub max_u_norm: f64,
    /// `max |h_int| < 1e-6 (1 + max |u|)`.
    pub internal_force_free: bool,
    pub max_constraint_residual: f64,
    pub max_e_o: f64,
    /// Largest increase of `V` between consecutive samples (negative when it always decreased).
    pub max_lyapunov_increase: f64,
}

pub fn summarize(log: &SimLog, right_inverse: RightInverseKind) -> Summary {
    let last = log.last();
    let max_h_int_norm = log.max_by(|s| s.h_int_norm);
    let max_u_norm = log.max_by(|s| s.u_norm);
    let max_lyapunov_increase = log
        .samples
        .windows(2)
        .map(|w| w[1].lyapunov - w[0].lyapunov)
        .fold(f64::NEG_INFINITY, f64::max);
    Summary {
        agents: log.agent_count,
        samples: log.samples.len(),
        right_inverse,
        terminal: TerminalErrors { t: last.t, e_p_norm: last.e_p_norm, e_o: last.e_o, e_v_norm: last.e_v_norm },
        converged: ConvergenceFlags {
            position: last.e_p_norm < CONVERGENCE_TOL,
            orientation: last.e_o < CONVERGENCE_TOL,
            velocity: last.e_v_norm < CONVERGENCE_TOL,
        },
        max_h_int_norm,
        max_h_int_norm_th2: log.max_by(|s| s.h_int_norm_th2),
        max_u_norm,
        internal_force_free: max_h_int_norm < 1e-6 * (1.0 + max_u_norm),
        max_constraint_residual: log.max_by(|s| s.constraint_residual),
        max_e_o: log.max_by(|s| s.e_o),
        max_lyapunov_increase: if log.samples.len() > 1 { max_lyapunov_increase } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        assert_eq!(
            csv_header(3),
            "t,e_p_norm,e_O,e_v_norm,h_int_norm,h_int_norm_th2,V,constraint_residual,u_norm_1,u_norm_2,u_norm_3"
        );
    }

    #[test]
    fn seventeen_significant_digits_round_trip() {
        let x = 0.1f64 + 0.2;
        let s = format!("{x:.16e}");
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(s.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }
}
