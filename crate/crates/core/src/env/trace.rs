//! Per-step episode traces as CSV.

use std::io::Write;

use crate::error::{Error, Result};

pub const TRACE_SCHEMA: &str = "# eqsentinel-trace v1";

/// One monitored step: who stood where, what was played, with which
/// probabilities, and what the monitor made of it.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub positions: Vec<(usize, usize)>,
    pub actions: Vec<String>,
    pub probabilities: Vec<f64>,
    pub evalue: f64,
    pub martingale: f64,
}

/// Writes a header naming the agents and action labels, then one row per step.
pub fn write_trace_csv<W: Write>(
    out: &mut W,
    agents: &[&str],
    action_labels: &[&str],
    rows: &[TraceRow],
) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: "<trace>".into(),
        source: e,
    };
    writeln!(out, "{TRACE_SCHEMA}").map_err(io)?;
    let mut header = vec!["step".to_string()];
    for a in agents {
        header.push(format!("{a}_row"));
        header.push(format!("{a}_col"));
    }
    for a in agents {
        header.push(format!("{a}_action"));
    }
    header.extend(action_labels.iter().map(|l| format!("p_{l}")));
    header.push("evalue".into());
    header.push("martingale".into());
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        if row.positions.len() != agents.len() || row.probabilities.len() != action_labels.len() {
            return Err(crate::error::shape(format!("trace row {} does not match header", row.step)));
        }
        let mut cells = vec![row.step.to_string()];
        for (r, c) in &row.positions {
            cells.push(r.to_string());
            cells.push(c.to_string());
        }
        for i in 0..agents.len() {
            cells.push(row.actions.get(i).cloned().unwrap_or_default());
        }
        cells.extend(row.probabilities.iter().map(|p| format!("{p:.16e}")));
        cells.push(format!("{:.16e}", row.evalue));
        cells.push(format!("{:.16e}", row.martingale));
        writeln!(out, "{}", cells.join(",")).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_header_and_rows() {
        let rows = vec![TraceRow {
            step: 0,
            positions: vec![(0, 0), (9, 9)],
            actions: vec!["Down".into(), "Stay".into()],
            probabilities: vec![0.25, 0.75],
            evalue: 1.5,
            martingale: 1.5,
        }];
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &["suspect", "prey"], &["a", "b"], &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACE_SCHEMA);
        assert_eq!(
            lines[1],
            "step,suspect_row,suspect_col,prey_row,prey_col,suspect_action,prey_action,p_a,p_b,evalue,martingale"
        );
        assert!(lines[2].starts_with("0,0,0,9,9,Down,Stay,2.5"));
        let mut bad = rows.clone();
        bad[0].probabilities.pop();
        assert!(write_trace_csv(&mut Vec::new(), &["suspect", "prey"], &["a", "b"], &bad).is_err());
    }
}
