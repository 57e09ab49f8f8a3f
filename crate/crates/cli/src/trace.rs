//! CSV traces: one row per round, round-trippable doubles, `\n` line endings.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};

use crate::engine::TraceRow;

pub const HEADER: [&str; 8] = [
    "t",
    "g_norm",
    "w_norm",
    "play_norm",
    "inst_regret",
    "cum_regret",
    "delta_t",
    "bound_rhs",
];

/// 17 significant digits; enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            fmt_f64(r.g_norm),
            fmt_f64(r.w_norm),
            fmt_f64(r.play_norm),
            fmt_f64(r.inst_regret),
            fmt_f64(r.cum_regret),
            fmt_opt(r.delta_t),
            fmt_opt(r.bound_rhs),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(HEADER) {
        bail!(
            "unexpected trace header {:?}, expected {}",
            header.iter().collect::<Vec<_>>(),
            HEADER.join(",")
        );
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .with_context(|| format!("line {line}: bad {} value {:?}", HEADER[j], &rec[j]))
        };
        let opt = |j: usize| -> Result<Option<f64>> {
            if rec[j].is_empty() {
                Ok(None)
            } else {
                num(j).map(Some)
            }
        };
        rows.push(TraceRow {
            t: rec[0]
                .parse()
                .with_context(|| format!("line {line}: bad t value {:?}", &rec[0]))?,
            g_norm: num(1)?,
            w_norm: num(2)?,
            play_norm: num(3)?,
            inst_regret: num(4)?,
            cum_regret: num(5)?,
            delta_t: opt(6)?,
            bound_rhs: opt(7)?,
        });
    }
    Ok(rows)
}

/// `t,g,u` rows for a one-dimensional adversarial sequence.
pub fn write_sequence<W: Write>(out: W, gs: &[f64], us: &[f64]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(["t", "g", "u"])?;
    for (i, (g, u)) in gs.iter().zip(us).enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(*g), fmt_f64(*u)])?;
    }
    w.flush()?;
    Ok(())
}
