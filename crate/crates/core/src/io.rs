//! CSV and JSON writers. Every CSV starts with a `# config_digest: …`
//! comment line when a digest is given, then a header row. Multi-replica
//! files carry a leading `replica` column.

use std::io::Write;

use serde::Serialize;

use crate::boundary::BoundaryPath;
use crate::error::Result;
use crate::graph::{QTrajectory, Visit};
use crate::harness::OracleReport;
use crate::quake::Catalog;
use crate::rdbm::PathSample;
use crate::validate::GrRow;

fn writer<W: Write>(mut out: W, digest: Option<&str>) -> Result<csv::Writer<W>> {
    if let Some(d) = digest {
        writeln!(out, "# config_digest: {d}")?;
    }
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out))
}

/// Shortest round-tripping decimal; empty for NaN.
fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x == 0.0 {
        "0.0".into()
    } else {
        format!("{x:?}")
    }
}

/// Columns `replica,t,x,gamma,flags`.
pub fn write_paths<W: Write>(out: W, paths: &[(usize, &PathSample)], digest: Option<&str>) -> Result<()> {
    let mut w = writer(out, digest)?;
    w.write_record(["replica", "t", "x", "gamma", "flags"])?;
    for (rep, p) in paths {
        for k in 0..p.len() {
            w.write_record([
                rep.to_string(),
                num(p.times[k]),
                num(p.values[k]),
                num(p.local_time[k]),
                p.flags[k].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `replica,t,x,gamma,flags,holding_flag,jump_flag,level_after_jump`.
pub fn write_boundary_paths<W: Write>(out: W, paths: &[(usize, &BoundaryPath)], digest: Option<&str>) -> Result<()> {
    let mut w = writer(out, digest)?;
    w.write_record([
        "replica",
        "t",
        "x",
        "gamma",
        "flags",
        "holding_flag",
        "jump_flag",
        "level_after_jump",
    ])?;
    for (rep, bp) in paths {
        let p = &bp.path;
        for k in 0..p.len() {
            w.write_record([
                rep.to_string(),
                num(p.times[k]),
                num(p.values[k]),
                num(p.local_time[k]),
                p.flags[k].to_string(),
                u8::from(bp.holding_flag(k)).to_string(),
                u8::from(bp.jump_flag(k)).to_string(),
                num(bp.level_after_jump[k]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `replica,i,region,tau_E,jump_level,tau_W,cumulative_t,terminal`.
pub fn write_catalogs<W: Write>(out: W, catalogs: &[Catalog], digest: Option<&str>) -> Result<()> {
    let mut w = writer(out, digest)?;
    w.write_record([
        "replica",
        "i",
        "region",
        "tau_E",
        "jump_level",
        "tau_W",
        "cumulative_t",
        "terminal",
    ])?;
    for (rep, c) in catalogs.iter().enumerate() {
        for e in &c.events {
            w.write_record([
                rep.to_string(),
                e.i.to_string(),
                e.region.to_string(),
                num(e.tau_e),
                num(e.jump_level),
                num(e.tau_w),
                num(e.cumulative_t),
                e.terminal.code().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn edge_or_vertex(v: Option<usize>) -> String {
    v.map_or_else(|| "vertex".to_string(), |e| e.to_string())
}

/// Columns `replica,t,star,edge_or_vertex,radial,event_code`.
pub fn write_visits<W: Write>(out: W, trajectories: &[QTrajectory], digest: Option<&str>) -> Result<()> {
    let mut w = writer(out, digest)?;
    w.write_record(["replica", "t", "star", "edge_or_vertex", "radial", "event_code"])?;
    for (rep, q) in trajectories.iter().enumerate() {
        for Visit { t, position, event, .. } in &q.visits {
            w.write_record([
                rep.to_string(),
                num(*t),
                position.star.to_string(),
                edge_or_vertex(position.edge),
                num(position.radial),
                event.code().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `replica,t,star,edge_or_vertex,radial`.
pub fn write_trajectories<W: Write>(out: W, trajectories: &[QTrajectory], digest: Option<&str>) -> Result<()> {
    let mut w = writer(out, digest)?;
    w.write_record(["replica", "t", "star", "edge_or_vertex", "radial"])?;
    for (rep, q) in trajectories.iter().enumerate() {
        for (t, pos) in &q.points {
            w.write_record([
                rep.to_string(),
                num(*t),
                pos.star.to_string(),
                edge_or_vertex(pos.edge),
                num(pos.radial),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Columns `n,empirical_survival,analytic_survival,std_error,power_law`.
pub fn write_gr_curve<W: Write>(out: W, rows: &[GrRow], digest: Option<&str>) -> Result<()> {
    let mut w = writer(out, digest)?;
    w.write_record(["n", "empirical_survival", "analytic_survival", "std_error", "power_law"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            num(r.empirical),
            num(r.analytic),
            num(r.std_error),
            num(r.power_law),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Validation report as a JSON array. Non-finite numbers become `null`.
pub fn write_reports<W: Write>(mut out: W, reports: &[OracleReport]) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, reports)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_csv_layout() {
        let mut p = PathSample::default();
        p.push(0.0, 0.25, 0.0, 0);
        p.push(0.5, 0.0, 0.125, 4);
        let mut buf = Vec::new();
        write_paths(&mut buf, &[(3, &p)], Some("abc")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# config_digest: abc\nreplica,t,x,gamma,flags\r\n3,0.0,0.25,0.0,0\r\n3,0.5,0.0,0.125,4\r\n"
        );
    }

    #[test]
    fn non_finite_numbers() {
        assert_eq!(num(f64::NAN), "");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(-0.0), "0.0");
        assert_eq!(num(1e-300), "1e-300");
    }
}
