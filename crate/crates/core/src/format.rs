//! Delimited text formats for configurations, trajectories, disc chains,
//! observable records and reports.
//!
//! Every file starts with `# key = value` header lines, then a column line,
//! then one comma-separated record per line. Reals are written with 17
//! significant digits so that they read back bit-identically.

use std::io::{self, BufRead, Write};

use crate::observables::ObservableRecord;
use crate::point_process::{MarkedConfiguration, MarkedPoint};
use crate::stats::StatReport;
use crate::walk1d::Trajectory;
use crate::walk2d::{DiscChain, Point2, Trajectory2d};

pub type Header = Vec<(String, String)>;

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_header<W: Write>(w: &mut W, header: &[(String, String)], columns: &str) -> io::Result<()> {
    for (k, v) in header {
        writeln!(w, "# {k} = {v}")?;
    }
    writeln!(w, "{columns}")
}

fn bad(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Reads the header and the data rows, checking the column line.
fn read_table<R: BufRead>(r: R, columns: &str) -> io::Result<(Header, Vec<Vec<String>>)> {
    let mut header = Vec::new();
    let mut rows = Vec::new();
    let mut seen_columns = false;
    for line in r.lines() {
        let line = line?;
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest.split_once(" = ").ok_or_else(|| bad(format!("bad header line {line:?}")))?;
            header.push((k.to_string(), v.to_string()));
        } else if !seen_columns {
            if line != columns {
                return Err(bad(format!("expected columns {columns:?}, got {line:?}")));
            }
            seen_columns = true;
        } else if !line.is_empty() {
            rows.push(line.split(',').map(str::to_string).collect());
        }
    }
    if !seen_columns {
        return Err(bad("missing column line"));
    }
    Ok((header, rows))
}

fn parse<T: std::str::FromStr>(s: &str) -> io::Result<T> {
    s.parse().map_err(|_| bad(format!("cannot parse {s:?}")))
}

pub const CONFIGURATION_COLUMNS: &str = "position,marks";
pub const TRAJECTORY_COLUMNS: &str = "n,position,marks_left_at_target";
pub const TRAJECTORY_2D_COLUMNS: &str = "n,x,y";
pub const DISC_CHAIN_COLUMNS: &str = "k,cx,cy,r,A_k";
pub const OBSERVABLE_COLUMNS: &str = "observable,anchor,value,censored,horizon";
pub const REPORT_COLUMNS: &str = "test_id,sample_size,statistic,threshold,p_value,pass,censoring_rate";

/// Writes a configuration; the frontiers are added to the header.
pub fn write_configuration<W: Write>(mut w: W, cfg: &MarkedConfiguration, header: &[(String, String)]) -> io::Result<()> {
    let mut h = header.to_vec();
    h.push(("left_frontier".into(), real(cfg.left_frontier)));
    h.push(("right_frontier".into(), real(cfg.right_frontier)));
    write_header(&mut w, &h, CONFIGURATION_COLUMNS)?;
    for p in &cfg.points {
        writeln!(w, "{},{}", real(p.position), p.marks)?;
    }
    Ok(())
}

/// Reads the points and frontiers back. Intensity and mark law are taken
/// from the `intensity` and `p` header keys when present.
pub fn read_configuration<R: BufRead>(r: R) -> io::Result<(Header, MarkedConfiguration)> {
    let (header, rows) = read_table(r, CONFIGURATION_COLUMNS)?;
    let get = |k: &str| header.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
    let mut cfg = MarkedConfiguration::from_points(&[]).map_err(|e| bad(e.to_string()))?;
    for row in &rows {
        if row.len() != 2 {
            return Err(bad(format!("bad row {row:?}")));
        }
        cfg.points.push(MarkedPoint { position: parse(&row[0])?, marks: parse(&row[1])? });
    }
    cfg.left_frontier = parse(&get("left_frontier").ok_or_else(|| bad("missing left_frontier"))?)?;
    cfg.right_frontier = parse(&get("right_frontier").ok_or_else(|| bad("missing right_frontier"))?)?;
    if let Some(v) = get("intensity") {
        cfg.intensity = parse(&v)?;
    }
    if let Some(v) = get("p") {
        cfg.mark_law = crate::point_process::MarkLaw::two_point(parse(&v)?).map_err(|e| bad(e.to_string()))?;
    }
    cfg.validate().map_err(|e| bad(e.to_string()))?;
    Ok((header, cfg))
}

pub fn write_trajectory<W: Write>(mut w: W, t: &Trajectory, header: &[(String, String)]) -> io::Result<()> {
    write_header(&mut w, header, TRAJECTORY_COLUMNS)?;
    for (n, (x, m)) in t.positions.iter().zip(&t.marks_left).enumerate() {
        writeln!(w, "{n},{},{m}", real(*x))?;
    }
    Ok(())
}

/// Reads a trajectory; the start is taken from the `start` header key, or
/// `S_0` when absent.
pub fn read_trajectory<R: BufRead>(r: R) -> io::Result<(Header, Trajectory)> {
    let (header, rows) = read_table(r, TRAJECTORY_COLUMNS)?;
    let mut t = Trajectory::default();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 3 || parse::<usize>(&row[0])? != i {
            return Err(bad(format!("bad row {row:?}")));
        }
        t.positions.push(parse(&row[1])?);
        t.marks_left.push(parse(&row[2])?);
    }
    t.start = match header.iter().find(|(k, _)| k == "start") {
        Some((_, v)) => parse(v)?,
        None => t.positions.first().copied().unwrap_or(0.0),
    };
    Ok((header, t))
}

pub fn write_trajectory_2d<W: Write>(mut w: W, t: &Trajectory2d, header: &[(String, String)]) -> io::Result<()> {
    write_header(&mut w, header, TRAJECTORY_2D_COLUMNS)?;
    for (n, p) in t.positions.iter().enumerate() {
        writeln!(w, "{n},{},{}", real(p.x), real(p.y))?;
    }
    Ok(())
}

pub fn read_trajectory_2d<R: BufRead>(r: R) -> io::Result<(Header, Trajectory2d)> {
    let (header, rows) = read_table(r, TRAJECTORY_2D_COLUMNS)?;
    let mut positions = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 3 || parse::<usize>(&row[0])? != i {
            return Err(bad(format!("bad row {row:?}")));
        }
        positions.push(Point2::new(parse(&row[1])?, parse(&row[2])?));
    }
    let start = positions.first().copied().unwrap_or_default();
    Ok((header, Trajectory2d { start, positions }))
}

pub fn write_disc_chain<W: Write>(mut w: W, chain: &DiscChain, header: &[(String, String)]) -> io::Result<()> {
    write_header(&mut w, header, DISC_CHAIN_COLUMNS)?;
    for (k, (d, a)) in chain.discs.iter().zip(&chain.areas).enumerate() {
        writeln!(w, "{},{},{},{},{}", k + 1, real(d.center.x), real(d.center.y), real(d.radius), real(*a))?;
    }
    Ok(())
}

pub fn write_observables<W: Write>(mut w: W, records: &[ObservableRecord], header: &[(String, String)]) -> io::Result<()> {
    write_header(&mut w, header, OBSERVABLE_COLUMNS)?;
    for r in records {
        let value = r.value.map(real).unwrap_or_default();
        writeln!(w, "{},{},{value},{},{}", r.observable, real(r.anchor), u8::from(r.censored), r.horizon)?;
    }
    Ok(())
}

/// Flat table of reports, one row per test.
pub fn write_reports_table<W: Write>(mut w: W, reports: &[StatReport], header: &[(String, String)]) -> io::Result<()> {
    write_header(&mut w, header, REPORT_COLUMNS)?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.test_id,
            r.sample_size,
            real(r.statistic),
            real(r.threshold),
            r.p_value.map(real).unwrap_or_default(),
            r.pass,
            r.censoring_rate.map(real).unwrap_or_default()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_process::{MarkLaw, PoissonLine};
    use crate::rng::RngStream;

    #[test]
    fn configuration_round_trip() {
        let line = PoissonLine::new(RngStream::new(5, 2), 1.0, MarkLaw::two_point(0.5).unwrap()).unwrap();
        let cfg = line.realize(-30.0, 40.0).unwrap();
        let mut buf = Vec::new();
        write_configuration(&mut buf, &cfg, &[("intensity".into(), "1".into()), ("p".into(), "0.5".into())]).unwrap();
        let (_, back) = read_configuration(&buf[..]).unwrap();
        assert_eq!(back, cfg);
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().find(|l| !l.starts_with('#') && *l != CONFIGURATION_COLUMNS).unwrap();
        let mantissa = first.split(',').next().unwrap().split('e').next().unwrap();
        assert_eq!(mantissa.trim_start_matches('-').replace('.', "").len(), 17);
    }

    #[test]
    fn trajectory_round_trip() {
        let t = Trajectory { start: 0.0, positions: vec![1.0, 2.0, 5.0, 2.0, -3.0], marks_left: vec![0, 1, 0, 0, 0] };
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &t, &[("start".into(), real(0.0))]).unwrap();
        let (h, back) = read_trajectory(&buf[..]).unwrap();
        assert_eq!(back, t);
        assert_eq!(h[0].0, "start");
    }

    #[test]
    fn rejects_wrong_columns() {
        assert!(read_trajectory(&b"n,x,y\n0,1,2\n"[..]).is_err());
        assert!(read_configuration(&b"# left_frontier = 0\n"[..]).is_err());
    }

    #[test]
    fn trajectory_2d_round_trip() {
        let t = Trajectory2d { start: Point2::ORIGIN, positions: vec![Point2::ORIGIN, Point2::new(0.1, -3.0)] };
        let mut buf = Vec::new();
        write_trajectory_2d(&mut buf, &t, &[]).unwrap();
        assert_eq!(read_trajectory_2d(&buf[..]).unwrap().1, t);
    }
}
