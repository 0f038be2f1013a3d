//! Flat `key = value` configuration, sweep CSV tables and SVG phase plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::detectability::Region;
use crate::error::{Error, Result};
use crate::montecarlo::{Side, SweepRow};

/// Parse `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value, got {raw:?}", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", i + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_config(&std::fs::read_to_string(path)?)
}

/// 17 significant digits; enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn region_label(r: Region) -> &'static str {
    match r {
        Region::Undetectable => "undetectable",
        Region::Detectable => "detectable",
        Region::CompletelyDetectable => "completely-detectable",
    }
}

fn parse_region(s: &str) -> Result<Option<Region>> {
    Ok(match s {
        "" => None,
        "undetectable" => Some(Region::Undetectable),
        "detectable" => Some(Region::Detectable),
        "completely-detectable" => Some(Region::CompletelyDetectable),
        other => return Err(Error::Parse(format!("unknown region label {other:?}"))),
    })
}

fn parse_side(s: &str) -> Result<Side> {
    Ok(match s {
        "below" => Side::Below,
        "boundary" => Side::On,
        "above" => Side::Above,
        "n/a" => Side::Unknown,
        other => return Err(Error::Parse(format!("unknown boundary side {other:?}"))),
    })
}

pub const CSV_HEADER: [&str; 10] = [
    "family", "beta", "r", "tag", "side", "label", "hc_power", "llr_power", "reps", "seed",
];

fn sorted_rows(rows: &[SweepRow]) -> Vec<&SweepRow> {
    let mut v: Vec<&SweepRow> = rows.iter().collect();
    v.sort_by(|a, b| a.beta.total_cmp(&b.beta).then(a.r.total_cmp(&b.r)));
    v
}

/// CSV text for the rows, ordered by `(beta, r)`.
pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in sorted_rows(rows) {
        w.write_record([
            row.family.clone(),
            fmt_f64(row.beta),
            fmt_f64(row.r),
            row.tag.clone(),
            row.side.label().to_string(),
            row.label.map(region_label).unwrap_or("").to_string(),
            fmt_opt(row.hc_power),
            fmt_opt(row.llr_power),
            row.reps.to_string(),
            row.seed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(rows)?)?;
    Ok(())
}

fn num(s: &str, what: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse(format!("{what}: not a number: {s:?}")))
}

fn opt_num(s: &str, what: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        num(s, what).map(Some)
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rd = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        rows.push(SweepRow {
            family: rec[0].to_string(),
            beta: num(&rec[1], "beta")?,
            r: num(&rec[2], "r")?,
            tag: rec[3].to_string(),
            side: parse_side(&rec[4])?,
            label: parse_region(&rec[5])?,
            hc_power: opt_num(&rec[6], "hc_power")?,
            llr_power: opt_num(&rec[7], "llr_power")?,
            reps: rec[8].parse().map_err(|_| Error::Parse(format!("reps: {:?}", &rec[8])))?,
            seed: rec[9].parse().map_err(|_| Error::Parse(format!("seed: {:?}", &rec[9])))?,
        });
    }
    Ok(rows)
}

/// Two-column CSV of `(x, y)` points, e.g. an empirical CDF.
pub fn write_xy_csv(header: [&str; 2], pts: &[(f64, f64)], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for &(x, y) in pts {
        w.write_record([fmt_f64(x), fmt_f64(y)])?;
    }
    w.flush()?;
    Ok(())
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn colour(label: Option<Region>) -> &'static str {
    match label {
        Some(Region::Undetectable) => "#4575b4",
        Some(Region::Detectable) => "#fdae61",
        Some(Region::CompletelyDetectable) => "#d73027",
        None => "#999999",
    }
}

/// Phase diagram: grid points coloured by label over the boundary curve.
pub fn svg_phase(rows: &[SweepRow], boundary: &[(f64, f64)]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    let r_max = rows
        .iter()
        .map(|r| r.r)
        .chain(boundary.iter().map(|p| p.1))
        .fold(1.0, f64::max);
    let sx = |b: f64| MARGIN + b * (W - 2.0 * MARGIN);
    let sy = |r: f64| H - MARGIN - r / r_max * (H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="640" height="480" viewBox="0 0 640 480">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="640" height="480" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{:.2},{:.2} H{:.2} M{:.2},{:.2} V{:.2}" stroke="black" fill="none"/>"#,
        sx(0.0),
        sy(0.0),
        sx(1.0),
        sx(0.0),
        sy(0.0),
        sy(r_max)
    );
    for k in 0..=4 {
        let b = k as f64 / 4.0;
        let r = r_max * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{b:.2}</text>"#,
            sx(b),
            sy(0.0) + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{r:.2}</text>"#,
            sx(0.0) - 6.0,
            sy(r) + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="320.00" y="465.00" font-size="13" text-anchor="middle">beta</text>"#);
    let _ = writeln!(
        s,
        r#"<text x="18.00" y="240.00" font-size="13" text-anchor="middle" transform="rotate(-90 18 240)">r</text>"#
    );
    if boundary.len() >= 2 {
        let pts: Vec<String> = boundary.iter().map(|&(b, r)| format!("{:.2},{:.2}", sx(b), sy(r))).collect();
        let _ = writeln!(
            s,
            r#"<polyline id="boundary" points="{}" stroke="black" stroke-width="2" fill="none"/>"#,
            pts.join(" ")
        );
    }
    for row in sorted_rows(rows) {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{}"/>"#,
            sx(row.beta),
            sy(row.r),
            colour(row.label)
        );
    }
    let legend = [
        (Some(Region::Undetectable), "undetectable"),
        (Some(Region::Detectable), "detectable"),
        (Some(Region::CompletelyDetectable), "completely detectable"),
    ];
    for (i, (lab, text)) in legend.iter().enumerate() {
        let y = 20.0 + 16.0 * i as f64;
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="{}"/>"#, 80.0, y, colour(*lab));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11">{text}</text>"#, 90.0, y + 4.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg_phase(rows: &[SweepRow], boundary: &[(f64, f64)], path: &Path) -> Result<()> {
    std::fs::write(path, svg_phase(rows, boundary)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(beta: f64, r: f64) -> SweepRow {
        SweepRow {
            family: "chimeric".into(),
            beta,
            r,
            tag: "const, \"h\"".into(),
            side: Side::Above,
            label: Some(Region::Detectable),
            hc_power: Some(0.1),
            llr_power: None,
            reps: 200,
            seed: 9,
        }
    }

    #[test]
    fn config_parsing() {
        let c = parse_config("# top\nseed = 5  # trailing\n\nalpha=0.05\n").unwrap();
        assert_eq!(c["seed"], "5");
        assert_eq!(c["alpha"], "0.05");
        assert!(parse_config("nonsense").is_err());
        assert!(parse_config(" = 3").is_err());
    }

    #[test]
    fn one_row_two_lines() {
        let s = csv_string(&[row(0.6, 0.3)]).unwrap();
        assert_eq!(s.lines().count(), 2);
        assert!(s.ends_with('\n') && !s.contains('\r'));
        assert!(s.contains("\"const, \"\"h\"\"\""));
    }

    #[test]
    fn rows_are_sorted_and_round_trip() {
        let rows = vec![row(0.7, 0.2), row(0.6, 0.5), row(0.6, 0.1 + 0.2)];
        let s = csv_string(&rows).unwrap();
        let back = parse_csv(&s).unwrap();
        assert_eq!(back[0].r, 0.1 + 0.2);
        assert_eq!(back[2].beta, 0.7);
        assert_eq!(csv_string(&back).unwrap(), s);
    }

    #[test]
    fn svg_is_deterministic() {
        let rows = vec![row(0.6, 0.3)];
        let curve = [(0.5, 0.0), (1.0, 1.0)];
        let a = svg_phase(&rows, &curve).unwrap();
        assert_eq!(a, svg_phase(&rows, &curve).unwrap());
        assert!(a.contains(r#"points="320.00,420.00 580.00,60.00""#));
        assert!(svg_phase(&[], &curve).is_err());
    }
}
