//! CSV, JSON and SVG renderings of result records.

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::job::{Command, JobError, JobResult, ResultRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

/// A numeric table extracted from a payload.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

fn num(v: &Value, key: &str) -> f64 {
    v.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn rows_of<'a>(payload: &'a Value, key: &str) -> &'a [Value] {
    payload.get(key).and_then(Value::as_array).map_or(&[], Vec::as_slice)
}

pub fn table(record: &ResultRecord) -> Option<Table> {
    let p = &record.payload;
    let pick = |key: &str, header: Vec<&'static str>| {
        let rows = rows_of(p, key).iter().map(|r| header.iter().map(|h| num(r, h)).collect()).collect();
        Table { header, rows }
    };
    Some(match record.command {
        Command::CurveVolume => pick("entries", vec!["m", "h0", "h0_over_m"]),
        Command::CurveContinuity => pick("rows", vec!["eps", "estimate", "prediction", "m_max"]),
        Command::P1Hs => pick("entries", vec!["m", "rank", "h0", "h1", "chi", "chi_half_width", "slope", "chi_slope"]),
        Command::P1Gromov => pick("rows", vec!["m", "trials", "ratio"]),
        Command::GsCheck | Command::Prop37 => pick("reports", vec!["lhs", "rhs", "allowance", "slack"]),
        _ => return None,
    })
}

pub fn csv_string(t: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.header).expect("in-memory write");
    for r in &t.rows {
        w.write_record(r.iter().map(f64::to_string)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("utf8")
}

/// Line plot of the second column against the first, plus the third when it
/// is a prediction column.
pub fn svg_string(t: &Table, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let series: Vec<usize> = if t.header.get(2) == Some(&"prediction") { vec![1, 2] } else { vec![1] };
    let pts: Vec<(f64, f64)> = t
        .rows
        .iter()
        .flat_map(|r| series.iter().map(move |&c| (r[0], r[c])))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (y0, y1) = bounds(pts.iter().map(|p| p.1));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n\
         <line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{}\" stroke=\"black\"/>\n",
        W / 2.0,
        escape(title),
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD
    );
    for (x, anchor, label) in [(PAD, "start", x0), (W - PAD, "end", x1)] {
        out += &format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"11\">{} = {label:.4}</text>\n",
            H - PAD + 16.0,
            t.header[0]
        );
    }
    for (y, label) in [(H - PAD, y0), (PAD, y1)] {
        out += &format!("<text x=\"{}\" y=\"{y}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{label:.4}</text>\n", PAD - 4.0);
    }
    for (k, &c) in series.iter().enumerate() {
        let color = ["#1f77b4", "#d62728"][k % 2];
        let path: Vec<String> = t
            .rows
            .iter()
            .filter(|r| r[0].is_finite() && r[c].is_finite())
            .map(|r| format!("{:.2},{:.2}", sx(r[0]), sy(r[c])))
            .collect();
        out += &format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n", path.join(" "));
        for p in &path {
            let (x, y) = p.split_once(',').expect("formatted pair");
            out += &format!("<circle cx=\"{x}\" cy=\"{y}\" r=\"2.5\" fill=\"{color}\"/>\n");
        }
        out += &format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            W - PAD - 100.0,
            PAD + 14.0 * k as f64,
            t.header[c]
        );
    }
    out + "</svg>\n"
}

fn bounds(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `<stem>.<ext>` in `dir` for each requested format that applies to
/// the record and returns the written paths. JSON is always available.
pub fn emit_outputs(record: &ResultRecord, formats: &[Format], dir: &Path, stem: &str) -> JobResult<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| JobError::io(dir, e))?;
    let t = table(record);
    let mut written = Vec::new();
    for &f in formats {
        let body = match f {
            Format::Json => record.to_canonical_string() + "\n",
            Format::Csv => match &t {
                Some(t) => csv_string(t),
                None => continue,
            },
            Format::Svg => match &t {
                Some(t) if record.command != Command::GsCheck && record.command != Command::Prop37 => {
                    svg_string(t, record.command.name())
                }
                _ => continue,
            },
        };
        let path = dir.join(format!("{stem}.{}", f.ext()));
        std::fs::write(&path, body).map_err(|e| JobError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn record(command: Command, payload: Value) -> ResultRecord {
        ResultRecord {
            digest: "d".into(),
            command,
            version: "0".into(),
            timestamp: 0,
            exact: true,
            half_width: None,
            violations: 0,
            payload,
        }
    }

    #[test]
    fn series_csv() {
        let r = record(
            Command::CurveVolume,
            json!({ "entries": [{ "m": 1, "h0": 1.5, "h0_over_m": 1.5 }, { "m": 2, "h0": 2.5, "h0_over_m": 1.25 }] }),
        );
        let s = csv_string(&table(&r).unwrap());
        assert_eq!(s, "m,h0,h0_over_m\n1,1.5,1.5\n2,2.5,1.25\n");
    }

    #[test]
    fn continuity_svg_has_both_series() {
        let r = record(
            Command::CurveContinuity,
            json!({ "rows": [
                { "eps": 0.2, "estimate": 0.5, "prediction": 0.45, "m_max": 10 },
                { "eps": 0.1, "estimate": 0.4, "prediction": 0.41, "m_max": 10 }
            ] }),
        );
        let t = table(&r).unwrap();
        assert_eq!(t.header[0], "eps");
        let svg = svg_string(&t, "continuity");
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("eps = 0.1000"));
    }

    #[test]
    fn json_round_trip_and_skipped_formats() {
        let dir = tempfile::tempdir().unwrap();
        let r = record(Command::CurveDegree, json!({ "adeg": 0.25 }));
        let paths = emit_outputs(&r, &[Format::Csv, Format::Json, Format::Svg], dir.path(), "out").unwrap();
        assert_eq!(paths.len(), 1);
        let back: ResultRecord = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
