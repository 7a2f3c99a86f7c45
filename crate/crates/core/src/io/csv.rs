//! Image-plane point lists as `u,v` CSV.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point2;

pub const CSV_HEADER: &str = "u,v";

pub fn points_to_csv(points: &[Point2]) -> String {
    let mut out = String::with_capacity(16 + points.len() * 40);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in points {
        writeln!(out, "{:?},{:?}", p.u, p.v).expect("String write");
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<Point2>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == CSV_HEADER => {}
        Some((_, h)) => return Err(Error::MalformedHeader(format!("expected '{CSV_HEADER}', got '{}'", h.trim()))),
        None => return Err(Error::MalformedHeader("empty file".into())),
    }
    lines
        .map(|(no, line)| {
            let bad = || Error::MalformedData(format!("line {}: '{}'", no + 1, line.trim()));
            let (u, v) = line.split_once(',').ok_or_else(bad)?;
            let u: f64 = u.trim().parse().map_err(|_| bad())?;
            let v: f64 = v.trim().parse().map_err(|_| bad())?;
            if !(u.is_finite() && v.is_finite()) {
                return Err(bad());
            }
            Ok(Point2::new(u, v))
        })
        .collect()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<Point2>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

pub fn write_csv(points: &[Point2], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, points_to_csv(points)).map_err(|e| Error::io(path, e))
}
