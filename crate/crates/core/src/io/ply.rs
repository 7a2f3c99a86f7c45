//! PLY point clouds: ASCII and binary little-endian, vertex positions only.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyScalar {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    /// Coordinates written with 17 significant digits.
    Ascii,
    BinaryLittleEndian(PlyScalar),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn decode_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: ScalarType },
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedHeader(msg.into())
}

fn read_header<R: BufRead>(r: &mut R) -> Result<Header> {
    let mut line = String::new();
    let next_line = |r: &mut R, line: &mut String| -> Result<bool> {
        line.clear();
        let n = r
            .read_line(line)
            .map_err(|e| malformed(format!("unreadable header: {e}")))?;
        Ok(n > 0)
    };
    if !next_line(r, &mut line)? || line.trim_end() != "ply" {
        return Err(malformed("missing 'ply' magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        if !next_line(r, &mut line)? {
            return Err(malformed("header ends before 'end_header'"));
        }
        let mut tok = line.split_whitespace();
        match tok.next() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                encoding = Some(match tok.next() {
                    Some("ascii") => Encoding::Ascii,
                    Some("binary_little_endian") => Encoding::BinaryLe,
                    Some("binary_big_endian") => {
                        return Err(Error::UnsupportedFormat("binary_big_endian".into()))
                    }
                    other => return Err(malformed(format!("unknown format {other:?}"))),
                });
            }
            Some("element") => {
                let name = tok.next().ok_or_else(|| malformed("element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| malformed(format!("element {name} without a valid count")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| malformed("property before any element"))?;
                let first = tok.next().ok_or_else(|| malformed("empty property"))?;
                let prop = if first == "list" {
                    let count = tok.next().and_then(ScalarType::parse);
                    let item = tok.next().and_then(ScalarType::parse);
                    match (count, item) {
                        (Some(count), Some(item)) => Property::List { count, item },
                        _ => return Err(malformed(format!("bad list property: {}", line.trim()))),
                    }
                } else {
                    let ty = ScalarType::parse(first)
                        .ok_or_else(|| malformed(format!("unknown property type {first}")))?;
                    let name = tok.next().ok_or_else(|| malformed("property without name"))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                el.properties.push(prop);
            }
            Some("end_header") => break,
            Some(other) => return Err(malformed(format!("unexpected header line '{other}'"))),
        }
    }
    let encoding = encoding.ok_or_else(|| malformed("missing format line"))?;
    Ok(Header { encoding, elements })
}

/// Reads vertex x, y, z from a PLY file. Other vertex properties and other
/// elements are skipped.
pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud3> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ply_from(BufReader::new(file))
}

pub fn read_ply_from<R: BufRead>(mut r: R) -> Result<PointCloud3> {
    let header = read_header(&mut r)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| malformed("no vertex element"))?;
    let vertex = &header.elements[vertex_pos];
    let axis = |n: &str| {
        vertex
            .properties
            .iter()
            .position(|p| matches!(p, Property::Scalar { name, .. } if name == n))
            .ok_or_else(|| malformed(format!("vertex element has no '{n}' property")))
    };
    let (ix, iy, iz) = (axis("x")?, axis("y")?, axis("z")?);

    let points = match header.encoding {
        Encoding::Ascii => read_ascii(&mut r, &header.elements[..vertex_pos], vertex, [ix, iy, iz])?,
        Encoding::BinaryLe => read_binary(&mut r, &header.elements[..vertex_pos], vertex, [ix, iy, iz])?,
    };
    PointCloud3::new(points).map_err(|e| match e {
        Error::EmptyInput(_) => Error::EmptyCloud,
        other => other,
    })
}

fn read_ascii<R: BufRead>(
    r: &mut R,
    before: &[Element],
    vertex: &Element,
    axes: [usize; 3],
) -> Result<Vec<Point3>> {
    let mut lines = r.lines();
    let mut next = |what: &str, i: usize| -> Result<String> {
        loop {
            match lines.next() {
                Some(Ok(l)) if l.trim().is_empty() => continue,
                Some(Ok(l)) => return Ok(l),
                Some(Err(e)) => return Err(Error::TruncatedData(format!("{what} {i}: {e}"))),
                None => return Err(Error::TruncatedData(format!("file ends at {what} {i}"))),
            }
        }
    };
    for el in before {
        for i in 0..el.count {
            next(&el.name, i)?;
        }
    }
    let scalar_only = vertex
        .properties
        .iter()
        .all(|p| matches!(p, Property::Scalar { .. }));
    if !scalar_only {
        return Err(Error::UnsupportedFormat("list property on vertex element".into()));
    }
    let mut pts = Vec::with_capacity(vertex.count);
    for i in 0..vertex.count {
        let line = next("vertex", i)?;
        let vals: Vec<&str> = line.split_whitespace().collect();
        if vals.len() < vertex.properties.len() {
            return Err(Error::TruncatedData(format!(
                "vertex {i} has {} values, expected {}",
                vals.len(),
                vertex.properties.len()
            )));
        }
        let get = |k: usize| -> Result<f64> {
            vals[k]
                .parse()
                .map_err(|_| Error::MalformedData(format!("vertex {i}: cannot parse '{}'", vals[k])))
        };
        pts.push(Point3::new(get(axes[0])?, get(axes[1])?, get(axes[2])?));
    }
    Ok(pts)
}

fn read_binary<R: Read>(
    r: &mut R,
    before: &[Element],
    vertex: &Element,
    axes: [usize; 3],
) -> Result<Vec<Point3>> {
    let mut read_exact = |buf: &mut [u8], what: &str| -> Result<()> {
        r.read_exact(buf)
            .map_err(|_| Error::TruncatedData(format!("file ends inside {what}")))
    };
    let mut scratch = [0u8; 8];
    for el in before {
        for i in 0..el.count {
            for p in &el.properties {
                match p {
                    Property::Scalar { ty, .. } => {
                        read_exact(&mut scratch[..ty.size()], &format!("{} {i}", el.name))?;
                    }
                    Property::List { count, item } => {
                        read_exact(&mut scratch[..count.size()], &format!("{} {i}", el.name))?;
                        let n = count.decode_le(&scratch) as usize;
                        let mut skip = vec![0u8; n * item.size()];
                        read_exact(&mut skip, &format!("{} {i}", el.name))?;
                    }
                }
            }
        }
    }
    let mut offsets = Vec::with_capacity(vertex.properties.len());
    let mut stride = 0;
    for p in &vertex.properties {
        match p {
            Property::Scalar { ty, .. } => {
                offsets.push((stride, *ty));
                stride += ty.size();
            }
            Property::List { .. } => {
                return Err(Error::UnsupportedFormat("list property on vertex element".into()))
            }
        }
    }
    let mut row = vec![0u8; stride];
    let mut pts = Vec::with_capacity(vertex.count);
    for i in 0..vertex.count {
        read_exact(&mut row, &format!("vertex {i}"))?;
        let get = |k: usize| {
            let (off, ty) = offsets[k];
            ty.decode_le(&row[off..off + ty.size()])
        };
        pts.push(Point3::new(get(axes[0]), get(axes[1]), get(axes[2])));
    }
    Ok(pts)
}

pub fn write_ply(cloud: &PointCloud3, path: impl AsRef<Path>, format: PlyFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = ply_bytes(cloud, format);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Serializes `cloud` into an in-memory PLY file.
pub fn ply_bytes(cloud: &PointCloud3, format: PlyFormat) -> Vec<u8> {
    let (fmt, ty) = match format {
        PlyFormat::Ascii => ("ascii", "double"),
        PlyFormat::BinaryLittleEndian(PlyScalar::F32) => ("binary_little_endian", "float"),
        PlyFormat::BinaryLittleEndian(PlyScalar::F64) => ("binary_little_endian", "double"),
    };
    let mut out = Vec::new();
    write!(
        out,
        "ply\nformat {fmt} 1.0\nelement vertex {}\nproperty {ty} x\nproperty {ty} y\nproperty {ty} z\nend_header\n",
        cloud.len()
    )
    .expect("writing to a Vec cannot fail");
    for p in cloud.points() {
        match format {
            PlyFormat::Ascii => {
                writeln!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z).expect("Vec write");
            }
            PlyFormat::BinaryLittleEndian(PlyScalar::F32) => {
                for c in [p.x, p.y, p.z] {
                    out.extend_from_slice(&(c as f32).to_le_bytes());
                }
            }
            PlyFormat::BinaryLittleEndian(PlyScalar::F64) => {
                for c in [p.x, p.y, p.z] {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
    }
    out
}
