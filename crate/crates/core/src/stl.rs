//! STL reading and writing, ASCII and binary.
//!
//! ASCII output uses fixed indentation (2 spaces before `facet`, 4 before
//! `outer loop`/`endloop`, 6 before `vertex`) and prints every number as the
//! shortest decimal that round-trips, always with a decimal point or an
//! exponent (`40.0`, `-1.0`, `1e-7`). Input is whitespace tolerant.

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::Vec3;
use crate::mesh::{Facet, TriangleMesh};

pub const FACET_INDENT: &str = "  ";
pub const LOOP_INDENT: &str = "    ";
pub const VERTEX_INDENT: &str = "      ";

pub const BINARY_HEADER_LEN: usize = 80;
pub const BINARY_FACET_LEN: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StlError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing `endsolid` (file ends at line {line})")]
    MissingEndSolid { line: usize },
    #[error("binary STL length {found} does not match 84 + 50 × {count} = {expected}")]
    TruncatedFile {
        count: u32,
        expected: usize,
        found: usize,
    },
    #[error("mesh has {0} facets; binary STL holds at most 2^32 - 1")]
    TooManyFacets(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StlWarning {
    /// Binary header starts with `solid`, which confuses format sniffers.
    HeaderLooksAscii,
}

fn push_num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:?}");
}

fn push_triple(out: &mut String, v: Vec3) {
    push_num(out, v.x);
    out.push(' ');
    push_num(out, v.y);
    out.push(' ');
    push_num(out, v.z);
}

/// Serialize as ASCII STL.
pub fn write_ascii(m: &TriangleMesh, name: &str) -> String {
    let mut out = String::with_capacity(64 + m.facets.len() * 200);
    let _ = writeln!(out, "solid {name}");
    for f in &m.facets {
        out.push_str(FACET_INDENT);
        out.push_str("facet normal ");
        push_triple(&mut out, f.normal);
        out.push('\n');
        out.push_str(LOOP_INDENT);
        out.push_str("outer loop\n");
        for v in f.vertices {
            out.push_str(VERTEX_INDENT);
            out.push_str("vertex ");
            push_triple(&mut out, v);
            out.push('\n');
        }
        out.push_str(LOOP_INDENT);
        out.push_str("endloop\n");
        out.push_str(FACET_INDENT);
        out.push_str("endfacet\n");
    }
    let _ = writeln!(out, "endsolid {name}");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank line as (line number, tokens).
    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }

    fn expect(&mut self, want: &[&str]) -> Result<(), StlError> {
        match self.next() {
            Some((ln, toks)) => {
                if toks.len() == want.len()
                    && toks
                        .iter()
                        .zip(want)
                        .all(|(t, w)| t.eq_ignore_ascii_case(w))
                {
                    Ok(())
                } else {
                    Err(err(
                        ln,
                        format!("expected `{}`, found `{}`", want.join(" "), toks.join(" ")),
                    ))
                }
            }
            None => Err(StlError::MissingEndSolid { line: self.last }),
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> StlError {
    StlError::Parse {
        line,
        message: message.into(),
    }
}

fn keyword(tok: Option<&&str>, want: &str) -> bool {
    tok.is_some_and(|t| t.eq_ignore_ascii_case(want))
}

fn parse_triple(line: usize, what: &str, toks: &[&str]) -> Result<Vec3, StlError> {
    if toks.len() != 3 {
        return Err(err(
            line,
            format!("expected 3 {what} components, found {}", toks.len()),
        ));
    }
    let mut v = [0.0; 3];
    for (slot, t) in v.iter_mut().zip(toks) {
        *slot = t
            .parse()
            .map_err(|_| err(line, format!("{what} component `{t}` is not a number")))?;
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}

/// Parse ASCII STL. The mesh name is the remainder of the `solid` line.
pub fn read_ascii(text: &str) -> Result<TriangleMesh, StlError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (ln, toks) = lines.next().ok_or(StlError::MissingEndSolid { line: 0 })?;
    if !keyword(toks.first(), "solid") {
        return Err(err(ln, "expected `solid`"));
    }
    let name = toks[1..].join(" ");
    let mut facets = Vec::new();
    loop {
        let Some((ln, toks)) = lines.next() else {
            return Err(StlError::MissingEndSolid { line: lines.last });
        };
        if keyword(toks.first(), "endsolid") {
            break;
        }
        if !(keyword(toks.first(), "facet") && keyword(toks.get(1), "normal")) {
            return Err(err(
                ln,
                format!(
                    "expected `facet normal` or `endsolid`, found `{}`",
                    toks.join(" ")
                ),
            ));
        }
        let normal = parse_triple(ln, "normal", &toks[2..])?;
        lines.expect(&["outer", "loop"])?;
        let mut vertices = [Vec3::default(); 3];
        for slot in &mut vertices {
            let Some((ln, toks)) = lines.next() else {
                return Err(StlError::MissingEndSolid { line: lines.last });
            };
            if !keyword(toks.first(), "vertex") {
                return Err(err(
                    ln,
                    format!("expected 3 vertices per facet; found `{}`", toks.join(" ")),
                ));
            }
            *slot = parse_triple(ln, "vertex", &toks[1..])?;
        }
        lines.expect(&["endloop"])?;
        lines.expect(&["endfacet"])?;
        facets.push(Facet { normal, vertices });
    }
    Ok(TriangleMesh::new(name, facets))
}

/// Header bytes derived from a mesh name, NUL padded.
pub fn header_from_name(name: &str) -> [u8; BINARY_HEADER_LEN] {
    let mut h = [0u8; BINARY_HEADER_LEN];
    let bytes = name.as_bytes();
    let n = bytes.len().min(BINARY_HEADER_LEN);
    h[..n].copy_from_slice(&bytes[..n]);
    h
}

/// Serialize as little-endian binary STL.
pub fn write_binary(
    m: &TriangleMesh,
    header: &[u8; BINARY_HEADER_LEN],
) -> Result<Vec<u8>, StlError> {
    let count =
        u32::try_from(m.facets.len()).map_err(|_| StlError::TooManyFacets(m.facets.len()))?;
    let mut out = Vec::with_capacity(84 + BINARY_FACET_LEN * m.facets.len());
    out.extend_from_slice(header);
    out.extend_from_slice(&count.to_le_bytes());
    for f in &m.facets {
        for v in std::iter::once(f.normal).chain(f.vertices) {
            for c in [v.x, v.y, v.z] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    Ok(out)
}

/// Parse binary STL. The mesh name is the header text up to the first NUL.
pub fn read_binary(bytes: &[u8]) -> Result<(TriangleMesh, Vec<StlWarning>), StlError> {
    if bytes.len() < 84 {
        return Err(StlError::TruncatedFile {
            count: 0,
            expected: 84,
            found: bytes.len(),
        });
    }
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]);
    let expected = 84 + BINARY_FACET_LEN * count as usize;
    if bytes.len() != expected {
        return Err(StlError::TruncatedFile {
            count,
            expected,
            found: bytes.len(),
        });
    }
    let mut warnings = Vec::new();
    if bytes.starts_with(b"solid") {
        warnings.push(StlWarning::HeaderLooksAscii);
    }
    let header = &bytes[..BINARY_HEADER_LEN];
    let name_end = header
        .iter()
        .position(|&b| b == 0)
        .unwrap_or(BINARY_HEADER_LEN);
    let name = String::from_utf8_lossy(&header[..name_end])
        .trim()
        .to_string();
    let read_f32 = |at: usize| {
        f32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]) as f64
    };
    let read_vec = |at: usize| Vec3::new(read_f32(at), read_f32(at + 4), read_f32(at + 8));
    let facets = (0..count as usize)
        .map(|i| {
            let base = 84 + i * BINARY_FACET_LEN;
            Facet {
                normal: read_vec(base),
                vertices: [
                    read_vec(base + 12),
                    read_vec(base + 24),
                    read_vec(base + 36),
                ],
            }
        })
        .collect();
    Ok((TriangleMesh::new(name, facets), warnings))
}

/// True when the bytes should be parsed as binary STL: the declared facet
/// count matches the file length, or the file does not start with `solid`.
pub fn looks_binary(bytes: &[u8]) -> bool {
    if bytes.len() >= 84 {
        let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        if bytes.len() == 84 + BINARY_FACET_LEN * count {
            return true;
        }
    }
    let start = bytes
        .iter()
        .position(|b| !b.is_ascii_whitespace())
        .unwrap_or(bytes.len());
    !bytes[start..].starts_with(b"solid")
}

/// Auto-detecting reader.
pub fn read_stl(bytes: &[u8]) -> Result<TriangleMesh, StlError> {
    if looks_binary(bytes) {
        read_binary(bytes).map(|(m, _)| m)
    } else {
        let text = std::str::from_utf8(bytes).map_err(|e| {
            let line = bytes[..e.valid_up_to()]
                .iter()
                .filter(|&&b| b == b'\n')
                .count()
                + 1;
            err(line, "invalid UTF-8 in ASCII STL")
        })?;
        read_ascii(text)
    }
}

/// Project every coordinate to the nearest `f32`.
pub fn to_f32_precision(m: &TriangleMesh) -> TriangleMesh {
    let p = |v: Vec3| Vec3::new(v.x as f32 as f64, v.y as f32 as f64, v.z as f32 as f64);
    TriangleMesh::new(
        m.name.clone(),
        m.facets
            .iter()
            .map(|f| Facet {
                normal: p(f.normal),
                vertices: f.vertices.map(p),
            })
            .collect(),
    )
}
