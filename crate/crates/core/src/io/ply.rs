//! PLY reader (ascii, binary little- and big-endian) and writer.
//!
//! Only the `vertex` element's `x`, `y`, `z` properties are read; they must
//! be `float`/`double`. Other properties and elements are skipped.

use std::io::Write;

use nalgebra::Point3;

use super::{lines, parse_f64, tokens, Encoding, ParseError};
use crate::cloud::PointCloud;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &[u8]) -> Option<Self> {
        Some(match name {
            b"char" | b"int8" => Scalar::I8,
            b"uchar" | b"uint8" => Scalar::U8,
            b"short" | b"int16" => Scalar::I16,
            b"ushort" | b"uint16" => Scalar::U16,
            b"int" | b"int32" => Scalar::I32,
            b"uint" | b"uint32" => Scalar::U32,
            b"float" | b"float32" => Scalar::F32,
            b"double" | b"float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8], big: bool) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let mut a = [0u8; $n];
                a.copy_from_slice(&b[..$n]);
                if big {
                    <$t>::from_be_bytes(a) as f64
                } else {
                    <$t>::from_le_bytes(a) as f64
                }
            }};
        }
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => num!(i16, 2),
            Scalar::U16 => num!(u16, 2),
            Scalar::I32 => num!(i32, 4),
            Scalar::U32 => num!(u32, 4),
            Scalar::F32 => num!(f32, 4),
            Scalar::F64 => num!(f64, 8),
        }
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar { name: Vec<u8>, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Clone, Debug)]
struct Element {
    name: Vec<u8>,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: Format,
    elements: Vec<Element>,
    body: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, ParseError> {
    let mut it = lines(bytes);
    match it.next() {
        Some((_, _, b"ply")) => {}
        _ => return Err(ParseError::at_line(0, 1, "missing 'ply' magic")),
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    for (offset, line_no, line) in it {
        let err = |m: &str| ParseError::at_line(offset, line_no, m.to_string());
        let mut tok = tokens(line);
        match tok.next() {
            None | Some(b"comment") | Some(b"obj_info") => {}
            Some(b"format") => {
                format = Some(match (tok.next(), tok.next()) {
                    (Some(b"ascii"), Some(b"1.0")) => Format::Ascii,
                    (Some(b"binary_little_endian"), Some(b"1.0")) => Format::BinaryLe,
                    (Some(b"binary_big_endian"), Some(b"1.0")) => Format::BinaryBe,
                    _ => return Err(err("unsupported format line")),
                });
            }
            Some(b"element") => {
                let name = tok.next().ok_or_else(|| err("element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| std::str::from_utf8(c).ok()?.parse::<usize>().ok())
                    .ok_or_else(|| err("element count is not a non-negative integer"))?;
                elements.push(Element {
                    name: name.to_vec(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some(b"property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| err("property before any element"))?;
                let first = tok.next().ok_or_else(|| err("property without type"))?;
                let prop = if first == b"list" {
                    let count = tok.next().and_then(Scalar::parse);
                    let item = tok.next().and_then(Scalar::parse);
                    match (count, item, tok.next()) {
                        (Some(count), Some(item), Some(_)) if !matches!(count, Scalar::F32 | Scalar::F64) => {
                            Property::List { count, item }
                        }
                        _ => return Err(err("malformed list property")),
                    }
                } else {
                    let ty = Scalar::parse(first).ok_or_else(|| err("unknown property type"))?;
                    let name = tok.next().ok_or_else(|| err("property without name"))?;
                    Property::Scalar {
                        name: name.to_vec(),
                        ty,
                    }
                };
                el.properties.push(prop);
            }
            Some(b"end_header") => {
                let body = offset + line.len() + 1;
                let body = if bytes.get(offset + line.len()) == Some(&b'\r') {
                    body + 1
                } else {
                    body
                };
                let format = format.ok_or_else(|| err("header has no format line"))?;
                return Ok(Header {
                    format,
                    elements,
                    body: body.min(bytes.len()),
                });
            }
            Some(_) => return Err(err("unknown header keyword")),
        }
    }
    Err(ParseError::at(bytes.len(), "header has no end_header"))
}

/// Positions of x, y, z among the vertex element's scalar properties.
fn xyz_slots(el: &Element, body: usize) -> Result<[usize; 3], ParseError> {
    let mut slots = [usize::MAX; 3];
    for (i, p) in el.properties.iter().enumerate() {
        if let Property::Scalar { name, ty } = p {
            let axis = match name.as_slice() {
                b"x" => 0,
                b"y" => 1,
                b"z" => 2,
                _ => continue,
            };
            if !matches!(ty, Scalar::F32 | Scalar::F64) {
                return Err(ParseError::at(body, "vertex x/y/z must be float or double"));
            }
            slots[axis] = i;
        }
    }
    if slots.contains(&usize::MAX) {
        return Err(ParseError::at(body, "vertex element lacks x, y or z"));
    }
    Ok(slots)
}

pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud, ParseError> {
    let header = parse_header(bytes)?;
    let vertex_at = header
        .elements
        .iter()
        .position(|e| e.name == b"vertex")
        .ok_or_else(|| ParseError::at(header.body, "no vertex element"))?;
    let slots = xyz_slots(&header.elements[vertex_at], header.body)?;
    if header.elements[vertex_at].count == 0 {
        return Err(ParseError::at(header.body, "vertex element is empty"));
    }
    let points = match header.format {
        Format::Ascii => read_ascii(bytes, &header, vertex_at, slots)?,
        Format::BinaryLe => read_binary(bytes, &header, vertex_at, slots, false)?,
        Format::BinaryBe => read_binary(bytes, &header, vertex_at, slots, true)?,
    };
    PointCloud::new(points).map_err(|e| ParseError::at(header.body, e.to_string()))
}

fn read_ascii(
    bytes: &[u8],
    header: &Header,
    vertex_at: usize,
    slots: [usize; 3],
) -> Result<Vec<Point3<f64>>, ParseError> {
    // Token stream with offsets; records need not align with lines.
    let body = &bytes[header.body..];
    let mut pos = 0;
    let mut next = || -> Option<(usize, &[u8])> {
        while pos < body.len() && body[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= body.len() {
            return None;
        }
        let start = pos;
        while pos < body.len() && !body[pos].is_ascii_whitespace() {
            pos += 1;
        }
        Some((header.body + start, &body[start..pos]))
    };
    let eof = |what: &str| ParseError::at(bytes.len(), format!("truncated ascii body: missing {what}"));

    let mut points = Vec::new();
    for (ei, el) in header.elements.iter().enumerate().take(vertex_at + 1) {
        for _ in 0..el.count {
            let mut xyz = [0.0; 3];
            for (pi, p) in el.properties.iter().enumerate() {
                match p {
                    Property::Scalar { .. } => {
                        let (off, t) = next().ok_or_else(|| eof("property"))?;
                        let v = parse_f64(t).ok_or_else(|| ParseError::at(off, "invalid number"))?;
                        if ei == vertex_at {
                            for a in 0..3 {
                                if slots[a] == pi {
                                    if !v.is_finite() {
                                        return Err(ParseError::at(off, "non-finite coordinate"));
                                    }
                                    xyz[a] = v;
                                }
                            }
                        }
                    }
                    Property::List { .. } => {
                        let (off, t) = next().ok_or_else(|| eof("list count"))?;
                        let n = std::str::from_utf8(t)
                            .ok()
                            .and_then(|s| s.parse::<usize>().ok())
                            .ok_or_else(|| ParseError::at(off, "invalid list count"))?;
                        for _ in 0..n {
                            let (off, t) = next().ok_or_else(|| eof("list item"))?;
                            parse_f64(t).ok_or_else(|| ParseError::at(off, "invalid number"))?;
                        }
                    }
                }
            }
            if ei == vertex_at {
                points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
        }
    }
    Ok(points)
}

fn read_binary(
    bytes: &[u8],
    header: &Header,
    vertex_at: usize,
    slots: [usize; 3],
    big: bool,
) -> Result<Vec<Point3<f64>>, ParseError> {
    let mut pos = header.body;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8], ParseError> {
        let end = pos.checked_add(n).filter(|e| *e <= bytes.len());
        match end {
            Some(end) => {
                let s = &bytes[*pos..end];
                *pos = end;
                Ok(s)
            }
            None => Err(ParseError::at(*pos, "truncated binary body")),
        }
    };

    let mut points = Vec::new();
    for (ei, el) in header.elements.iter().enumerate().take(vertex_at + 1) {
        if ei == vertex_at {
            // Every record has at least one byte per scalar; bound the reservation.
            let min_record: usize = el.properties.len().max(1);
            points.reserve(el.count.min((bytes.len() - pos.min(bytes.len())) / min_record));
        }
        for _ in 0..el.count {
            let record_start = pos;
            let mut xyz = [0.0; 3];
            for (pi, p) in el.properties.iter().enumerate() {
                match p {
                    Property::Scalar { ty, .. } => {
                        let raw = take(&mut pos, ty.size())?;
                        if ei == vertex_at {
                            for a in 0..3 {
                                if slots[a] == pi {
                                    xyz[a] = ty.decode(raw, big);
                                }
                            }
                        }
                    }
                    Property::List { count, item } => {
                        let raw = take(&mut pos, count.size())?;
                        let n = count.decode(raw, big);
                        if !(n >= 0.0) {
                            return Err(ParseError::at(pos - count.size(), "negative list count"));
                        }
                        let len = (n as usize)
                            .checked_mul(item.size())
                            .ok_or_else(|| ParseError::at(pos, "list too long"))?;
                        take(&mut pos, len)?;
                    }
                }
            }
            if ei == vertex_at {
                if !xyz.iter().all(|v| v.is_finite()) {
                    return Err(ParseError::at(record_start, "non-finite coordinate"));
                }
                points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
        }
    }
    Ok(points)
}

/// Writes `x y z` as `double` properties.
pub fn write_ply<W: Write>(w: &mut W, cloud: &PointCloud, encoding: Encoding) -> std::io::Result<()> {
    let format = match encoding {
        Encoding::Ascii => "ascii",
        Encoding::Binary => "binary_little_endian",
    };
    write!(
        w,
        "ply\nformat {format} 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
        cloud.len()
    )?;
    for p in cloud.points() {
        match encoding {
            Encoding::Ascii => writeln!(w, "{} {} {}", p.x, p.y, p.z)?,
            Encoding::Binary => {
                for v in [p.x, p.y, p.z] {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}
