//! PCD reader (ascii and binary payloads) and writer.
//!
//! Points whose x, y or z is NaN are dropped, as PCL does for non-dense clouds.
//! `binary_compressed` payloads are rejected.

use std::io::Write;

use nalgebra::Point3;

use super::{lines, parse_f64, tokens, Encoding, ParseError};
use crate::cloud::PointCloud;

#[derive(Clone, Debug)]
struct Field {
    name: Vec<u8>,
    size: usize,
    kind: u8,
    count: usize,
}

impl Field {
    fn decode(&self, b: &[u8]) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let mut a = [0u8; $n];
                a.copy_from_slice(&b[..$n]);
                <$t>::from_le_bytes(a) as f64
            }};
        }
        match (self.kind, self.size) {
            (b'F', 4) => num!(f32, 4),
            (b'F', 8) => num!(f64, 8),
            (b'I', 1) => b[0] as i8 as f64,
            (b'I', 2) => num!(i16, 2),
            (b'I', 4) => num!(i32, 4),
            (b'I', 8) => num!(i64, 8),
            (b'U', 1) => b[0] as f64,
            (b'U', 2) => num!(u16, 2),
            (b'U', 4) => num!(u32, 4),
            (b'U', 8) => num!(u64, 8),
            _ => f64::NAN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Data {
    Ascii,
    Binary,
}

fn parse_usize(t: &[u8]) -> Option<usize> {
    std::str::from_utf8(t).ok()?.parse().ok()
}

pub fn parse_pcd(bytes: &[u8]) -> Result<PointCloud, ParseError> {
    let mut names: Option<Vec<Vec<u8>>> = None;
    let mut sizes: Option<Vec<usize>> = None;
    let mut types: Option<Vec<u8>> = None;
    let mut counts: Option<Vec<usize>> = None;
    let mut width = None;
    let mut height = None;
    let mut points_decl = None;
    let mut data = None;

    for (offset, line_no, line) in lines(bytes) {
        let err = |m: &str| ParseError::at_line(offset, line_no, m.to_string());
        let mut tok = tokens(line);
        let Some(key) = tok.next() else { continue };
        if key.starts_with(b"#") {
            continue;
        }
        let rest: Vec<&[u8]> = tok.collect();
        match key {
            b"VERSION" | b"VIEWPOINT" => {}
            b"FIELDS" => names = Some(rest.iter().map(|t| t.to_vec()).collect()),
            b"SIZE" => {
                sizes = Some(
                    rest.iter()
                        .map(|t| parse_usize(t).filter(|s| matches!(s, 1 | 2 | 4 | 8)))
                        .collect::<Option<_>>()
                        .ok_or_else(|| err("SIZE entries must be 1, 2, 4 or 8"))?,
                )
            }
            b"TYPE" => {
                types = Some(
                    rest.iter()
                        .map(|t| match *t {
                            [c @ (b'F' | b'I' | b'U')] => Some(*c),
                            _ => None,
                        })
                        .collect::<Option<_>>()
                        .ok_or_else(|| err("TYPE entries must be F, I or U"))?,
                )
            }
            b"COUNT" => {
                counts = Some(
                    rest.iter()
                        .map(|t| parse_usize(t).filter(|c| *c >= 1))
                        .collect::<Option<_>>()
                        .ok_or_else(|| err("COUNT entries must be positive integers"))?,
                )
            }
            b"WIDTH" => width = Some(rest.first().and_then(|t| parse_usize(t)).ok_or_else(|| err("bad WIDTH"))?),
            b"HEIGHT" => height = Some(rest.first().and_then(|t| parse_usize(t)).ok_or_else(|| err("bad HEIGHT"))?),
            b"POINTS" => {
                points_decl = Some(rest.first().and_then(|t| parse_usize(t)).ok_or_else(|| err("bad POINTS"))?)
            }
            b"DATA" => {
                let kind = match rest.first() {
                    Some(&b"ascii") => Data::Ascii,
                    Some(&b"binary") => Data::Binary,
                    Some(&b"binary_compressed") => return Err(err("binary_compressed PCD is not supported")),
                    _ => return Err(err("unknown DATA kind")),
                };
                let mut body = offset + line.len() + 1;
                if bytes.get(offset + line.len()) == Some(&b'\r') {
                    body += 1;
                }
                data = Some((kind, body.min(bytes.len()), offset, line_no));
                break;
            }
            _ => return Err(err("unknown header keyword")),
        }
    }

    let (kind, body, data_offset, data_line) =
        data.ok_or_else(|| ParseError::at(bytes.len(), "header has no DATA line"))?;
    let herr = |m: &str| ParseError::at_line(data_offset, data_line, m.to_string());
    let names = names.ok_or_else(|| herr("header lacks FIELDS"))?;
    let n = names.len();
    let sizes = sizes.unwrap_or_else(|| vec![4; n]);
    let types = types.unwrap_or_else(|| vec![b'F'; n]);
    let counts = counts.unwrap_or_else(|| vec![1; n]);
    if sizes.len() != n || types.len() != n || counts.len() != n {
        return Err(herr("FIELDS, SIZE, TYPE and COUNT lengths differ"));
    }
    let fields: Vec<Field> = (0..n)
        .map(|i| Field {
            name: names[i].clone(),
            size: sizes[i],
            kind: types[i],
            count: counts[i],
        })
        .collect();
    let mut slots = [usize::MAX; 3];
    for (i, f) in fields.iter().enumerate() {
        let axis = match f.name.as_slice() {
            b"x" => 0,
            b"y" => 1,
            b"z" => 2,
            _ => continue,
        };
        if f.kind != b'F' || !matches!(f.size, 4 | 8) || f.count != 1 {
            return Err(herr("x/y/z fields must be scalar F 4 or F 8"));
        }
        slots[axis] = i;
    }
    if slots.contains(&usize::MAX) {
        return Err(herr("FIELDS must contain x, y and z"));
    }
    let total = match (points_decl, width, height) {
        (Some(p), _, _) => p,
        (None, Some(w), Some(h)) => w.checked_mul(h).ok_or_else(|| herr("WIDTH*HEIGHT overflows"))?,
        (None, Some(w), None) => w,
        _ => return Err(herr("header lacks POINTS or WIDTH")),
    };
    if total == 0 {
        return Err(herr("cloud declares zero points"));
    }

    let mut points = Vec::new();
    match kind {
        Data::Ascii => {
            let values_per_point: usize = fields.iter().map(|f| f.count).sum();
            let mut read = 0;
            for (offset, line_no, line) in lines(&bytes[body..]) {
                if read == total {
                    break;
                }
                let offset = body + offset;
                let toks: Vec<&[u8]> = tokens(line).collect();
                if toks.is_empty() {
                    continue;
                }
                let line_no = data_line + line_no;
                if toks.len() != values_per_point {
                    return Err(ParseError::at_line(
                        offset,
                        line_no,
                        format!("expected {values_per_point} values, found {}", toks.len()),
                    ));
                }
                let mut xyz = [0.0; 3];
                let mut col = 0;
                for (i, f) in fields.iter().enumerate() {
                    for _ in 0..f.count {
                        let v = parse_f64(toks[col])
                            .ok_or_else(|| ParseError::at_line(offset, line_no, "invalid number"))?;
                        for a in 0..3 {
                            if slots[a] == i {
                                xyz[a] = v;
                            }
                        }
                        col += 1;
                    }
                }
                read += 1;
                push_point(&mut points, xyz, offset)?;
            }
            if read < total {
                return Err(ParseError::at(
                    bytes.len(),
                    format!("truncated ascii body: {read} of {total} points"),
                ));
            }
        }
        Data::Binary => {
            let mut field_offsets = Vec::with_capacity(n);
            let mut record = 0usize;
            for f in &fields {
                field_offsets.push(record);
                record = f
                    .size
                    .checked_mul(f.count)
                    .and_then(|s| record.checked_add(s))
                    .ok_or_else(|| herr("record size overflows"))?;
            }
            if record == 0 {
                return Err(herr("zero-sized record"));
            }
            let need = record.checked_mul(total).and_then(|s| s.checked_add(body));
            match need {
                Some(end) if end <= bytes.len() => {}
                _ => {
                    let whole = (bytes.len() - body) / record;
                    return Err(ParseError::at(
                        body + whole * record,
                        format!("truncated binary body: {whole} of {total} points"),
                    ));
                }
            }
            points.reserve(total);
            for k in 0..total {
                let start = body + k * record;
                let rec = &bytes[start..start + record];
                let mut xyz = [0.0; 3];
                for a in 0..3 {
                    let f = &fields[slots[a]];
                    xyz[a] = f.decode(&rec[field_offsets[slots[a]]..]);
                }
                push_point(&mut points, xyz, start)?;
            }
        }
    }
    if points.is_empty() {
        return Err(ParseError::at(body, "no valid points (all NaN)"));
    }
    PointCloud::new(points).map_err(|e| ParseError::at(body, e.to_string()))
}

fn push_point(points: &mut Vec<Point3<f64>>, xyz: [f64; 3], offset: usize) -> Result<(), ParseError> {
    if xyz.iter().any(|v| v.is_nan()) {
        return Ok(());
    }
    if xyz.iter().any(|v| v.is_infinite()) {
        return Err(ParseError::at(offset, "infinite coordinate"));
    }
    points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
    Ok(())
}

/// Writes an unorganized cloud with `F 8` x, y, z fields.
pub fn write_pcd<W: Write>(w: &mut W, cloud: &PointCloud, encoding: Encoding) -> std::io::Result<()> {
    let data = match encoding {
        Encoding::Ascii => "ascii",
        Encoding::Binary => "binary",
    };
    let n = cloud.len();
    write!(
        w,
        "# .PCD v0.7 - Point Cloud Data file format\nVERSION 0.7\nFIELDS x y z\nSIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\nWIDTH {n}\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS {n}\nDATA {data}\n"
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
