//! Curve CSV files: a `# view=<k> closed=<0|1>` header followed by one
//! `x,y` point per line.

use std::io::{BufRead, BufReader, Read, Write};

use super::Curve2D;
use crate::{Error, Result, Vec2};

pub fn write_curve_csv<W: Write>(mut w: W, curve: &Curve2D, view: usize) -> Result<()> {
    writeln!(w, "# view={} closed={}", view, u8::from(curve.closed))?;
    for p in &curve.points {
        writeln!(w, "{},{}", p.x, p.y)?;
    }
    Ok(())
}

/// Returns the view index from the header and the curve.
pub fn read_curve_csv<R: Read>(r: R) -> Result<(usize, Curve2D)> {
    let mut view = None;
    let mut closed = None;
    let mut points = Vec::new();
    for (lineno, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            for field in header.split_whitespace() {
                match field.split_once('=') {
                    Some(("view", v)) => {
                        view = Some(v.parse().map_err(|_| Error::Parse(format!("bad view index '{v}'")))?)
                    }
                    Some(("closed", "0")) => closed = Some(false),
                    Some(("closed", "1")) => closed = Some(true),
                    Some(("closed", v)) => return Err(Error::Parse(format!("bad closed flag '{v}'"))),
                    _ => {}
                }
            }
            continue;
        }
        let (x, y) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: expected 'x,y'", lineno + 1)))?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad number '{s}'", lineno + 1)))
        };
        points.push(Vec2::new(parse(x)?, parse(y)?));
    }
    let view = view.ok_or_else(|| Error::Parse("missing '# view=' header".into()))?;
    let closed = closed.ok_or_else(|| Error::Parse("missing 'closed=' in header".into()))?;
    Ok((view, Curve2D::new(points, closed)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let c = Curve2D::new(vec![Vec2::new(1.5, 2.0), Vec2::new(3.0, -4.25), Vec2::new(0.0, 0.0)], true).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &c, 2).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("# view=2 closed=1\n1.5,2\n"));
        let (v, back) = read_curve_csv(buf.as_slice()).unwrap();
        assert_eq!(v, 2);
        assert_eq!(back, c);
    }

    #[test]
    fn missing_header() {
        assert!(read_curve_csv("1,2\n3,4\n".as_bytes()).is_err());
    }
}
