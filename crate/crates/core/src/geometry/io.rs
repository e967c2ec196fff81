//! ASCII PLY and OBJ mesh I/O (vertices and triangular faces only) and JSON
//! view files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Mesh, View};
use crate::{Error, Result, Vec3};

/// Writes an ASCII PLY. When `error_mm` is given it is stored as an extra
/// per-vertex float property named `error_mm`.
pub fn write_ply<W: Write>(mut w: W, mesh: &Mesh, error_mm: Option<&[f64]>) -> Result<()> {
    if let Some(e) = error_mm {
        if e.len() != mesh.vertices.len() {
            return Err(Error::Parameter(format!(
                "{} error values for {} vertices",
                e.len(),
                mesh.vertices.len()
            )));
        }
    }
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", mesh.vertices.len())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    if error_mm.is_some() {
        writeln!(w, "property double error_mm")?;
    }
    writeln!(w, "element face {}", mesh.faces.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for (i, v) in mesh.vertices.iter().enumerate() {
        match error_mm {
            Some(e) => writeln!(w, "{} {} {} {}", v.x, v.y, v.z, e[i])?,
            None => writeln!(w, "{} {} {}", v.x, v.y, v.z)?,
        }
    }
    for f in &mesh.faces {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

/// Mesh read from a PLY file plus the `error_mm` vertex scalar when present.
pub struct PlyContents {
    pub mesh: Mesh,
    pub error_mm: Option<Vec<f64>>,
}

pub fn read_ply<R: Read>(r: R) -> Result<PlyContents> {
    let mut lines = BufReader::new(r).lines();
    let mut next_line = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of PLY file".into()))?
            .map_err(Error::from)
    };
    if next_line()?.trim() != "ply" {
        return Err(Error::Parse("missing 'ply' magic".into()));
    }
    let mut n_vertices = 0usize;
    let mut n_faces = 0usize;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut current = String::new();
    loop {
        let line = next_line()?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(Error::Parse(format!("unsupported PLY format {fmt}")));
            }
            ["element", name, count] => {
                let count: usize = count.parse().map_err(|_| Error::Parse(format!("bad count in '{line}'")))?;
                current = name.to_string();
                match *name {
                    "vertex" => n_vertices = count,
                    "face" => n_faces = count,
                    _ if count == 0 => {}
                    _ => return Err(Error::Parse(format!("unsupported PLY element '{name}'"))),
                }
            }
            ["property", "list", ..] => {}
            ["property", _, name] if current == "vertex" => vertex_props.push(name.to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    let idx = |name: &str| vertex_props.iter().position(|p| p == name);
    let (xi, yi, zi) = match (idx("x"), idx("y"), idx("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(Error::Parse("PLY vertex element lacks x/y/z".into())),
    };
    let ei = idx("error_mm");

    let parse_f = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}'")));
    let mut vertices = Vec::with_capacity(n_vertices);
    let mut errors = Vec::new();
    for _ in 0..n_vertices {
        let line = next_line()?;
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() < vertex_props.len() {
            return Err(Error::Parse(format!("short vertex line '{line}'")));
        }
        vertices.push(Vec3::new(parse_f(t[xi])?, parse_f(t[yi])?, parse_f(t[zi])?));
        if let Some(e) = ei {
            errors.push(parse_f(t[e])?);
        }
    }
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let line = next_line()?;
        let t: Vec<usize> = line
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad index '{s}'"))))
            .collect::<Result<_>>()?;
        if t.first() != Some(&3) || t.len() != 4 {
            return Err(Error::Parse(format!("only triangles are supported: '{line}'")));
        }
        faces.push([t[1], t[2], t[3]]);
    }
    Ok(PlyContents { mesh: Mesh::new(vertices, faces)?, error_mm: ei.map(|_| errors) })
}

pub fn write_obj<W: Write>(mut w: W, mesh: &Mesh) -> Result<()> {
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in &mesh.faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn read_obj<R: Read>(r: R) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        let mut t = line.split_whitespace();
        match t.next() {
            Some("v") => {
                let c: Vec<f64> = t
                    .take(3)
                    .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad number '{s}'"))))
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(Error::Parse(format!("short vertex line '{line}'")));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                // `f a/b/c ...`: only the position index matters.
                let idx: Vec<usize> = t
                    .map(|s| {
                        s.split('/')
                            .next()
                            .and_then(|i| i.parse::<usize>().ok())
                            .filter(|&i| i > 0)
                            .map(|i| i - 1)
                            .ok_or_else(|| Error::Parse(format!("bad face index '{s}'")))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(Error::Parse(format!("only triangles are supported: '{line}'")));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Mesh::new(vertices, faces)
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// Reads a `.ply` or `.obj` file.
pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let f = File::open(path)?;
    match extension(path).as_str() {
        "ply" => Ok(read_ply(f)?.mesh),
        "obj" => read_obj(f),
        other => Err(Error::Parse(format!("unknown mesh extension '{other}'"))),
    }
}

/// Writes a `.ply` (optionally with `error_mm`) or `.obj` file.
pub fn write_mesh(path: &Path, mesh: &Mesh, error_mm: Option<&[f64]>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match extension(path).as_str() {
        "ply" => write_ply(&mut w, mesh, error_mm)?,
        "obj" => write_obj(&mut w, mesh)?,
        other => return Err(Error::Parse(format!("unknown mesh extension '{other}'"))),
    }
    w.flush()?;
    Ok(())
}

pub fn read_views(path: &Path) -> Result<Vec<View>> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

pub fn write_views(path: &Path, views: &[View]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, views)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_hemisphere;

    #[test]
    fn ply_roundtrip_with_scalar() {
        let m = generate_hemisphere(7.5, 2).unwrap();
        let err: Vec<f64> = (0..m.vertex_count()).map(|i| i as f64 * 0.25).collect();
        let mut buf = Vec::new();
        write_ply(&mut buf, &m, Some(&err)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("property double error_mm"));
        let back = read_ply(buf.as_slice()).unwrap();
        assert_eq!(back.mesh, m);
        assert_eq!(back.error_mm.unwrap(), err);
    }

    #[test]
    fn obj_roundtrip() {
        let m = generate_hemisphere(3.0, 1).unwrap();
        let mut buf = Vec::new();
        write_obj(&mut buf, &m).unwrap();
        assert_eq!(read_obj(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn obj_with_texture_indices() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1\n";
        let m = read_obj(src.as_bytes()).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2]]);
    }

    #[test]
    fn rejects_quads() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 4 3\n";
        assert!(read_obj(src.as_bytes()).is_err());
    }
}
