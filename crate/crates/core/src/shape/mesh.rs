use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validates indices and drops zero-area faces.
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Index(format!("face {i} references a missing vertex")));
            }
        }
        let mut mesh = Self { vertices, faces };
        mesh.faces.retain(|f| mesh_area(&mesh.vertices, f) > 0.0);
        Ok(mesh)
    }

    pub fn face_area(&self, face: usize) -> f64 {
        mesh_area(&self.vertices, &self.faces[face])
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|i| self.face_area(i)).sum()
    }
}

fn mesh_area(vertices: &[Vector3<f64>], f: &[usize; 3]) -> f64 {
    let (a, b, c) = (vertices[f[0]], vertices[f[1]], vertices[f[2]]);
    0.5 * (b - a).cross(&(c - a)).norm()
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate() }
    }

    /// Next non-blank line with comments stripped, with its 1-based line number.
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            let line = line.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                return Some((i + 1, line));
            }
        }
        None
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| parse_err(line, format!("invalid number '{tok}'")))
}

/// Parses OFF text. Accepts the counts on their own line or glued to the header (`OFF4 4 0`).
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = Lines::new(text);
    let (hline, header) = lines.next_content().ok_or_else(|| parse_err(1, "empty file"))?;
    let rest = header.strip_prefix("OFF").ok_or_else(|| parse_err(hline, "missing OFF header"))?.trim();
    let (cline, counts) = if rest.is_empty() {
        lines.next_content().ok_or_else(|| parse_err(hline + 1, "missing vertex/face counts"))?
    } else {
        (hline, rest)
    };
    let counts: Vec<usize> = counts.split_whitespace().map(|t| parse_num(t, cline)).collect::<Result<_>>()?;
    if counts.len() < 2 {
        return Err(parse_err(cline, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut last = cline;
    let mut vertices = Vec::with_capacity(nv);
    for v in 0..nv {
        let (ln, line) = lines
            .next_content()
            .ok_or_else(|| parse_err(last + 1, format!("unexpected end of file: read {v} of {nv} vertices")))?;
        last = ln;
        let xyz: Vec<f64> = line.split_whitespace().take(3).map(|t| parse_num(t, ln)).collect::<Result<_>>()?;
        if xyz.len() < 3 {
            return Err(parse_err(ln, "vertex needs three coordinates"));
        }
        vertices.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let (ln, line) = lines
            .next_content()
            .ok_or_else(|| parse_err(last + 1, format!("unexpected end of file: read {f} of {nf} faces")))?;
        last = ln;
        let toks: Vec<usize> = line.split_whitespace().map(|t| parse_num(t, ln)).collect::<Result<_>>()?;
        let k = *toks.first().ok_or_else(|| parse_err(ln, "empty face"))?;
        if k < 3 || toks.len() < k + 1 {
            return Err(parse_err(
                ln,
                format!("face declares {k} vertices but lists {}", toks.len().saturating_sub(1)),
            ));
        }
        let idx = &toks[1..=k];
        if let Some(bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(parse_err(ln, format!("vertex index {bad} out of range")));
        }
        for j in 1..k - 1 {
            faces.push([idx[0], idx[j], idx[j + 1]]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// Parses the vertex and face records of OBJ text; other records are ignored.
pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut polygons: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut lines = Lines::new(text);
    while let Some((ln, line)) = lines.next_content() {
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let xyz: Vec<f64> = toks.take(3).map(|t| parse_num(t, ln)).collect::<Result<_>>()?;
                if xyz.len() < 3 {
                    return Err(parse_err(ln, "vertex needs three coordinates"));
                }
                vertices.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let idx: Vec<i64> =
                    toks.map(|t| parse_num(t.split('/').next().unwrap_or(""), ln)).collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(parse_err(ln, "face needs at least three vertices"));
                }
                polygons.push((ln, idx));
            }
            _ => {}
        }
    }
    let nv = vertices.len() as i64;
    let mut faces = Vec::new();
    for (ln, idx) in polygons {
        let resolved: Vec<usize> = idx
            .iter()
            .map(|&i| {
                let j = if i < 0 { nv + i } else { i - 1 };
                if (0..nv).contains(&j) {
                    Ok(j as usize)
                } else {
                    Err(parse_err(ln, format!("vertex index {i} out of range")))
                }
            })
            .collect::<Result<_>>()?;
        for j in 1..resolved.len() - 1 {
            faces.push([resolved[0], resolved[j], resolved[j + 1]]);
        }
    }
    TriangleMesh::new(vertices, faces)
}

pub fn load_off(path: &Path) -> Result<TriangleMesh> {
    parse_off(&fs::read_to_string(path)?)
}

pub fn load_obj(path: &Path) -> Result<TriangleMesh> {
    parse_obj(&fs::read_to_string(path)?)
}

/// Dispatches on the file extension.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("off") => load_off(path),
        Some("obj") => load_obj(path),
        other => Err(Error::Format(format!("unsupported mesh extension {other:?}"))),
    }
}

/// `k` points distributed uniformly by area over the mesh surface.
pub fn sample_surface<R: Rng + ?Sized>(mesh: &TriangleMesh, k: usize, rng: &mut R) -> Result<Vec<Vector3<f64>>> {
    if mesh.faces.is_empty() {
        return Err(Error::Empty("mesh has no faces with positive area".into()));
    }
    if k == 0 {
        return Err(Error::Config("sample count must be positive".into()));
    }
    let areas: Vec<f64> = (0..mesh.faces.len()).map(|i| mesh.face_area(i)).collect();
    let pick = WeightedIndex::new(&areas).map_err(|e| Error::Domain(e.to_string()))?;
    Ok((0..k)
        .map(|_| {
            let f = mesh.faces[pick.sample(rng)];
            let (a, b, c) = (mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
            let s = rng.random::<f64>().sqrt();
            let t: f64 = rng.random();
            a * (1.0 - s) + b * (s * (1.0 - t)) + c * (s * t)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TETRA: &str = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n3 0 2 3\n3 1 2 3\n";

    #[test]
    fn tetrahedron_counts() {
        let m = parse_off(TETRA).unwrap();
        assert_eq!((m.vertices.len(), m.faces.len()), (4, 4));
    }

    #[test]
    fn glued_header_parses_identically() {
        let glued = TETRA.replacen("OFF\n4 4 0", "OFF4 4 0", 1);
        assert_eq!(parse_off(&glued).unwrap(), parse_off(TETRA).unwrap());
    }

    #[test]
    fn truncated_file_names_the_line() {
        let cut: String = TETRA.lines().take(7).collect::<Vec<_>>().join("\n");
        match parse_off(&cut) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 8);
                assert!(msg.contains("faces"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_off("OFF\n4 4 0\n0 0 x\n"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn quads_are_fanned_and_obj_matches() {
        let off = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let obj = "# square\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 -1//1\n";
        let a = parse_off(off).unwrap();
        let b = parse_obj(obj).unwrap();
        assert_eq!(a, b);
        assert!((a.surface_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_seeded_and_on_surface() {
        let m = parse_off(TETRA).unwrap();
        let a = sample_surface(&m, 50, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = sample_surface(&m, 50, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        for p in &a {
            let on_face =
                p.x.abs() < 1e-12 || p.y.abs() < 1e-12 || p.z.abs() < 1e-12 || (p.x + p.y + p.z - 1.0).abs() < 1e-12;
            assert!(on_face);
        }
        assert_eq!(sample_surface(&m, 1, &mut ChaCha8Rng::seed_from_u64(2)).unwrap().len(), 1);
        let empty = TriangleMesh::new(vec![], vec![]).unwrap();
        assert!(sample_surface(&empty, 3, &mut ChaCha8Rng::seed_from_u64(2)).is_err());
    }

    #[test]
    fn square_sampling_is_uniform() {
        // chi-square over a 4x4 grid; 15 degrees of freedom, 0.999 quantile is 37.7
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 3 4\n").unwrap();
        let pts = sample_surface(&m, 10_000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut counts = [0usize; 16];
        for p in &pts {
            let (i, j) = (((p.x * 4.0) as usize).min(3), ((p.y * 4.0) as usize).min(3));
            counts[4 * i + j] += 1;
        }
        let expected = 10_000.0 / 16.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 37.7, "chi2 = {chi2}");
    }
}
