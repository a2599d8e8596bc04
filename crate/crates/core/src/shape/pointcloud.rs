use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Raw point cloud with optional per-point scalar values (e.g. texture).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub values: Option<Vec<f64>>,
}

impl PointCloud {
    fn from_rows(rows: Vec<(usize, Vec<f64>)>) -> Result<Self> {
        let with_values = rows.first().is_some_and(|(_, r)| r.len() >= 4);
        let mut points = Vec::with_capacity(rows.len());
        let mut values = Vec::new();
        for (line, r) in rows {
            if r.len() < 3 || (r.len() >= 4) != with_values {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {} columns, found {}", if with_values { 4 } else { 3 }, r.len()),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse { line, msg: "non-finite value".into() });
            }
            points.push(Vector3::new(r[0], r[1], r[2]));
            if with_values {
                values.push(r[3]);
            }
        }
        Ok(Self { points, values: with_values.then_some(values) })
    }
}

/// CSV rows `x,y,z[,value]`; a non-numeric first row is taken as a header.
pub fn parse_point_cloud_csv(text: &str) -> Result<PointCloud> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(r) => rows.push((line, r)),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse { line, msg: e.to_string() }),
        }
    }
    PointCloud::from_rows(rows)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonPoint {
    Array(Vec<f64>),
    Object { x: f64, y: f64, z: f64, value: Option<f64> },
}

/// JSON array of `[x, y, z(, value)]` arrays or `{x, y, z, value?}` objects.
pub fn parse_point_cloud_json(text: &str) -> Result<PointCloud> {
    let pts: Vec<JsonPoint> = serde_json::from_str(text)?;
    let rows = pts
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let row = match p {
                JsonPoint::Array(v) => v,
                JsonPoint::Object { x, y, z, value } => {
                    let mut v = vec![x, y, z];
                    v.extend(value);
                    v
                }
            };
            (i + 1, row)
        })
        .collect();
    PointCloud::from_rows(rows)
}

pub fn load_point_cloud(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path)?;
    if crate::moments::is_json(path) {
        parse_point_cloud_json(&text)
    } else {
        parse_point_cloud_csv(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_header_and_values() {
        let pc = parse_point_cloud_csv("x,y,z,value\n1,2,3,0.5\n-1, 0, 0, 1\n").unwrap();
        assert_eq!(pc.points.len(), 2);
        assert_eq!(pc.values, Some(vec![0.5, 1.0]));
    }

    #[test]
    fn csv_without_values() {
        let pc = parse_point_cloud_csv("1,2,3\n4,5,6\n").unwrap();
        assert_eq!(pc.values, None);
        assert_eq!(pc.points[1], Vector3::new(4.0, 5.0, 6.0));
    }

    #[test]
    fn csv_errors_name_the_line() {
        assert!(matches!(parse_point_cloud_csv("1,2,3\n4,x,6\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn json_forms() {
        let a = parse_point_cloud_json("[[1,2,3],[4,5,6]]").unwrap();
        let b = parse_point_cloud_json(r#"[{"x":1,"y":2,"z":3},{"x":4,"y":5,"z":6}]"#).unwrap();
        assert_eq!(a, b);
        let c = parse_point_cloud_json(r#"[{"x":1,"y":2,"z":3,"value":9}]"#).unwrap();
        assert_eq!(c.values, Some(vec![9.0]));
    }
}
