use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One stored shape descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRecord {
    pub id: String,
    pub label: String,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub id: String,
    pub label: String,
    pub score: f64,
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("descriptor lengths differ: {} vs {}", a.len(), b.len())));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm("cosine similarity of a zero descriptor".into()));
    }
    Ok(dot / (na * nb))
}

/// Database entries ranked by decreasing cosine similarity; ties keep database order.
pub fn retrieve(query: &[f64], database: &[DescriptorRecord], k: usize) -> Result<Vec<RankedItem>> {
    let mut scored =
        database.iter().map(|r| Ok((cosine_similarity(query, &r.vector)?, r))).collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(score, r)| RankedItem { id: r.id.clone(), label: r.label.clone(), score })
        .collect())
}

fn leave_one_out(records: &[DescriptorRecord], i: usize) -> Result<Vec<RankedItem>> {
    let rest: Vec<DescriptorRecord> =
        records.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r.clone()).collect();
    retrieve(&records[i].vector, &rest, rest.len())
}

/// Leave-one-out accuracy of the top-ranked neighbor's label.
pub fn nearest_neighbor_accuracy(records: &[DescriptorRecord]) -> Result<f64> {
    if records.len() < 2 {
        return Err(Error::Empty("need at least two descriptors".into()));
    }
    let mut hits = 0;
    for (i, r) in records.iter().enumerate() {
        if leave_one_out(records, i)?[0].label == r.label {
            hits += 1;
        }
    }
    Ok(hits as f64 / records.len() as f64)
}

/// Average precision of a ranked relevance list; zero when nothing is relevant.
pub fn average_precision(relevant: &[bool]) -> f64 {
    let mut hits = 0;
    let mut sum = 0.0;
    for (i, &rel) in relevant.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

/// Leave-one-out mean average precision, relevance meaning an equal label.
pub fn mean_average_precision(records: &[DescriptorRecord]) -> Result<f64> {
    if records.len() < 2 {
        return Err(Error::Empty("need at least two descriptors".into()));
    }
    let mut total = 0.0;
    for (i, r) in records.iter().enumerate() {
        let ranked = leave_one_out(records, i)?;
        let rel: Vec<bool> = ranked.iter().map(|x| x.label == r.label).collect();
        total += average_precision(&rel);
    }
    Ok(total / records.len() as f64)
}

/// Writes one JSON object per line.
pub fn write_descriptors<W: Write>(mut out: W, records: &[DescriptorRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_descriptors<R: BufRead>(input: R) -> Result<Vec<DescriptorRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, label: &str, v: &[f64]) -> DescriptorRecord {
        DescriptorRecord { id: id.into(), label: label.into(), vector: v.to_vec() }
    }

    #[test]
    fn cosine_basics() {
        assert!((cosine_similarity(&[1.0, 0.0], &[2.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(cosine_similarity(&[1.0, 0.0], &[0.0, 3.0]).unwrap().abs() < 1e-15);
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroNorm(_))));
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn ties_keep_database_order() {
        let db = vec![rec("a", "x", &[1.0, 0.0]), rec("b", "y", &[2.0, 0.0]), rec("c", "x", &[0.0, 1.0])];
        let r = retrieve(&[1.0, 0.0], &db, 3).unwrap();
        let ids: Vec<&str> = r.iter().map(|x| x.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(retrieve(&[1.0, 0.0], &db, 1).unwrap().len(), 1);
    }

    #[test]
    fn average_precision_hand_values() {
        assert_eq!(average_precision(&[true, true]), 1.0);
        // hits at ranks 2 and 3: (1/2 + 2/3) / 2
        assert!((average_precision(&[false, true, true]) - 7.0 / 12.0).abs() < 1e-15);
        assert_eq!(average_precision(&[false, false]), 0.0);
    }

    #[test]
    fn clustered_records_score_perfectly() {
        let db = vec![
            rec("a1", "a", &[1.0, 0.1]),
            rec("a2", "a", &[1.0, 0.0]),
            rec("b1", "b", &[0.0, 1.0]),
            rec("b2", "b", &[0.1, 1.0]),
        ];
        assert_eq!(nearest_neighbor_accuracy(&db).unwrap(), 1.0);
        assert_eq!(mean_average_precision(&db).unwrap(), 1.0);
    }

    #[test]
    fn json_lines_round_trip() {
        let db = vec![rec("a", "x", &[0.1, -2.5e-7]), rec("b", "y", &[3.0, 4.0])];
        let mut buf = Vec::new();
        write_descriptors(&mut buf, &db).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 2);
        assert_eq!(read_descriptors(&buf[..]).unwrap(), db);
        assert!(matches!(read_descriptors(&b"{\"id\":1}\n"[..]), Err(Error::Parse { line: 1, .. })));
    }
}
