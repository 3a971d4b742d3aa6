use super::{AugmentError, Method};
use crate::dataio::LabeledDataset;

pub const SIDECAR_HEADER: [&str; 7] = ["index", "method", "round", "source_row", "label", "confidence", "seed"];

/// Where one appended row came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub index: usize,
    pub method: Method,
    /// Selective loop round that accepted the row.
    pub round: Option<usize>,
    /// Index into the real rows the augmenter was given (Gau, RDA).
    pub source_row: Option<usize>,
    pub label: u32,
    /// Confidence of the accepting classifier (selective).
    pub confidence: Option<f64>,
    pub seed: u64,
}

/// Synthetic rows plus one provenance record per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Augmented {
    pub rows: LabeledDataset,
    pub provenance: Vec<Provenance>,
}

impl Augmented {
    pub fn len(&self) -> usize {
        self.rows.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn parse_opt(s: &str) -> Option<&str> {
    (!s.is_empty()).then_some(s)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sidecar(w: impl std::io::Write, records: &[Provenance]) -> Result<(), AugmentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SIDECAR_HEADER)?;
    for p in records {
        out.write_record([
            p.index.to_string(),
            p.method.to_string(),
            opt(p.round),
            opt(p.source_row),
            p.label.to_string(),
            opt(p.confidence),
            p.seed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sidecar(r: impl std::io::Read) -> Result<Vec<Provenance>, AugmentError> {
    let mut rd = csv::Reader::from_reader(r);
    if rd.headers()?.iter().ne(SIDECAR_HEADER) {
        return Err(AugmentError::Config(format!("sidecar header must be {}", SIDECAR_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| AugmentError::Config(format!("sidecar row {}: bad {what}", line + 1));
        out.push(Provenance {
            index: rec[0].parse().map_err(|_| bad("index"))?,
            method: rec[1].parse().map_err(|_| bad("method"))?,
            round: parse_opt(&rec[2]).map(|s| s.parse()).transpose().map_err(|_| bad("round"))?,
            source_row: parse_opt(&rec[3]).map(|s| s.parse()).transpose().map_err(|_| bad("source_row"))?,
            label: rec[4].parse().map_err(|_| bad("label"))?,
            confidence: parse_opt(&rec[5]).map(|s| s.parse()).transpose().map_err(|_| bad("confidence"))?,
            seed: rec[6].parse().map_err(|_| bad("seed"))?,
        });
    }
    Ok(out)
}
