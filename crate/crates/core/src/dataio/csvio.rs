use std::io::{Read, Write};

use super::{DataError, LabeledDataset};
use crate::featx::{FeatureKind, FeatureMatrix};

fn csv_err(e: csv::Error) -> DataError {
    DataError::Csv(e.to_string())
}

/// Reads a headed CSV; a column named `label` (if any) holds class ids and
/// every other column is a feature, in channel-major order.
pub fn read_csv<R: Read>(reader: R, n_bands: usize, kind: FeatureKind) -> Result<LabeledDataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let label_col = headers.iter().position(|h| h == "label");
    let n_features = headers.len() - usize::from(label_col.is_some());
    if n_bands == 0 || n_features == 0 || n_features % n_bands != 0 {
        return Err(DataError::Csv(format!("{n_features} feature columns do not split into {n_bands} bands")));
    }
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        for (col, field) in rec.iter().enumerate() {
            if Some(col) == label_col {
                let l: u32 = field.parse().map_err(|_| DataError::Csv(format!("row {}: label `{field}` is not a class id", row + 1)))?;
                labels.push(l);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| DataError::Csv(format!("row {}, column {}: `{field}` is not a number", row + 1, col + 1)))?;
                values.push(v);
            }
        }
    }
    let features = FeatureMatrix::new(values, n_features / n_bands, n_bands, kind)?;
    match label_col {
        None => Ok(LabeledDataset::unlabeled(features)),
        Some(_) => {
            let arity = labels.iter().max().map_or(0, |m| m + 1);
            LabeledDataset::new(features, labels, arity)
        }
    }
}

/// Writes `ch{c}_b{b}` feature columns followed by `label` when labeled.
pub fn write_csv<W: Write>(writer: W, data: &LabeledDataset) -> Result<(), DataError> {
    let m = data.features();
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..m.dims())
        .map(|d| {
            let (c, b) = m.channel_band(d);
            format!("ch{c}_b{b}")
        })
        .collect();
    if data.is_labeled() {
        header.push("label".into());
    }
    wtr.write_record(&header).map_err(csv_err)?;
    for r in 0..data.rows() {
        let mut rec: Vec<String> = data.row(r).iter().map(|v| format!("{v:e}")).collect();
        if let Some(l) = data.labels() {
            rec.push(l[r].to_string());
        }
        wtr.write_record(&rec).map_err(csv_err)?;
    }
    wtr.flush()?;
    Ok(())
}
