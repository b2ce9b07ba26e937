use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::classifier::LabeledDataset;
use crate::error::{Error, Result};

/// A feature file: the dataset, the `id` column and non-fatal findings.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedFeatures {
    pub dataset: LabeledDataset,
    pub ids: Vec<String>,
    pub warnings: Vec<String>,
}

/// Reads `id,label,f0,...,f{M-1}`. The class count is the largest label
/// plus one; classes without samples are reported in `warnings`.
pub fn load_features_csv(path: impl AsRef<Path>) -> Result<LoadedFeatures> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_features_csv(file, path)
}

/// As [`load_features_csv`], reading from any source; `path` only labels
/// diagnostics.
pub fn parse_features_csv(reader: impl Read, path: &Path) -> Result<LoadedFeatures> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => return Err(parse_err(1, "missing header".into())),
        Some(r) => r.map_err(|e| parse_err(e.position().map_or(1, |p| p.line()), e.to_string()))?,
    };
    let header_line = header.position().map_or(1, |p| p.line());
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
        return Err(parse_err(
            header_line,
            "missing header: expected id,label,f0,...".into(),
        ));
    }
    for (k, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{k}") {
            return Err(parse_err(
                header_line,
                format!("column {} should be f{k}, found '{name}'", k + 2),
            ));
        }
    }
    let width = header.len();

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for record in records {
        let record =
            record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(parse_err(
                line,
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        let label: usize = record[1].trim().parse().map_err(|_| {
            parse_err(
                line,
                format!("label '{}' is not a non-negative integer", &record[1]),
            )
        })?;
        let mut row = Vec::with_capacity(width - 2);
        for (k, cell) in record.iter().skip(2).enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("f{k}: '{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("f{k}: non-finite value '{cell}'")));
            }
            row.push(v);
        }
        ids.push(record[0].to_string());
        labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(header_line, "no samples".into()));
    }

    let num_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut counts = vec![0usize; num_classes];
    labels.iter().for_each(|&l| counts[l] += 1);
    let warnings = counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c == 0)
        .map(|(k, _)| format!("class {k} has no samples"))
        .collect();
    let dataset = LabeledDataset::from_rows(rows, labels, num_classes)?;
    Ok(LoadedFeatures {
        dataset,
        ids,
        warnings,
    })
}

/// Writes `data` in the feature format, with row indices as ids.
pub fn save_features_csv(data: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = String::from("id,label");
    for k in 0..data.dim() {
        out.push_str(&format!(",f{k}"));
    }
    out.push('\n');
    for (i, (x, label)) in data.features().iter().zip(data.labels()).enumerate() {
        out.push_str(&format!("{i},{label}"));
        for v in x.as_slice() {
            out.push_str(&format!(",{v:?}"));
        }
        out.push('\n');
    }
    let mut file = File::create(path).map_err(io_err)?;
    file.write_all(out.as_bytes()).map_err(io_err)
}
