//! CSV rows plus a `<file>.meta.json` sidecar holding layout, spec and seed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GenerationSpec, LabeledDataset, LabeledRow};
use crate::error::{Error, Result};
use crate::features::{feature_names, FeatureLayout};

const FORMAT: &str = "wdist-dataset";
const FORMAT_VERSION: u32 = 1;
const TRAILING: [&str; 4] = ["label", "bin", "provenance", "split"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub format: String,
    pub format_version: u32,
    pub layout: FeatureLayout,
    pub layout_hash: String,
    pub spec: Option<GenerationSpec>,
    pub seed: Option<u64>,
    pub n_rows: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// 17 significant digits; parses back to the same f64.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_dataset(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let names = feature_names(&ds.layout);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(names.iter().map(String::as_str).chain(TRAILING))?;
    let mut record = Vec::with_capacity(names.len() + TRAILING.len());
    for row in &ds.rows {
        if row.features.len() != ds.layout.total_length {
            return Err(Error::compat(format!(
                "row has {} features, layout has {}",
                row.features.len(),
                ds.layout.total_length
            )));
        }
        record.clear();
        record.extend(row.features.iter().map(|&x| fmt_f64(x)));
        record.push(fmt_f64(row.label));
        record.push(row.bin.to_string());
        record.push(row.provenance.as_str().to_string());
        record.push(row.split.map(|s| s.as_str()).unwrap_or("").to_string());
        w.write_record(&record)?;
    }
    w.flush()?;

    let meta = DatasetMeta {
        format: FORMAT.to_string(),
        format_version: FORMAT_VERSION,
        layout_hash: ds.layout.hash(),
        layout: ds.layout.clone(),
        spec: ds.spec.clone(),
        seed: ds.spec.as_ref().map(|s| s.seed),
        n_rows: ds.rows.len(),
    };
    let mut f = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn read_meta(path: &Path) -> Result<DatasetMeta> {
    let meta_path = sidecar_path(path);
    let text = std::fs::read_to_string(&meta_path)?;
    let meta: DatasetMeta = serde_json::from_str(&text)?;
    if meta.format != FORMAT || meta.format_version != FORMAT_VERSION {
        return Err(Error::compat(format!(
            "{} is {} v{}, expected {FORMAT} v{FORMAT_VERSION}",
            meta_path.display(),
            meta.format,
            meta.format_version
        )));
    }
    meta.layout.validate()?;
    if meta.layout.hash() != meta.layout_hash {
        return Err(Error::compat(
            "sidecar layout hash does not match its layout",
        ));
    }
    Ok(meta)
}

pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let meta = read_meta(path)?;
    let width = meta.layout.total_length;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() != width + TRAILING.len() {
        return Err(Error::compat(format!(
            "header has {} columns but the layout needs {} features plus {}",
            header.len(),
            width,
            TRAILING.len()
        )));
    }
    let names = feature_names(&meta.layout);
    if header
        .iter()
        .zip(names.iter().map(String::as_str).chain(TRAILING))
        .any(|(a, b)| a != b)
    {
        return Err(Error::compat(
            "header names do not match the sidecar layout",
        ));
    }

    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line());
        if rec.len() != header.len() {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            let s = &rec[i];
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(line, format!("column {i}: '{s}' is not a number")))
        };
        let features = (0..width).map(num).collect::<Result<Vec<_>>>()?;
        let label = num(width)?;
        let bin = rec[width + 1]
            .parse::<usize>()
            .map_err(|_| Error::parse(line, format!("bad bin '{}'", &rec[width + 1])))?;
        let provenance = rec[width + 2]
            .parse()
            .map_err(|e: Error| Error::parse(line, e.to_string()))?;
        let split = match &rec[width + 3] {
            "" => None,
            s => Some(
                s.parse()
                    .map_err(|e: Error| Error::parse(line, e.to_string()))?,
            ),
        };
        rows.push(LabeledRow {
            features,
            label,
            bin,
            provenance,
            split,
        });
    }
    Ok(LabeledDataset {
        layout: meta.layout,
        spec: meta.spec,
        rows,
    })
}
