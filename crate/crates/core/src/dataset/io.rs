// SPDX-License-Identifier: MIT OR Apache-2.0

//! On-disk layout: `manifest.json`, `features.csv`, `labels.csv`, and an
//! optional directory of binary PGM patch pairs (`{id}_a.pgm`, `{id}_b.pgm`).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, Label, PixelGrid, Sample, PATCH_LEN, PATCH_SIDE};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub n: usize,
    pub dim: usize,
    pub features_file: String,
    pub labels_file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixels_dir: Option<String>,
}

/// Writes the dataset into `dir` (created if missing).
pub fn save(ds: &Dataset, dir: &Path) -> Result<()> {
    ds.validate()?;
    fs::create_dir_all(dir)?;
    let pixels_dir = ds.has_pixels().then(|| "pixels".to_string());
    let manifest = Manifest {
        name: ds.name.clone(),
        n: ds.len(),
        dim: ds.dim,
        features_file: "features.csv".into(),
        labels_file: "labels.csv".into(),
        pixels_dir: pixels_dir.clone(),
    };
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;

    let mut w = BufWriter::new(fs::File::create(dir.join(&manifest.features_file))?);
    write!(w, "id")?;
    for j in 0..ds.dim {
        write!(w, ",f{j}")?;
    }
    writeln!(w)?;
    for s in &ds.samples {
        write!(w, "{}", s.id)?;
        for v in &s.features {
            // 17 significant digits round-trip every f64 exactly.
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;

    let mut w = BufWriter::new(fs::File::create(dir.join(&manifest.labels_file))?);
    writeln!(w, "id,label")?;
    for s in &ds.samples {
        writeln!(w, "{},{}", s.id, s.label.as_i64())?;
    }
    w.flush()?;

    if let Some(pd) = pixels_dir {
        let pd = dir.join(pd);
        fs::create_dir_all(&pd)?;
        for s in &ds.samples {
            if let (Some(a), Some(b)) = (&s.pixels_before, &s.pixels_after) {
                write_pgm(&pd.join(format!("{}_a.pgm", s.id)), a)?;
                write_pgm(&pd.join(format!("{}_b.pgm", s.id)), b)?;
            }
        }
    }
    Ok(())
}

/// Loads a dataset from a directory containing `manifest.json`, or from the
/// manifest path itself.
pub fn load(path: &Path) -> Result<Dataset> {
    let (dir, manifest_path) = if path.is_dir() {
        (path.to_path_buf(), path.join(MANIFEST_FILE))
    } else {
        (
            path.parent()
                .map_or_else(|| PathBuf::from("."), Path::to_path_buf),
            path.to_path_buf(),
        )
    };
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", manifest_path.display())))?;

    let features = read_features(&dir.join(&manifest.features_file), &manifest)?;
    let labels = read_labels(&dir.join(&manifest.labels_file), manifest.n)?;

    let mut samples = Vec::with_capacity(manifest.n);
    for (id, (features, label)) in features.into_iter().zip(labels).enumerate() {
        let (pixels_before, pixels_after) = match &manifest.pixels_dir {
            Some(pd) => {
                let pd = dir.join(pd);
                (
                    Some(read_pgm(&pd.join(format!("{id}_a.pgm")))?),
                    Some(read_pgm(&pd.join(format!("{id}_b.pgm")))?),
                )
            }
            None => (None, None),
        };
        samples.push(Sample {
            id,
            features,
            label,
            pixels_before,
            pixels_after,
        });
    }
    let ds = Dataset {
        name: manifest.name,
        dim: manifest.dim,
        samples,
    };
    ds.validate()?;
    Ok(ds)
}

fn parse_id(field: &str, line_no: usize, n: usize) -> Result<usize> {
    let id: usize = field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line_no}: bad id {field:?}")))?;
    if id >= n {
        return Err(Error::Format(format!(
            "line {line_no}: id {id} out of range for n={n}"
        )));
    }
    Ok(id)
}

fn read_features(path: &Path, manifest: &Manifest) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_start().starts_with("id") => {}
        _ => {
            return Err(Error::Format(format!(
                "{}: missing `id,f0,...` header",
                path.display()
            )))
        }
    }
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; manifest.n];
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let mut fields = line.split(',');
        let id = parse_id(fields.next().unwrap_or(""), line_no, manifest.n)?;
        let values = fields
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("row id {id}: bad feature value {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != manifest.dim {
            return Err(Error::Format(format!(
                "row id {id}: manifest dim={} but row has {} values",
                manifest.dim,
                values.len()
            )));
        }
        if rows[id].replace(values).is_some() {
            return Err(Error::Format(format!("duplicate feature row for id {id}")));
        }
    }
    rows.into_iter()
        .enumerate()
        .map(|(id, r)| r.ok_or_else(|| Error::Format(format!("missing feature row for id {id}"))))
        .collect()
}

fn read_labels(path: &Path, n: usize) -> Result<Vec<Label>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "id,label" => {}
        _ => {
            return Err(Error::Format(format!(
                "{}: missing `id,label` header",
                path.display()
            )))
        }
    }
    let mut labels: Vec<Option<Label>> = vec![None; n];
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let (id_field, label_field) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("line {line_no}: expected `id,label`")))?;
        let id = parse_id(id_field, line_no, n)?;
        let raw: i64 = label_field
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("row id {id}: bad label {label_field:?}")))?;
        let label = Label::try_from(raw).map_err(|_| {
            Error::Format(format!("row id {id}: label must be -1 or +1 (got {raw})"))
        })?;
        if labels[id].replace(label).is_some() {
            return Err(Error::Format(format!("duplicate label row for id {id}")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(id, l)| l.ok_or_else(|| Error::Format(format!("missing label for id {id}"))))
        .collect()
}

fn write_pgm(path: &Path, grid: &PixelGrid) -> Result<()> {
    let mut bytes = format!("P5\n{PATCH_SIDE} {PATCH_SIDE}\n255\n").into_bytes();
    bytes.extend_from_slice(grid.as_slice());
    fs::write(path, bytes)?;
    Ok(())
}

/// Parses a binary PGM, accepting arbitrary whitespace and `#` comments in
/// the header. Only 30x30 with maxval 255 is accepted.
fn read_pgm(path: &Path) -> Result<PixelGrid> {
    let bytes = fs::read(path)?;
    let bad = |msg: &str| Error::Format(format!("{}: {msg}", path.display()));
    let mut pos = 0usize;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PGM header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates header from raster
    pos += 1;
    if tokens[0] != "P5" {
        return Err(bad("not a binary PGM (P5)"));
    }
    let dims: Vec<usize> = tokens[1..]
        .iter()
        .map(|t| t.parse().map_err(|_| bad("bad PGM header number")))
        .collect::<Result<_>>()?;
    if dims != [PATCH_SIDE, PATCH_SIDE, 255] {
        return Err(bad("expected 30x30 PGM with maxval 255"));
    }
    let raster = bytes
        .get(pos..pos + PATCH_LEN)
        .ok_or_else(|| bad("truncated raster"))?;
    PixelGrid::new(raster.to_vec())
}
