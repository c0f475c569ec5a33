//! Dataset files.
//!
//! CSV: a header line echoing the generating configuration as alternating
//! `key,value` fields (vectors joined with `;`), then one row per sample with
//! the `4K` normalized features in flattening order followed by the label.
//!
//! Binary: magic `STSL1`, a `u32` length-prefixed UTF-8 header identical to the
//! CSV header line, a `u64` sample count, then per sample `4K` little-endian
//! `f64` features and a `u32` label.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Dataset, DatasetMeta, FeatureMatrix, LabeledSample, ROWS};
use crate::config::SystemConfig;
use crate::error::{Error, Result};

const BINARY_MAGIC: &[u8; 5] = b"STSL1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Csv,
    Binary,
}

impl DatasetFormat {
    /// `.bin` selects the binary format, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => DatasetFormat::Binary,
            _ => DatasetFormat::Csv,
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

pub(crate) fn header_line(meta: &DatasetMeta) -> String {
    let c = &meta.config;
    let fields: Vec<(&str, String)> = vec![
        ("K", c.k.to_string()),
        ("seed", meta.seed.to_string()),
        ("m", meta.m.to_string()),
        ("phi", c.phi.to_string()),
        ("p_t", c.p_t.to_string()),
        ("n0", c.n0.to_string()),
        ("r_primary", c.r_primary.to_string()),
        ("r_secrecy", c.r_secrecy.to_string()),
        ("inv_lambda_tr", c.inv_lambda_tr.to_string()),
        ("inv_lambda_td", c.inv_lambda_td.to_string()),
        ("inv_lambda_te", c.inv_lambda_te.to_string()),
        ("inv_lambda_sd", join(&c.inv_lambda_sd)),
        ("inv_lambda_se", join(&c.inv_lambda_se)),
        ("inv_lambda_sr", join(&c.inv_lambda_sr)),
        ("delta", join(&c.delta)),
    ];
    fields
        .into_iter()
        .map(|(k, v)| format!("{k},{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_header(line: &str) -> Result<DatasetMeta> {
    let perr = |msg: String| Error::Parse { line: 1, msg };
    let fields: Vec<&str> = line.split(',').collect();
    if !fields.len().is_multiple_of(2) {
        return Err(perr("header must hold key,value pairs".into()));
    }
    let pairs: Vec<(&str, &str)> = fields.chunks(2).map(|p| (p[0], p[1])).collect();
    let get = |key: &str| -> Result<&str> {
        pairs
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| perr(format!("header lacks `{key}`")))
    };
    let num = |key: &str| -> Result<f64> {
        get(key)?
            .parse()
            .map_err(|_| perr(format!("bad number for `{key}`")))
    };
    let int = |key: &str| -> Result<u64> {
        get(key)?
            .parse()
            .map_err(|_| perr(format!("bad integer for `{key}`")))
    };
    let vec = |key: &str| -> Result<Vec<f64>> {
        get(key)?
            .split(';')
            .map(|x| x.parse().map_err(|_| perr(format!("bad vector for `{key}`"))))
            .collect()
    };
    let config = SystemConfig {
        k: int("K")? as usize,
        inv_lambda_sd: vec("inv_lambda_sd")?,
        inv_lambda_se: vec("inv_lambda_se")?,
        inv_lambda_sr: vec("inv_lambda_sr")?,
        inv_lambda_tr: num("inv_lambda_tr")?,
        inv_lambda_td: num("inv_lambda_td")?,
        inv_lambda_te: num("inv_lambda_te")?,
        p_t: num("p_t")?,
        n0: num("n0")?,
        phi: num("phi")?,
        r_primary: num("r_primary")?,
        r_secrecy: num("r_secrecy")?,
        delta: vec("delta")?,
    };
    config
        .validate()
        .map_err(|e| Error::Schema(format!("header configuration: {e}")))?;
    Ok(DatasetMeta {
        config,
        seed: int("seed")?,
        m: int("m")? as usize,
    })
}

fn check_label(label: usize, k: usize, line: usize) -> Result<()> {
    if !(1..=k + 1).contains(&label) {
        return Err(Error::Schema(format!(
            "line {line}: label {label} outside 1..={}",
            k + 1
        )));
    }
    Ok(())
}

fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", header_line(&ds.meta))?;
    let mut row = String::new();
    for s in &ds.samples {
        row.clear();
        for x in s.features.as_slice() {
            row.push_str(&x.to_string());
            row.push(',');
        }
        row.push_str(&s.label.to_string());
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.split_inclusive('\n').enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let meta = parse_header(header.trim_end_matches(['\n', '\r']))?;
    let k = meta.config.k;
    let width = ROWS * k + 1;
    let mut samples = Vec::with_capacity(meta.m);
    for (idx, raw) in lines {
        let line = idx + 1;
        if !raw.ends_with('\n') {
            return Err(Error::Parse {
                line,
                msg: "truncated row (missing line terminator)".into(),
            });
        }
        let raw = raw.trim_end_matches(['\n', '\r']);
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != width {
            return Err(Error::Schema(format!(
                "line {line}: expected {width} fields for K = {k}, found {}",
                fields.len()
            )));
        }
        let features = fields[..width - 1]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse {
                line,
                msg: format!("bad feature value: {e}"),
            })?;
        let label: usize = fields[width - 1].parse().map_err(|e| Error::Parse {
            line,
            msg: format!("bad label: {e}"),
        })?;
        check_label(label, k, line)?;
        samples.push(LabeledSample {
            features: FeatureMatrix::from_flat(k, features)?,
            label,
        });
    }
    if samples.len() != meta.m {
        return Err(Error::Parse {
            line: samples.len() + 2,
            msg: format!("header announces {} samples, found {}", meta.m, samples.len()),
        });
    }
    Ok(Dataset { meta, samples })
}

fn write_binary(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let header = header_line(&ds.meta);
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    w.write_all(&(ds.samples.len() as u64).to_le_bytes())?;
    for s in &ds.samples {
        for x in s.features.as_slice() {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&(s.label as u32).to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Parse {
                line: 0,
                msg: format!("truncated binary dataset at byte offset {}", self.pos),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn read_binary(bytes: &[u8]) -> Result<Dataset> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(BINARY_MAGIC.len())? != BINARY_MAGIC {
        return Err(Error::Parse {
            line: 0,
            msg: "bad magic".into(),
        });
    }
    let hlen = cur.u32()? as usize;
    let header = std::str::from_utf8(cur.take(hlen)?).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("header is not UTF-8: {e}"),
    })?;
    let meta = parse_header(header)?;
    let count = cur.u64()? as usize;
    if count != meta.m {
        return Err(Error::Schema(format!(
            "header announces {} samples, body holds {count}",
            meta.m
        )));
    }
    let k = meta.config.k;
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let features = (0..ROWS * k).map(|_| cur.f64()).collect::<Result<Vec<_>>>()?;
        let label = cur.u32()? as usize;
        check_label(label, k, i + 1)?;
        samples.push(LabeledSample {
            features: FeatureMatrix::from_flat(k, features)?,
            label,
        });
    }
    if cur.pos != bytes.len() {
        return Err(Error::Parse {
            line: 0,
            msg: format!("trailing bytes after offset {}", cur.pos),
        });
    }
    Ok(Dataset { meta, samples })
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    match DatasetFormat::from_path(path) {
        DatasetFormat::Csv => write_csv(ds, path),
        DatasetFormat::Binary => write_binary(ds, path),
    }
}

/// Loads either format; the binary one is recognised by its magic bytes.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        return read_binary(&bytes);
    }
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("file is not UTF-8: {e}"),
    })?;
    read_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_dataset;

    fn sample_ds() -> Dataset {
        generate_dataset(&SystemConfig::iid(4, 0.5, 8.0), 300, 5).unwrap()
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = sample_ds();
        for name in ["d.csv", "d.bin"] {
            let path = dir.path().join(name);
            save_dataset(&ds, &path).unwrap();
            assert_eq!(load_dataset(&path).unwrap(), ds);
        }
    }

    #[test]
    fn inid_header_round_trips() {
        let ds = generate_dataset(&SystemConfig::inid(12, 8.0).unwrap(), 10, 1).unwrap();
        let meta = parse_header(&header_line(&ds.meta)).unwrap();
        assert_eq!(meta, ds.meta);
    }

    #[test]
    fn truncated_csv_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        save_dataset(&sample_ds(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        // Cut in the middle of a row.
        fs::write(&path, &text[..text.len() - 7]).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Parse { .. })));
        // Cut at a row boundary: fewer rows than announced.
        let cut = text[..text.len() - 1].rfind('\n').unwrap() + 1;
        fs::write(&path, &text[..cut]).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn truncated_binary_is_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.bin");
        save_dataset(&sample_ds(), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_dataset(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn wrong_row_width_is_schema_error() {
        let ds = generate_dataset(&SystemConfig::iid(4, 0.5, 8.0), 1, 5).unwrap();
        let row = vec!["0.1"; 20].join(",");
        let text = format!("{}\n{row}\n", header_line(&ds.meta));
        let err = read_csv(&text).unwrap_err();
        assert!(matches!(&err, Error::Schema(msg) if msg.contains("expected 17")), "{err}");
    }

    #[test]
    fn garbage_header_is_parse_error() {
        assert!(matches!(read_csv("hello\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_csv(""), Err(Error::Parse { .. })));
    }
}
