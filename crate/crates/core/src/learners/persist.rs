//! Binary model files.
//!
//! Layout, little endian: magic `STSM1`, one variant byte, a `u32`-length
//! prefixed UTF-8 header of `key=value` lines (transmitter count, shapes and
//! the training configuration), a `u64` value count and that many `f64`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{GaussianNb, Knn, Lstm, Mlp, Model, ModelKind, Svm, TrainConfig, TrainedModel};
use crate::error::{Error, Result};

const MAGIC: &[u8; 5] = b"STSM1";

type Header = BTreeMap<String, String>;

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn bools(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn train_pairs(tc: &TrainConfig, h: &mut Header) {
    let mut put = |k: &str, v: String| {
        h.insert(format!("train.{k}"), v);
    };
    put("learning_rate", format!("{:?}", tc.learning_rate));
    put("batch_size", tc.batch_size.to_string());
    put("epochs", tc.epochs.to_string());
    put("beta1", format!("{:?}", tc.beta1));
    put("beta2", format!("{:?}", tc.beta2));
    put("epsilon", format!("{:?}", tc.epsilon));
    put("seed", tc.seed.to_string());
    put("knn_k", tc.knn_k.to_string());
    put("svm_gamma", tc.svm_gamma.map_or(String::new(), |g| format!("{g:?}")));
    put("svm_c", format!("{:?}", tc.svm_c));
    put("svm_subsample", tc.svm_subsample.to_string());
    put("svm_tol", format!("{:?}", tc.svm_tol));
    put("svm_max_passes", tc.svm_max_passes.to_string());
    put("mlp_hidden", join(&tc.mlp_hidden));
    put("lstm_hidden", tc.lstm_hidden.to_string());
    put("track_full_loss", tc.track_full_loss.to_string());
}

struct Fields<'a>(&'a Header);

impl Fields<'_> {
    fn raw(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Schema(format!("model header lacks `{key}`")))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| Error::Schema(format!("model header `{key}` has bad value `{raw}`")))
    }

    fn list(&self, key: &str) -> Result<Vec<usize>> {
        let raw = self.raw(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| s.parse().map_err(|_| Error::Schema(format!("model header `{key}` has bad value `{raw}`"))))
            .collect()
    }

    fn bools(&self, key: &str) -> Result<Vec<bool>> {
        self.raw(key)?
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Schema(format!("model header `{key}` is not a bit string"))),
            })
            .collect()
    }

    fn train(&self) -> Result<TrainConfig> {
        let hidden = self.list("train.mlp_hidden")?;
        let gamma = self.raw("train.svm_gamma")?;
        Ok(TrainConfig {
            learning_rate: self.get("train.learning_rate")?,
            batch_size: self.get("train.batch_size")?,
            epochs: self.get("train.epochs")?,
            beta1: self.get("train.beta1")?,
            beta2: self.get("train.beta2")?,
            epsilon: self.get("train.epsilon")?,
            seed: self.get("train.seed")?,
            knn_k: self.get("train.knn_k")?,
            svm_gamma: if gamma.is_empty() { None } else { Some(self.get("train.svm_gamma")?) },
            svm_c: self.get("train.svm_c")?,
            svm_subsample: self.get("train.svm_subsample")?,
            svm_tol: self.get("train.svm_tol")?,
            svm_max_passes: self.get("train.svm_max_passes")?,
            mlp_hidden: hidden
                .try_into()
                .map_err(|_| Error::Schema("train.mlp_hidden needs two sizes".into()))?,
            lstm_hidden: self.get("train.lstm_hidden")?,
            track_full_loss: self.get("train.track_full_loss")?,
        })
    }
}

/// Header entries and flat payload of a model.
fn encode(m: &TrainedModel) -> (Header, Vec<f64>) {
    let mut h = Header::new();
    h.insert("k".into(), m.k.to_string());
    train_pairs(&m.config, &mut h);
    let mut put = |k: &str, v: String| {
        h.insert(k.to_string(), v);
    };
    let mut flat = Vec::new();
    match &m.model {
        Model::Knn(k) => {
            put("shape", join(&[k.x.nrows(), k.x.ncols()]));
            put("k_neighbors", k.k_neighbors.to_string());
            flat.extend(k.x.iter());
            flat.extend(k.y.iter().map(|&c| c as f64));
        }
        Model::Gnb(g) => {
            put("shape", join(&[g.means.nrows(), g.means.ncols()]));
            put("present", bools(&g.log_priors.iter().map(Option::is_some).collect::<Vec<_>>()));
            flat.extend(g.means.iter());
            flat.extend(g.vars.iter());
            flat.extend(g.log_priors.iter().map(|p| p.unwrap_or(0.0)));
        }
        Model::Svm(s) => {
            put("shape", join(&[s.coef.nrows(), s.support.nrows(), s.support.ncols()]));
            put("gamma", format!("{:?}", s.gamma));
            put("present", bools(&s.present));
            put("converged", bools(&s.converged));
            flat.extend(s.support.iter());
            flat.extend(s.coef.iter());
            flat.extend(s.bias.iter());
        }
        Model::Mlp(p) => {
            put("shape", join(&[p.n_in, p.hidden[0], p.hidden[1], p.n_out]));
            flat.extend_from_slice(&p.params);
        }
        Model::Lstm(l) => {
            put("shape", join(&[l.steps, l.hidden, l.n_out]));
            flat.extend_from_slice(&l.params);
        }
    }
    (h, flat)
}

fn decode(kind: ModelKind, h: &Header, flat: Vec<f64>) -> Result<TrainedModel> {
    let f = Fields(h);
    let k: usize = f.get("k")?;
    let config = f.train()?;
    let shape = f.list("shape")?;
    let got = flat.len();
    let bad_len = |want: usize| Error::Schema(format!("model payload has {got} values, expected {want}"));
    let dims = |n: usize| -> Result<()> {
        if shape.len() != n {
            return Err(Error::Schema(format!("model shape `{}` needs {n} entries", join(&shape))));
        }
        Ok(())
    };
    let n_classes = k + 1;
    let model = match kind {
        ModelKind::Knn => {
            dims(2)?;
            let (rows, cols) = (shape[0], shape[1]);
            if flat.len() != rows * cols + rows {
                return Err(bad_len(rows * cols + rows));
            }
            let y: Vec<usize> = flat[rows * cols..].iter().map(|&v| v as usize).collect();
            if y.iter().any(|&c| c >= n_classes) {
                return Err(Error::Schema("k-NN label out of range".into()));
            }
            let x = Array2::from_shape_vec((rows, cols), flat[..rows * cols].to_vec()).unwrap();
            Model::Knn(Knn {
                k_neighbors: f.get("k_neighbors")?,
                n_classes,
                x,
                y,
            })
        }
        ModelKind::Gnb => {
            dims(2)?;
            let (c, d) = (shape[0], shape[1]);
            let present = f.bools("present")?;
            if flat.len() != 2 * c * d + c || present.len() != c {
                return Err(bad_len(2 * c * d + c));
            }
            let means = Array2::from_shape_vec((c, d), flat[..c * d].to_vec()).unwrap();
            let vars = Array2::from_shape_vec((c, d), flat[c * d..2 * c * d].to_vec()).unwrap();
            let log_priors = flat[2 * c * d..]
                .iter()
                .zip(&present)
                .map(|(&p, &on)| on.then_some(p))
                .collect();
            Model::Gnb(GaussianNb { means, vars, log_priors })
        }
        ModelKind::Svm => {
            dims(3)?;
            let (c, n, d) = (shape[0], shape[1], shape[2]);
            let want = n * d + c * n + c;
            if flat.len() != want {
                return Err(bad_len(want));
            }
            let support = Array2::from_shape_vec((n, d), flat[..n * d].to_vec()).unwrap();
            let coef = Array2::from_shape_vec((c, n), flat[n * d..n * d + c * n].to_vec()).unwrap();
            Model::Svm(Svm {
                gamma: f.get("gamma")?,
                support,
                coef,
                bias: flat[n * d + c * n..].to_vec(),
                present: f.bools("present")?,
                converged: f.bools("converged")?,
            })
        }
        ModelKind::Mlp => {
            dims(4)?;
            let want = Mlp::zeros(shape[0], [shape[1], shape[2]], shape[3]).params.len();
            let m = Mlp::from_params(shape[0], [shape[1], shape[2]], shape[3], flat).ok_or_else(|| bad_len(want))?;
            Model::Mlp(m)
        }
        ModelKind::Lstm => {
            dims(3)?;
            let want = Lstm::zeros(shape[0], shape[1], shape[2]).params.len();
            Model::Lstm(Lstm::from_params(shape[0], shape[1], shape[2], flat).ok_or_else(|| bad_len(want))?)
        }
    };
    Ok(TrainedModel { k, config, model })
}

pub fn write_model<W: Write>(m: &TrainedModel, mut w: W) -> Result<()> {
    let (header, flat) = encode(m);
    let text: String = header.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    w.write_all(MAGIC)?;
    w.write_all(&[m.kind().tag()])?;
    w.write_all(&(text.len() as u32).to_le_bytes())?;
    w.write_all(text.as_bytes())?;
    w.write_all(&(flat.len() as u64).to_le_bytes())?;
    for v in flat {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Parse {
            line: 0,
            msg: format!("model file truncated in {what}"),
        },
        _ => Error::Io(e),
    })
}

pub fn read_model<R: Read>(mut r: R) -> Result<TrainedModel> {
    let mut magic = [0u8; 5];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Schema("not a model file (bad magic)".into()));
    }
    let mut tag = [0u8; 1];
    read_exact(&mut r, &mut tag, "variant tag")?;
    let kind = ModelKind::from_tag(tag[0]).ok_or_else(|| Error::Schema(format!("unknown model variant {}", tag[0])))?;
    let mut len = [0u8; 4];
    read_exact(&mut r, &mut len, "header length")?;
    let mut text = vec![0u8; u32::from_le_bytes(len) as usize];
    read_exact(&mut r, &mut text, "header")?;
    let text = String::from_utf8(text).map_err(|_| Error::Schema("model header is not UTF-8".into()))?;
    let mut header = Header::new();
    for line in text.lines() {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Schema(format!("bad model header line `{line}`")))?;
        header.insert(k.to_string(), v.to_string());
    }
    let mut count = [0u8; 8];
    read_exact(&mut r, &mut count, "value count")?;
    let count = u64::from_le_bytes(count) as usize;
    let mut flat = Vec::with_capacity(count.min(1 << 28));
    let mut buf = [0u8; 8];
    for _ in 0..count {
        read_exact(&mut r, &mut buf, "parameters")?;
        flat.push(f64::from_le_bytes(buf));
    }
    if r.read(&mut buf)? != 0 {
        return Err(Error::Schema("trailing bytes after model parameters".into()));
    }
    decode(kind, &header, flat)
}

pub fn save_model(m: &TrainedModel, path: &Path) -> Result<()> {
    write_model(m, BufWriter::new(File::create(path)?))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    read_model(BufReader::new(File::open(path)?))
}
