//! `DIDC` checkpoint container.
//!
//! Little-endian throughout:
//!
//! ```text
//! "DIDC"  u32 version
//! config: u32 input_h, input_w, input_c, conv1_filters, conv2_filters,
//!         kernel, dense_units, n_classes; f32 drop1, drop2, drop3
//! u64 adam step   u32 n_blocks
//! n_blocks x (u32 len, len x f32)   parameters
//! n_blocks x (u32 len, len x f32)   first moments
//! n_blocks x (u32 len, len x f32)   second moments
//! ```
//!
//! Dropout rates are narrowed to f32 and read back as the nearest f64.

use std::path::Path;

use super::config::CnnConfig;
use super::model::{param_shapes, AdamState, CnnModel};
use super::CnnError;

pub const MAGIC: &[u8; 4] = b"DIDC";
pub const VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_blocks(out: &mut Vec<u8>, blocks: &[Vec<f32>]) {
    for b in blocks {
        put_u32(out, b.len());
        b.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    }
}

pub fn encode(model: &CnnModel<f32>) -> Vec<u8> {
    let c = &model.config;
    let mut out = Vec::with_capacity(64 + 12 * model.n_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [c.input_h, c.input_w, c.input_c, c.conv1_filters, c.conv2_filters, c.kernel, c.dense_units, c.n_classes] {
        put_u32(&mut out, v);
    }
    for r in [c.drop1, c.drop2, c.drop3] {
        out.extend_from_slice(&(r as f32).to_le_bytes());
    }
    out.extend_from_slice(&model.adam.step.to_le_bytes());
    put_u32(&mut out, model.params.len());
    put_blocks(&mut out, &model.params);
    put_blocks(&mut out, &model.adam.m);
    put_blocks(&mut out, &model.adam.v);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

fn err(msg: impl Into<String>) -> CnnError {
    CnnError::Checkpoint(msg.into())
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CnnError> {
        if self.bytes.len() < n {
            return Err(err("truncated checkpoint"));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<usize, CnnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f32(&mut self) -> Result<f32, CnnError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn blocks(&mut self, sizes: &[usize]) -> Result<Vec<Vec<f32>>, CnnError> {
        sizes
            .iter()
            .enumerate()
            .map(|(i, &want)| {
                let len = self.u32()?;
                if len != want {
                    return Err(err(format!("block {i} holds {len} values, config needs {want}")));
                }
                (0..len).map(|_| self.f32()).collect()
            })
            .collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<CnnModel<f32>, CnnError> {
    let mut r = Reader { bytes };
    if r.take(4)? != MAGIC {
        return Err(err("not a DIDC checkpoint"));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(err(format!("unsupported checkpoint version {version}")));
    }
    let mut dims = [0usize; 8];
    for d in &mut dims {
        *d = r.u32()?;
    }
    let [input_h, input_w, input_c, conv1_filters, conv2_filters, kernel, dense_units, n_classes] = dims;
    let mut rates = [0.0f64; 3];
    for rate in &mut rates {
        *rate = f64::from(r.f32()?);
    }
    let config = CnnConfig {
        input_h,
        input_w,
        input_c,
        conv1_filters,
        conv2_filters,
        kernel,
        dense_units,
        n_classes,
        drop1: rates[0],
        drop2: rates[1],
        drop3: rates[2],
    };
    let sizes: Vec<usize> = param_shapes(&config)?.into_iter().map(|(_, s)| s.iter().product()).collect();
    let step = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
    let n_blocks = r.u32()?;
    if n_blocks != sizes.len() {
        return Err(err(format!("expected {} parameter blocks, found {n_blocks}", sizes.len())));
    }
    let params = r.blocks(&sizes)?;
    let m = r.blocks(&sizes)?;
    let v = r.blocks(&sizes)?;
    if !r.bytes.is_empty() {
        return Err(err(format!("{} trailing bytes", r.bytes.len())));
    }
    Ok(CnnModel {
        config,
        params,
        adam: AdamState { step, m, v },
    })
}

pub fn save(path: &Path, model: &CnnModel<f32>) -> Result<(), CnnError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| err(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, encode(model)).map_err(|e| err(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<CnnModel<f32>, CnnError> {
    decode(&std::fs::read(path).map_err(|e| err(format!("{}: {e}", path.display())))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnn::train::{train, TrainConfig};

    #[test]
    fn round_trip_after_training() {
        let config = CnnConfig::tiny();
        let mut m = CnnModel::<f32>::new(config, 4).unwrap();
        let x: Vec<f32> = (0..config.input_len()).map(|i| (i as f32 * 0.2).sin()).collect();
        let tc = TrainConfig {
            epochs: 2,
            ..TrainConfig::default()
        };
        train(&mut m, &[(&x, 1), (&x, 2)], &tc).unwrap();
        let bytes = encode(&m);
        assert_eq!(&bytes[..4], b"DIDC");
        let back = decode(&bytes).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn file_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/model.didc");
        let m = CnnModel::<f32>::new(CnnConfig::tiny(), 1).unwrap();
        save(&path, &m).unwrap();
        assert_eq!(load(&path).unwrap(), m);

        let bytes = encode(&m);
        assert!(decode(&bytes[..bytes.len() - 2]).is_err());
        let mut wrong = bytes.clone();
        wrong[8] = 99; // input_h no longer matches the stored block sizes
        assert!(decode(&wrong).is_err());
        assert!(decode(b"DIDM\x01\0\0\0").is_err());
    }

    #[test]
    fn paper_model_is_about_four_megabytes_of_parameters() {
        let m = CnnModel::<f32>::zeros(CnnConfig::paper(14)).unwrap();
        assert_eq!(m.n_params() * 4, 4_113_464);
    }
}
