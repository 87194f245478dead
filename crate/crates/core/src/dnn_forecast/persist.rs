use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{geometry, Layer, MlpModel, TrainingMeta};
use crate::error::{Error, Result};
use crate::ingest::{Component, MinMaxScaler};

pub const MAGIC: [u8; 8] = *b"FTMLP\0\0\0";
pub const FORMAT_VERSION: u32 = 1;
/// Magic, version and header length.
pub const PREAMBLE_LEN: usize = 16;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    lags: usize,
    widths: Vec<usize>,
    dropout: f64,
    component: Component,
    scaler: MinMaxScaler,
    meta: Option<TrainingMeta>,
}

/// `MAGIC | version u32 LE | header length u32 LE | JSON header | parameters`
/// where parameters are little-endian f64, layer by layer, row-major weights
/// followed by biases.
pub fn encode_model(model: &MlpModel) -> Result<Vec<u8>> {
    model.validate()?;
    let header = Header {
        format_version: FORMAT_VERSION,
        lags: model.lags,
        widths: model.widths(),
        dropout: model.dropout,
        component: model.component,
        scaler: model.scaler,
        meta: model.meta.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Persistence(e.to_string()))?;
    let mut out = Vec::with_capacity(PREAMBLE_LEN + json.len() + 8 * model.param_count());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for p in model.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

fn corrupt(what: &str) -> Error {
    Error::Persistence(format!("corrupt model payload: {what}"))
}

pub fn decode_model(bytes: &[u8]) -> Result<MlpModel> {
    if bytes.len() < PREAMBLE_LEN || bytes[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Persistence(format!("unsupported model format version {version}")));
    }
    let header_len = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let body = &bytes[PREAMBLE_LEN..];
    if body.len() < header_len {
        return Err(corrupt("truncated header"));
    }
    let header: Header = serde_json::from_slice(&body[..header_len]).map_err(|e| corrupt(&e.to_string()))?;
    if header.format_version != version {
        return Err(corrupt("header version disagrees with preamble"));
    }
    if header.lags == 0 || header.widths != geometry(header.lags) {
        return Err(corrupt("unexpected layer widths"));
    }
    let params = &body[header_len..];
    let count: usize = header.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    if params.len() != 8 * count {
        return Err(corrupt("parameter block has the wrong length"));
    }
    let values: Vec<f64> = params.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let layers = header.widths.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
    let mut model = MlpModel {
        lags: header.lags,
        layers,
        dropout: header.dropout,
        scaler: header.scaler,
        component: header.component,
        meta: header.meta,
    };
    model.set_params(&values)?;
    model.validate().map_err(|e| corrupt(&e.to_string()))?;
    Ok(model)
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    decode_model(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dnn_forecast::mlp_forward;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> MlpModel {
        MlpModel::new(5, 0.2, MinMaxScaler::new(12.5, 97.25).unwrap(), Component::High, 21).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let back = decode_model(&encode_model(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let x: Vec<f64> = (0..5).map(|_| rng.gen::<f64>()).collect();
            assert_eq!(mlp_forward(&m, &x, false, 0).unwrap().to_bits(), mlp_forward(&back, &x, false, 0).unwrap().to_bits());
        }
    }

    #[test]
    fn size_is_header_plus_parameters() {
        let m = model();
        let bytes = encode_model(&m).unwrap();
        let header_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let params = 5 * 50 + 50 + 50 * 25 + 25 + 25 + 1;
        assert_eq!(bytes.len(), PREAMBLE_LEN + header_len + 8 * params);
    }

    #[test]
    fn truncated_and_versioned_payloads() {
        let bytes = encode_model(&model()).unwrap();
        for cut in [0, 10, 40, bytes.len() - 1] {
            assert!(matches!(decode_model(&bytes[..cut]), Err(Error::Persistence(_))));
        }
        let mut wrong = bytes.clone();
        wrong[8] = 9;
        let err = decode_model(&wrong).unwrap_err().to_string();
        assert!(err.contains("version"), "{err}");
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("ftmlp-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.bin");
        save_model(&model(), &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), model());
        std::fs::remove_dir_all(&dir).ok();
    }
}
