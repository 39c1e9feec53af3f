//! Little-endian binary checkpoint format. Byte layout is documented in
//! `docs/formats.md`.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{Autoencoder, AutoencoderConfig};
use crate::binio::{Reader, Writer};
use crate::neuralcore::BnMode;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HALU";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub epochs: u64,
    pub seed: u64,
    pub history_len: u64,
    /// SHA-256 over the loss history as little-endian `f64`s.
    pub loss_digest: [u8; 32],
    /// Last recorded training loss, NaN when untrained.
    pub final_loss: f64,
}

impl TrainingMeta {
    pub fn untrained(seed: u64) -> Self {
        Self::from_history(0, seed, &[])
    }

    pub fn from_history(epochs: u64, seed: u64, history: &[f64]) -> Self {
        let mut h = Sha256::new();
        for v in history {
            h.update(v.to_le_bytes());
        }
        Self {
            epochs,
            seed,
            history_len: history.len() as u64,
            loss_digest: h.finalize().into(),
            final_loss: history.last().copied().unwrap_or(f64::NAN),
        }
    }
}

fn write_blob(w: &mut Writer, name: &str, values: &[f64]) {
    w.u32(name.len() as u32);
    w.bytes(name.as_bytes());
    w.u64(values.len() as u64);
    w.f64s(values);
}

fn read_blob(r: &mut Reader<'_>, want_name: &str, want_len: usize) -> Result<Vec<f64>> {
    let name_len = r.u32()? as usize;
    let name = std::str::from_utf8(r.take(name_len)?)
        .map_err(|_| r.fail("parameter name is not UTF-8"))?;
    if name != want_name {
        return Err(r.fail(format!("expected blob {want_name}, found {name}")));
    }
    let len = r.u64()? as usize;
    if len != want_len {
        return Err(r.fail(format!(
            "blob {name} has {len} values, config implies {want_len}"
        )));
    }
    r.f64s(len)
}

/// Every stored array as `(name, values)`: trainable parameters interleaved
/// with batch-norm running statistics and hyperparameters.
fn state_blobs(model: &Autoencoder) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    let push_bn = |out: &mut Vec<(String, Vec<f64>)>,
                   prefix: String,
                   bn: &crate::neuralcore::BatchNormState| {
        out.push((format!("{prefix}.bn.scale"), bn.scale.clone()));
        out.push((format!("{prefix}.bn.shift"), bn.shift.clone()));
        out.push((format!("{prefix}.bn.running_mean"), bn.running_mean.clone()));
        out.push((format!("{prefix}.bn.running_var"), bn.running_var.clone()));
        out.push((format!("{prefix}.bn.hyper"), vec![bn.momentum, bn.epsilon]));
    };
    for (i, l) in model.encoder.iter().enumerate() {
        out.push((format!("encoder.{i}.conv.weight"), l.conv.weights.clone()));
        out.push((format!("encoder.{i}.conv.bias"), l.conv.bias.clone()));
        push_bn(&mut out, format!("encoder.{i}"), &l.bn);
    }
    for (j, l) in model.decoder.iter().enumerate() {
        out.push((format!("decoder.{j}.tconv.weight"), l.tconv.weights.clone()));
        out.push((format!("decoder.{j}.tconv.bias"), l.tconv.bias.clone()));
        if let Some(bn) = &l.bn {
            push_bn(&mut out, format!("decoder.{j}"), bn);
        }
    }
    out
}

pub fn to_bytes(model: &Autoencoder, meta: &TrainingMeta) -> Vec<u8> {
    let cfg = model.config();
    let mut w = Writer::default();
    w.bytes(CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.u32(cfg.n_points as u32);
    w.u32(cfg.n_levels as u32);
    w.u32(cfg.kernel as u32);
    w.u32(cfg.stride as u32);
    w.u32(cfg.channels.len() as u32);
    cfg.channels.iter().for_each(|&c| w.u32(c as u32));
    w.u8(cfg.skip_connections as u8);
    w.f64(cfg.gamma);
    w.f64(cfg.max_range);

    w.u64(meta.epochs);
    w.u64(meta.seed);
    w.u64(meta.history_len);
    w.bytes(&meta.loss_digest);
    w.f64(meta.final_loss);

    let blobs = state_blobs(model);
    w.u32(blobs.len() as u32);
    for (name, values) in &blobs {
        write_blob(&mut w, name, values);
    }
    w.0
}

pub fn from_bytes(buf: &[u8], path: &Path) -> Result<(Autoencoder, TrainingMeta)> {
    let mut r = Reader::new(buf, path);
    let magic = r.take(4)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(r.fail(format!("bad magic {magic:?}, expected \"HALU\"")));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(r.fail(format!(
            "unsupported checkpoint version {version} (this build reads {CHECKPOINT_VERSION})"
        )));
    }
    let n_points = r.u32()? as usize;
    let n_levels = r.u32()? as usize;
    let kernel = r.u32()? as usize;
    let stride = r.u32()? as usize;
    let n_channels = r.u32()? as usize;
    if n_channels > 1024 {
        return Err(r.fail(format!("implausible channel list length {n_channels}")));
    }
    let channels = (0..n_channels)
        .map(|_| r.u32().map(|c| c as usize))
        .collect::<Result<Vec<_>>>()?;
    let skip_connections = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(r.fail(format!("invalid skip flag {other}"))),
    };
    let config = AutoencoderConfig {
        n_points,
        n_levels,
        kernel,
        stride,
        channels,
        skip_connections,
        gamma: r.f64()?,
        max_range: r.f64()?,
    };
    config
        .validate()
        .map_err(|e| r.fail(format!("stored config invalid: {e}")))?;

    let epochs = r.u64()?;
    let seed = r.u64()?;
    let history_len = r.u64()?;
    let loss_digest: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
    let final_loss = r.f64()?;
    let meta = TrainingMeta {
        epochs,
        seed,
        history_len,
        loss_digest,
        final_loss,
    };

    let mut model = Autoencoder::build(config, 0)?;
    let layout: Vec<(String, usize)> = state_blobs(&model)
        .into_iter()
        .map(|(n, v)| (n, v.len()))
        .collect();
    let count = r.u32()? as usize;
    if count != layout.len() {
        return Err(r.fail(format!(
            "{count} parameter blobs stored, config implies {}",
            layout.len()
        )));
    }
    let mut values = Vec::with_capacity(count);
    for (name, len) in &layout {
        values.push(read_blob(&mut r, name, *len)?);
    }
    if !r.finished() {
        return Err(r.fail("trailing bytes after last parameter blob"));
    }
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(r.fail("non-finite parameter value"));
    }

    let mut values = values.into_iter();
    let mut next = || values.next().expect("layout length checked");
    let read_bn = |bn: &mut crate::neuralcore::BatchNormState,
                   next: &mut dyn FnMut() -> Vec<f64>| {
        bn.scale = next();
        bn.shift = next();
        bn.running_mean = next();
        bn.running_var = next();
        let hyper = next();
        bn.momentum = hyper[0];
        bn.epsilon = hyper[1];
    };
    for l in &mut model.encoder {
        l.conv.weights = next();
        l.conv.bias = next();
        read_bn(&mut l.bn, &mut next);
    }
    for l in &mut model.decoder {
        l.tconv.weights = next();
        l.tconv.bias = next();
        if let Some(bn) = &mut l.bn {
            read_bn(bn, &mut next);
        }
    }
    for bn in model.bn_states() {
        bn.validate().map_err(|e| r.fail(e.to_string()))?;
    }
    model.set_mode(BnMode::Eval);
    Ok((model, meta))
}

pub fn save(model: &Autoencoder, meta: &TrainingMeta, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_bytes(model, meta)).map_err(|e| Error::io(path, e))
}

/// Loads a checkpoint; the returned model is in eval mode.
pub fn load(path: impl AsRef<Path>) -> Result<(Autoencoder, TrainingMeta)> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&buf, path)
}
