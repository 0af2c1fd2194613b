//! Binary network checkpoints, same container style as datasets.
//!
//! ```text
//! "BAQN" | version: u32 | kind: u8 (0 = net, 1 = policy) | activation: u8
//! | n_sizes: u32 | sizes: n_sizes*u32 | params: f64 per weight/bias, layer order
//! policy only: log_std: d_a*f64 | squash: u8 | low: d_a*f64 | high: d_a*f64
//! ```

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, DenseNet, GaussianPolicy, Params};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, FormatError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"BAQN";
const VERSION: u32 = 1;
const KIND_NET: u8 = 0;
const KIND_POLICY: u8 = 1;

fn write_header(w: &mut ByteWriter, kind: u8, net: &DenseNet) {
    w.bytes(CHECKPOINT_MAGIC);
    w.u32(VERSION);
    w.u8(kind);
    w.u8(net.activation().tag());
    w.u32(net.sizes().len() as u32);
    for &s in net.sizes() {
        w.u32(s as u32);
    }
    for block in net.blocks() {
        w.f64s(block);
    }
}

fn read_net(r: &mut ByteReader<'_>, expected_kind: u8) -> Result<DenseNet, FormatError> {
    r.magic(CHECKPOINT_MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let kind = r.u8()?;
    if kind != expected_kind {
        return Err(FormatError::MalformedHeader(format!(
            "checkpoint kind {kind}, expected {expected_kind}"
        )));
    }
    let act_tag = r.u8()?;
    let activation = Activation::from_tag(act_tag)
        .ok_or_else(|| FormatError::MalformedHeader(format!("unknown activation tag {act_tag}")))?;
    let n = r.u32()? as usize;
    if n < 2 {
        return Err(FormatError::MalformedHeader(format!("{n} layer sizes")));
    }
    r.require(4 * n)?;
    let sizes: Vec<usize> = (0..n)
        .map(|_| r.u32().map(|v| v as usize))
        .collect::<Result<_, _>>()?;
    if sizes.contains(&0) {
        return Err(FormatError::DimensionMismatch(format!(
            "zero layer size in {sizes:?}"
        )));
    }
    let mut weights = Vec::with_capacity(n - 1);
    let mut biases = Vec::with_capacity(n - 1);
    for p in sizes.windows(2) {
        let w = r.f64s(p[0] * p[1])?;
        let b = r.f64s(p[1])?;
        weights.push(Array2::from_shape_vec((p[0], p[1]), w).expect("shape matches length"));
        biases.push(Array1::from(b));
    }
    Ok(DenseNet::from_parts(sizes, activation, weights, biases))
}

pub fn net_to_bytes(net: &DenseNet) -> Vec<u8> {
    let mut w = ByteWriter::with_capacity(16 + 8 * net.num_params());
    write_header(&mut w, KIND_NET, net);
    w.finish()
}

pub fn net_from_bytes(bytes: &[u8]) -> Result<DenseNet, FormatError> {
    let mut r = ByteReader::new(bytes);
    let net = read_net(&mut r, KIND_NET)?;
    r.finish()?;
    Ok(net)
}

pub fn policy_to_bytes(policy: &GaussianPolicy) -> Vec<u8> {
    let mut w = ByteWriter::with_capacity(32 + 8 * policy.num_params());
    write_header(&mut w, KIND_POLICY, policy.mean_net());
    let (low, high) = policy.bounds();
    w.f64s(policy.log_std());
    w.u8(policy.squash() as u8);
    w.f64s(low);
    w.f64s(high);
    w.finish()
}

pub fn policy_from_bytes(bytes: &[u8]) -> Result<GaussianPolicy, FormatError> {
    let mut r = ByteReader::new(bytes);
    let net = read_net(&mut r, KIND_POLICY)?;
    let d_a = net.output_dim();
    let log_std = r.f64s(d_a)?;
    let squash = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(FormatError::MalformedHeader(format!("squash flag {other}"))),
    };
    let low = r.f64s(d_a)?;
    let high = r.f64s(d_a)?;
    r.finish()?;
    GaussianPolicy::from_parts(net, log_std, squash, low, high)
        .map_err(|e| FormatError::DimensionMismatch(e.to_string()))
}

fn write_file(path: &Path, bytes: Vec<u8>) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::config("checkpoint path is empty"));
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn save_net(net: &DenseNet, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), net_to_bytes(net))
}

pub fn load_net(path: impl AsRef<Path>) -> Result<DenseNet> {
    Ok(net_from_bytes(&read_file(path.as_ref())?)?)
}

pub fn save_policy(policy: &GaussianPolicy, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), policy_to_bytes(policy))
}

pub fn load_policy(path: impl AsRef<Path>) -> Result<GaussianPolicy> {
    Ok(policy_from_bytes(&read_file(path.as_ref())?)?)
}
