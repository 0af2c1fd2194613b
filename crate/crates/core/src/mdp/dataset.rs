//! Binary dataset container.
//!
//! Layout (all little-endian):
//!
//! ```text
//! "BAQD" | version: u32 | d_s: u32 | d_a: u32 | count: u64 | tier: u8
//! count x ( state: d_s*f64 | action: d_a*f64 | reward: f64 | next_state: d_s*f64 | done: u8 )
//! ```

use std::fs;
use std::path::Path;

use super::{Dataset, Tier, Transition};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, FormatError, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"BAQD";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 1;

fn record_len(ds: usize, da: usize) -> usize {
    8 * (2 * ds + da + 1) + 1
}

pub fn dataset_to_bytes(ds: &Dataset) -> Vec<u8> {
    let mut w =
        ByteWriter::with_capacity(HEADER_LEN + ds.len() * record_len(ds.state_dim, ds.action_dim));
    w.bytes(DATASET_MAGIC);
    w.u32(VERSION);
    w.u32(ds.state_dim as u32);
    w.u32(ds.action_dim as u32);
    w.u64(ds.len() as u64);
    w.u8(ds.tier.tag());
    for t in &ds.transitions {
        w.f64s(&t.state);
        w.f64s(&t.action);
        w.f64(t.reward);
        w.f64s(&t.next_state);
        w.u8(t.done as u8);
    }
    w.finish()
}

pub fn dataset_from_bytes(bytes: &[u8]) -> Result<Dataset, FormatError> {
    let mut r = ByteReader::new(bytes);
    r.magic(DATASET_MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let state_dim = r.u32()? as usize;
    let action_dim = r.u32()? as usize;
    if state_dim == 0 || action_dim == 0 {
        return Err(FormatError::DimensionMismatch(format!(
            "dimensions must be positive, got d_s={state_dim} d_a={action_dim}"
        )));
    }
    let count = r.u64()?;
    let tier_tag = r.u8()?;
    let tier = Tier::from_tag(tier_tag)
        .ok_or_else(|| FormatError::MalformedHeader(format!("unknown tier tag {tier_tag}")))?;

    let rec = record_len(state_dim, action_dim);
    let payload = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(rec))
        .ok_or_else(|| {
            FormatError::MalformedHeader(format!("transition count {count} too large"))
        })?;
    r.require(payload)?;
    if r.remaining() != payload {
        // Surplus bytes mean the header dimensions disagree with the body.
        return Err(FormatError::DimensionMismatch(format!(
            "payload is {} bytes but header implies {payload}",
            r.remaining()
        )));
    }

    let mut transitions = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let state = r.f64s(state_dim)?;
        let action = r.f64s(action_dim)?;
        let reward = r.f64()?;
        let next_state = r.f64s(state_dim)?;
        let done = match r.u8()? {
            0 => false,
            1 => true,
            other => {
                return Err(FormatError::MalformedHeader(format!(
                    "done flag byte {other} is not 0 or 1"
                )))
            }
        };
        transitions.push(Transition {
            state,
            action,
            reward,
            next_state,
            done,
        });
    }
    r.finish()?;
    Ok(Dataset {
        transitions,
        state_dim,
        action_dim,
        tier,
    })
}

pub fn dataset_save(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if path.as_os_str().is_empty() {
        return Err(Error::config("dataset path is empty"));
    }
    ds.validate()?;
    fs::write(path, dataset_to_bytes(ds)).map_err(|e| Error::io(path, e))
}

pub fn dataset_load(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    if path.as_os_str().is_empty() {
        return Err(Error::config("dataset path is empty"));
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(dataset_from_bytes(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> Dataset {
        let t = |k: f64| Transition {
            state: vec![k, -k],
            action: vec![0.25 * k],
            reward: -k * k,
            next_state: vec![k + 1.0, f64::MIN_POSITIVE],
            done: k > 1.5,
        };
        Dataset::from_transitions(vec![t(0.0), t(1.0), t(2.0)], 2, 1, Tier::Medium).unwrap()
    }

    #[test]
    fn three_transition_roundtrip() {
        let ds = three();
        let back = dataset_from_bytes(&dataset_to_bytes(&ds)).unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let mut bytes = dataset_to_bytes(&three());
        bytes[0] = b'X';
        assert!(matches!(
            dataset_from_bytes(&bytes),
            Err(FormatError::BadMagic { .. })
        ));
    }

    #[test]
    fn truncation_and_dimension_errors_are_distinct() {
        let bytes = dataset_to_bytes(&three());
        assert!(matches!(
            dataset_from_bytes(&bytes[..bytes.len() - 3]),
            Err(FormatError::Truncated { .. })
        ));
        let mut padded = bytes.clone();
        padded.extend_from_slice(&[0; 5]);
        assert!(matches!(
            dataset_from_bytes(&padded),
            Err(FormatError::DimensionMismatch(_))
        ));
        let mut bad_version = bytes.clone();
        bad_version[4] = 9;
        assert_eq!(
            dataset_from_bytes(&bad_version),
            Err(FormatError::UnsupportedVersion(9))
        );
        assert!(matches!(
            dataset_from_bytes(&bytes[..10]),
            Err(FormatError::Truncated { .. })
        ));
    }

    #[test]
    fn empty_path_is_an_error() {
        assert!(matches!(dataset_save(&three(), ""), Err(Error::Config(_))));
        assert!(matches!(dataset_load(""), Err(Error::Config(_))));
    }
}
