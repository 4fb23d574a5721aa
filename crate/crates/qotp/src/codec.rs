//! Binary artifact files: a 16-byte header followed by a bincode body.
//!
//! Header layout (little endian): magic `QOTP`, `u16` format version,
//! `u16` artifact kind, `u64` hash of the lattice parameters the artifact
//! was made under. Loading checks all three so that a key bundle from one
//! preset cannot silently be paired with ciphertexts from another.

use crate::crot::CrotTranscript;
use crate::error::{Error, Result};
use crate::hebackend::{KeyChain, PublicChain};
use crate::lattice::LweParams;
use crate::qfhe::{EncryptedState, QheParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"QOTP";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u16)]
pub enum ArtifactKind {
    KeyChain = 1,
    PublicChain = 2,
    Ciphertext = 3,
    Transcripts = 4,
}

impl ArtifactKind {
    fn from_u16(v: u16) -> Result<Self> {
        Ok(match v {
            1 => ArtifactKind::KeyChain,
            2 => ArtifactKind::PublicChain,
            3 => ArtifactKind::Ciphertext,
            4 => ArtifactKind::Transcripts,
            _ => return Err(Error::Decode(format!("unknown artifact kind {v}"))),
        })
    }
}

/// Types that can be written as an artifact.
pub trait Artifact: Serialize + DeserializeOwned {
    const KIND: ArtifactKind;
    fn params(&self) -> &LweParams;
}

impl Artifact for KeyChain {
    const KIND: ArtifactKind = ArtifactKind::KeyChain;
    fn params(&self) -> &LweParams {
        &self.params
    }
}

impl Artifact for PublicChain {
    const KIND: ArtifactKind = ArtifactKind::PublicChain;
    fn params(&self) -> &LweParams {
        &self.params
    }
}

/// Encrypted register as handed to the evaluator.
///
/// `enc.state` is the padded statevector itself. A real deployment would
/// ship qubits, not amplitudes; holding the amplitudes in a file is a
/// simulation convenience and the file must be treated as ciphertext only
/// because the pads are unknown to its reader.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiphertextBundle {
    pub params: LweParams,
    pub qhe: QheParams,
    /// Digest of the public key chain the keys were encrypted under.
    pub chain: String,
    pub enc: EncryptedState,
}

impl Artifact for CiphertextBundle {
    const KIND: ArtifactKind = ArtifactKind::Ciphertext;
    fn params(&self) -> &LweParams {
        &self.params
    }
}

/// Transcripts of every one-bit primitive call of a recorded run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptBundle {
    pub params: LweParams,
    pub seed: u64,
    pub transcripts: Vec<CrotTranscript>,
}

impl Artifact for TranscriptBundle {
    const KIND: ArtifactKind = ArtifactKind::Transcripts;
    fn params(&self) -> &LweParams {
        &self.params
    }
}

pub fn encode<A: Artifact>(a: &A) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(A::KIND as u16).to_le_bytes());
    out.extend_from_slice(&a.params().hash().to_le_bytes());
    bincode::serialize_into(&mut out, a).map_err(|e| Error::Decode(e.to_string()))?;
    Ok(out)
}

/// Parsed header: kind and parameter hash.
pub fn read_header(bytes: &[u8]) -> Result<(ArtifactKind, u64)> {
    if bytes.len() < HEADER_LEN || bytes[..4] != MAGIC {
        return Err(Error::Decode("not a qotp artifact".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::Decode(format!("format version {version}, expected {FORMAT_VERSION}")));
    }
    let kind = ArtifactKind::from_u16(u16::from_le_bytes([bytes[6], bytes[7]]))?;
    let hash = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte slice"));
    Ok((kind, hash))
}

pub fn decode<A: Artifact>(bytes: &[u8]) -> Result<A> {
    let (kind, hash) = read_header(bytes)?;
    if kind != A::KIND {
        return Err(Error::Decode(format!("expected a {:?} artifact, found {:?}", A::KIND, kind)));
    }
    let a: A = bincode::deserialize(&bytes[HEADER_LEN..]).map_err(|e| Error::Decode(e.to_string()))?;
    if a.params().hash() != hash {
        return Err(Error::Decode("header parameter hash does not match the body".into()));
    }
    Ok(a)
}

pub fn save<A: Artifact>(path: &Path, a: &A) -> Result<()> {
    std::fs::write(path, encode(a)?)?;
    Ok(())
}

pub fn load<A: Artifact>(path: &Path) -> Result<A> {
    decode(&std::fs::read(path)?)
}

/// Errors unless both parameter sets hash equal.
pub fn check_same_params(a: &LweParams, b: &LweParams) -> Result<()> {
    if a.hash() != b.hash() {
        return Err(Error::Params(format!("parameter hash {:016x} does not match {:016x}", a.hash(), b.hash())));
    }
    Ok(())
}
