//! Wire form of a migrant: `AGPX1\n<serialized tree>\n`, UTF-8, one per
//! datagram. No sender identity is carried.

use thiserror::Error;

use crate::program::{serialize, ProgramTree};

pub const WIRE_TAG: &str = "AGPX1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("envelope is not UTF-8")]
    NotUtf8,
    #[error("unknown envelope version `{0}`")]
    UnknownVersion(String),
    #[error("malformed envelope framing")]
    Framing,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MigrantEnvelope {
    pub payload: String,
}

impl MigrantEnvelope {
    pub fn from_tree(tree: &ProgramTree) -> Self {
        Self {
            payload: serialize(tree),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        format!("{WIRE_TAG}\n{}\n", self.payload).into_bytes()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, EnvelopeError> {
        let text = std::str::from_utf8(bytes).map_err(|_| EnvelopeError::NotUtf8)?;
        let (tag, rest) = text.split_once('\n').ok_or(EnvelopeError::Framing)?;
        if tag != WIRE_TAG {
            return Err(EnvelopeError::UnknownVersion(tag.to_string()));
        }
        let payload = rest.strip_suffix('\n').ok_or(EnvelopeError::Framing)?;
        if payload.contains('\n') {
            return Err(EnvelopeError::Framing);
        }
        Ok(Self {
            payload: payload.to_string(),
        })
    }
}
