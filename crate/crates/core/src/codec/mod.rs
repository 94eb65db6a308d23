// SPDX-License-Identifier: Apache-2.0

//! Wire formats: layer-2 event groups, MGT word framing and the 8b10b line code.

mod layer2;
mod line8b10b;
mod mgt;

pub use layer2::{pack_layer2, unpack_layer2};
pub use line8b10b::{
    decode_8b10b, encode_8b10b, is_valid_k_code, Decoded, Disparity, LineCodeError, Symbol10b, K_CODES,
};
pub use mgt::{decode_word, deframe_mgt, encode_word, frame_mgt, MgtKind};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("layer-2 group needs 1 to 3 events, got {0}")]
    GroupSize(usize),
    #[error("MGT payload {0:#x} exceeds 15 bits")]
    PayloadOverflow(u32),
    #[error(transparent)]
    LineCode(#[from] LineCodeError),
}
