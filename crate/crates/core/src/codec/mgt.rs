// SPDX-License-Identifier: Apache-2.0

//! MGT word layout: bit 15 set marks a command, bits 14..0 carry the payload.

use super::CodecError;
use crate::types::{CommandCode, FabricLabel, MgtWord};

const COMMAND_FLAG: u16 = 0x8000;
const PAYLOAD_MASK: u16 = 0x7FFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MgtKind {
    Event,
    Command,
}

pub fn frame_mgt(kind: MgtKind, payload: u32) -> Result<u16, CodecError> {
    if payload > u32::from(PAYLOAD_MASK) {
        return Err(CodecError::PayloadOverflow(payload));
    }
    let payload = payload as u16;
    Ok(match kind {
        MgtKind::Event => payload,
        MgtKind::Command => COMMAND_FLAG | payload,
    })
}

pub fn deframe_mgt(word: u16) -> (MgtKind, u16) {
    let kind = if word & COMMAND_FLAG != 0 { MgtKind::Command } else { MgtKind::Event };
    (kind, word & PAYLOAD_MASK)
}

/// Serializes a payload-carrying word. Pauses have no wire representation.
pub fn encode_word(word: MgtWord) -> Option<u16> {
    match word {
        MgtWord::Event(label) => Some(label.get()),
        MgtWord::Command(code) => Some(COMMAND_FLAG | code.get()),
        MgtWord::Pause => None,
    }
}

pub fn decode_word(raw: u16) -> MgtWord {
    match deframe_mgt(raw) {
        (MgtKind::Event, p) => MgtWord::Event(FabricLabel::new(p.into()).expect("masked to 15 bits")),
        (MgtKind::Command, p) => MgtWord::Command(CommandCode::new(p.into()).expect("masked to 15 bits")),
    }
}
