// SPDX-License-Identifier: Apache-2.0

//! IBM 8b10b line code.
//!
//! Code groups are written `abcdei fghj` with `a` as bit 9, so the 6-bit
//! sub-block occupies bits 9..4 and the 4-bit sub-block bits 3..0. Byte bits
//! `HGF EDCBA` split into `x = EDCBA` (5b/6b) and `y = HGF` (3b/4b).

// literals group digits as the 6-bit and 4-bit sub-blocks
#![allow(clippy::unusual_byte_groupings)]

use std::sync::LazyLock;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Disparity {
    Negative,
    Positive,
}

impl Disparity {
    fn flip(self) -> Self {
        match self {
            Disparity::Negative => Disparity::Positive,
            Disparity::Positive => Disparity::Negative,
        }
    }

    fn index(self) -> usize {
        match self {
            Disparity::Negative => 0,
            Disparity::Positive => 1,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Disparity::Negative => -1,
            Disparity::Positive => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol10b {
    pub bits: u16,
    pub is_control: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decoded {
    pub byte: u8,
    pub is_control: bool,
    pub rd: Disparity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LineCodeError {
    #[error("{0:#04x} is not a valid K-code")]
    InvalidKCode(u8),
    #[error("{0:#012b} is not a valid 8b10b code group")]
    InvalidSymbol(u16),
    #[error("code group {0:#012b} violates the running disparity")]
    Disparity(u16),
}

/// The twelve valid control characters.
pub const K_CODES: [u8; 12] = [
    0x1C, 0x3C, 0x5C, 0x7C, 0x9C, 0xBC, 0xDC, 0xFC, // K28.0 - K28.7
    0xF7, 0xFB, 0xFD, 0xFE, // K23.7 K27.7 K29.7 K30.7
];

pub fn is_valid_k_code(byte: u8) -> bool {
    K_CODES.contains(&byte)
}

// 5b/6b data codes, (RD-, RD+). Balanced codes appear twice.
const CODE_6B: [(u8, u8); 32] = [
    (0b100111, 0b011000),
    (0b011101, 0b100010),
    (0b101101, 0b010010),
    (0b110001, 0b110001),
    (0b110101, 0b001010),
    (0b101001, 0b101001),
    (0b011001, 0b011001),
    (0b111000, 0b000111),
    (0b111001, 0b000110),
    (0b100101, 0b100101),
    (0b010101, 0b010101),
    (0b110100, 0b110100),
    (0b001101, 0b001101),
    (0b101100, 0b101100),
    (0b011100, 0b011100),
    (0b010111, 0b101000),
    (0b011011, 0b100100),
    (0b100011, 0b100011),
    (0b010011, 0b010011),
    (0b110010, 0b110010),
    (0b001011, 0b001011),
    (0b101010, 0b101010),
    (0b011010, 0b011010),
    (0b111010, 0b000101),
    (0b110011, 0b001100),
    (0b100110, 0b100110),
    (0b010110, 0b010110),
    (0b110110, 0b001001),
    (0b001110, 0b001110),
    (0b101110, 0b010001),
    (0b011110, 0b100001),
    (0b101011, 0b010100),
];

const K28_6B: (u8, u8) = (0b001111, 0b110000);

// 3b/4b data codes, (RD-, RD+). Index 7 is the primary D.x.P7 form.
const CODE_4B: [(u8, u8); 8] = [
    (0b1011, 0b0100),
    (0b1001, 0b1001),
    (0b0101, 0b0101),
    (0b1100, 0b0011),
    (0b1101, 0b0010),
    (0b1010, 0b1010),
    (0b0110, 0b0110),
    (0b1110, 0b0001),
];

const CODE_4B_A7: (u8, u8) = (0b0111, 0b1000);

// 3b/4b control codes, (RD-, RD+).
const CODE_4B_K: [(u8, u8); 8] = [
    (0b1011, 0b0100),
    (0b0110, 0b1001),
    (0b1010, 0b0101),
    (0b1100, 0b0011),
    (0b1101, 0b0010),
    (0b0101, 0b1010),
    (0b1001, 0b0110),
    (0b0111, 0b1000),
];

fn pick(pair: (u8, u8), rd: Disparity) -> u8 {
    match rd {
        Disparity::Negative => pair.0,
        Disparity::Positive => pair.1,
    }
}

/// Running disparity after a sub-block: unbalanced blocks flip it.
fn after(block: u8, width: u32, rd: Disparity) -> Disparity {
    let ones = block.count_ones();
    if ones * 2 == width {
        rd
    } else {
        rd.flip()
    }
}

pub fn encode_8b10b(byte: u8, is_control: bool, rd: Disparity) -> Result<(Symbol10b, Disparity), LineCodeError> {
    if is_control && !is_valid_k_code(byte) {
        return Err(LineCodeError::InvalidKCode(byte));
    }
    let x = (byte & 0x1F) as usize;
    let y = (byte >> 5) as usize;

    let six = if is_control && x == 28 { pick(K28_6B, rd) } else { pick(CODE_6B[x], rd) };
    let mid = after(six, 6, rd);

    let four = if is_control {
        pick(CODE_4B_K[y], mid)
    } else if y == 7 && use_alternate_7(x, mid) {
        pick(CODE_4B_A7, mid)
    } else {
        pick(CODE_4B[y], mid)
    };
    let end = after(four, 4, mid);

    let bits = (u16::from(six) << 4) | u16::from(four);
    Ok((Symbol10b { bits, is_control }, end))
}

// D.x.A7 replaces D.x.P7 where P7 would create a run of five equal bits across
// the sub-block boundary.
fn use_alternate_7(x: usize, rd: Disparity) -> bool {
    match rd {
        Disparity::Negative => matches!(x, 17 | 18 | 20),
        Disparity::Positive => matches!(x, 11 | 13 | 14),
    }
}

struct DecodeTable {
    // Indexed by running disparity, then by the 10-bit code group.
    entries: [Vec<Option<(u8, bool)>>; 2],
}

static DECODE: LazyLock<DecodeTable> = LazyLock::new(|| {
    let mut entries = [vec![None; 1024], vec![None; 1024]];
    for rd in [Disparity::Negative, Disparity::Positive] {
        for byte in 0..=255u8 {
            let (sym, _) = encode_8b10b(byte, false, rd).expect("data codes always encode");
            entries[rd.index()][sym.bits as usize] = Some((byte, false));
        }
        for &k in &K_CODES {
            let (sym, _) = encode_8b10b(k, true, rd).expect("valid K-code");
            entries[rd.index()][sym.bits as usize] = Some((k, true));
        }
    }
    DecodeTable { entries }
});

/// Decodes one code group against the current running disparity.
pub fn decode_8b10b(bits: u16, rd: Disparity) -> Result<Decoded, LineCodeError> {
    let bits = bits & 0x3FF;
    let table = &DECODE.entries;
    match table[rd.index()][bits as usize] {
        Some((byte, is_control)) => {
            let six = (bits >> 4) as u8;
            let four = (bits & 0xF) as u8;
            let end = after(four, 4, after(six, 6, rd));
            Ok(Decoded { byte, is_control, rd: end })
        }
        None if table[rd.flip().index()][bits as usize].is_some() => Err(LineCodeError::Disparity(bits)),
        None => Err(LineCodeError::InvalidSymbol(bits)),
    }
}
