// SPDX-License-Identifier: Apache-2.0

//! FabricProgram binary file.
//!
//! Payload, all integers little-endian:
//! node count `n` (u8); `n` route rows (u16, bit `d` enables `src -> d`);
//! `n` outbound LUTs (65536 x u16); `n` inbound LUTs (32768 x 17 bit,
//! packed LSB-first, 69632 bytes each); assignment count (u32) followed by
//! `(node u8, chip label u16, fabric label u16)` records.

use super::container::{unwrap_binary, wrap_binary};
use super::IoError;
use crate::aggregator::RouteMatrix;
use crate::netcompiler::{FabricProgram, LabelAssignment};
use crate::node::{InboundLut, OutboundLut};
use crate::types::{ChipLabel, FabricLabel, NodeId, MAX_NODES};

pub const PROGRAM_MAGIC: &[u8; 8] = b"SFPROGRM";
pub const PROGRAM_FORMAT_VERSION: u32 = 1;

const INBOUND_BITS: usize = 17;
pub const INBOUND_PACKED_BYTES: usize = InboundLut::ENTRIES * INBOUND_BITS / 8;

/// Packs 17-bit entries into a contiguous LSB-first bit stream.
pub fn pack_inbound(lut: &InboundLut) -> Vec<u8> {
    let mut out = vec![0u8; INBOUND_PACKED_BYTES];
    for (i, &e) in lut.raw().iter().enumerate() {
        let bit = i * INBOUND_BITS;
        // an entry spans at most four bytes
        let word = u64::from(e) << (bit % 8);
        for k in 0..4 {
            if let Some(b) = out.get_mut(bit / 8 + k) {
                *b |= (word >> (8 * k)) as u8;
            }
        }
    }
    out
}

pub fn unpack_inbound(bytes: &[u8]) -> InboundLut {
    assert_eq!(bytes.len(), INBOUND_PACKED_BYTES);
    let table = (0..InboundLut::ENTRIES)
        .map(|i| {
            let bit = i * INBOUND_BITS;
            let mut word = 0u64;
            for k in 0..4 {
                word |= u64::from(bytes.get(bit / 8 + k).copied().unwrap_or(0)) << (8 * k);
            }
            ((word >> (bit % 8)) & ((1 << INBOUND_BITS) - 1)) as u32
        })
        .collect();
    InboundLut::from_raw(table).expect("17-bit entries")
}

pub fn store_program(program: &FabricProgram) -> Vec<u8> {
    let n = program.node_count();
    let mut p = Vec::with_capacity(1 + n * (2 + 2 * OutboundLut::ENTRIES + INBOUND_PACKED_BYTES));
    p.push(n as u8);
    for &row in program.routes.rows() {
        p.extend_from_slice(&row.to_le_bytes());
    }
    for lut in &program.outbound {
        for &e in lut.raw() {
            p.extend_from_slice(&e.to_le_bytes());
        }
    }
    for lut in &program.inbound {
        p.extend_from_slice(&pack_inbound(lut));
    }
    p.extend_from_slice(&(program.assignments.len() as u32).to_le_bytes());
    for a in &program.assignments {
        p.push(u32::from(a.node) as u8);
        p.extend_from_slice(&a.chip_label.get().to_le_bytes());
        p.extend_from_slice(&a.fabric_label.get().to_le_bytes());
    }
    wrap_binary(PROGRAM_MAGIC, PROGRAM_FORMAT_VERSION, &p)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], IoError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| IoError::Malformed(format!("payload ends inside {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16, IoError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
}

pub fn load_program(bytes: &[u8]) -> Result<FabricProgram, IoError> {
    let payload = unwrap_binary(PROGRAM_MAGIC, PROGRAM_FORMAT_VERSION, bytes)?;
    let mut r = Reader { bytes: payload, pos: 0 };
    let n = usize::from(r.take(1, "node count")?[0]);
    if n == 0 || n > MAX_NODES {
        return Err(IoError::Malformed(format!("node count {n} outside 1..=16")));
    }
    let rows = (0..n).map(|_| r.u16("route matrix")).collect::<Result<Vec<_>, _>>()?;
    let routes = RouteMatrix::from_rows(rows)
        .ok_or_else(|| IoError::Malformed("route matrix enables a node beyond the node count".into()))?;
    let mut outbound = Vec::with_capacity(n);
    for _ in 0..n {
        let raw = r.take(2 * OutboundLut::ENTRIES, "outbound LUT")?;
        let table = raw.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
        outbound.push(OutboundLut::from_raw(table).expect("full-size table"));
    }
    let mut inbound = Vec::with_capacity(n);
    for _ in 0..n {
        inbound.push(unpack_inbound(r.take(INBOUND_PACKED_BYTES, "inbound LUT")?));
    }
    let count = u32::from_le_bytes(r.take(4, "assignment count")?.try_into().unwrap()) as usize;
    if count > (payload.len() - r.pos) / 5 {
        return Err(IoError::Malformed(format!("{count} assignments do not fit the payload")));
    }
    let mut assignments = Vec::with_capacity(count);
    for _ in 0..count {
        let node = r.take(1, "assignment")?[0];
        let chip = r.u16("assignment")?;
        let fabric = r.u16("assignment")?;
        let node = NodeId::new(node.into()).ok().filter(|id| id.within(n));
        let fabric_label = FabricLabel::new(fabric.into()).ok();
        let (Some(node), Some(fabric_label)) = (node, fabric_label) else {
            return Err(IoError::Malformed(format!("assignment ({node:?}, {chip}, {fabric}) out of range")));
        };
        assignments.push(LabelAssignment { node, chip_label: ChipLabel::from_u16(chip), fabric_label });
    }
    if r.pos != payload.len() {
        return Err(IoError::Malformed(format!("{} unused payload bytes", payload.len() - r.pos)));
    }
    Ok(FabricProgram { routes, outbound, inbound, assignments })
}
