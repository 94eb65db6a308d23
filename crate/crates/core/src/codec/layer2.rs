// SPDX-License-Identifier: Apache-2.0

use super::CodecError;
use crate::types::{ChipLabel, Layer2Group, Timestamp8};

/// Packs up to three timestamped events into one chip-link transfer unit.
pub fn pack_layer2(events: &[(ChipLabel, Timestamp8)]) -> Result<Layer2Group, CodecError> {
    Layer2Group::new(events.to_vec()).map_err(|_| CodecError::GroupSize(events.len()))
}

pub fn unpack_layer2(group: &Layer2Group) -> Vec<(ChipLabel, Timestamp8)> {
    group.entries().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(label: u16, ts: u8) -> (ChipLabel, Timestamp8) {
        (ChipLabel::from_u16(label), Timestamp8(ts))
    }

    #[test]
    fn examples() {
        assert_eq!(pack_layer2(&[ev(5, 0)]).unwrap().len(), 1);
        let g = pack_layer2(&[ev(1, 10), ev(2, 10), ev(3, 10)]).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(unpack_layer2(&g), vec![ev(1, 10), ev(2, 10), ev(3, 10)]);
        assert_eq!(unpack_layer2(&pack_layer2(&[ev(7, 3)]).unwrap()), vec![ev(7, 3)]);
        assert_eq!(pack_layer2(&[ev(1, 0); 4]), Err(CodecError::GroupSize(4)));
        assert_eq!(pack_layer2(&[]), Err(CodecError::GroupSize(0)));
    }

    proptest! {
        #[test]
        fn round_trip(entries in prop::collection::vec((any::<u16>(), any::<u8>()), 1..=3)) {
            let events: Vec<_> = entries.iter().map(|&(l, t)| ev(l, t)).collect();
            prop_assert_eq!(unpack_layer2(&pack_layer2(&events).unwrap()), events);
        }
    }
}
