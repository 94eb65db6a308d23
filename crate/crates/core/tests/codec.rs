// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;

use spikefabric::codec::{
    decode_8b10b, deframe_mgt, encode_8b10b, frame_mgt, pack_layer2, unpack_layer2, Disparity, MgtKind, K_CODES,
};
use spikefabric::types::{ChipLabel, Timestamp8};

fn symbol() -> impl Strategy<Value = (u8, bool)> {
    prop_oneof![
        9 => any::<u8>().prop_map(|b| (b, false)),
        1 => proptest::sample::select(K_CODES.to_vec()).prop_map(|k| (k, true)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100_000))]

    #[test]
    fn encoded_streams_are_balanced_and_decode(stream in proptest::collection::vec(symbol(), 1..64), start_positive: bool) {
        let mut rd = if start_positive { Disparity::Positive } else { Disparity::Negative };
        let mut decode_rd = rd;
        let mut sum = i32::from(rd.as_i8());
        let (mut run, mut last) = (0, None);
        for (byte, control) in stream {
            let (sym, next) = encode_8b10b(byte, control, rd).unwrap();
            for i in (0..10).rev() {
                let bit = sym.bits >> i & 1 == 1;
                run = if last == Some(bit) { run + 1 } else { 1 };
                last = Some(bit);
                sum += if bit { 1 } else { -1 };
                prop_assert!(run <= 5);
                prop_assert!(sum.abs() <= 3);
            }
            prop_assert_eq!(sum, i32::from(next.as_i8()));
            let d = decode_8b10b(sym.bits, decode_rd).unwrap();
            prop_assert_eq!((d.byte, d.is_control), (byte, control));
            decode_rd = d.rd;
            rd = next;
        }
    }
}

proptest! {
    #[test]
    fn mgt_framing_round_trips(command: bool, payload in 0u32..1 << 15) {
        let kind = if command { MgtKind::Command } else { MgtKind::Event };
        prop_assert_eq!(deframe_mgt(frame_mgt(kind, payload).unwrap()), (kind, payload as u16));
    }

    #[test]
    fn layer2_groups_round_trip(events in proptest::collection::vec((any::<u16>(), any::<u8>()), 1..=3)) {
        let events: Vec<_> = events.into_iter().map(|(l, t)| (ChipLabel::from_u16(l), Timestamp8(t))).collect();
        prop_assert_eq!(unpack_layer2(&pack_layer2(&events).unwrap()), events);
    }

    #[test]
    fn arbitrary_code_groups_never_panic(bits in 0u16..1 << 10, positive: bool) {
        let rd = if positive { Disparity::Positive } else { Disparity::Negative };
        if let Ok(d) = decode_8b10b(bits, rd) {
            prop_assert_eq!(encode_8b10b(d.byte, d.is_control, rd).unwrap().0.bits, bits);
        }
    }
}

#[test]
fn layer2_group_sizes_are_bounded() {
    assert!(pack_layer2(&[]).is_err());
    let e = (ChipLabel::from_u16(1), Timestamp8(0));
    assert!(pack_layer2(&[e; 4]).is_err());
}
