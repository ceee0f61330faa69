use capta_core::provenance::{Ledger, LedgerError, RecordBody, StepKind};
use capta_core::Digest;
use proptest::prelude::*;
use serde_json::json;

const STEPS: [StepKind; 8] = [
    StepKind::Parse,
    StepKind::Extract,
    StepKind::Resolve,
    StepKind::Build,
    StepKind::Filter,
    StepKind::Communities,
    StepKind::Layout,
    StepKind::Export,
];

fn body(i: usize, human: bool, stamp: u32) -> RecordBody {
    let step = if human { StepKind::Decision } else { STEPS[i % STEPS.len()] };
    RecordBody {
        step,
        params: json!({"seed": i, "gamma": 1.0 + i as f64 / 7.0, "note": format!("step é{i}")}),
        input_digest: Digest::of(format!("in{i}").as_bytes()),
        output_digest: Digest::of(format!("out{i}").as_bytes()),
        actor: if human { "curator".into() } else { "auto".into() },
        rationale: if human { "same person".into() } else { String::new() },
        timestamp: format!("2026-10-14T10:{:02}:{:02}Z", stamp / 60 % 60, stamp % 60),
    }
}

fn ledger(kinds: &[(bool, u32)]) -> Ledger {
    let mut l = Ledger::new();
    for (i, (human, stamp)) in kinds.iter().enumerate() {
        l.append(body(i, *human, *stamp)).unwrap();
    }
    l
}

fn detected(bytes: &[u8]) -> bool {
    std::str::from_utf8(bytes).map_or(true, |t| Ledger::parse(t).is_err())
}

proptest! {
    #[test]
    fn text_round_trips(kinds in prop::collection::vec((any::<bool>(), 0u32..3600), 0..12)) {
        let l = ledger(&kinds);
        let text = l.to_text();
        let back = Ledger::parse(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back.head(), l.head());
    }

    #[test]
    fn single_bit_flips_are_detected(kinds in prop::collection::vec((any::<bool>(), 0u32..3600), 1..8), pick: u64) {
        let mut bytes = ledger(&kinds).to_text().into_bytes();
        let bit = (pick % (bytes.len() as u64 * 8)) as usize;
        bytes[bit / 8] ^= 1 << (bit % 8);
        prop_assert!(detected(&bytes), "bit {bit} of {} bytes", bytes.len());
    }
}

#[test]
fn every_bit_of_a_small_ledger_is_covered() {
    let text = ledger(&[(false, 1), (true, 2), (false, 3), (false, 4)]).to_text();
    let mut bytes = text.into_bytes();
    for bit in 0..bytes.len() * 8 {
        bytes[bit / 8] ^= 1 << (bit % 8);
        assert!(detected(&bytes), "bit {bit} undetected");
        bytes[bit / 8] ^= 1 << (bit % 8);
    }
}

#[test]
fn stale_previous_digest_is_an_integrity_error() {
    let mut l = ledger(&[(false, 0), (false, 1)]);
    let mut stale = l.seal(body(9, false, 0));
    stale.prev_digest = Digest::ZERO;
    assert!(matches!(l.record(stale), Err(LedgerError::ChainMismatch { .. })));
    assert_eq!(l.len(), 2);
}

#[test]
fn dropping_a_record_is_detected() {
    let text = ledger(&[(false, 0), (false, 1), (false, 2)]).to_text();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.remove(2);
    let cut = lines.join("\n") + "\n";
    assert!(Ledger::parse(&cut).is_err());
}
