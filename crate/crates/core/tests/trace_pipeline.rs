use tapkit::analysis::{summarize_groups, DEFAULT_VARIANCE_RATIO};
use tapkit::constraints::DEFAULT_WINDOW;
use tapkit::semantic::effective_dimensionality;
use tapkit::trace::{
    feature_matrix, generate_synthetic, read_traces, synthetic_header, write_traces, Preset,
    SyntheticSpec,
};

fn write(records: &[tapkit::trace::QuestionTrace]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_traces(&synthetic_header(), records, &mut buf).unwrap();
    buf
}

#[test]
fn thousand_record_file_round_trips_with_identical_analysis() {
    let spec = SyntheticSpec {
        preset: Preset::RankK { k: 4, seq_len: 64 },
        count: 1000,
        seed: 2024,
    };
    let records = generate_synthetic(&spec).unwrap();
    let bytes = write(&records);
    let back = read_traces(bytes.as_slice()).unwrap();
    assert!(back.renormalized.is_empty());
    // generated records are already canonical
    assert_eq!(back.records, records);
    assert_eq!(write(&back.records), bytes);

    let before = summarize_groups(&records, DEFAULT_WINDOW, DEFAULT_VARIANCE_RATIO).unwrap();
    let after = summarize_groups(&back.records, DEFAULT_WINDOW, DEFAULT_VARIANCE_RATIO).unwrap();
    assert_eq!(before, after);
    assert_eq!(after[0].d_eff, Some(4));
}

#[test]
fn zero_padding_keeps_planted_rank() {
    for k in [1, 3, 6] {
        let spec = SyntheticSpec {
            preset: Preset::RankK { k, seq_len: 64 },
            count: 500,
            seed: 5,
        };
        let records = generate_synthetic(&spec).unwrap();
        for len in [64, 128] {
            let fm = feature_matrix(&records, len).unwrap();
            assert_eq!(effective_dimensionality(&fm.matrix, 0.9).unwrap().d_eff, k, "k={k} len={len}");
        }
    }
}

#[test]
fn every_preset_writes_a_valid_file() {
    let presets = [
        Preset::RankK { k: 2, seq_len: 32 },
        Preset::Threshold { breakpoint: 0.08 },
        Preset::StepShift { shift: 2, base_steps: 3 },
        Preset::EntropyLevel { target: 2.0, seq_len: 16 },
    ];
    for preset in presets {
        let records = generate_synthetic(&SyntheticSpec { preset, count: 4, seed: 1 }).unwrap();
        let bytes = write(&records);
        let back = read_traces(bytes.as_slice()).unwrap();
        assert_eq!(back.records.len(), records.len(), "{}", preset.name());
        assert_eq!(write(&back.records), bytes);
    }
}
