//! Library-level pipeline test: synthetic frames through the container
//! round trip, block analysis, descriptor aggregation, dataset join and
//! cross-validation, using only the public API.

use msbitrate_core::dataset::{join_dataset, EncodingRow, FeatureRow, CRF_GRID, PRESETS};
use msbitrate_core::descriptors::accumulate;
use msbitrate_core::eval::{cross_validate, LogConvention};
use msbitrate_core::frame::Framerate;
use msbitrate_core::io::{open_y4m, write_y4m};
use msbitrate_core::motion::{analyze_sequence, AnalysisConfig};
use msbitrate_core::regression::ModelKind;
use msbitrate_core::synth::{generate_corpus, pseudo_target_bits, CorpusConfig};

#[test]
fn frames_to_cross_validation() {
    let framerate = Framerate { num: 30, den: 1 };
    let config = AnalysisConfig {
        search_range: 4,
        gop_length_seconds: 5.0,
    };
    let corpus = generate_corpus(&CorpusConfig {
        sequences: 8,
        frames: 8,
        seed: 11,
        ..CorpusConfig::default()
    });

    let mut features = Vec::new();
    let mut encodings = Vec::new();
    for sequence in &corpus {
        // Through the container: write Y4M bytes, read them back, analyze
        // the decoded stream.
        let mut bytes = Vec::new();
        write_y4m(&mut bytes, framerate, &sequence.frames).unwrap();
        let mut reader = open_y4m(bytes.as_slice()).unwrap();
        let stats = analyze_sequence(&mut reader, framerate, &config, |_, _| {}).unwrap();
        assert_eq!(reader.frames_read(), sequence.frames.len() as u64);

        let meta = reader.meta();
        assert_eq!(meta.frame_count, Some(8));
        let seq_features = accumulate(&stats, meta.width, meta.height).unwrap();
        assert_eq!(seq_features.n_frames, 8);

        for preset in PRESETS {
            for crf in CRF_GRID {
                encodings.push(EncodingRow {
                    sequence_id: sequence.id.clone(),
                    preset,
                    crf,
                    bits: pseudo_target_bits(&seq_features, preset, crf),
                    frame_count: seq_features.n_frames,
                });
            }
        }
        features.push(FeatureRow::Ok {
            sequence_id: sequence.id.clone(),
            framerate,
            features: seq_features,
        });
    }

    let outcome = join_dataset(&features, &encodings, None).unwrap();
    assert_eq!(outcome.rows.len(), 8 * PRESETS.len() * CRF_GRID.len());
    assert!(outcome.rejects.is_empty());

    // The flat sequence has zero descriptors and a floor target; it
    // stays in the dataset (forests can use it) but the power law has
    // nothing to predict it from, so the tight check excludes it.
    assert!(outcome.rows.iter().any(|r| r.features.bpp_ms == 0.0));
    let preset5: Vec<_> = outcome
        .rows
        .into_iter()
        .filter(|r| r.preset == 5 && r.features.bpp_ms > 0.0)
        .collect();
    let cv = cross_validate(&preset5, ModelKind::Polynomial, 3, LogConvention::LnBits).unwrap();
    assert_eq!(cv.report.per_fold.len(), 5);
    assert_eq!(cv.scatter.len(), preset5.len());
    // Targets come from the power-law family, so the analytical model
    // generalizes almost perfectly.
    assert!(cv.report.mape < 0.02, "mape = {}", cv.report.mape);
}
