//! Sequence-level complexity descriptors aggregated from per-frame stats.
//!
//! Normalization uses the analyzed (cropped) pixel count rather than the
//! nominal frame area, so descriptors stay true per-pixel averages for
//! resolutions that are not multiples of 16.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::FrameStats;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DescriptorError {
    #[error("cannot aggregate descriptors over an empty sequence")]
    EmptySequence,
}

/// Complexity descriptors of one video shot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFeatures {
    /// Per-pixel, per-frame average of the summed minimum block errors.
    pub mse_ms: f64,
    /// Per-pixel, per-frame average of the estimated block bits.
    pub bpp_ms: f64,
    /// Fraction of intra blocks over all analyzed blocks of all frames.
    pub ip_ratio: f64,
    pub n_frames: u64,
    pub width: u32,
    pub height: u32,
    /// Seconds spent producing the stats; zero unless the caller timed it.
    pub analysis_wall_time: f64,
}

/// Folds per-frame stats into sequence descriptors.
pub fn accumulate(
    stats: &[FrameStats],
    width: u32,
    height: u32,
) -> Result<SequenceFeatures, DescriptorError> {
    if stats.is_empty() {
        return Err(DescriptorError::EmptySequence);
    }
    let mut mse_total = 0.0;
    let mut bits_total = 0u64;
    let mut pixels_total = 0u64;
    let mut i_blocks = 0u64;
    let mut blocks = 0u64;
    for frame in stats {
        mse_total += frame.mse_sum;
        bits_total += frame.bits_sum;
        pixels_total += frame.analyzed_pixels;
        i_blocks += frame.i_block_count;
        blocks += frame.i_block_count + frame.p_block_count;
    }
    debug_assert!(pixels_total > 0 && blocks > 0);
    Ok(SequenceFeatures {
        mse_ms: mse_total / pixels_total as f64,
        bpp_ms: bits_total as f64 / pixels_total as f64,
        ip_ratio: i_blocks as f64 / blocks as f64,
        n_frames: stats.len() as u64,
        width,
        height,
        analysis_wall_time: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{Framerate, LumaFrame};
    use crate::motion::{analyze_frame, analyze_sequence, AnalysisConfig, FrameKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn stats(
        frame_type: FrameKind,
        mse_sum: f64,
        bits_sum: u64,
        i_blocks: u64,
        p_blocks: u64,
        pixels: u64,
    ) -> FrameStats {
        FrameStats {
            frame_index: 0,
            frame_type,
            mse_sum,
            bits_sum,
            i_block_count: i_blocks,
            p_block_count: p_blocks,
            analyzed_pixels: pixels,
        }
    }

    #[test]
    fn empty_sequence_is_an_error() {
        assert_eq!(accumulate(&[], 64, 64), Err(DescriptorError::EmptySequence));
    }

    #[test]
    fn flat_intra_frame_gives_zero_descriptors() {
        let frame = LumaFrame::from_fn(64, 64, 0, |_, _| 90).unwrap();
        let analysis = analyze_frame(&frame, None, &AnalysisConfig::default()).unwrap();
        let features = accumulate(&[analysis.stats], 64, 64).unwrap();
        assert_eq!(features.mse_ms, 0.0);
        assert_eq!(features.bpp_ms, 0.0);
        assert_eq!(features.ip_ratio, 1.0);
        assert_eq!(features.n_frames, 1);
    }

    #[test]
    fn static_sequence_descriptors_scale_with_frame_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = LumaFrame::from_fn(64, 64, 0, |_, _| rng.gen()).unwrap();
        let config = AnalysisConfig::default();
        let framerate = Framerate { num: 30, den: 1 };

        let run = |n: u64| {
            let frames: Vec<_> = (0..n).map(|i| Ok(base.clone().with_index(i))).collect();
            let stats = analyze_sequence(frames, framerate, &config, |_, _| {}).unwrap();
            accumulate(&stats, 64, 64).unwrap()
        };

        let ten = run(10);
        let twenty = run(20);
        // One intra frame either way (GOP is 150 frames), zero-cost inter
        // frames after it, so the per-frame average halves exactly.
        let intra = analyze_frame(&base, None, &config).unwrap().stats;
        assert_eq!(ten.mse_ms, intra.mse_sum / (64.0 * 64.0 * 10.0));
        assert_eq!(twenty.mse_ms, ten.mse_ms / 2.0);
        assert_eq!(twenty.bpp_ms, ten.bpp_ms / 2.0);
    }

    #[test]
    fn aggregation_is_frame_count_weighted() {
        let a = vec![
            stats(FrameKind::Intra, 100.0, 40, 12, 0, 4096),
            stats(FrameKind::Inter, 60.0, 25, 2, 10, 4096),
        ];
        let b = vec![
            stats(FrameKind::Inter, 10.0, 5, 0, 12, 4096),
            stats(FrameKind::Inter, 20.0, 9, 1, 11, 4096),
            stats(FrameKind::Inter, 30.0, 12, 3, 9, 4096),
        ];
        let joint: Vec<_> = a.iter().chain(b.iter()).copied().collect();

        let fa = accumulate(&a, 64, 64).unwrap();
        let fb = accumulate(&b, 64, 64).unwrap();
        let fj = accumulate(&joint, 64, 64).unwrap();

        let weighted =
            |x: f64, y: f64| (x * a.len() as f64 + y * b.len() as f64) / joint.len() as f64;
        assert!((fj.mse_ms - weighted(fa.mse_ms, fb.mse_ms)).abs() <= 1e-12 * fj.mse_ms.abs());
        assert!((fj.bpp_ms - weighted(fa.bpp_ms, fb.bpp_ms)).abs() <= 1e-12 * fj.bpp_ms.abs());
        assert_eq!(fj.n_frames, 5);
    }

    #[test]
    fn all_intra_sequence_has_unit_ip_ratio() {
        let rows = vec![
            stats(FrameKind::Intra, 5.0, 3, 12, 0, 4096),
            stats(FrameKind::Intra, 6.0, 4, 12, 0, 4096),
        ];
        assert_eq!(accumulate(&rows, 64, 64).unwrap().ip_ratio, 1.0);
    }

    #[test]
    fn bpp_is_bounded_by_worst_block_bitsize() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let frames: Vec<_> = (0..4)
            .map(|i| Ok(LumaFrame::from_fn(64, 64, i, |_, _| rng.gen()).unwrap()))
            .collect();
        let config = AnalysisConfig {
            search_range: 4,
            ..AnalysisConfig::default()
        };
        let mut max_bits = 0u32;
        let stats = analyze_sequence(frames, Framerate { num: 30, den: 1 }, &config, |_, blocks| {
            for b in blocks {
                max_bits = max_bits.max(b.bitsize);
            }
        })
        .unwrap();
        let features = accumulate(&stats, 64, 64).unwrap();
        let blocks_per_frame = 16.0;
        assert!(features.bpp_ms <= f64::from(max_bits) * blocks_per_frame / 4096.0);
    }
}
