//! Block-level complexity analysis: block variances, spatial search for
//! intra frames, exhaustive integer-pel motion search for inter frames,
//! block classification, and per-block bit estimates.
//!
//! All scores are sums of squared deviations over a block. They are
//! accumulated in integer arithmetic and divided once by the block pixel
//! count (a power of two), so every score is an exactly-representable f64
//! and comparisons, ties and downstream sums are bit-deterministic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{Framerate, LumaFrame};
use crate::io::FrameIoError;

/// Analysis block side in pixels. Blocks are tiled from the top-left
/// corner; partial blocks at the right/bottom edges are not analyzed.
pub const BLOCK_SIZE: u32 = 16;
const SUB_BLOCK: u32 = 8;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("block at ({x}, {y}) side {side} exceeds the {width}x{height} frame")]
    OutOfBounds {
        x: u32,
        y: u32,
        side: u32,
        width: u32,
        height: u32,
    },
    #[error("current frame is {cur_width}x{cur_height} but reference is {ref_width}x{ref_height}")]
    DimensionMismatch {
        cur_width: u32,
        cur_height: u32,
        ref_width: u32,
        ref_height: u32,
    },
}

#[derive(Debug, Error)]
pub enum SequenceAnalysisError {
    #[error(transparent)]
    Decode(#[from] FrameIoError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Integer-pel displacement from a block in the current frame to its
/// matched window in the reference frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionVector {
    pub dx: i32,
    pub dy: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Coded without temporal reference; complexity from spatial search.
    Intra,
    /// Predicted from the previous frame via a motion vector.
    Inter,
}

impl BlockKind {
    pub fn as_char(self) -> char {
        match self {
            BlockKind::Intra => 'I',
            BlockKind::Inter => 'P',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameKind {
    Intra,
    Inter,
}

impl FrameKind {
    pub fn as_char(self) -> char {
        match self {
            FrameKind::Intra => 'I',
            FrameKind::Inter => 'P',
        }
    }
}

/// Per-block analysis result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRecord {
    /// Block-grid coordinates (pixel origin is `block_x * 16, block_y * 16`).
    pub block_x: u32,
    pub block_y: u32,
    pub kind: BlockKind,
    /// Spatial score: min of summed 8x8 quadrant variances and 16x16 variance.
    pub mse_intra: f64,
    /// Best motion-compensated residual score; absent on intra frames.
    pub mse_mv: Option<f64>,
    /// Final block error: min of `mse_intra` and `mse_mv`.
    pub mse_block: f64,
    /// Estimated bits to code the block.
    pub bitsize: u32,
    /// Winning motion vector; absent on intra frames.
    pub mv: Option<MotionVector>,
}

/// Frame-level accumulation of the per-block records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub frame_index: u64,
    pub frame_type: FrameKind,
    /// Sum of `mse_block` over all analyzed blocks.
    pub mse_sum: f64,
    /// Sum of `bitsize` over all analyzed blocks.
    pub bits_sum: u64,
    pub i_block_count: u64,
    pub p_block_count: u64,
    /// Pixels covered by full 16x16 blocks (the cropped analysis area).
    pub analyzed_pixels: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Exhaustive search explores |dx|,|dy| <= search_range.
    pub search_range: u32,
    /// An intra frame starts every `round(gop_length_seconds * fps)` frames.
    pub gop_length_seconds: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            search_range: 16,
            gop_length_seconds: 5.0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.search_range < 1 {
            return Err("search_range must be at least 1".into());
        }
        if self.gop_length_seconds.is_nan() || self.gop_length_seconds <= 0.0 {
            return Err("gop_length_seconds must be positive".into());
        }
        Ok(())
    }
}

/// Frames between consecutive intra frames for the given schedule.
pub fn gop_length(framerate: Framerate, gop_length_seconds: f64) -> u64 {
    ((gop_length_seconds * framerate.fps()).round() as u64).max(1)
}

#[derive(Debug, Clone, Copy, Default)]
struct BlockSums {
    sum: i64,
    sum_sq: i64,
}

impl BlockSums {
    #[inline]
    fn add(&mut self, other: BlockSums) {
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    /// Sum of squared deviations: `(n * sum_sq - sum^2) / n`.
    ///
    /// `n` is a power of two and the numerator stays below 2^53, so the
    /// result is exact in f64.
    #[inline]
    fn ssd(self, n: i64) -> f64 {
        let num = n * self.sum_sq - self.sum * self.sum;
        debug_assert!(num >= 0);
        num as f64 / n as f64
    }
}

/// Sums of the four 8x8 quadrants of one 16x16 block, indexed
/// `[top-left, top-right, bottom-left, bottom-right]`.
#[derive(Debug, Clone, Copy, Default)]
struct QuadSums {
    quads: [BlockSums; 4],
}

impl QuadSums {
    /// Score of a 16x16 block: min of the summed quadrant variances
    /// and the whole-block variance.
    #[inline]
    fn min_score(&self) -> f64 {
        let n_sub = (SUB_BLOCK * SUB_BLOCK) as i64;
        let sub_sum: f64 = self.quads.iter().map(|q| q.ssd(n_sub)).sum();
        let mut total = BlockSums::default();
        for q in &self.quads {
            total.add(*q);
        }
        let full = total.ssd((BLOCK_SIZE * BLOCK_SIZE) as i64);
        sub_sum.min(full)
    }
}

#[inline]
fn accumulate_row(sums: &mut BlockSums, row: &[u8]) {
    for &v in row {
        let v = v as i64;
        sums.sum += v;
        sums.sum_sq += v * v;
    }
}

fn check_block_bounds(
    frame: &LumaFrame,
    x: u32,
    y: u32,
    side: u32,
) -> Result<(), AnalysisError> {
    let fits = x.checked_add(side).is_some_and(|r| r <= frame.width())
        && y.checked_add(side).is_some_and(|b| b <= frame.height());
    if fits {
        Ok(())
    } else {
        Err(AnalysisError::OutOfBounds {
            x,
            y,
            side,
            width: frame.width(),
            height: frame.height(),
        })
    }
}

fn quad_sums_intra(frame: &LumaFrame, x: u32, y: u32) -> QuadSums {
    let mut quads = QuadSums::default();
    for r in 0..BLOCK_SIZE {
        let row = frame.row(y + r);
        let x = x as usize;
        let half = SUB_BLOCK as usize;
        let top = if r < SUB_BLOCK { 0 } else { 2 };
        accumulate_row(&mut quads.quads[top], &row[x..x + half]);
        accumulate_row(&mut quads.quads[top + 1], &row[x + half..x + 2 * half]);
    }
    quads
}

fn quad_sums_residual(
    current: &LumaFrame,
    reference: &LumaFrame,
    x: u32,
    y: u32,
    dx: i32,
    dy: i32,
) -> QuadSums {
    let mut quads = QuadSums::default();
    let half = SUB_BLOCK as usize;
    for r in 0..BLOCK_SIZE {
        let cur_row = current.row(y + r);
        let ref_row = reference.row((y + r).wrapping_add_signed(dy));
        let cx = x as usize;
        let rx = (x.wrapping_add_signed(dx)) as usize;
        let top = if r < SUB_BLOCK { 0 } else { 2 };
        for half_idx in 0..2 {
            let sums = &mut quads.quads[top + half_idx];
            let off = half_idx * half;
            for i in 0..half {
                let d = cur_row[cx + off + i] as i64 - ref_row[rx + off + i] as i64;
                sums.sum += d;
                sums.sum_sq += d * d;
            }
        }
    }
    quads
}

/// Variance score of a single square block: `sum(I^2) - sum(I)^2 / n`
/// with `n = side * side`, i.e. the sum of squared deviations. `side`
/// must be 8 or 16.
pub fn block_variance(
    frame: &LumaFrame,
    origin: (u32, u32),
    side: u32,
) -> Result<f64, AnalysisError> {
    assert!(side == 8 || side == 16, "block side must be 8 or 16");
    let (x, y) = origin;
    check_block_bounds(frame, x, y, side)?;
    let mut sums = BlockSums::default();
    for r in 0..side {
        let row = frame.row(y + r);
        accumulate_row(&mut sums, &row[x as usize..(x + side) as usize]);
    }
    Ok(sums.ssd((side * side) as i64))
}

/// Spatial score of a 16x16 block: the minimum of the four 8x8 quadrant
/// variances summed and the 16x16 variance.
pub fn spatial_mse(frame: &LumaFrame, origin: (u32, u32)) -> Result<f64, AnalysisError> {
    let (x, y) = origin;
    check_block_bounds(frame, x, y, BLOCK_SIZE)?;
    Ok(quad_sums_intra(frame, x, y).min_score())
}

/// Bits to code a block of error `mse_block`: 0 when the error is <= 1,
/// otherwise `ceil(log2(mse_block))` computed through integer bit length
/// so power-of-two boundaries are exact.
pub fn bitsize(mse_block: f64) -> u32 {
    assert!(
        mse_block.is_finite() && mse_block >= 0.0,
        "mse must be finite and non-negative"
    );
    if mse_block <= 1.0 {
        return 0;
    }
    // ceil(log2(x)) over the reals equals ceil(log2(ceil(x))) over the
    // integers, because 2^k >= x iff 2^k >= ceil(x).
    let m = mse_block.ceil() as u128;
    debug_assert!(m >= 2);
    128 - (m - 1).leading_zeros()
}

/// Exhaustive integer-pel search over all |dx|,|dy| <= range. Candidate
/// windows that reach outside the reference frame are skipped; (0, 0) is
/// always in bounds. Each candidate's residual is scored like
/// [`spatial_mse`] on the difference block. Ties go to the smaller
/// |dx| + |dy|, then to the earlier candidate in (dy, dx) raster order.
pub fn motion_search(
    current: &LumaFrame,
    reference: &LumaFrame,
    origin: (u32, u32),
    range: u32,
) -> Result<(MotionVector, f64), AnalysisError> {
    check_same_dimensions(current, reference)?;
    let (x, y) = origin;
    check_block_bounds(current, x, y, BLOCK_SIZE)?;

    let range = range as i64;
    let (x, y) = (x as i64, y as i64);
    let max_x = current.width() as i64 - BLOCK_SIZE as i64;
    let max_y = current.height() as i64 - BLOCK_SIZE as i64;

    let mut best_score = f64::INFINITY;
    let mut best_l1 = i64::MAX;
    let mut best_mv = MotionVector { dx: 0, dy: 0 };
    for dy in -range..=range {
        let ry = y + dy;
        if ry < 0 || ry > max_y {
            continue;
        }
        for dx in -range..=range {
            let rx = x + dx;
            if rx < 0 || rx > max_x {
                continue;
            }
            let quads = quad_sums_residual(
                current,
                reference,
                x as u32,
                y as u32,
                dx as i32,
                dy as i32,
            );
            let score = quads.min_score();
            let l1 = dx.abs() + dy.abs();
            if score < best_score || (score == best_score && l1 < best_l1) {
                best_score = score;
                best_l1 = l1;
                best_mv = MotionVector {
                    dx: dx as i32,
                    dy: dy as i32,
                };
            }
        }
    }
    debug_assert!(best_score.is_finite());
    Ok((best_mv, best_score))
}

fn check_same_dimensions(current: &LumaFrame, reference: &LumaFrame) -> Result<(), AnalysisError> {
    if current.width() != reference.width() || current.height() != reference.height() {
        return Err(AnalysisError::DimensionMismatch {
            cur_width: current.width(),
            cur_height: current.height(),
            ref_width: reference.width(),
            ref_height: reference.height(),
        });
    }
    Ok(())
}

/// Full analysis of one frame: stats plus the per-block records.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAnalysis {
    pub stats: FrameStats,
    pub blocks: Vec<BlockRecord>,
}

/// Analyzes every full 16x16 block of `current` in raster order.
///
/// With a reference frame, motion search runs per block and the block is
/// classified intra when the best residual score exceeds the spatial
/// score. Without a reference (intra frame) every block is intra. The
/// final block error is the minimum of the spatial and residual scores.
pub fn analyze_frame(
    current: &LumaFrame,
    reference: Option<&LumaFrame>,
    config: &AnalysisConfig,
) -> Result<FrameAnalysis, AnalysisError> {
    if let Some(reference) = reference {
        check_same_dimensions(current, reference)?;
    }
    let blocks_x = current.width() / BLOCK_SIZE;
    let blocks_y = current.height() / BLOCK_SIZE;
    let mut blocks = Vec::with_capacity((blocks_x * blocks_y) as usize);

    let mut mse_sum = 0.0;
    let mut bits_sum = 0u64;
    let mut i_blocks = 0u64;
    let mut p_blocks = 0u64;

    for block_y in 0..blocks_y {
        for block_x in 0..blocks_x {
            let origin = (block_x * BLOCK_SIZE, block_y * BLOCK_SIZE);
            let mse_intra = spatial_mse(current, origin)?;
            let record = match reference {
                None => BlockRecord {
                    block_x,
                    block_y,
                    kind: BlockKind::Intra,
                    mse_intra,
                    mse_mv: None,
                    mse_block: mse_intra,
                    bitsize: bitsize(mse_intra),
                    mv: None,
                },
                Some(reference) => {
                    let (mv, mse_mv) =
                        motion_search(current, reference, origin, config.search_range)?;
                    let kind = if mse_mv > mse_intra {
                        BlockKind::Intra
                    } else {
                        BlockKind::Inter
                    };
                    let mse_block = mse_intra.min(mse_mv);
                    BlockRecord {
                        block_x,
                        block_y,
                        kind,
                        mse_intra,
                        mse_mv: Some(mse_mv),
                        mse_block,
                        bitsize: bitsize(mse_block),
                        mv: Some(mv),
                    }
                }
            };
            mse_sum += record.mse_block;
            bits_sum += u64::from(record.bitsize);
            match record.kind {
                BlockKind::Intra => i_blocks += 1,
                BlockKind::Inter => p_blocks += 1,
            }
            blocks.push(record);
        }
    }

    let stats = FrameStats {
        frame_index: current.index(),
        frame_type: if reference.is_some() {
            FrameKind::Inter
        } else {
            FrameKind::Intra
        },
        mse_sum,
        bits_sum,
        i_block_count: i_blocks,
        p_block_count: p_blocks,
        analyzed_pixels: u64::from(blocks_x * BLOCK_SIZE) * u64::from(blocks_y * BLOCK_SIZE),
    };
    Ok(FrameAnalysis { stats, blocks })
}

/// Runs the frame-type schedule over a whole sequence: frame 0 of every
/// GOP is analyzed intra, every other frame against its predecessor.
/// `on_frame` sees each frame's stats and block records as they are
/// produced, so callers can stream per-block dumps without buffering.
pub fn analyze_sequence<I, F>(
    frames: I,
    framerate: Framerate,
    config: &AnalysisConfig,
    mut on_frame: F,
) -> Result<Vec<FrameStats>, SequenceAnalysisError>
where
    I: IntoIterator<Item = Result<LumaFrame, FrameIoError>>,
    F: FnMut(&FrameStats, &[BlockRecord]),
{
    let gop = gop_length(framerate, config.gop_length_seconds);
    let mut stats = Vec::new();
    let mut previous: Option<LumaFrame> = None;
    for (position, frame) in frames.into_iter().enumerate() {
        let frame = frame?;
        let reference = if (position as u64).is_multiple_of(gop) {
            None
        } else {
            previous.as_ref()
        };
        let analysis = analyze_frame(&frame, reference, config)?;
        on_frame(&analysis.stats, &analysis.blocks);
        stats.push(analysis.stats);
        previous = Some(frame);
    }
    Ok(stats)
}
