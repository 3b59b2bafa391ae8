//! Deterministic synthetic test sequences and the bundled desk-scale
//! corpus: flat frames, noise fields, translating textures and scene
//! cuts, plus pseudo ground-truth encoded sizes derived from the power
//! law so the whole pipeline can run without external encoders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{EncodingRow, VcaRow, CRF_GRID, PRESETS};
use crate::descriptors::{accumulate, SequenceFeatures};
use crate::frame::{Framerate, LumaFrame};
use crate::motion::{analyze_sequence, AnalysisConfig};

pub const BACKGROUND_LUMA: u8 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    Flat,
    Noise,
    TranslatingTexture,
    TextureWithNoise,
    SceneCut,
}

impl SynthKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::Flat => "flat",
            SynthKind::Noise => "noise",
            SynthKind::TranslatingTexture => "translating-texture",
            SynthKind::TextureWithNoise => "texture-with-noise",
            SynthKind::SceneCut => "scene-cut",
        }
    }
}

pub fn flat_sequence(width: u32, height: u32, frames: u32, value: u8) -> Vec<LumaFrame> {
    (0..frames)
        .map(|i| LumaFrame::from_fn(width, height, u64::from(i), |_, _| value).expect("valid dims"))
        .collect()
}

/// Uniform noise in `[base - amplitude, base + amplitude]`, clamped to u8.
pub fn noise_frame(
    rng: &mut ChaCha8Rng,
    width: u32,
    height: u32,
    index: u64,
    base: u8,
    amplitude: u8,
) -> LumaFrame {
    let lo = i32::from(base) - i32::from(amplitude);
    let hi = i32::from(base) + i32::from(amplitude);
    LumaFrame::from_fn(width, height, index, |_, _| {
        rng.gen_range(lo..=hi).clamp(0, 255) as u8
    })
    .expect("valid dims")
}

pub fn noise_sequence(
    rng: &mut ChaCha8Rng,
    width: u32,
    height: u32,
    frames: u32,
    base: u8,
    amplitude: u8,
) -> Vec<LumaFrame> {
    (0..frames)
        .map(|i| noise_frame(rng, width, height, u64::from(i), base, amplitude))
        .collect()
}

/// `out(x, y) = in(x + dx, y + dy)`, with `fill` where the source is out
/// of range. A block of the output therefore matches the input window
/// displaced by exactly `(dx, dy)`.
pub fn translate_frame(frame: &LumaFrame, dx: i32, dy: i32, fill: u8, index: u64) -> LumaFrame {
    LumaFrame::from_fn(frame.width(), frame.height(), index, |x, y| {
        let sx = i64::from(x) + i64::from(dx);
        let sy = i64::from(y) + i64::from(dy);
        if sx >= 0 && sx < i64::from(frame.width()) && sy >= 0 && sy < i64::from(frame.height()) {
            frame.sample(sx as u32, sy as u32)
        } else {
            fill
        }
    })
    .expect("same dims as input")
}

/// A moving-patch sequence with its geometry, so tests can tell which
/// blocks lie fully inside the textured region of each frame.
pub struct MovingPatch {
    pub frames: Vec<LumaFrame>,
    /// Patch top-left corner per frame.
    pub positions: Vec<(u32, u32)>,
    pub patch_side: u32,
    pub velocity: (i32, i32),
}

/// A noise patch on a flat background, rigidly translated so that
/// `frame[t](x, y) = frame[t-1](x + dx, y + dy)` everywhere. The patch
/// is placed to keep at least `margin` pixels of background on every
/// side across the whole sequence; panics when the motion cannot fit.
pub fn moving_patch_sequence(
    rng: &mut ChaCha8Rng,
    width: u32,
    height: u32,
    frames: u32,
    velocity: (i32, i32),
    patch_side: u32,
    margin: u32,
) -> MovingPatch {
    assert!(frames >= 1);
    let (dx, dy) = velocity;
    // translate_frame moves content by (-dx, -dy) on screen per step.
    let travel_x = i64::from(dx) * i64::from(frames - 1);
    let travel_y = i64::from(dy) * i64::from(frames - 1);
    let fits = |span: i64, travel: i64, extent: u32| {
        let lo = i64::from(margin) + travel.max(0);
        let hi = i64::from(extent) - i64::from(margin) - span + travel.min(0);
        (lo <= hi).then_some((lo, hi))
    };
    let span = i64::from(patch_side);
    let x_range = fits(span, travel_x, width).expect("patch motion exceeds frame width");
    let y_range = fits(span, travel_y, height).expect("patch motion exceeds frame height");
    // Center the drift.
    let px = (x_range.0 + x_range.1) / 2;
    let py = (y_range.0 + y_range.1) / 2;

    let mut first = vec![BACKGROUND_LUMA; (width * height) as usize];
    for row in 0..patch_side {
        for col in 0..patch_side {
            let x = px as u32 + col;
            let y = py as u32 + row;
            first[(y * width + x) as usize] = rng.gen();
        }
    }
    let mut frames_out = vec![LumaFrame::new(width, height, 0, first).expect("valid dims")];
    let mut positions = vec![(px as u32, py as u32)];
    for i in 1..frames {
        let prev = frames_out.last().unwrap();
        frames_out.push(translate_frame(prev, dx, dy, BACKGROUND_LUMA, u64::from(i)));
        let (prev_x, prev_y) = positions[positions.len() - 1];
        positions.push((
            prev_x.wrapping_add_signed(-dx),
            prev_y.wrapping_add_signed(-dy),
        ));
    }
    MovingPatch {
        frames: frames_out,
        positions,
        patch_side,
        velocity,
    }
}

/// Smooth random texture: bilinear interpolation of a coarse lattice of
/// random values, plus low-amplitude detail noise. Indexing wraps, so
/// the texture tiles seamlessly in both directions.
struct WrappingTexture {
    width: u32,
    height: u32,
    samples: Vec<u8>,
}

impl WrappingTexture {
    fn generate(rng: &mut ChaCha8Rng, width: u32, height: u32, cell: u32, detail: u8) -> Self {
        let grid_w = width.div_ceil(cell).max(1);
        let grid_h = height.div_ceil(cell).max(1);
        let lattice: Vec<u8> = (0..grid_w * grid_h).map(|_| rng.gen()).collect();
        let at = |gx: u32, gy: u32| -> f64 {
            f64::from(lattice[((gy % grid_h) * grid_w + gx % grid_w) as usize])
        };
        let mut samples = Vec::with_capacity((width * height) as usize);
        for y in 0..height {
            for x in 0..width {
                let fx = f64::from(x) / f64::from(cell);
                let fy = f64::from(y) / f64::from(cell);
                let gx = fx.floor() as u32;
                let gy = fy.floor() as u32;
                let tx = fx - fx.floor();
                let ty = fy - fy.floor();
                let top = at(gx, gy) * (1.0 - tx) + at(gx + 1, gy) * tx;
                let bottom = at(gx, gy + 1) * (1.0 - tx) + at(gx + 1, gy + 1) * tx;
                let mut value = top * (1.0 - ty) + bottom * ty;
                if detail > 0 {
                    value += f64::from(rng.gen_range(-i32::from(detail)..=i32::from(detail)));
                }
                samples.push(value.round().clamp(0.0, 255.0) as u8);
            }
        }
        Self {
            width,
            height,
            samples,
        }
    }

    fn sample_wrapped(&self, x: i64, y: i64) -> u8 {
        let x = x.rem_euclid(i64::from(self.width)) as u32;
        let y = y.rem_euclid(i64::from(self.height)) as u32;
        self.samples[(y * self.width + x) as usize]
    }
}

/// Frames that pan across a seamlessly wrapping texture at a constant
/// integer velocity; every frame is an exact cyclic shift of its
/// predecessor, giving sustained trackable motion of any length.
pub fn panning_texture_sequence(
    rng: &mut ChaCha8Rng,
    width: u32,
    height: u32,
    frames: u32,
    velocity: (i32, i32),
    cell: u32,
    detail: u8,
) -> Vec<LumaFrame> {
    let texture = WrappingTexture::generate(rng, width, height, cell, detail);
    (0..frames)
        .map(|i| {
            let off_x = i64::from(velocity.0) * i64::from(i);
            let off_y = i64::from(velocity.1) * i64::from(i);
            LumaFrame::from_fn(width, height, u64::from(i), |x, y| {
                texture.sample_wrapped(i64::from(x) + off_x, i64::from(y) + off_y)
            })
            .expect("valid dims")
        })
        .collect()
}

/// Per-frame additive noise on top of a panning texture.
pub fn panning_texture_with_noise(
    rng: &mut ChaCha8Rng,
    width: u32,
    height: u32,
    frames: u32,
    velocity: (i32, i32),
    cell: u32,
    noise_amplitude: u8,
) -> Vec<LumaFrame> {
    let clean = panning_texture_sequence(rng, width, height, frames, velocity, cell, 0);
    clean
        .into_iter()
        .map(|frame| {
            let amp = i32::from(noise_amplitude);
            LumaFrame::from_fn(frame.width(), frame.height(), frame.index(), |x, y| {
                (i32::from(frame.sample(x, y)) + rng.gen_range(-amp..=amp)).clamp(0, 255) as u8
            })
            .expect("valid dims")
        })
        .collect()
}

/// First half pans a texture, second half is uncorrelated noise.
pub fn scene_cut_sequence(
    rng: &mut ChaCha8Rng,
    width: u32,
    height: u32,
    frames: u32,
    velocity: (i32, i32),
    cell: u32,
    noise_amplitude: u8,
) -> Vec<LumaFrame> {
    let first_half = frames / 2;
    let mut out = panning_texture_sequence(rng, width, height, first_half.max(1), velocity, cell, 0);
    out.truncate(first_half.max(1) as usize);
    let mut index = out.len() as u64;
    while (out.len() as u32) < frames {
        out.push(noise_frame(rng, width, height, index, BACKGROUND_LUMA, noise_amplitude));
        index += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub sequences: usize,
    pub width: u32,
    pub height: u32,
    pub frames: u32,
    pub framerate: Framerate,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            sequences: 20,
            width: 64,
            height: 64,
            frames: 32,
            framerate: Framerate { num: 30, den: 1 },
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusSequence {
    pub id: String,
    pub kind: SynthKind,
    pub frames: Vec<LumaFrame>,
}

/// The bundled corpus: one flat sequence, then noise / panning-texture /
/// noisy-texture / scene-cut sequences with per-sequence parameters
/// drawn from the seeded generator. Sequence `i` uses stream `i` of the
/// seed, so corpora of different sizes share their common prefix.
pub fn generate_corpus(config: &CorpusConfig) -> Vec<CorpusSequence> {
    assert!(config.sequences >= 1);
    (0..config.sequences)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64 + 1);
            let kind = if i == 0 {
                SynthKind::Flat
            } else {
                [
                    SynthKind::Noise,
                    SynthKind::TranslatingTexture,
                    SynthKind::TextureWithNoise,
                    SynthKind::SceneCut,
                ][(i - 1) % 4]
            };
            fn draw_velocity(rng: &mut ChaCha8Rng) -> (i32, i32) {
                let v = (rng.gen_range(-3i32..=3), rng.gen_range(-3i32..=3));
                if v == (0, 0) {
                    (1, 1)
                } else {
                    v
                }
            }
            let frames = match kind {
                SynthKind::Flat => flat_sequence(config.width, config.height, config.frames, 64),
                SynthKind::Noise => {
                    let amplitude = rng.gen_range(6..=72);
                    noise_sequence(&mut rng, config.width, config.height, config.frames, 128, amplitude)
                }
                SynthKind::TranslatingTexture => {
                    let v = draw_velocity(&mut rng);
                    let cell = rng.gen_range(4..=12);
                    panning_texture_sequence(
                        &mut rng,
                        config.width,
                        config.height,
                        config.frames,
                        v,
                        cell,
                        0,
                    )
                }
                SynthKind::TextureWithNoise => {
                    let v = draw_velocity(&mut rng);
                    let cell = rng.gen_range(4..=12);
                    let noise = rng.gen_range(2..=10);
                    panning_texture_with_noise(
                        &mut rng,
                        config.width,
                        config.height,
                        config.frames,
                        v,
                        cell,
                        noise,
                    )
                }
                SynthKind::SceneCut => {
                    let v = draw_velocity(&mut rng);
                    let cell = rng.gen_range(4..=12);
                    let noise = rng.gen_range(20..=60);
                    scene_cut_sequence(
                        &mut rng,
                        config.width,
                        config.height,
                        config.frames,
                        v,
                        cell,
                        noise,
                    )
                }
            };
            CorpusSequence {
                id: format!("synth{i:03}_{}", kind.as_str()),
                kind,
                frames,
            }
        })
        .collect()
}

/// Analyzes an in-memory sequence with the given config; the same result
/// the CLI `analyze` command produces for the written file.
pub fn analyze_frames(
    frames: &[LumaFrame],
    framerate: Framerate,
    config: &AnalysisConfig,
) -> SequenceFeatures {
    let width = frames[0].width();
    let height = frames[0].height();
    let stats = analyze_sequence(
        frames.iter().map(|f| Ok(f.clone())),
        framerate,
        config,
        |_, _| {},
    )
    .expect("in-memory frames analyze cleanly");
    accumulate(&stats, width, height).expect("non-empty sequence")
}

/// Power-law coefficients behind the pseudo ground truth. Higher CRF
/// lowers the curve, the faster preset raises it slightly.
pub fn pseudo_theta(preset: u32, crf: u32) -> [f64; 4] {
    let mut theta = match crf {
        32 => [0.55, 0.95, 0.002, 0.75],
        43 => [0.30, 1.0, 0.001, 0.72],
        55 => [0.14, 1.05, 0.0004, 0.70],
        63 => [0.06, 1.1, 0.0002, 0.65],
        other => panic!("crf {other} outside the supported grid {CRF_GRID:?}"),
    };
    if preset == 10 {
        theta[0] *= 1.15;
        theta[2] *= 1.15;
    }
    theta
}

/// Pseudo encoded size in bits for one (sequence, preset, CRF) cell,
/// floored at 64 bits so even a flat clip stays a positive target.
pub fn pseudo_target_bits(features: &SequenceFeatures, preset: u32, crf: u32) -> u64 {
    let theta = pseudo_theta(preset, crf);
    let bpp = theta[0] * features.bpp_ms.powf(theta[1]) + theta[2] * features.mse_ms.powf(theta[3]);
    let pixels =
        f64::from(features.width) * f64::from(features.height) * features.n_frames as f64;
    (bpp * pixels).round().max(64.0) as u64
}

/// Stand-in spatial/temporal complexity columns: smooth monotone
/// transforms of the measured descriptors, so the external-feature code
/// paths can be exercised without the real tool.
pub fn pseudo_vca(features: &SequenceFeatures) -> (f64, f64) {
    let spatial = 25.0 * (1.0 + features.mse_ms).ln() + 40.0 * features.bpp_ms;
    let temporal = 180.0 * features.bpp_ms + 2.0 * features.ip_ratio;
    (spatial, temporal)
}

/// Full pseudo ground truth for a corpus: encodings for every
/// (preset, CRF) cell plus VCA stand-ins.
pub fn pseudo_ground_truth(
    sequences: &[CorpusSequence],
    framerate: Framerate,
    analysis: &AnalysisConfig,
) -> (Vec<EncodingRow>, Vec<VcaRow>) {
    let mut encodings = Vec::new();
    let mut vca = Vec::new();
    for sequence in sequences {
        let features = analyze_frames(&sequence.frames, framerate, analysis);
        for preset in PRESETS {
            for crf in CRF_GRID {
                encodings.push(EncodingRow {
                    sequence_id: sequence.id.clone(),
                    preset,
                    crf,
                    bits: pseudo_target_bits(&features, preset, crf),
                    frame_count: features.n_frames,
                });
            }
        }
        let (vca_spatial, vca_temporal) = pseudo_vca(&features);
        vca.push(VcaRow {
            sequence_id: sequence.id.clone(),
            vca_spatial,
            vca_temporal,
        });
    }
    (encodings, vca)
}
