//! Decoded-frame primitives shared by the whole analysis pipeline.
//!
//! Analysis runs on the luma plane only, so a decoded frame is a flat
//! row-major buffer of 8-bit samples plus its dimensions and ordinal.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest width/height that still contains one analyzable 16x16 block.
pub const MIN_DIMENSION: u32 = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("frame dimensions {width}x{height} are below the {MIN_DIMENSION}x{MIN_DIMENSION} minimum")]
    TooSmall { width: u32, height: u32 },
    #[error("sample buffer holds {got} values, expected {expected} for {width}x{height}")]
    SampleCountMismatch {
        width: u32,
        height: u32,
        expected: usize,
        got: usize,
    },
    #[error("framerate numerator and denominator must both be positive")]
    InvalidFramerate,
    #[error("cannot parse framerate from `{0}`, expected `num` or `num/den`")]
    UnparsableFramerate(String),
}

/// Frames per second as an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Framerate {
    pub num: u32,
    pub den: u32,
}

impl Framerate {
    pub fn new(num: u32, den: u32) -> Result<Self, FrameError> {
        if num == 0 || den == 0 {
            return Err(FrameError::InvalidFramerate);
        }
        Ok(Self { num, den })
    }

    pub fn fps(&self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl fmt::Display for Framerate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Framerate {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, FrameError> {
        let bad = || FrameError::UnparsableFramerate(s.to_owned());
        match s.split_once('/') {
            Some((num, den)) => {
                let num = num.trim().parse().map_err(|_| bad())?;
                let den = den.trim().parse().map_err(|_| bad())?;
                Framerate::new(num, den).map_err(|_| bad())
            }
            None => {
                let num = s.trim().parse().map_err(|_| bad())?;
                Framerate::new(num, 1).map_err(|_| bad())
            }
        }
    }
}

/// Pixel layouts the readers accept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColorFormat {
    /// Planar 4:2:0 with 8-bit samples.
    Yuv420p8,
}

/// Container-level description of a video stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub width: u32,
    pub height: u32,
    pub framerate: Framerate,
    /// Total frames in the stream; `None` until the stream has been read
    /// to its end (neither Y4M nor raw YUV headers carry a frame count).
    pub frame_count: Option<u64>,
    pub color_format: ColorFormat,
}

/// One decoded luma plane.
///
/// Samples are row-major, `width * height` of them, always 8-bit. Values
/// are analyzed as stored; no full/limited range conversion is applied.
#[derive(Clone, PartialEq, Eq)]
pub struct LumaFrame {
    width: u32,
    height: u32,
    index: u64,
    samples: Vec<u8>,
}

impl LumaFrame {
    pub fn new(width: u32, height: u32, index: u64, samples: Vec<u8>) -> Result<Self, FrameError> {
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(FrameError::TooSmall { width, height });
        }
        let expected = width as usize * height as usize;
        if samples.len() != expected {
            return Err(FrameError::SampleCountMismatch {
                width,
                height,
                expected,
                got: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            index,
            samples,
        })
    }

    /// Builds a frame by evaluating `f(x, y)` over the plane.
    pub fn from_fn(
        width: u32,
        height: u32,
        index: u64,
        mut f: impl FnMut(u32, u32) -> u8,
    ) -> Result<Self, FrameError> {
        let mut samples = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, index, samples)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn sample(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.samples[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        let start = y as usize * w;
        &self.samples[start..start + w]
    }

    /// Copy with a different ordinal, e.g. when re-sequencing synthetic frames.
    pub fn with_index(mut self, index: u64) -> Self {
        self.index = index;
        self
    }
}

impl fmt::Debug for LumaFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LumaFrame")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("index", &self.index)
            .finish_non_exhaustive()
    }
}
