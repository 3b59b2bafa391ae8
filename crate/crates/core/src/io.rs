//! Readers and writers for the raw video containers the analyzer accepts:
//! Y4M (YUV4MPEG2) and headerless planar YUV 4:2:0.
//!
//! Both readers are pull-based and single-pass. Chroma planes are read and
//! discarded; only 8-bit 4:2:0 input is accepted, higher bit depths are
//! rejected rather than truncated.

use std::io::{Read, Write};

use thiserror::Error;

use crate::frame::{ColorFormat, FrameError, Framerate, LumaFrame, VideoMeta, MIN_DIMENSION};

const Y4M_MAGIC: &str = "YUV4MPEG2";
const FRAME_MAGIC: &str = "FRAME";
/// Y4M streams without an F token get this rate; mjpegtools uses the same default.
const DEFAULT_FRAMERATE: Framerate = Framerate { num: 25, den: 1 };
const MAX_HEADER_LINE: usize = 4096;

#[derive(Debug, Error)]
pub enum FrameIoError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("truncated payload in frame {index}")]
    TruncatedFrame { index: u64 },
    #[error("width and height must be nonzero")]
    ZeroDimension,
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

fn plane_sizes(width: u32, height: u32) -> (usize, usize) {
    let luma = width as usize * height as usize;
    let chroma = width.div_ceil(2) as usize * height.div_ceil(2) as usize;
    (luma, chroma)
}

/// Reads into `buf` until it is full or the source is exhausted; returns the
/// number of bytes actually read.
fn read_up_to<R: Read>(reader: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}

fn check_dimensions(width: u32, height: u32) -> Result<(), FrameIoError> {
    if width == 0 || height == 0 {
        return Err(FrameIoError::ZeroDimension);
    }
    if width < MIN_DIMENSION || height < MIN_DIMENSION {
        return Err(FrameIoError::UnsupportedFormat(format!(
            "{width}x{height} is below the analyzable minimum of {MIN_DIMENSION}x{MIN_DIMENSION}"
        )));
    }
    Ok(())
}

/// Streaming luma-frame source over either supported container.
pub enum FrameReader<R: Read> {
    Y4m(Y4mReader<R>),
    Raw(RawYuvReader<R>),
}

impl<R: Read> FrameReader<R> {
    pub fn meta(&self) -> VideoMeta {
        match self {
            FrameReader::Y4m(r) => r.meta(),
            FrameReader::Raw(r) => r.meta(),
        }
    }

    pub fn frames_read(&self) -> u64 {
        match self {
            FrameReader::Y4m(r) => r.frames_read(),
            FrameReader::Raw(r) => r.frames_read(),
        }
    }

    pub fn next_frame(&mut self) -> Result<Option<LumaFrame>, FrameIoError> {
        match self {
            FrameReader::Y4m(r) => r.next_frame(),
            FrameReader::Raw(r) => r.next_frame(),
        }
    }
}

impl<R: Read> Iterator for FrameReader<R> {
    type Item = Result<LumaFrame, FrameIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

/// Opens a Y4M stream, parsing the signature line (`W`/`H`/`F`/`C` tokens).
pub fn open_y4m<R: Read>(source: R) -> Result<Y4mReader<R>, FrameIoError> {
    Y4mReader::new(source)
}

/// Opens a headerless planar 4:2:0 stream with caller-supplied geometry.
pub fn open_raw_yuv<R: Read>(
    source: R,
    width: u32,
    height: u32,
    framerate: Framerate,
) -> Result<RawYuvReader<R>, FrameIoError> {
    RawYuvReader::new(source, width, height, framerate)
}

pub struct Y4mReader<R: Read> {
    source: R,
    width: u32,
    height: u32,
    framerate: Framerate,
    frames_read: u64,
    finished: bool,
    chroma_scratch: Vec<u8>,
}

impl<R: Read> Y4mReader<R> {
    fn new(mut source: R) -> Result<Self, FrameIoError> {
        let header = read_header_line(&mut source)?;
        let mut tokens = header.split(' ').filter(|t| !t.is_empty());
        match tokens.next() {
            Some(Y4M_MAGIC) => {}
            Some(other) => {
                return Err(FrameIoError::MalformedHeader(format!(
                    "bad magic `{other}`, expected `{Y4M_MAGIC}`"
                )))
            }
            None => return Err(FrameIoError::MalformedHeader("empty header line".into())),
        }

        let mut width = None;
        let mut height = None;
        let mut framerate = None;
        for token in tokens {
            // Unknown parameters are skipped, including ones starting
            // with a non-ASCII character (split_at(1) would panic there).
            let Some((key, value)) = token.split_at_checked(1) else {
                continue;
            };
            match key {
                "W" => {
                    width = Some(value.parse::<u32>().map_err(|_| {
                        FrameIoError::MalformedHeader(format!("invalid width `{value}`"))
                    })?)
                }
                "H" => {
                    height = Some(value.parse::<u32>().map_err(|_| {
                        FrameIoError::MalformedHeader(format!("invalid height `{value}`"))
                    })?)
                }
                "F" => {
                    let (num, den) = value.split_once(':').ok_or_else(|| {
                        FrameIoError::MalformedHeader(format!("invalid framerate `{value}`"))
                    })?;
                    let num = num.parse::<u32>().ok();
                    let den = den.parse::<u32>().ok();
                    framerate = match (num, den) {
                        (Some(n), Some(d)) => Some(Framerate::new(n, d).map_err(|_| {
                            FrameIoError::MalformedHeader(format!("invalid framerate `{value}`"))
                        })?),
                        _ => {
                            return Err(FrameIoError::MalformedHeader(format!(
                                "invalid framerate `{value}`"
                            )))
                        }
                    };
                }
                "C" => check_colorspace(value)?,
                // Interlacing, aspect ratio and X extensions do not affect
                // luma extraction.
                _ => {}
            }
        }

        let width = width
            .ok_or_else(|| FrameIoError::MalformedHeader("missing W parameter".into()))?;
        let height = height
            .ok_or_else(|| FrameIoError::MalformedHeader("missing H parameter".into()))?;
        check_dimensions(width, height)?;
        let (_, chroma) = plane_sizes(width, height);

        Ok(Self {
            source,
            width,
            height,
            framerate: framerate.unwrap_or(DEFAULT_FRAMERATE),
            frames_read: 0,
            finished: false,
            chroma_scratch: vec![0; chroma],
        })
    }

    pub fn meta(&self) -> VideoMeta {
        VideoMeta {
            width: self.width,
            height: self.height,
            framerate: self.framerate,
            frame_count: self.finished.then_some(self.frames_read),
            color_format: ColorFormat::Yuv420p8,
        }
    }

    pub fn frames_read(&self) -> u64 {
        self.frames_read
    }

    pub fn next_frame(&mut self) -> Result<Option<LumaFrame>, FrameIoError> {
        if self.finished {
            return Ok(None);
        }
        // A frame starts with a FRAME marker line; clean EOF happens here.
        let mut first = [0u8; 1];
        if read_up_to(&mut self.source, &mut first)? == 0 {
            self.finished = true;
            return Ok(None);
        }
        let mut marker = vec![first[0]];
        loop {
            let mut byte = [0u8; 1];
            if read_up_to(&mut self.source, &mut byte)? == 0 {
                return Err(FrameIoError::TruncatedFrame {
                    index: self.frames_read,
                });
            }
            if byte[0] == b'\n' {
                break;
            }
            if marker.len() >= MAX_HEADER_LINE {
                return Err(FrameIoError::MalformedHeader(
                    "unterminated frame marker line".into(),
                ));
            }
            marker.push(byte[0]);
        }
        let marker = String::from_utf8(marker)
            .map_err(|_| FrameIoError::MalformedHeader("non-UTF-8 frame marker".into()))?;
        if marker != FRAME_MAGIC && !marker.starts_with("FRAME ") {
            return Err(FrameIoError::MalformedHeader(format!(
                "expected FRAME marker, found `{marker}`"
            )));
        }

        let (luma_len, _) = plane_sizes(self.width, self.height);
        let mut luma = vec![0u8; luma_len];
        if read_up_to(&mut self.source, &mut luma)? != luma_len {
            return Err(FrameIoError::TruncatedFrame {
                index: self.frames_read,
            });
        }
        for _ in 0..2 {
            let want = self.chroma_scratch.len();
            if read_up_to(&mut self.source, &mut self.chroma_scratch)? != want {
                return Err(FrameIoError::TruncatedFrame {
                    index: self.frames_read,
                });
            }
        }

        let frame = LumaFrame::new(self.width, self.height, self.frames_read, luma)?;
        self.frames_read += 1;
        Ok(Some(frame))
    }
}

impl<R: Read> Iterator for Y4mReader<R> {
    type Item = Result<LumaFrame, FrameIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

fn read_header_line<R: Read>(source: &mut R) -> Result<String, FrameIoError> {
    let mut line = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        if read_up_to(source, &mut byte)? == 0 {
            return Err(FrameIoError::MalformedHeader(
                "stream ended before the header line terminator".into(),
            ));
        }
        if byte[0] == b'\n' {
            break;
        }
        if line.len() >= MAX_HEADER_LINE {
            return Err(FrameIoError::MalformedHeader(
                "unterminated header line".into(),
            ));
        }
        line.push(byte[0]);
    }
    String::from_utf8(line)
        .map_err(|_| FrameIoError::MalformedHeader("non-UTF-8 header line".into()))
}

fn check_colorspace(value: &str) -> Result<(), FrameIoError> {
    match value {
        "420" | "420jpeg" | "420mpeg2" | "420paldv" => Ok(()),
        other if other.starts_with("420p") => Err(FrameIoError::UnsupportedFormat(format!(
            "colorspace `{other}` exceeds 8-bit depth"
        ))),
        other => Err(FrameIoError::UnsupportedFormat(format!(
            "colorspace `{other}` is not 8-bit 4:2:0"
        ))),
    }
}

pub struct RawYuvReader<R: Read> {
    source: R,
    width: u32,
    height: u32,
    framerate: Framerate,
    frames_read: u64,
    finished: bool,
    chroma_scratch: Vec<u8>,
}

impl<R: Read> RawYuvReader<R> {
    fn new(source: R, width: u32, height: u32, framerate: Framerate) -> Result<Self, FrameIoError> {
        check_dimensions(width, height)?;
        let (_, chroma) = plane_sizes(width, height);
        Ok(Self {
            source,
            width,
            height,
            framerate,
            frames_read: 0,
            finished: false,
            chroma_scratch: vec![0; chroma],
        })
    }

    pub fn meta(&self) -> VideoMeta {
        VideoMeta {
            width: self.width,
            height: self.height,
            framerate: self.framerate,
            frame_count: self.finished.then_some(self.frames_read),
            color_format: ColorFormat::Yuv420p8,
        }
    }

    pub fn frames_read(&self) -> u64 {
        self.frames_read
    }

    pub fn next_frame(&mut self) -> Result<Option<LumaFrame>, FrameIoError> {
        if self.finished {
            return Ok(None);
        }
        let (luma_len, _) = plane_sizes(self.width, self.height);
        let mut luma = vec![0u8; luma_len];
        let got = read_up_to(&mut self.source, &mut luma)?;
        if got == 0 {
            self.finished = true;
            return Ok(None);
        }
        if got != luma_len {
            return Err(FrameIoError::TruncatedFrame {
                index: self.frames_read,
            });
        }
        for _ in 0..2 {
            let want = self.chroma_scratch.len();
            if read_up_to(&mut self.source, &mut self.chroma_scratch)? != want {
                return Err(FrameIoError::TruncatedFrame {
                    index: self.frames_read,
                });
            }
        }

        let frame = LumaFrame::new(self.width, self.height, self.frames_read, luma)?;
        self.frames_read += 1;
        Ok(Some(frame))
    }
}

impl<R: Read> Iterator for RawYuvReader<R> {
    type Item = Result<LumaFrame, FrameIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

/// Writes Y4M with neutral (128) chroma planes, which round-trips luma
/// bit-exactly through [`open_y4m`].
pub struct Y4mWriter<W: Write> {
    sink: W,
    width: u32,
    height: u32,
    chroma: Vec<u8>,
}

impl<W: Write> Y4mWriter<W> {
    pub fn new(
        mut sink: W,
        width: u32,
        height: u32,
        framerate: Framerate,
    ) -> Result<Self, FrameIoError> {
        check_dimensions(width, height)?;
        writeln!(
            sink,
            "{Y4M_MAGIC} W{width} H{height} F{}:{} Ip A1:1 C420jpeg",
            framerate.num, framerate.den
        )?;
        let (_, chroma) = plane_sizes(width, height);
        Ok(Self {
            sink,
            width,
            height,
            chroma: vec![128; chroma],
        })
    }

    pub fn write_frame(&mut self, frame: &LumaFrame) -> Result<(), FrameIoError> {
        if frame.width() != self.width || frame.height() != self.height {
            return Err(FrameIoError::UnsupportedFormat(format!(
                "frame is {}x{}, writer expects {}x{}",
                frame.width(),
                frame.height(),
                self.width,
                self.height
            )));
        }
        self.sink.write_all(FRAME_MAGIC.as_bytes())?;
        self.sink.write_all(b"\n")?;
        self.sink.write_all(frame.samples())?;
        self.sink.write_all(&self.chroma)?;
        self.sink.write_all(&self.chroma)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, FrameIoError> {
        self.sink.flush()?;
        Ok(self.sink)
    }
}

/// Convenience wrapper writing a whole sequence in one call.
pub fn write_y4m<'a, W: Write>(
    sink: W,
    framerate: Framerate,
    frames: impl IntoIterator<Item = &'a LumaFrame>,
) -> Result<(), FrameIoError> {
    let mut frames = frames.into_iter().peekable();
    let first = frames.peek().ok_or_else(|| {
        FrameIoError::UnsupportedFormat("cannot write a Y4M stream with no frames".into())
    })?;
    let mut writer = Y4mWriter::new(sink, first.width(), first.height(), framerate)?;
    for frame in frames {
        writer.write_frame(frame)?;
    }
    writer.finish()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y4m_bytes(header: &str, frames: &[(&[u8], u8, u8)], w: u32, h: u32) -> Vec<u8> {
        let (_, chroma) = plane_sizes(w, h);
        let mut data = header.as_bytes().to_vec();
        data.push(b'\n');
        for (luma, u, v) in frames {
            data.extend_from_slice(b"FRAME\n");
            data.extend_from_slice(luma);
            data.extend(vec![*u; chroma]);
            data.extend(vec![*v; chroma]);
        }
        data
    }

    #[test]
    fn parses_header_grammar() {
        let luma = vec![10u8; 64 * 48];
        let data = y4m_bytes("YUV4MPEG2 W64 H48 F30:1 Ip A1:1 C420jpeg", &[(&luma, 1, 2)], 64, 48);
        let mut reader = open_y4m(data.as_slice()).unwrap();
        let meta = reader.meta();
        assert_eq!(meta.width, 64);
        assert_eq!(meta.height, 48);
        assert_eq!(meta.framerate, Framerate { num: 30, den: 1 });
        assert_eq!(meta.color_format, ColorFormat::Yuv420p8);
        assert_eq!(meta.frame_count, None);
        let frame = reader.next_frame().unwrap().unwrap();
        assert_eq!(frame.samples(), &luma[..]);
        assert!(reader.next_frame().unwrap().is_none());
        assert_eq!(reader.meta().frame_count, Some(1));
    }

    #[test]
    fn unknown_and_non_ascii_parameters_are_ignored() {
        let luma = vec![1u8; 64 * 48];
        let data = y4m_bytes(
            "YUV4MPEG2 W64 H48 F30:1 Ip A1:1 Xcustom=1 \u{00c4}weird C420",
            &[(&luma, 0, 0)],
            64,
            48,
        );
        let mut reader = open_y4m(data.as_slice()).unwrap();
        assert_eq!(reader.meta().width, 64);
        assert!(reader.next_frame().unwrap().is_some());
    }

    #[test]
    fn rejects_bad_magic() {
        let err = open_y4m(&b"YUV4MPEG3 W64 H48 F30:1\n"[..]).err().unwrap();
        assert!(matches!(err, FrameIoError::MalformedHeader(_)));
    }

    #[test]
    fn rejects_missing_dimensions_and_bad_depth() {
        assert!(matches!(
            open_y4m(&b"YUV4MPEG2 H48 F30:1\n"[..]).err().unwrap(),
            FrameIoError::MalformedHeader(_)
        ));
        assert!(matches!(
            open_y4m(&b"YUV4MPEG2 W64 H48 C420p10\n"[..]).err().unwrap(),
            FrameIoError::UnsupportedFormat(_)
        ));
        assert!(matches!(
            open_y4m(&b"YUV4MPEG2 W64 H48 C444\n"[..]).err().unwrap(),
            FrameIoError::UnsupportedFormat(_)
        ));
    }

    #[test]
    fn yields_exactly_the_stored_frames() {
        // 2-frame 64x48 stream: payload is 2 * (64*48 + 2 * 32*24) bytes plus markers.
        let w = 64;
        let h = 48;
        let luma_a = vec![7u8; (w * h) as usize];
        let luma_b = vec![9u8; (w * h) as usize];
        let data = y4m_bytes(
            "YUV4MPEG2 W64 H48 F30:1 Ip A1:1 C420jpeg",
            &[(&luma_a, 0, 0), (&luma_b, 0, 0)],
            w,
            h,
        );
        let expected_payload = "YUV4MPEG2 W64 H48 F30:1 Ip A1:1 C420jpeg\n".len()
            + 2 * ("FRAME\n".len() + (64 * 48 + 2 * 32 * 24));
        assert_eq!(data.len(), expected_payload);

        let mut reader = open_y4m(data.as_slice()).unwrap();
        let mut indices = Vec::new();
        while let Some(frame) = reader.next_frame().unwrap() {
            indices.push(frame.index());
        }
        assert_eq!(indices, vec![0, 1]);
        assert_eq!(reader.frames_read(), 2);
        assert_eq!(reader.meta().frame_count, Some(2));
    }

    #[test]
    fn truncated_y4m_frame_is_an_error() {
        let luma = vec![10u8; 64 * 48];
        let mut data = y4m_bytes("YUV4MPEG2 W64 H48 F30:1", &[(&luma, 0, 0)], 64, 48);
        data.truncate(data.len() - 5);
        let mut reader = open_y4m(data.as_slice()).unwrap();
        assert!(matches!(
            reader.next_frame().unwrap_err(),
            FrameIoError::TruncatedFrame { index: 0 }
        ));
    }

    #[test]
    fn chroma_content_does_not_affect_luma_stream() {
        let luma = vec![42u8; 64 * 48];
        let a = y4m_bytes("YUV4MPEG2 W64 H48 F25:1", &[(&luma, 0, 255)], 64, 48);
        let b = y4m_bytes("YUV4MPEG2 W64 H48 F25:1", &[(&luma, 128, 17)], 64, 48);
        let frames_a: Vec<_> = open_y4m(a.as_slice()).unwrap().map(Result::unwrap).collect();
        let frames_b: Vec<_> = open_y4m(b.as_slice()).unwrap().map(Result::unwrap).collect();
        assert_eq!(frames_a, frames_b);
    }

    #[test]
    fn raw_reader_handles_exact_and_partial_payloads() {
        let fr = Framerate { num: 30, den: 1 };
        let (luma, chroma) = plane_sizes(64, 48);
        let frame_size = luma + 2 * chroma;

        let exact = vec![0u8; frame_size];
        let mut reader = open_raw_yuv(exact.as_slice(), 64, 48, fr).unwrap();
        let frame = reader.next_frame().unwrap().unwrap();
        assert!(frame.samples().iter().all(|&s| s == 0));
        assert!(reader.next_frame().unwrap().is_none());
        assert_eq!(reader.meta().frame_count, Some(1));

        let partial = vec![0u8; frame_size + frame_size / 2];
        let mut reader = open_raw_yuv(partial.as_slice(), 64, 48, fr).unwrap();
        assert!(reader.next_frame().unwrap().is_some());
        assert!(matches!(
            reader.next_frame().unwrap_err(),
            FrameIoError::TruncatedFrame { index: 1 }
        ));

        assert!(matches!(
            open_raw_yuv(&[][..], 0, 48, fr).err().unwrap(),
            FrameIoError::ZeroDimension
        ));
    }

    #[test]
    fn y4m_round_trip_is_bit_exact() {
        let mut rng_state = 0x12345u64;
        let mut next = move || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng_state >> 33) as u8
        };
        let frames: Vec<LumaFrame> = (0..3)
            .map(|i| LumaFrame::from_fn(32, 16, i, |_, _| next()).unwrap())
            .collect();
        let mut bytes = Vec::new();
        write_y4m(&mut bytes, Framerate { num: 24, den: 1 }, &frames).unwrap();
        let decoded: Vec<_> = open_y4m(bytes.as_slice())
            .unwrap()
            .map(Result::unwrap)
            .collect();
        assert_eq!(decoded, frames);
    }
}
