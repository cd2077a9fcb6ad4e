//! Binary PGM (P5) frames and masks, and headerless raw sequences.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::frame::{BitDepth, Frame, FrameSequence, Label, MaskFrame};

/// Gray level marking pixels excluded from evaluation in ground-truth masks.
pub const IGNORE_LEVEL: u16 = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Endianness {
    #[default]
    Little,
    Big,
}

impl std::str::FromStr for Endianness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "le" | "little" => Ok(Self::Little),
            "be" | "big" => Ok(Self::Big),
            other => Err(Error::config(format!("unknown endianness `{other}`"))),
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start, None, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(start, None, format!("{what} out of range")))
    }
}

/// Decodes a P5 image held in memory.
pub fn parse_pgm(bytes: &[u8]) -> Result<Frame> {
    match bytes.get(..2) {
        Some(b"P5") => {}
        Some([b'P', v]) if v.is_ascii_digit() => {
            return Err(Error::Unsupported(format!("unsupported variant P{}", *v as char)))
        }
        _ => return Err(Error::parse(0, None, "missing P5 magic number")),
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::parse(cur.pos, None, "zero image dimension"));
    }
    let depth = match maxval {
        1..=255 => BitDepth::Eight,
        256..=65535 => BitDepth::Sixteen,
        _ => return Err(Error::parse(cur.pos, None, format!("maxval {maxval} not in 1..=65535"))),
    };
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::parse(cur.pos, None, "expected whitespace after maxval")),
    }
    let payload = &bytes[cur.pos..];
    let need = width * height * depth.bytes();
    if payload.len() < need {
        return Err(Error::parse(
            bytes.len(),
            None,
            format!("truncated payload: expected {need} bytes, found {}", payload.len()),
        ));
    }
    let data = match depth {
        BitDepth::Eight => payload[..need].iter().map(|&b| b as u16).collect(),
        BitDepth::Sixteen => payload[..need]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect(),
    };
    Frame::new(width, height, depth, data)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    parse_pgm(&read_bytes(path)?).map_err(|e| match e {
        Error::Parse { offset, pixel, message } => Error::Parse {
            offset,
            pixel,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Encodes a frame as P5 with maxval 255 or 65535.
pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let depth = frame.depth();
    let mut out = format!("P5\n{} {}\n{}\n", frame.width(), frame.height(), depth.max_value()).into_bytes();
    out.reserve(frame.len() * depth.bytes());
    for &v in frame.data() {
        match depth {
            BitDepth::Eight => out.push(v as u8),
            BitDepth::Sixteen => out.extend_from_slice(&v.to_be_bytes()),
        }
    }
    out
}

pub fn write_pgm(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pgm(frame))
}

/// Foreground 255, background (and ignore) 0.
pub fn mask_to_frame(mask: &MaskFrame) -> Frame {
    let data = mask
        .labels()
        .iter()
        .map(|&l| if l == Label::Foreground { 255 } else { 0 })
        .collect();
    Frame::new(mask.width(), mask.height(), BitDepth::Eight, data).expect("mask geometry is valid")
}

pub fn write_mask(mask: &MaskFrame, path: impl AsRef<Path>) -> Result<()> {
    write_pgm(&mask_to_frame(mask), path)
}

/// Interprets gray levels as labels: 128 ignore, above 128 foreground.
pub fn frame_to_mask(frame: &Frame) -> MaskFrame {
    let scale = if frame.depth() == BitDepth::Sixteen { 257 } else { 1 };
    let labels = frame
        .data()
        .iter()
        .map(|&v| match v.cmp(&(IGNORE_LEVEL * scale)) {
            std::cmp::Ordering::Equal => Label::Ignore,
            std::cmp::Ordering::Greater => Label::Foreground,
            std::cmp::Ordering::Less => Label::Background,
        })
        .collect();
    MaskFrame::new(frame.width(), frame.height(), labels).expect("frame geometry is valid")
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<MaskFrame> {
    Ok(frame_to_mask(&read_pgm(path)?))
}

/// round(p·65535) per pixel.
pub fn quantize_posterior(p: f64) -> u16 {
    (p.clamp(0.0, 1.0) * 65535.0).round() as u16
}

/// Writes the mask's posterior as a 16-bit PGM; errors if it has none.
pub fn write_posterior(mask: &MaskFrame, path: impl AsRef<Path>) -> Result<()> {
    let post = mask
        .posterior()
        .ok_or_else(|| Error::config("mask carries no posterior"))?;
    let data = post.iter().map(|&p| quantize_posterior(p)).collect();
    write_pgm(&Frame::new(mask.width(), mask.height(), BitDepth::Sixteen, data)?, path)
}

/// Splits a headerless buffer into frames of the declared geometry.
pub fn parse_raw_sequence(
    bytes: &[u8],
    width: usize,
    height: usize,
    depth: BitDepth,
    endianness: Endianness,
) -> Result<FrameSequence> {
    let frame_bytes = width * height * depth.bytes();
    if frame_bytes == 0 {
        return Err(Error::config("raw geometry must be positive"));
    }
    if !bytes.len().is_multiple_of(frame_bytes) {
        return Err(Error::Length {
            expected: frame_bytes,
            actual: bytes.len(),
        });
    }
    let frames = bytes
        .chunks_exact(frame_bytes)
        .map(|chunk| {
            let data = match depth {
                BitDepth::Eight => chunk.iter().map(|&b| b as u16).collect(),
                BitDepth::Sixteen => chunk
                    .chunks_exact(2)
                    .map(|c| match endianness {
                        Endianness::Little => u16::from_le_bytes([c[0], c[1]]),
                        Endianness::Big => u16::from_be_bytes([c[0], c[1]]),
                    })
                    .collect(),
            };
            Frame::new(width, height, depth, data)
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames)
}

pub fn read_raw_sequence(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    depth: BitDepth,
    endianness: Endianness,
) -> Result<FrameSequence> {
    parse_raw_sequence(&read_bytes(path.as_ref())?, width, height, depth, endianness)
}

/// `*.pgm` files of a directory in lexicographic filename order.
pub fn list_pgm_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn read_frame_dir(dir: impl AsRef<Path>) -> Result<FrameSequence> {
    let frames = list_pgm_files(dir)?.iter().map(read_pgm).collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames)
}
