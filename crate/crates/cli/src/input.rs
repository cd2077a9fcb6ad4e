//! Frame sources shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::builder::TypedValueParser;
use clap::Args;
use thermobg::io::{list_pgm_files, read_pgm, read_raw_sequence, Endianness};
use thermobg::{BitDepth, Frame, FrameSequence};

use crate::failure::Failure;

/// `WIDTHxHEIGHT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Size {
    pub width: usize,
    pub height: usize,
}

impl std::str::FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<usize>().ok().filter(|&n| n > 0);
        match (parse(w), parse(h)) {
            (Some(width), Some(height)) => Ok(Size { width, height }),
            _ => Err(format!("expected positive WIDTHxHEIGHT, got `{s}`")),
        }
    }
}

impl std::fmt::Display for Size {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Directory of PGM frames (lexicographic order) or a headerless raw file.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Treat the input as raw samples of this geometry.
    #[arg(long, value_name = "WxH")]
    pub raw: Option<Size>,
    /// Bits per raw sample.
    #[arg(long, default_value_t = 8, value_parser = clap::builder::PossibleValuesParser::new(["8", "16"]).map(|s| s.parse::<u32>().unwrap()))]
    pub depth: u32,
    /// Byte order of 16-bit raw samples.
    #[arg(long, default_value = "le", value_parser = ["le", "be"])]
    pub endian: String,
}

/// Frames with the file names masks are written under.
pub struct Source {
    pub frames: Vec<Frame>,
    pub names: Vec<String>,
}

impl InputArgs {
    pub fn load(&self) -> Result<Source> {
        match self.raw {
            Some(size) => {
                let depth = BitDepth::from_bits(self.depth)?;
                let endian: Endianness = self.endian.parse()?;
                let seq = read_raw_sequence(&self.input, size.width, size.height, depth, endian)?;
                let frames = seq.into_frames();
                let names = (0..frames.len()).map(|i| format!("{i:06}.pgm")).collect();
                Ok(Source { frames, names })
            }
            None => load_dir(&self.input),
        }
    }
}

pub fn load_dir(dir: &Path) -> Result<Source> {
    if !dir.is_dir() {
        return Err(Failure::data(format!(
            "{} is not a directory (use --raw for raw files)",
            dir.display()
        ))
        .into());
    }
    let files = list_pgm_files(dir)?;
    if files.is_empty() {
        return Err(Failure::data(format!("no .pgm files in {}", dir.display())).into());
    }
    let frames = files.iter().map(read_pgm).collect::<thermobg::Result<Vec<_>>>()?;
    // Validates uniform geometry.
    let frames = FrameSequence::new(frames)?.into_frames();
    let names = files.iter().map(|p| file_name(p)).collect();
    Ok(Source { frames, names })
}

pub fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
