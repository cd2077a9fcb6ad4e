//! Text persistence of a grid's models.
//!
//! ```text
//! VIMM1 <width> <height> <N> <levels>
//! K w1 m1 v1 ... wK mK vK        (one line per pixel, row-major)
//! ```
//!
//! Reals are written with 17 significant digits so a load restores every bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::engine::{EngineConfig, PixelGrid};
use crate::error::{Error, Result};
use crate::mixture::{GaussianComponent, MixtureModel};

const MAGIC: &str = "VIMM1";

pub fn encode_grid(grid: &PixelGrid) -> String {
    let mut out = Vec::with_capacity(grid.models().len() * 64);
    writeln!(
        out,
        "{MAGIC} {} {} {} {}",
        grid.width(),
        grid.height(),
        grid.history_len(),
        grid.intensity_levels()
    )
    .expect("writing to memory");
    for m in grid.models() {
        write!(out, "{}", m.len()).expect("writing to memory");
        for c in m.components() {
            write!(out, " {:.16e} {:.16e} {:.16e}", c.weight, c.mean, c.variance).expect("writing to memory");
        }
        out.push(b'\n');
    }
    String::from_utf8(out).expect("ascii output")
}

pub fn save_grid(grid: &PixelGrid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_grid(grid)).map_err(|e| Error::io(path, e))
}

/// Whitespace-separated tokens with their byte offsets.
struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next_in_line(&mut self, pixel: Option<usize>, what: &str) -> Result<(usize, &'a str)> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos] == b' ' || bytes[self.pos] == b'\t') {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < bytes.len() && !bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            let msg = if start >= bytes.len() {
                format!("unexpected end of input, expected {what}")
            } else {
                format!("expected {what}")
            };
            return Err(Error::parse(start, pixel, msg));
        }
        Ok((start, &self.text[start..self.pos]))
    }

    fn end_line(&mut self, pixel: Option<usize>) -> Result<()> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len()
            && (bytes[self.pos] == b' ' || bytes[self.pos] == b'\t' || bytes[self.pos] == b'\r')
        {
            self.pos += 1;
        }
        match bytes.get(self.pos) {
            Some(b'\n') => {
                self.pos += 1;
                Ok(())
            }
            None => Ok(()),
            Some(_) => Err(Error::parse(self.pos, pixel, "trailing data on line")),
        }
    }

    fn parse<T: std::str::FromStr>(&mut self, pixel: Option<usize>, what: &str) -> Result<T> {
        let (at, tok) = self.next_in_line(pixel, what)?;
        tok.parse()
            .map_err(|_| Error::parse(at, pixel, format!("invalid {what} `{tok}`")))
    }
}

/// Parses a persisted grid; `config` supplies the runtime settings.
pub fn decode_grid(text: &str, config: EngineConfig) -> Result<PixelGrid> {
    let mut t = Tokens { text, pos: 0 };
    let (at, magic) = t.next_in_line(None, "magic")?;
    if magic != MAGIC {
        return Err(Error::parse(at, None, format!("expected {MAGIC}, found `{magic}`")));
    }
    let width: usize = t.parse(None, "width")?;
    let height: usize = t.parse(None, "height")?;
    let n: usize = t.parse(None, "history length")?;
    let levels: u32 = t.parse(None, "intensity levels")?;
    t.end_line(None)?;
    if width == 0 || height == 0 || n == 0 || levels == 0 {
        return Err(Error::parse(0, None, "header values must be positive"));
    }

    let mut models = Vec::with_capacity(width * height);
    for pixel in 0..width * height {
        let p = Some(pixel);
        let (at, tok) = t.next_in_line(p, "component count")?;
        let k: usize = tok
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::parse(at, p, format!("invalid component count `{tok}`")))?;
        let mut comps = Vec::with_capacity(k);
        for _ in 0..k {
            let start = t.pos;
            let weight: f64 = t.parse(p, "weight")?;
            let mean: f64 = t.parse(p, "mean")?;
            let variance: f64 = t.parse(p, "variance")?;
            comps.push(
                GaussianComponent::new(weight, mean, variance).map_err(|e| Error::parse(start, p, e.to_string()))?,
            );
        }
        t.end_line(p)?;
        let model = MixtureModel::from_raw_parts(comps, n, levels).map_err(|e| Error::parse(at, p, e.to_string()))?;
        models.push(model);
    }
    let rest = &text[t.pos..];
    if let Some(extra) = rest.find(|c: char| !c.is_ascii_whitespace()) {
        return Err(Error::parse(t.pos + extra, None, "data after the last pixel"));
    }
    let mut config = config;
    config.fit.history_len = n;
    config.fit.intensity_levels = levels;
    config.fit.k_max = config.fit.k_max.min(n);
    PixelGrid::from_models(width, height, models, None, config)
}

pub fn load_grid(path: impl AsRef<Path>, config: EngineConfig) -> Result<PixelGrid> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_grid(&text, config)
}
