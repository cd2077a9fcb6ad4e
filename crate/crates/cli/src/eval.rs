use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thermobg::eval::{accumulate, metrics};
use thermobg::io::{list_pgm_files, read_mask};
use thermobg::{ConfusionCounts, Metrics};

use crate::failure::Failure;
use crate::input::file_name;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of predicted masks (255 foreground, 0 background).
    #[arg(long)]
    pub pred: PathBuf,
    /// Directory of ground-truth masks (above 128 foreground, 128 ignored).
    #[arg(long)]
    pub gt: PathBuf,
    /// Score only this many frames drawn uniformly without replacement.
    #[arg(long)]
    pub sample: Option<usize>,
    /// Seed of the frame subsampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the aggregate metrics here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Write per-frame metrics as a JSON array.
    #[arg(long)]
    pub per_frame: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct FrameMetrics {
    frame: String,
    #[serde(flatten)]
    metrics: Metrics,
}

/// Pairs predictions with ground truth by file name. Every prediction needs a
/// ground-truth frame; ground truth without a prediction is skipped with a
/// note, since a run segments only the frames after its history.
fn pair_files(args: &EvalArgs) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let gt: BTreeMap<String, PathBuf> = list_pgm_files(&args.gt)?
        .into_iter()
        .map(|p| (file_name(&p), p))
        .collect();
    let pred: BTreeMap<String, PathBuf> = list_pgm_files(&args.pred)?
        .into_iter()
        .map(|p| (file_name(&p), p))
        .collect();
    let orphans: Vec<&str> = pred
        .keys()
        .filter(|k| !gt.contains_key(*k))
        .map(String::as_str)
        .collect();
    if !orphans.is_empty() {
        return Err(Failure::data(format!(
            "no ground truth in {} for: {}",
            args.gt.display(),
            orphans.join(", ")
        ))
        .into());
    }
    let unscored: Vec<&str> = gt
        .keys()
        .filter(|k| !pred.contains_key(*k))
        .map(String::as_str)
        .collect();
    if !unscored.is_empty() {
        let shown = unscored.len().min(5);
        let more = if unscored.len() > shown {
            format!(" and {} more", unscored.len() - shown)
        } else {
            String::new()
        };
        eprintln!(
            "note: {} ground-truth frame(s) have no prediction: {}{more}",
            unscored.len(),
            unscored[..shown].join(", ")
        );
    }
    let pairs: Vec<_> = pred
        .into_iter()
        .map(|(name, p)| {
            let g = gt[&name].clone();
            (name, p, g)
        })
        .collect();
    if pairs.is_empty() {
        return Err(Failure::data(format!("no masks in {}", args.pred.display())).into());
    }
    Ok(pairs)
}

pub fn cmd_eval(args: EvalArgs) -> Result<()> {
    let mut pairs = pair_files(&args)?;
    if let Some(n) = args.sample {
        if n == 0 {
            return Err(Failure::usage("--sample must be positive").into());
        }
        if n < pairs.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let mut picked = rand::seq::index::sample(&mut rng, pairs.len(), n).into_vec();
            picked.sort_unstable();
            pairs = picked.into_iter().map(|i| pairs[i].clone()).collect();
        }
    }

    let mut total = ConfusionCounts::default();
    let mut frames = Vec::with_capacity(pairs.len());
    for (name, p, g) in &pairs {
        let c = accumulate(&read_mask(p)?, &read_mask(g)?).with_context(|| format!("frame {name}"))?;
        total += c;
        frames.push(FrameMetrics {
            frame: name.clone(),
            metrics: metrics(&c),
        });
    }
    let aggregate = metrics(&total).to_json() + "\n";
    match &args.out {
        Some(path) => std::fs::write(path, &aggregate).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{aggregate}"),
    }
    if let Some(path) = &args.per_frame {
        std::fs::write(path, serde_json::to_string_pretty(&frames)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    eprintln!("scored {} frame(s)", pairs.len());
    Ok(())
}
