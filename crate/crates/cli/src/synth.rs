use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use thermobg::adapt::adapt;
use thermobg::io::{mask_to_frame, write_pgm};
use thermobg::synth::{
    gen_mixture_samples, gen_video, three_gaussian_specs, update_base_specs, update_new_spec, Scenario,
};
use thermobg::{fit, AdaptMode, AdaptationConfig, FitConfig, HistoryPool, MixtureModel};

use crate::failure::Failure;
use crate::input::create_dir;

/// Example scenario shipped with the binary.
pub const EXAMPLE_SCENARIO: &str = include_str!("../scenarios/moving_object.toml");

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Fit three well-separated Gaussians and export the recovered mixture.
    FitDemo(FitDemoArgs),
    /// Adapt a two-component model to samples from a new mode.
    UpdateDemo(UpdateDemoArgs),
    /// Render a scenario file into frames and ground-truth masks.
    Video(VideoArgs),
    /// Print an example scenario file.
    Scenario,
}

#[derive(Debug, Args)]
pub struct FitDemoArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub kmax: usize,
    /// Output directory for samples.csv, density.csv and components.csv.
    #[arg(long, short, default_value = "fit-demo")]
    pub out: PathBuf,
    /// Spacing of the density grid.
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct UpdateDemoArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of samples drawn from the new mode.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    /// Snapshot interval, in new samples.
    #[arg(long, default_value_t = 25)]
    pub every: usize,
    #[arg(long, default_value = "approx", value_parser = ["exact", "approx"])]
    pub mode: String,
    /// Output directory for density.csv and components.csv.
    #[arg(long, short, default_value = "update-demo")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct VideoArgs {
    /// Scenario TOML file.
    #[arg(long, short)]
    pub scenario: PathBuf,
    /// Output directory; frames go to `frames/`, masks to `gt/`.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Override the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn cmd_synth(cmd: SynthCommand) -> Result<()> {
    match cmd {
        SynthCommand::FitDemo(a) => fit_demo(a),
        SynthCommand::UpdateDemo(a) => update_demo(a),
        SynthCommand::Video(a) => video(a),
        SynthCommand::Scenario => {
            print!("{EXAMPLE_SCENARIO}");
            Ok(())
        }
    }
}

fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || step.is_infinite() {
        return Err(Failure::usage("--step must be positive").into());
    }
    let n = ((hi - lo) / step).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

fn range(data: &[f64]) -> (f64, f64) {
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ((lo - 10.0).floor(), (hi + 10.0).ceil())
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn component_rows(out: &mut String, prefix: &str, m: &MixtureModel) {
    for (k, c) in m.components().iter().enumerate() {
        writeln!(
            out,
            "{prefix}{},{},{},{},{}",
            k + 1,
            c.weight,
            c.mean,
            c.variance,
            c.std_dev()
        )
        .unwrap();
    }
}

fn print_model(label: &str, m: &MixtureModel) {
    println!("{label}K={}", m.len());
    for c in m.components() {
        println!("  weight {:.4}  mean {:8.3}  sd {:.3}", c.weight, c.mean, c.std_dev());
    }
}

fn fit_demo(a: FitDemoArgs) -> Result<()> {
    let data = gen_mixture_samples(&three_gaussian_specs(), a.seed)?;
    let cfg = FitConfig {
        history_len: data.len(),
        k_max: a.kmax,
        rng_seed: a.seed,
        ..FitConfig::default()
    };
    let report = fit(&data, &cfg)?;
    let m = &report.model;
    create_dir(&a.out)?;

    let mut samples = String::from("x\n");
    for x in &data {
        writeln!(samples, "{x}").unwrap();
    }
    write_file(&a.out, "samples.csv", &samples)?;

    let (lo, hi) = range(&data);
    let mut density = String::from("x,density");
    for k in 1..=m.len() {
        write!(density, ",component_{k}").unwrap();
    }
    density.push('\n');
    for x in grid(lo, hi, a.step)? {
        write!(density, "{x},{:e}", m.density(x)).unwrap();
        for c in m.components() {
            write!(density, ",{:e}", c.weight * c.pdf(x)).unwrap();
        }
        density.push('\n');
    }
    write_file(&a.out, "density.csv", &density)?;

    let mut comps = String::from("component,weight,mean,variance,stddev\n");
    component_rows(&mut comps, "", m);
    write_file(&a.out, "components.csv", &comps)?;

    print_model("recovered ", m);
    println!(
        "{} iterations, converged: {}, wrote {}",
        report.iterations,
        report.converged,
        a.out.display()
    );
    Ok(())
}

fn update_demo(a: UpdateDemoArgs) -> Result<()> {
    if a.every == 0 {
        return Err(Failure::usage("--every must be positive").into());
    }
    let mode: AdaptMode = a.mode.parse()?;
    let history = gen_mixture_samples(&update_base_specs(), a.seed)?;
    let cfg = FitConfig {
        history_len: history.len(),
        rng_seed: a.seed,
        ..FitConfig::default()
    };
    let mut model = fit(&history, &cfg)?.model;
    let acfg = AdaptationConfig {
        mode,
        ..AdaptationConfig::default()
    };
    let mut pool = HistoryPool::from_samples(history.len(), history.iter().copied());
    let stream = gen_mixture_samples(&[update_new_spec(a.samples)], a.seed + 10_000)?;

    let mut snapshots = vec![(0, model.clone())];
    for (i, &x) in stream.iter().enumerate() {
        adapt(&mut model, x, &acfg, Some(&mut pool))?;
        let t = i + 1;
        if t % a.every == 0 || t == stream.len() {
            snapshots.push((t, model.clone()));
        }
    }

    create_dir(&a.out)?;
    let all: Vec<f64> = history.iter().chain(&stream).copied().collect();
    let (lo, hi) = range(&all);
    let mut density = String::from("x");
    for (t, _) in &snapshots {
        write!(density, ",t{t}").unwrap();
    }
    density.push('\n');
    for x in grid(lo, hi, a.step)? {
        write!(density, "{x}").unwrap();
        for (_, m) in &snapshots {
            write!(density, ",{:e}", m.density(x)).unwrap();
        }
        density.push('\n');
    }
    write_file(&a.out, "density.csv", &density)?;

    let mut comps = String::from("t,component,weight,mean,variance,stddev\n");
    for (t, m) in &snapshots {
        component_rows(&mut comps, &format!("{t},"), m);
    }
    write_file(&a.out, "components.csv", &comps)?;

    for (t, m) in &snapshots {
        print_model(&format!("t=+{t}: "), m);
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn video(a: VideoArgs) -> Result<()> {
    let mut scenario = Scenario::load(&a.scenario).map_err(|e| Failure::data(e.to_string()))?;
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    let video = gen_video(&scenario).map_err(|e| Failure::data(e.to_string()))?;
    let (frames_dir, gt_dir) = (a.out.join("frames"), a.out.join("gt"));
    create_dir(&frames_dir)?;
    create_dir(&gt_dir)?;
    for (i, (f, gt)) in video.frames.frames().iter().zip(&video.ground_truth).enumerate() {
        let name = format!("{i:06}.pgm");
        write_pgm(f, frames_dir.join(&name))?;
        write_pgm(&mask_to_frame(gt), gt_dir.join(&name))?;
    }
    write_file(&a.out, "scenario.toml", &scenario.to_toml())?;
    println!(
        "wrote {} frames of {}x{} to {}",
        video.frames.len(),
        scenario.width,
        scenario.height,
        a.out.display()
    );
    Ok(())
}
