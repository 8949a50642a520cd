//! The command-line workflow driven in-process: synth → preprocess →
//! train → analyze. Usage: `cli_pipeline [work_dir]`.

use std::path::PathBuf;

use clap::Parser;
use microdoppler::cli::{run, Cli};

fn step(args: &[&str]) -> microdoppler::Result<()> {
    println!("$ microdoppler {}", args.join(" "));
    let mut argv = vec!["microdoppler"];
    argv.extend_from_slice(args);
    run(Cli::parse_from(argv))
}

fn main() -> microdoppler::Result<()> {
    let work = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("microdoppler_pipeline"));
    std::fs::create_dir_all(&work)?;
    let cfg = work.join("small.ini");
    std::fs::write(&cfg, "[train]\nwidths = 4,8,8,16,16\nembed_dim = 32\nbatch_size = 16\nlr = 0.001\n")?;
    let p = |s: &str| work.join(s).display().to_string();
    let c = cfg.display().to_string();

    step(&["synth", "--samples-per-class", "8", "--seed", "1", "--out", &p("raw")])?;
    step(&["preprocess", "--input", &p("raw"), "--seed", "1", "--out", &p("dataset")])?;
    step(&["preprocess", "--input", &p("raw"), "--seed", "1", "--out", &p("dataset")])?;
    for fmt in ["magnitude", "real"] {
        step(&[
            "train", "single", "--format", fmt, "--data", &p("dataset"), "--epochs", "5", "--config", &c, "--out",
            &p(&format!("run_{fmt}")),
        ])?;
    }
    step(&["analyze", &p("run_magnitude"), &p("run_real"), "--out", &p("analysis")])?;
    println!("{}", std::fs::read_to_string(work.join("analysis/report.txt"))?);
    Ok(())
}
