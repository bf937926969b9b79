use std::ops::ControlFlow;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use nfptop::experiments::{load_study, run_study, write_study};
use nfptop::output::write_outputs;
use nfptop::{load_config, Preset};
use nfptop_core::optimizer::run_with_observer;

#[derive(Parser)]
#[command(name = "nfptop", version, about = "Topology optimization with the normalized field product density map")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimization from a TOML configuration.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the configuration.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Progress line cadence in iterations, 0 for none.
        #[arg(long, default_value_t = 50)]
        progress: usize,
    },
    /// List the built-in problem presets.
    PresetList,
    /// Run a comparative study from a TOML study file.
    Study {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, output_dir, progress } => {
            let mut cfg = load_config(&config)?;
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            let spec = cfg.problem()?;
            eprintln!("{}: {} elements, vf {}, step {}", cfg.preset, spec.mesh.element_count(), cfg.vf, cfg.step);
            let start = Instant::now();
            let trace = run_with_observer(&spec, |r, _| {
                if progress > 0 && r.iteration % progress == 0 {
                    eprintln!("{:6} f0 {:+.6e} g1 {:+.3e} gray {:.4}", r.iteration, r.f0, r.g1, r.grayness);
                }
                ControlFlow::Continue(())
            })
            .context("optimization failed")?;
            let files = write_outputs(&cfg.output_dir, &cfg, &trace)?;
            let last = trace.last();
            println!(
                "terminated ({:?}) at iteration {}: f0 {:.6e}, g1 {:.3e}, grayness {:.4} in {:.1}s",
                trace.termination,
                last.iteration,
                last.f0,
                last.g1,
                last.grayness,
                start.elapsed().as_secs_f64()
            );
            println!("wrote {} files to {}", files.len(), cfg.output_dir.display());
        }
        Command::PresetList => {
            for p in Preset::ALL {
                let [nx, ny, nz] = p.default_counts();
                let mesh = if p.dim().n() == 2 { format!("{nx}x{ny}") } else { format!("{nx}x{ny}x{nz}") };
                println!("{:<13} {:<9} vf {:<5} {}", p.name(), mesh, p.default_volume_fraction(), p.description());
            }
        }
        Command::Study { config, output_dir } => {
            let mut spec = load_study(&config)?;
            if let Some(dir) = output_dir {
                spec.output_dir = dir;
            }
            eprintln!("{:?}: {} variants", spec.kind, spec.variants.len());
            let (report, runs) = run_study(&spec)?;
            write_study(&spec.output_dir, &spec, &report, &runs)?;
            print!("{}", nfptop::experiments::summary_csv(&report));
            if let Some(m) = &report.mesh {
                for (a, b, r) in &m.correlations {
                    println!("correlation {} vs {}: {r:.4}", runs[*a].label, runs[*b].label);
                }
            }
            println!("wrote study to {}", spec.output_dir.display());
        }
    }
    Ok(())
}
