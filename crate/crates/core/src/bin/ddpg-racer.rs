use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ddpg_racer::harness::{
    evaluate, train, write_metrics, Checkpoint, Exploration, TrainConfig, Trainer,
};
use ddpg_racer::ddpg::OuNoise;
use ddpg_racer::sim::{builtin, TrackDefinition, BUILTIN_TRACKS};
use ddpg_racer::Result;

/// Train and evaluate a DDPG driving agent on 2D closed tracks.
#[derive(Parser)]
#[command(name = "ddpg-racer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent from a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from a checkpoint instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run a trained policy and write per-episode metrics.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Built-in track name or track file.
        #[arg(long)]
        track: String,
        #[arg(long)]
        episodes: u64,
        /// Seed for exploration noise; only used with --noise.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "eval")]
        out: PathBuf,
        /// Act with the training-time exploration noise instead of greedily.
        #[arg(long)]
        noise: bool,
    },
    /// Inspect the built-in tracks.
    Tracks {
        #[command(subcommand)]
        command: TracksCommand,
    },
}

#[derive(Subcommand)]
enum TracksCommand {
    /// List built-in tracks.
    List,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            seed,
            out,
            resume,
        } => {
            let mut cfg = TrainConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let trainer = match resume {
                Some(path) => Trainer::resume(Checkpoint::load(&path)?, cfg)?,
                None => Trainer::new(cfg)?,
            };
            let out = train(trainer, |r| {
                eprintln!(
                    "episode {:>5}  steps {:>6}  reward {:>12.2}  distance {:>9.1} m  eps {:.3}  {}",
                    r.episode,
                    r.metrics.episode_steps,
                    r.metrics.total_reward,
                    r.metrics.total_distance_m,
                    r.epsilon,
                    r.termination.as_str()
                );
            })?;
            println!("{}", out.metrics.display());
            println!("{}", out.final_checkpoint.display());
        }
        Command::Eval {
            checkpoint,
            track,
            episodes,
            seed,
            out,
            noise,
        } => {
            let ckpt = Checkpoint::load(&checkpoint)?;
            let track = TrackDefinition::resolve(&track)?;
            let mut exploration = noise.then(|| Exploration {
                noise: OuNoise::new(ckpt.config.ou),
                rng: ChaCha8Rng::seed_from_u64(seed),
                epsilon_decay_steps: ckpt.config.epsilon_decay_steps,
                total_steps: 0,
            });
            let records = evaluate(
                &ckpt.agent,
                &track,
                &ckpt.config.sim_config(),
                episodes,
                exploration.as_mut(),
            )?;
            std::fs::create_dir_all(&out)?;
            let path = out.join("eval_metrics.csv");
            write_metrics(&path, &records)?;
            for r in &records {
                eprintln!(
                    "episode {:>5}  steps {:>6}  reward {:>12.2}  distance {:>9.1} m  {}",
                    r.episode,
                    r.metrics.episode_steps,
                    r.metrics.total_reward,
                    r.metrics.total_distance_m,
                    r.termination.as_str()
                );
            }
            println!("{}", path.display());
        }
        Command::Tracks {
            command: TracksCommand::List,
        } => {
            for name in BUILTIN_TRACKS {
                let t = builtin(name).expect("built-in track");
                println!(
                    "{name:<10} length {:>8.1} m  half-width {:.1} m",
                    t.length(),
                    t.half_width()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
