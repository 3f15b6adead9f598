use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mac_codebook::experiment::{self, ExperimentConfig, Scheme, OUT_DIR_ENV};
use mac_codebook::Error;

#[derive(Parser)]
#[command(name = "mac-codebook", version, about = "Limited-feedback MIMO MAC codebook experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design codebooks and evaluate every scheme of a config.
    Run {
        config: PathBuf,
        /// Output directory (default: $MAC_CODEBOOK_OUT_DIR or the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Design codebooks only and write them as JSON.
    Pack {
        #[arg(long, value_enum)]
        scheme: PackScheme,
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PackScheme {
    Grassmann,
    Eigenbeam,
    Covariance,
}

impl From<PackScheme> for Scheme {
    fn from(s: PackScheme) -> Self {
        match s {
            PackScheme::Grassmann => Scheme::Grassmann,
            PackScheme::Eigenbeam => Scheme::Eigenbeam,
            PackScheme::Covariance => Scheme::Covariance,
        }
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        Error::Config { .. } => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { config } => ExperimentConfig::load(&config).map(|c| {
            println!("ok: {} ({} schemes, {} SNR points)", c.name, c.schemes.len(), c.snr_grid_db.len());
        }),
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            let mut config = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    return fail(Error::config("--threads", e.to_string()));
                }
            }
            experiment::run(&config)
                .and_then(|table| table.write(&out_dir(out)))
                .map(|paths| paths.iter().for_each(|p| println!("{}", p.display())))
        }
        Command::Pack { scheme, config, out } => {
            let config = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let scheme = Scheme::from(scheme);
            let dir = out_dir(out);
            experiment::pack(&config, scheme).and_then(|books| {
                std::fs::create_dir_all(&dir)?;
                for b in books {
                    let path = dir.join(b.file_name(&config, scheme));
                    b.codebook.save(&path)?;
                    println!("{}", path.display());
                }
                Ok(())
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
