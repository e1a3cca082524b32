//! `infoflow` command-line front end.
//!
//! Exit codes: 0 on success, 2 when a certificate's precondition is unmet,
//! 1 on any error (including a violated certificate conclusion).

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use infoflow_core::experiment::{self, ExperimentRow};
use infoflow_core::pruning::{self, Prior};
use infoflow_core::{
    certify, Channel, ChannelDocument, ContractionMode, Pattern, TreeDocument, TreeSpec, Verdict,
};

#[derive(Parser)]
#[command(
    name = "infoflow",
    version,
    about = "Likelihood propagation and information-loss bounds on broadcast trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary distribution and contraction constants of a channel.
    Analyze { channel: PathBuf },
    /// Root likelihoods, memory norm and posterior for one leaf pattern.
    Prune {
        tree: PathBuf,
        #[arg(long)]
        pattern: String,
        #[command(flatten)]
        prior: PriorArg,
    },
    /// Evaluate an unsolvability condition for a channel on a d-ary tree.
    Certify {
        channel: PathBuf,
        #[arg(long)]
        d: usize,
        /// theta1, sigma1 or tight; defaults to the smallest available constant.
        #[arg(long)]
        mode: Option<ContractionMode>,
        /// Use the in-expectation condition instead of the patternwise one.
        #[arg(long)]
        expectation: bool,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Exact statistics over every leaf pattern of a tree.
    Enumerate {
        tree: PathBuf,
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Exhaustive memory-norm decay over a range of depths.
    Sweep {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        d: usize,
        /// Depth range, e.g. `1..4` (inclusive) or a single depth.
        #[arg(long, value_parser = parse_levels)]
        g: RangeInclusive<usize>,
        #[arg(long)]
        mode: Option<ContractionMode>,
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Also estimate MAP accuracy per depth with this many samples.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Monte Carlo MAP reconstruction accuracy.
    Simulate {
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        target: TreeTarget,
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Args)]
struct PriorArg {
    /// `uniform`, `pi`, or a JSON file holding an array of probabilities.
    #[arg(long, default_value = "pi")]
    prior: String,
}

#[derive(Args)]
struct TreeTarget {
    #[arg(long, conflicts_with_all = ["channel", "d", "g"])]
    tree: Option<PathBuf>,
    #[arg(long, requires_all = ["d", "g"])]
    channel: Option<PathBuf>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    g: Option<usize>,
}

fn parse_levels(s: &str) -> Result<RangeInclusive<usize>, String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad depth `{t}`: {e}"))
    };
    let range = if let Some((a, b)) = s.split_once("..=") {
        parse(a)?..=parse(b)?
    } else if let Some((a, b)) = s.split_once("..") {
        parse(a)?..=parse(b)?
    } else {
        let g = parse(s)?;
        g..=g
    };
    if range.is_empty() {
        return Err(format!("empty depth range `{s}`"));
    }
    Ok(range)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_channel(path: &Path) -> anyhow::Result<Channel> {
    let doc: ChannelDocument = read_json(path)?;
    Channel::from_document(&doc).with_context(|| format!("invalid channel in {}", path.display()))
}

fn load_tree(path: &Path) -> anyhow::Result<TreeSpec> {
    let doc: TreeDocument = read_json(path)?;
    TreeSpec::from_document(&doc).with_context(|| format!("invalid tree in {}", path.display()))
}

fn load_prior(arg: &PriorArg, pi: &[f64]) -> anyhow::Result<Prior> {
    let prior = match arg.prior.as_str() {
        "pi" => Prior::new(pi.to_vec())?,
        "uniform" => Prior::uniform(pi.len()),
        path => Prior::new(read_json::<Vec<f64>>(Path::new(path))?)?,
    };
    if prior.len() != pi.len() {
        bail!(
            "prior has {} entries, alphabet has {}",
            prior.len(),
            pi.len()
        );
    }
    Ok(prior)
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, value)?;
    writeln!(lock)?;
    Ok(())
}

fn write_report(path: &Path, rows: &[ExperimentRow], states: usize) -> anyhow::Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    experiment::write_csv(rows, states, BufWriter::new(file))?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Analyze { channel } => {
            let ch = load_channel(&channel)?;
            let profile = ch.profile();
            let (best_mode, best) = ch.best_contraction();
            print_json(&json!({
                "states": ch.size(),
                "pi": ch.pi(),
                "min_pi": ch.min_pi(),
                "reversible": ch.is_reversible(),
                "theta1": profile.theta1_abs,
                "sigma1": profile.sigma1,
                "contraction": {
                    "theta1": profile.theta1_abs,
                    "sigma1": profile.c_general,
                    "tight": profile.c_tight,
                },
                "best_mode": best_mode,
                "best_contraction": best,
            }))?;
        }
        Command::Prune {
            tree,
            pattern,
            prior,
        } => {
            let tree = load_tree(&tree)?;
            let pattern: Pattern = pattern.parse()?;
            let mu = load_prior(&prior, tree.pi())?;
            let state = pruning::prune(&tree, &pattern)?;
            let post = pruning::posterior(&state, &mu)?;
            print_json(&json!({
                "pattern": pattern.to_string(),
                "rho": state.rho,
                "rho_tilde": state.rho_tilde,
                "memory": state.memory,
                "memory_norm_pi": state.memory_norm(tree.pi()),
                "log_pr_pi": state.log_pr_pi,
                "pr_pi": state.pr_pi(),
                "pr_mu": pruning::pattern_probability(&state, &mu)?,
                "posterior": post.r,
                "map_state": post.map_state,
                "map_prob": post.map_prob,
            }))?;
        }
        Command::Certify {
            channel,
            d,
            mode,
            expectation,
            epsilon,
        } => {
            let ch = load_channel(&channel)?;
            let cert = certify::certify_channel(&ch, d, mode, expectation, epsilon)?;
            print_json(&cert)?;
            return Ok(match cert.verdict {
                Verdict::Certified => ExitCode::SUCCESS,
                Verdict::PreconditionUnmet => ExitCode::from(2),
                Verdict::Violated => {
                    eprintln!("error: certificate conclusion violated");
                    ExitCode::FAILURE
                }
            });
        }
        Command::Enumerate {
            tree,
            prior,
            out,
            workers,
        } => {
            let tree = load_tree(&tree)?;
            let mu = load_prior(&prior, tree.pi())?;
            let row = experiment::exhaustive_stats(&tree, &mu, workers)?;
            if let Some(path) = out {
                write_report(&path, std::slice::from_ref(&row), tree.alphabet_size())?;
            }
            print_json(&row)?;
        }
        Command::Sweep {
            channel,
            d,
            g,
            mode,
            prior,
            out,
            workers,
            samples,
            seed,
        } => {
            let ch = load_channel(&channel)?;
            let mu = load_prior(&prior, ch.pi())?;
            let mut report = experiment::decay_sweep(&ch, d, g, mode, Some(&mu), workers)?;
            if let Some(n) = samples {
                for row in &mut report.rows {
                    let tree = TreeSpec::complete_dary(d, row.g, ch.clone())?;
                    row.map_accuracy = Some(experiment::monte_carlo_reconstruction(
                        &tree, &mu, n, seed, workers,
                    )?);
                }
            }
            if let Some(path) = out {
                write_report(&path, &report.rows, ch.size())?;
            }
            print_json(&json!({
                "report": report,
                "bound_violations": report.bound_violations(),
            }))?;
        }
        Command::Simulate {
            samples,
            seed,
            target,
            prior,
            workers,
        } => {
            let tree = match (target.tree, target.channel) {
                (Some(path), _) => load_tree(&path)?,
                (None, Some(path)) => {
                    let (Some(d), Some(g)) = (target.d, target.g) else {
                        bail!("--channel needs --d and --g");
                    };
                    TreeSpec::complete_dary(d, g, load_channel(&path)?)?
                }
                (None, None) => bail!("give either --tree or --channel with --d and --g"),
            };
            let mu = load_prior(&prior, tree.pi())?;
            let estimate =
                experiment::monte_carlo_reconstruction(&tree, &mu, samples, seed, workers)?;
            print_json(&json!({
                "seed": seed,
                "workers": workers,
                "map_accuracy": estimate,
            }))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap reports usage errors with code 2, which is reserved here.
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
