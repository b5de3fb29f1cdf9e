//! `fairdiv`: data generation, fairness-constrained training, dependency
//! audits, trade-off sweeps and bound tables.

mod commands;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairdiv_core::KeyValues;

use run::CliError;

#[derive(Parser)]
#[command(name = "fairdiv", version, about = "f-divergence fairness estimation and training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. Each maps onto the config key of the same
/// name (`--c-lo` onto `bounds.c_lo`); a command rejects keys it does not use.
#[derive(Args, Debug, Default)]
pub struct Shared {
    /// Divergence generator: tv, hellinger, chi2 or kl.
    #[arg(long)]
    phi: Option<String>,
    /// Fairness budget; `inf` disables the constraint.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    /// Confidence parameter of the concentration bounds.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<String>,
    /// Lower ratio bound.
    #[arg(long = "c-lo", allow_hyphen_values = true)]
    c_lo: Option<String>,
    /// Upper ratio bound.
    #[arg(long = "c-hi", allow_hyphen_values = true)]
    c_hi: Option<String>,
}

impl Shared {
    fn key_values(&self, extra: &[(&str, &Option<String>)]) -> KeyValues {
        let mut kv = KeyValues::new();
        let shared = [
            ("phi", &self.phi),
            ("eta", &self.eta),
            ("t", &self.t),
            ("seed", &self.seed),
            ("out", &self.out),
            ("bounds.c_lo", &self.c_lo),
            ("bounds.c_hi", &self.c_hi),
        ];
        for (key, value) in shared.iter().chain(extra) {
            if let Some(v) = value {
                kv.insert(*key, v.clone());
            }
        }
        kv
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic dataset as CSV.
    Gen {
        /// `proxy` (discrete, with a proxy feature of v) or `gaussian`.
        #[arg(long)]
        scenario: Option<String>,
        /// Dependency knob in [0, 1].
        #[arg(long, allow_hyphen_values = true)]
        knob: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        n: Option<String>,
        /// Feature dimension of the gaussian scenario.
        #[arg(long)]
        dim: Option<String>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Train a linear scorer under a fairness budget.
    Train {
        #[arg(long)]
        data: Option<String>,
        /// Dependency kernel: delta or product-delta.
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        max_outer_iters: Option<String>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Write the predictions of a model on a dataset.
    Predict {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        data: Option<String>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Estimate the dependency between viewpoints and predictions.
    Audit {
        #[arg(long)]
        data: Option<String>,
        #[arg(long)]
        predictions: Option<String>,
        #[arg(long)]
        kernel: Option<String>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Train over a list of budgets and emit the risk/fairness curve.
    Sweep {
        #[arg(long)]
        data: Option<String>,
        /// Comma-separated budgets, e.g. `0.01,0.1,inf`.
        #[arg(long)]
        etas: Option<String>,
        /// Knob of the proxy scenario the data came from; adds the exact
        /// dependency of each model.
        #[arg(long)]
        scenario_knob: Option<String>,
        /// SVG chart path.
        #[arg(long)]
        chart: Option<String>,
        #[arg(long)]
        kernel: Option<String>,
        #[arg(long)]
        max_outer_iters: Option<String>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Tabulate concentration constants and generator shapes.
    Constants {
        /// Comma-separated t values.
        #[arg(long)]
        t_grid: Option<String>,
        /// Comma-separated u values for the shape table.
        #[arg(long)]
        u_grid: Option<String>,
        #[command(flatten)]
        shared: Shared,
    },
    /// Monte-Carlo Rademacher complexities of a set of models and the bounds
    /// built from them.
    Rademacher {
        #[arg(long)]
        data: Option<String>,
        /// Comma-separated model files forming the restricted class.
        #[arg(long)]
        models: Option<String>,
        /// Further model files; with `--models` they form the full class.
        #[arg(long)]
        full_models: Option<String>,
        #[arg(long)]
        draws: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        risk_gap: Option<String>,
        #[command(flatten)]
        shared: Shared,
    },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Gen {
            scenario,
            knob,
            n,
            dim,
            shared,
        } => {
            let kv = shared.key_values(&[("scenario", &scenario), ("knob", &knob), ("n", &n), ("dim", &dim)]);
            commands::gen(shared.config.as_deref(), kv)
        }
        Command::Train {
            data,
            kernel,
            max_outer_iters,
            shared,
        } => {
            let kv = shared.key_values(&[("data", &data), ("kernel", &kernel), ("max_outer_iters", &max_outer_iters)]);
            commands::train(shared.config.as_deref(), kv)
        }
        Command::Predict { model, data, shared } => {
            let kv = shared.key_values(&[("model", &model), ("data", &data)]);
            commands::predict(shared.config.as_deref(), kv)
        }
        Command::Audit {
            data,
            predictions,
            kernel,
            shared,
        } => {
            let kv = shared.key_values(&[("data", &data), ("predictions", &predictions), ("kernel", &kernel)]);
            commands::audit(shared.config.as_deref(), kv)
        }
        Command::Sweep {
            data,
            etas,
            scenario_knob,
            chart,
            kernel,
            max_outer_iters,
            shared,
        } => {
            let kv = shared.key_values(&[
                ("data", &data),
                ("etas", &etas),
                ("scenario_knob", &scenario_knob),
                ("chart", &chart),
                ("kernel", &kernel),
                ("max_outer_iters", &max_outer_iters),
            ]);
            commands::sweep(shared.config.as_deref(), kv)
        }
        Command::Constants { t_grid, u_grid, shared } => {
            let kv = shared.key_values(&[("t_grid", &t_grid), ("u_grid", &u_grid)]);
            commands::constants(shared.config.as_deref(), kv)
        }
        Command::Rademacher {
            data,
            models,
            full_models,
            draws,
            tau,
            risk_gap,
            shared,
        } => {
            let kv = shared.key_values(&[
                ("data", &data),
                ("models", &models),
                ("full_models", &full_models),
                ("draws", &draws),
                ("tau", &tau),
                ("risk_gap", &risk_gap),
            ]);
            commands::rademacher(shared.config.as_deref(), kv)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("\nFor more information, try '--help'.");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
