//! `approval` — plan sequential approval processes, optimize the principal's
//! cost subsidy, and validate against Monte Carlo simulation.

mod commands;
mod config_file;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use approval_core::sim::RolloutConfig;
use clap::{Args, Parser, Subcommand};

use commands::{exit_code_for, CommonArgs};

#[derive(Parser)]
#[command(
    name = "approval",
    version,
    about = "Sequential approval-process planning, subsidy optimization, and Monte Carlo validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Path to the JSON protocol config.
    config: PathBuf,
    /// Output directory for artifacts and the run manifest.
    #[arg(long)]
    out: PathBuf,
    /// Config overrides, repeatable: --set rho_agent=5000.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Abort if the state space would exceed this many states.
    #[arg(long, default_value_t = approval_core::mdp::DEFAULT_STATE_CAP)]
    state_cap: u128,
}

#[derive(Args)]
struct McArgs {
    /// True efficacy used for the rollouts.
    #[arg(long, default_value_t = 0.65)]
    theta_star: f64,
    /// Number of Monte Carlo rollouts.
    #[arg(long, default_value_t = 100_000)]
    rollouts: u32,
    /// Bootstrap resamples for the confidence intervals.
    #[arg(long, default_value_t = 1000)]
    resamples: u32,
    /// RNG seed; fixed seed reproduces output bytes exactly.
    #[arg(long, default_value_t = 20_240_001)]
    seed: u64,
    /// Maximum sample size of the single-trial baseline.
    #[arg(long, default_value_t = 800)]
    baseline_n_max: u32,
}

impl McArgs {
    fn rollout_config(&self) -> RolloutConfig {
        let mut rcfg = RolloutConfig::new(self.theta_star, self.seed);
        rcfg.num_rollouts = self.rollouts;
        rcfg.bootstrap_resamples = self.resamples;
        rcfg.baseline_n_max = self.baseline_n_max;
        rcfg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the agent's optimal policy at one subsidy level.
    Solve {
        #[command(flatten)]
        shared: Shared,
        /// Subsidy fraction in [0, epsilon_max].
        #[arg(long)]
        epsilon: f64,
        /// Also write the full per-state policy table.
        #[arg(long)]
        dump_policy: bool,
    },
    /// Find the socially optimal subsidy and the policy partition.
    Optimize {
        #[command(flatten)]
        shared: Shared,
    },
    /// Monte Carlo rollouts of the true process under a hidden efficacy.
    Simulate {
        #[command(flatten)]
        shared: Shared,
        /// Subsidy fraction to simulate at.
        #[arg(long, conflicts_with = "use_optimal")]
        epsilon: Option<f64>,
        /// Optimize first and simulate at the optimal subsidy.
        #[arg(long)]
        use_optimal: bool,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Optimize across a parameter grid, optionally against the
    /// single-trial baseline.
    Sweep {
        #[command(flatten)]
        shared: Shared,
        /// Parameter to sweep: rho_social, rho_agent, theta_star,
        /// prior_alpha0, prior_beta0.
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Also run the single-trial baseline (unsubsidized and with its own
        /// optimal subsidy).
        #[arg(long)]
        baseline: bool,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Tabulate the rejection regions of both test processes over a belief
    /// grid.
    Region {
        #[command(flatten)]
        shared: Shared,
        /// Largest alpha offset from the prior.
        #[arg(long, default_value_t = 40)]
        alpha_max: u32,
        /// Largest beta offset from the prior.
        #[arg(long, default_value_t = 40)]
        beta_max: u32,
    },
}

fn run(cli: Cli) -> approval_core::Result<()> {
    match cli.command {
        Command::Solve {
            shared,
            epsilon,
            dump_policy,
        } => {
            let cfg = config_file::load_config(&shared.config, &shared.overrides)?;
            let args = CommonArgs {
                cfg: &cfg,
                out: &shared.out,
                overrides: &shared.overrides,
                state_cap: shared.state_cap,
            };
            commands::cmd_solve(&args, epsilon, dump_policy)
        }
        Command::Optimize { shared } => {
            let cfg = config_file::load_config(&shared.config, &shared.overrides)?;
            let args = CommonArgs {
                cfg: &cfg,
                out: &shared.out,
                overrides: &shared.overrides,
                state_cap: shared.state_cap,
            };
            commands::cmd_optimize(&args).map(|_| ())
        }
        Command::Simulate {
            shared,
            epsilon,
            use_optimal,
            mc,
        } => {
            let cfg = config_file::load_config(&shared.config, &shared.overrides)?;
            let args = CommonArgs {
                cfg: &cfg,
                out: &shared.out,
                overrides: &shared.overrides,
                state_cap: shared.state_cap,
            };
            commands::cmd_simulate(&args, epsilon, use_optimal, &mc.rollout_config())
        }
        Command::Sweep {
            shared,
            param,
            values,
            baseline,
            mc,
        } => {
            let cfg = config_file::load_config(&shared.config, &shared.overrides)?;
            let args = CommonArgs {
                cfg: &cfg,
                out: &shared.out,
                overrides: &shared.overrides,
                state_cap: shared.state_cap,
            };
            let mut rcfg = mc.rollout_config();
            if baseline {
                rcfg.baseline = approval_core::sim::BaselineKind::SingleTrial;
            }
            commands::cmd_sweep(&args, &param, &values, &rcfg)
        }
        Command::Region {
            shared,
            alpha_max,
            beta_max,
        } => {
            let cfg = config_file::load_config(&shared.config, &shared.overrides)?;
            let args = CommonArgs {
                cfg: &cfg,
                out: &shared.out,
                overrides: &shared.overrides,
                state_cap: shared.state_cap,
            };
            commands::cmd_region(&args, alpha_max, beta_max)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
