use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use footstep::actions::Selection;
use footstep::energy::HeuristicKind;
use footstep::report::{self, Mode, Variant};

#[derive(Parser)]
#[command(name = "footstep", version, about = "Energy-aware footstep planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan or simulate one scenario and write its artifacts.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        flags: VariantFlags,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Record every popped node in the plan JSON.
        #[arg(long)]
        trace: bool,
    },
    /// Run scenarios under two variants and tabulate cost and iteration deltas.
    Compare {
        /// Scenario files or directories of them.
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        flags: VariantFlags,
        /// Overrides for variant A, e.g. `heuristic=distance`.
        #[arg(long, default_value = "")]
        a: String,
        /// Overrides for variant B, e.g. `heuristic=distance+angle`.
        #[arg(long, default_value = "")]
        b: String,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct VariantFlags {
    #[arg(long, value_parser = ["min-cot", "farthest"])]
    selection: Option<String>,
    #[arg(long, value_parser = ["zero", "distance", "distance+angle"])]
    heuristic: Option<String>,
    #[arg(long, value_parser = ["on", "off"])]
    penalty: Option<String>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_parser = ["plan", "sim"], default_value = "plan")]
    mode: String,
    #[arg(long)]
    seed: Option<u64>,
}

impl VariantFlags {
    fn variant(&self) -> Variant {
        Variant {
            selection: self.selection.as_deref().map(|s| s.parse::<Selection>().unwrap()),
            heuristic: self.heuristic.as_deref().map(|s| s.parse::<HeuristicKind>().unwrap()),
            penalty: self.penalty.as_deref().map(|s| report::parse_switch(s).unwrap()),
            max_iterations: self.max_iter,
            seed: self.seed,
            mode: self.mode.parse::<Mode>().unwrap(),
            trace: false,
        }
    }
}

/// Prints to stdout, ignoring a closed pipe.
macro_rules! out {
    ($($arg:tt)*) => {{
        let _ = write!(std::io::stdout(), $($arg)*);
    }};
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Run {
            scenario,
            flags,
            out_dir,
            trace,
        } => {
            let variant = Variant {
                trace,
                ..flags.variant()
            };
            report::run(&scenario, &variant, Some(&out_dir)).map(|r| {
                out!(
                    "{} [{}]: {} cost={:.1} J iterations={} expansions={} steps={} runtime={:.3}s\n",
                    r.scenario,
                    r.variant,
                    r.status,
                    r.total_cost,
                    r.iterations,
                    r.expansions,
                    r.steps,
                    r.runtime_s
                );
                for a in &r.artifacts {
                    out!("  wrote {}\n", a.display());
                }
                r.is_success()
            })
        }
        Command::Compare {
            scenarios,
            flags,
            a,
            b,
            out_dir,
        } => (|| {
            let base = flags.variant();
            let va = base.clone().with_overrides(&a)?;
            let vb = base.with_overrides(&b)?;
            let set = report::collect_scenarios(&scenarios)?;
            let cmp = report::compare(&set, &va, &vb)?;
            std::fs::create_dir_all(&out_dir).map_err(|e| footstep::Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            let csv = out_dir.join("comparison.csv");
            cmp.write_csv(&csv)?;
            out!("{}", cmp.table());
            out!("wrote {}\n", csv.display());
            Ok(true)
        })(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
