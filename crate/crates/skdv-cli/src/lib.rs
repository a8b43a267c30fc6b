//! Command-line front end: configuration, artifact staging and the experiment runners.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage or
//! configuration errors, 3 when the computation itself fails.

// `!(x >= 0.0)` style guards are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{parse_config, Command, ExperimentConfig, Override};
use output::{summary_text, Artifacts, Manifest};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "skdv", version, about = "Schrodinger-KdV numerics: evolution, estimates and counterexamples")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// TOML experiment file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// run without the worker pool
    #[arg(long, global = true)]
    pub sequential: bool,
    /// any config key, e.g. `--set evolve.n=512`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub s: Option<f64>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub b: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub bprime: Option<f64>,
    #[arg(long, global = true)]
    pub eta_plus: Option<f64>,
    #[arg(long, global = true)]
    pub delta_u: Option<f64>,
    #[arg(long, global = true)]
    pub delta_v: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Sub {
    /// Integrate the coupled system and record conserved quantities
    Evolve {
        #[command(flatten)]
        common: Common,
        /// classical, ibp_u or ibp_v
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// smooth, random or soliton
        #[arg(long)]
        data: Option<String>,
    },
    /// Sweep or probe a frequency-restricted estimate
    Fre {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        id: Option<String>,
        /// scaling or divergence
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Measure the growth rate of an explicit counterexample family
    Counterexample {
        #[command(flatten)]
        common: Common,
        /// cor41, cor42, sec6_u or sec6_v
        #[arg(long)]
        family: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        kminus_s: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        c_time: Option<f64>,
        #[arg(long)]
        c_sweep: bool,
    },
    /// Estimate the smoothing gain of a Duhamel or boundary term
    Smoothing {
        #[command(flatten)]
        common: Common,
        /// component name or the catalog id it probes
        #[arg(long)]
        component: Option<String>,
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Evolve, then measure the Bourgain-space norms of the trajectory
    Bourgain {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// bump or hann
        #[arg(long)]
        taper: Option<String>,
    },
    /// Dump the phase, estimate and regime tables
    Catalog {
        #[command(flatten)]
        common: Common,
    },
}

fn push<V: Into<toml::Value>>(v: &mut Vec<Override>, key: &str, x: Option<V>) {
    if let Some(x) = x {
        v.push(Override::new(key, x));
    }
}

fn float(x: Option<f64>) -> Option<toml::Value> {
    x.map(toml::Value::Float)
}

fn int(x: Option<usize>) -> Option<toml::Value> {
    x.map(|n| toml::Value::Integer(n as i64))
}

impl Common {
    fn overrides(&self) -> anyhow::Result<Vec<Override>> {
        let mut v = Vec::new();
        push(&mut v, "out_dir", self.out_dir.as_ref().map(|p| p.display().to_string()));
        push(&mut v, "seed", self.seed.map(|s| toml::Value::Integer(s as i64)));
        push(&mut v, "threads", int(self.threads));
        if self.sequential {
            v.push(Override::new("sequential", true));
        }
        push(&mut v, "regularity.k", float(self.k));
        push(&mut v, "regularity.s", float(self.s));
        push(&mut v, "regularity.eps", float(self.eps));
        push(&mut v, "regularity.b", float(self.b));
        push(&mut v, "regularity.b_prime", float(self.bprime));
        push(&mut v, "regularity.eta_plus", float(self.eta_plus));
        push(&mut v, "regions.delta_u", float(self.delta_u));
        push(&mut v, "regions.delta_v", float(self.delta_v));
        Ok(v)
    }

    fn generic(&self) -> anyhow::Result<Vec<Override>> {
        self.set.iter().map(|s| Override::parse(s)).collect()
    }
}

impl Sub {
    /// The command, its common flags and the overrides its own flags imply.
    pub fn resolve(&self) -> anyhow::Result<(Command, &Common, Vec<Override>)> {
        let mut v = Vec::new();
        let (cmd, common) = match self {
            Sub::Evolve { common, mode, dt, t_end, n, data } => {
                push(&mut v, "evolve.mode", mode.clone());
                push(&mut v, "evolve.dt", float(*dt));
                push(&mut v, "evolve.t_end", float(*t_end));
                push(&mut v, "evolve.n", int(*n));
                push(&mut v, "evolve.data", data.clone());
                (Command::Evolve, common)
            }
            Sub::Fre { common, id, mode, cutoff } => {
                push(&mut v, "fre.id", id.clone());
                push(&mut v, "fre.mode", mode.clone());
                push(&mut v, "fre.cutoff", float(*cutoff));
                (Command::Fre, common)
            }
            Sub::Counterexample { common, family, kminus_s, rho, c_time, c_sweep } => {
                push(&mut v, "counterexample.family", family.clone());
                push(&mut v, "counterexample.kminus_s", float(*kminus_s));
                push(&mut v, "counterexample.rho", float(*rho));
                push(&mut v, "counterexample.c_time", float(*c_time));
                if *c_sweep {
                    v.push(Override::new("counterexample.c_sweep", true));
                }
                (Command::Counterexample, common)
            }
            Sub::Smoothing { common, component, seeds } => {
                push(&mut v, "smoothing.component", component.clone());
                push(&mut v, "smoothing.seeds", int(*seeds));
                (Command::Smoothing, common)
            }
            Sub::Bourgain { common, dt, t_end, n, taper } => {
                push(&mut v, "evolve.dt", float(*dt));
                push(&mut v, "evolve.t_end", float(*t_end));
                push(&mut v, "evolve.n", int(*n));
                push(&mut v, "bourgain.taper", taper.clone());
                (Command::Bourgain, common)
            }
            Sub::Catalog { common } => (Command::Catalog, common),
        };
        // generic --set first, then the named flags so the dedicated flag wins
        let mut all = common.generic()?;
        all.extend(common.overrides()?);
        all.extend(v);
        Ok((cmd, common, all))
    }
}

/// Environment variables the configuration reads.
pub fn config_env() -> Vec<(String, String)> {
    ["SKDV_OUT_DIR", "SKDV_THREADS"]
        .iter()
        .filter_map(|k| std::env::var(k).ok().map(|v| (k.to_string(), v)))
        .collect()
}

/// Parse `args` and run; returns the process exit code.
pub fn run_cli<I, T>(args: I, env: &[(String, String)]) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            // an empty invocation shows help but is still a usage error
            return if e.kind() == clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { EXIT_USAGE } else { code };
        }
    };
    let cfg = match cli.command.resolve().and_then(|(cmd, common, flags)| parse_config(cmd, common.config.as_deref(), env, &flags)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    run_experiment(&cfg)
}

/// Run a validated configuration, write its artifacts and return the exit code.
pub fn run_experiment(cfg: &ExperimentConfig) -> i32 {
    skdv_core::par::init_threads(cfg.threads);
    let warnings = cfg.warnings();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut out = match Artifacts::new(&cfg.out_dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_RUNTIME;
        }
    };
    let name = cfg.command.name();
    match commands::dispatch(cfg, &mut out) {
        Ok(outcome) => {
            let passed = outcome.checks.iter().all(|c| c.pass);
            let summary = summary_text(name, &warnings, &outcome.checks);
            let res = out.write("summary.txt", summary.as_bytes()).and_then(|_| {
                let entries = out.entries().to_vec();
                let m = Manifest {
                    tool: "skdv",
                    version: env!("CARGO_PKG_VERSION"),
                    command: name.to_string(),
                    config: cfg,
                    warnings: &warnings,
                    checks: &outcome.checks,
                    passed,
                    artifacts: &entries,
                    extra: outcome.extra,
                };
                out.write_json("manifest.json", &m)
            });
            if let Err(e) = res.and_then(|_| out.commit()) {
                eprintln!("error: {e:#}");
                return EXIT_RUNTIME;
            }
            print!("{summary}");
            if passed {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            // leave everything staged as .partial, with the error recorded
            let m = serde_json::json!({
                "tool": "skdv",
                "version": env!("CARGO_PKG_VERSION"),
                "command": name,
                "config": cfg,
                "warnings": warnings,
                "error": format!("{e:#}"),
                "passed": false,
            });
            let _ = out.write_json("manifest.json", &m);
            EXIT_RUNTIME
        }
    }
}
