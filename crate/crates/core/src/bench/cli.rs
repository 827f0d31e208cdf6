//! `morso` command line. Exit codes: 0 success, 1 invalid input,
//! 2 numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::RunConfig;
use super::pipeline::{compare, run_reduction, write_comparison, write_reduction, Method};
use super::spec::{load_benchmark, write_benchmark};
use super::synthetic::generate_msd_chain;
use crate::discretization::Scheme;
use crate::error::{Error, Result};
use crate::metrics::{frequency_response, RreMode};
use crate::recursion::Algorithm;

#[derive(Debug, Parser)]
#[command(name = "morso", version, about = "Structure-preserving reduction of second-order systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print dimensions, stability and the H∞ estimate of a benchmark.
    Info {
        spec: PathBuf,
        #[arg(long, default_value_t = 400)]
        grid_count: usize,
    },
    /// Reduce a benchmark and write the reduced model and diagnostics.
    Reduce {
        spec: PathBuf,
        #[arg(long)]
        algo: Option<Algorithm>,
        #[arg(long)]
        order: Option<usize>,
        /// Run configuration file (key = value); flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Table of H∞ and rre over methods and orders, plus σ_max curves.
    Compare {
        spec: PathBuf,
        /// Comma-separated half-orders n.
        #[arg(long, value_delimiter = ',', required = true)]
        orders: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "srlrg,srlrh,bt")]
        methods: Vec<Method>,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a mass-spring-damper chain as a benchmark.
    GenMsd {
        #[arg(long = "n")]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 0.01)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        m0: f64,
        /// Mass perturbation seed; omit for identical masses.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "msd")]
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, conflicts_with = "angle_tol")]
    tau: Option<usize>,
    #[arg(long)]
    angle_tol: Option<f64>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Defaults to $MORSO_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grid_count: Option<usize>,
    #[arg(long)]
    rre_mode: Option<RreMode>,
}

impl CommonArgs {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        if self.h.is_some() {
            cfg.h = self.h;
        }
        if self.tau.is_some() {
            cfg.tau = self.tau;
            cfg.angle_tol = None;
        }
        if self.angle_tol.is_some() {
            cfg.angle_tol = self.angle_tol;
            cfg.tau = None;
        }
        if self.max_steps.is_some() {
            cfg.max_steps = self.max_steps;
        }
        match self.seed {
            Some(s) => cfg.seed = s,
            None => {
                if let Some(s) = RunConfig::seed_from_env()? {
                    cfg.seed = s;
                }
            }
        }
        if let Some(g) = self.grid_count {
            cfg.grid_count = g;
        }
        if let Some(m) = self.rre_mode {
            cfg.rre_mode = m;
        }
        Ok(())
    }
}

fn info(spec: &Path, grid_count: usize) -> Result<()> {
    let (bench, sys) = load_benchmark(spec)?;
    let mut cfg = RunConfig::new(Algorithm::Srlrg, 1);
    cfg.grid_count = grid_count;
    let rep = sys.stability_report()?;
    let resp = frequency_response(&sys, cfg.grid(sys.domain()))?;
    println!("model          {}", bench.name);
    println!("domain         {}", sys.domain());
    println!("N              {} (2N = {})", sys.states(), 2 * sys.states());
    println!("inputs m       {}", sys.input().ncols());
    println!("outputs p      {}", sys.output().nrows());
    println!("cond(M)        {:.3e}", sys.mass_condition());
    println!("stable         {}", rep.is_stable);
    println!("margin         {:.6e}", rep.margin);
    println!("hinf           {:.6e}", resp.hinf_estimate);
    println!("hinf summary   {}", resp.summary_json());
    for w in sys.warnings() {
        println!("warning        {w}");
    }
    Ok(())
}

fn reduce_cmd(
    spec: &Path,
    algo: Option<Algorithm>,
    order: Option<usize>,
    config: Option<&Path>,
    common: &CommonArgs,
    out: &Path,
) -> Result<()> {
    let mut cfg = match config {
        Some(p) => RunConfig::parse(&std::fs::read_to_string(p).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(p.display().to_string()),
            _ => e.into(),
        })?)?,
        None => {
            let algorithm = algo.ok_or_else(|| Error::Config("--algo is required without --config".into()))?;
            let n = order.ok_or_else(|| Error::Config("--order is required without --config".into()))?;
            RunConfig::new(algorithm, n)
        }
    };
    if let Some(a) = algo {
        cfg.algorithm = a;
    }
    if let Some(n) = order {
        cfg.order = n;
    }
    common.apply(&mut cfg)?;
    cfg.out = Some(out.to_path_buf());
    let (_, sys) = load_benchmark(spec)?;
    let run = run_reduction(&sys, &cfg)?;
    write_reduction(out, &sys, &run, &cfg)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "reduced N = {} to n = {} in {} steps; output in {}",
        sys.states(),
        run.reduced.states(),
        run.recursion.diagnostics.steps_taken,
        out.display()
    );
    Ok(())
}

fn compare_cmd(spec: &Path, orders: &[usize], methods: &[Method], common: &CommonArgs, out: &Path) -> Result<()> {
    let (bench, sys) = load_benchmark(spec)?;
    let mut cfg = RunConfig::new(Algorithm::Srlrg, orders[0]);
    common.apply(&mut cfg)?;
    cfg.out = Some(out.to_path_buf());
    let cmp = compare(&bench.name, &sys, methods, orders, &cfg)?;
    write_comparison(out, &cmp)?;
    std::fs::write(out.join("run.conf"), cfg.manifest())?;
    print!("{}", cmp.to_csv());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Info { spec, grid_count } => info(&spec, grid_count),
        Command::Reduce {
            spec,
            algo,
            order,
            config,
            common,
            out,
        } => reduce_cmd(&spec, algo, order, config.as_deref(), &common, &out),
        Command::Compare {
            spec,
            orders,
            methods,
            common,
            out,
        } => compare_cmd(&spec, &orders, &methods, &common, &out),
        Command::GenMsd {
            n,
            k,
            c,
            m0,
            seed,
            name,
            out,
        } => {
            let sys = generate_msd_chain(n, k, c, m0, seed)?;
            let path = write_benchmark(&out, &name, &sys)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.class());
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
