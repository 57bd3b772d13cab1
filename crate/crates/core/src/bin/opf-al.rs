use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use opf_al::al::Variant;
use opf_al::datagen::{write_labeled, write_unlabeled};
use opf_al::harness::{self, generate_datasets, psi_sweep, run_experiment, ExperimentConfig};
use opf_al::opf::{describe_constraint, extract_active_set, solve_dcopf, DemandVector, EPS_ACTIVE};

#[derive(Parser)]
#[command(name = "opf-al", version, about = "Active learning for DC-OPF proxies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate D_0, D_v, the test set and the unlabeled pool as CSV files.
    Gen {
        #[command(flatten)]
        exp: ExpArgs,
        #[arg(long, value_delimiter = ',')]
        seed: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the active-learning experiment grid.
    Run {
        #[command(flatten)]
        exp: ExpArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        seed: Vec<u64>,
        /// AS_raw, AS_pen, BAS-IG or Random (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        variant: Vec<Variant>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Final-round metrics of AS_raw and AS_pen for several ψ values.
    SweepPsi {
        #[command(flatten)]
        exp: ExpArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,0.9")]
        psi_values: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        seed: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one DC-OPF instance and print the dispatch and active set.
    Solve {
        /// Bundled case name or path to a case file.
        #[arg(long)]
        case: String,
        /// One value per load bus, MW (comma separated).
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        demand: Vec<f64>,
    },
    /// Parse and check a case file, then try it at nominal demand.
    ValidateCase {
        /// Bundled case name or path to a case file.
        case: String,
    },
}

/// Overrides for fields of the experiment configuration.
#[derive(Args)]
struct ExpArgs {
    /// JSON experiment configuration; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    buckets: Option<usize>,
    #[arg(long)]
    psi: Option<f64>,
    #[arg(long)]
    k_a: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    initial: Option<usize>,
    #[arg(long)]
    validation: Option<usize>,
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    hidden_layers: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    /// Epoch cap for the round-0 models.
    #[arg(long)]
    epochs: Option<usize>,
    /// Epoch cap for per-round retraining.
    #[arg(long)]
    retrain_epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Reinitialize the models before every round's training.
    #[arg(long)]
    cold_start: bool,
}

impl ExpArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_path(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag.clone() { cfg.$($field).+ = v; })*
            };
        }
        set! {
            case => case,
            rounds => al.rounds,
            budget => al.budget,
            buckets => al.buckets,
            psi => al.psi,
            k_a => al.k_a,
            threshold => al.threshold,
            initial => sizes.initial,
            validation => sizes.validation,
            pool => sizes.pool,
            test => sizes.test,
            hidden_layers => model.hidden_layers,
            epochs => train.epochs,
            retrain_epochs => retrain.epochs,
        }
        if let Some(w) = self.width {
            cfg.model.width = Some(w);
        }
        if let Some(lr) = self.learning_rate {
            cfg.train.learning_rate = lr;
            cfg.retrain.learning_rate = lr;
        }
        if let Some(b) = self.batch_size {
            cfg.train.batch_size = b;
            cfg.retrain.batch_size = b;
        }
        if self.cold_start {
            cfg.warm_start = false;
        }
        Ok(cfg)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Gen { exp, seed, out } => {
            let mut cfg = exp.resolve()?;
            if !seed.is_empty() {
                cfg.seeds = seed;
            }
            cfg.validate()?;
            let case = cfg.load_case()?;
            for s in &cfg.seeds {
                let dir = out.join(format!("seed{s}"));
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                let data = generate_datasets(&cfg, &case, *s)?;
                write_labeled(dir.join("d0.csv"), &case, &data.d0)?;
                write_labeled(dir.join("validation.csv"), &case, &data.validation)?;
                write_labeled(dir.join("test.csv"), &case, &data.test)?;
                write_unlabeled(dir.join("pool.csv"), &case, data.pool.unlabeled())?;
                println!("seed {s}: wrote {}", dir.display());
            }
        }
        Command::Run { exp, seed, variant, out } => {
            let mut cfg = exp.resolve()?;
            cfg.seeds = seed;
            cfg.variants = variant;
            cfg.out_dir = Some(out);
            let res = run_experiment(&cfg)?;
            println!("variant  round  mean_l1      p90");
            for v in &cfg.variants {
                if let Some(r) = res.final_aggregate(*v) {
                    println!("{:<8} {:>5} {:>8.4} {:>8.4}", r.variant, r.round, r.mean_l1, r.p90);
                }
            }
            for (v, s, e) in &res.failures {
                eprintln!("failed: {v} seed {s}: {e}");
            }
            if !res.failures.is_empty() {
                bail!("{} cell(s) failed", res.failures.len());
            }
        }
        Command::SweepPsi { exp, psi_values, seed, out } => {
            let mut cfg = exp.resolve()?;
            if !seed.is_empty() {
                cfg.seeds = seed;
            }
            cfg.out_dir = out;
            println!("variant   psi  mean_l1      p90");
            for r in psi_sweep(&cfg, &psi_values)? {
                println!("{:<7} {:>5} {:>8.4} {:>8.4}", r.variant, r.psi, r.mean_l1, r.p90);
            }
        }
        Command::Solve { case, demand } => {
            let case = harness::load_case(&case)?;
            let sol = solve_dcopf(&case, &DemandVector(demand))?;
            println!("objective {:.6}", sol.objective);
            for (g, p) in case.generators().iter().zip(&sol.p_g) {
                println!("gen at bus {:>3}: p_g = {p:.6}", g.bus);
            }
            for (b, t) in case.buses().iter().zip(&sol.theta) {
                println!("bus {:>3}: theta = {t:.6}", b.id);
            }
            let active = extract_active_set(&case, &sol, EPS_ACTIVE);
            let bits: String = active.bits().iter().map(|b| char::from(b'0' + b)).collect();
            println!("active set {bits}");
            for k in (0..active.len()).filter(|&k| active.get(k)) {
                println!("  {}", describe_constraint(&case, k));
            }
        }
        Command::ValidateCase { case } => {
            let case = harness::load_case(&case)?;
            println!(
                "{}: {} buses, {} generators, {} branches, {} loads, {} constraints",
                case.name,
                case.buses().len(),
                case.generators().len(),
                case.branches().len(),
                case.num_loads(),
                case.num_constraints()
            );
            match solve_dcopf(&case, &case.nominal_demand()) {
                Ok(sol) => println!("nominal demand solves with objective {:.4}", sol.objective),
                Err(e) => println!("warning: nominal demand does not solve: {e}"),
            }
        }
    }
    Ok(())
}
