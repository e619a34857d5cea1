//! The `vpe` command line: relation checks, regularity, reductions, product
//! dumps and instance generators.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use vpe_core::generators::{
    gen_hard_v1ca, gen_random, gen_random_afa, gen_regularity_instance, parse_afa, RandomParams, SystemKind,
};
use vpe_core::product::{build_product, ProductConfig};
use vpe_core::regularity::{regular_witness, regularity_report, RegularityEvidence};
use vpe_core::relations::{decide, extract_witness, Relation, Witness};
use vpe_core::vbpa::{check_relation_vbpa, reduce_to_finite};
use vpe_core::{parse_pda, parse_system, Configuration, Error, Limits, VpdaSystem};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "vpe", version, about = "Equivalence and regularity checking for visibly pushdown systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide a simulation-like relation or bisimilarity between two configurations.
    Check(CheckArgs),
    /// Decide whether a configuration is equivalent to some finite system.
    Regularity(RegularityArgs),
    /// Print the finite system obtained from a single-state system.
    Reduce {
        file: PathBuf,
    },
    /// Dump the product reachable from a pair of configurations.
    Product {
        file: PathBuf,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Generate systems in the standard text format.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Args, Debug)]
struct LimitArgs {
    /// Maximum saturation transitions.
    #[arg(long, default_value_t = 10_000_000)]
    max_transitions: usize,
    /// Maximum explicitly explored positions.
    #[arg(long, default_value_t = 5_000_000)]
    max_positions: usize,
    /// Wall-clock limit in seconds; 0 disables it.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
}

impl LimitArgs {
    fn limits(&self) -> Limits {
        Limits {
            max_transitions: self.max_transitions,
            max_positions: self.max_positions,
            timeout: (self.timeout > 0).then(|| Duration::from_secs(self.timeout)),
            ..Limits::default()
        }
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    relation: Relation,
    file: PathBuf,
    #[arg(long)]
    left: String,
    #[arg(long)]
    right: String,
    /// Print the verdict as JSON.
    #[arg(long)]
    json: bool,
    /// Include Attacker's winning strategy when the relation fails.
    #[arg(long)]
    witness: bool,
    /// Use the product game even for single-state systems.
    #[arg(long)]
    force_generic: bool,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Args, Debug)]
struct RegularityArgs {
    file: PathBuf,
    #[arg(long)]
    process: String,
    /// Any of the nine relations; all give the same answer.
    #[arg(long, default_value = "bisim")]
    equivalence: Relation,
    #[arg(long)]
    json: bool,
    /// Print a finite system equivalent to the process when it is regular.
    #[arg(long)]
    witness: bool,
    #[command(flatten)]
    limits: LimitArgs,
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// One-counter pair that is related iff the alternating automaton is empty.
    HardV1ca { afa: PathBuf },
    /// Single-state system whose probe symbol is regular iff the given symbol cannot empty its stack.
    Regularity {
        bpa: PathBuf,
        #[arg(long)]
        symbol: String,
    },
    /// Seeded random system.
    Random {
        #[arg(long, value_enum, default_value_t = KindArg::Vpda)]
        kind: KindArg,
        #[arg(long, default_value_t = 3)]
        states: usize,
        #[arg(long, default_value_t = 3)]
        symbols: usize,
        #[arg(long, default_value_t = 10)]
        rules: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Seeded random alternating automaton over a one-letter alphabet.
    Afa {
        #[arg(long, default_value_t = 3)]
        states: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Vpda,
    Vbpa,
    V1ca,
    Pda,
}

impl From<KindArg> for SystemKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Vpda => SystemKind::Vpda,
            KindArg::Vbpa => SystemKind::Vbpa,
            KindArg::V1ca => SystemKind::V1ca,
            KindArg::Pda => SystemKind::Pda,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Saturation on the product game.
    Product,
    /// Finite reduction of a single-state system.
    FiniteReduction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub method: Method,
    /// Game heads explored by the solver (0 for the finite reduction).
    pub positions: usize,
    /// Transitions added by saturation (0 for the finite reduction).
    pub transitions: usize,
    pub wall_micros: u64,
}

/// Result of `vpe check`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    pub relation: Relation,
    pub left: String,
    pub right: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub stats: Stats,
}

/// Result of `vpe regularity`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityVerdict {
    pub regular: bool,
    pub process: String,
    pub equivalence: Relation,
    pub evidence: RegularityEvidence,
    /// `s -a-> t` lines of an equivalent finite system, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<VpdaSystem, Error> {
    parse_system(&read(path)?)
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_HOLDS };
        }
    };
    let mut out = std::io::stdout().lock();
    match dispatch(cli.command, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("vpe: {e}");
            match e {
                Error::ResourceLimit(_) => EXIT_LIMIT,
                _ => EXIT_ERROR,
            }
        }
    }
}

fn dispatch(cmd: Command, out: &mut impl Write) -> Result<i32, Error> {
    let io = |e: std::io::Error| Error::Invalid(e.to_string());
    match cmd {
        Command::Check(args) => check(args, out),
        Command::Regularity(args) => regularity(args, out),
        Command::Reduce { file } => {
            let sys = load(&file)?;
            write!(out, "{}", reduce_to_finite(&sys)?).map_err(io)?;
            Ok(EXIT_HOLDS)
        }
        Command::Product {
            file,
            left,
            right,
            depth,
        } => {
            let sys = load(&file)?;
            let (l, r) = (sys.parse_configuration(&left)?, sys.parse_configuration(&right)?);
            let prod = build_product(&sys)?;
            let root = ProductConfig::root(&l, &r)?;
            for (from, label, to) in prod.explore(&root, depth) {
                writeln!(
                    out,
                    "{} -{}-> {}",
                    prod.format_config(&from),
                    prod.format_label(label),
                    prod.format_config(&to)
                )
                .map_err(io)?;
            }
            Ok(EXIT_HOLDS)
        }
        Command::Gen(g) => {
            let text = generate(g)?;
            write!(out, "{text}").map_err(io)?;
            Ok(EXIT_HOLDS)
        }
    }
}

/// Decides a check request; `Err` only for input errors and exceeded limits.
pub fn check_verdict(
    sys: &VpdaSystem,
    left: &Configuration,
    right: &Configuration,
    relation: Relation,
    witness: bool,
    force_generic: bool,
    limits: &Limits,
) -> Result<Verdict, Error> {
    let start = Instant::now();
    let single = |c: &Configuration| c.stack.len() == 1;
    let fast = !force_generic && sys.flags().is_vbpa && single(left) && single(right);
    let (holds, stats) = if fast {
        let holds = check_relation_vbpa(sys, left.stack[0], right.stack[0], relation)?;
        (holds, (Method::FiniteReduction, 0, 0))
    } else {
        let d = decide(sys, left, right, relation, limits)?;
        (d.holds, (Method::Product, d.stats.heads, d.stats.transitions))
    };
    let witness = if witness && !holds {
        Some(extract_witness(sys, left, right, relation, limits)?)
    } else {
        None
    };
    Ok(Verdict {
        holds,
        relation,
        left: sys.format_configuration(left),
        right: sys.format_configuration(right),
        witness,
        stats: Stats {
            method: stats.0,
            positions: stats.1,
            transitions: stats.2,
            wall_micros: start.elapsed().as_micros() as u64,
        },
    })
}

fn check(args: CheckArgs, out: &mut impl Write) -> Result<i32, Error> {
    let sys = load(&args.file)?;
    let left = sys.parse_configuration(&args.left)?;
    let right = sys.parse_configuration(&args.right)?;
    let v = check_verdict(
        &sys,
        &left,
        &right,
        args.relation,
        args.witness,
        args.force_generic,
        &args.limits.limits(),
    )?;
    let io = |e: std::io::Error| Error::Invalid(e.to_string());
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("verdicts serialize")).map_err(io)?;
    } else {
        let verb = if v.holds { "holds" } else { "does not hold" };
        writeln!(out, "{} {} {}: {verb}", v.left, v.relation, v.right).map_err(io)?;
        if let Some(w) = &v.witness {
            if let Some(m) = w.first_move() {
                writeln!(out, "first move: {m}").map_err(io)?;
            }
            write!(out, "{w}").map_err(io)?;
        }
    }
    Ok(if v.holds { EXIT_HOLDS } else { EXIT_FAILS })
}

fn regularity(args: RegularityArgs, out: &mut impl Write) -> Result<i32, Error> {
    let sys = load(&args.file)?;
    let c = sys.parse_configuration(&args.process)?;
    let limits = args.limits.limits();
    let report = regularity_report(&sys, &c, &limits)?;
    let witness = if args.witness && report.regular {
        Some(regular_witness(&sys, &c, &limits)?.to_string())
    } else {
        None
    };
    let v = RegularityVerdict {
        regular: report.regular,
        process: sys.format_configuration(&c),
        equivalence: args.equivalence,
        evidence: report.evidence,
        witness,
    };
    let io = |e: std::io::Error| Error::Invalid(e.to_string());
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("verdicts serialize")).map_err(io)?;
    } else {
        let verb = if v.regular { "regular" } else { "not regular" };
        writeln!(out, "{} is {verb}", v.process).map_err(io)?;
        match &v.evidence {
            RegularityEvidence::UnboundedPopping { state, symbol } => {
                writeln!(out, "unbounded popping from head {state}:{symbol}").map_err(io)?
            }
            RegularityEvidence::BoundedPopping { depth, states } => {
                writeln!(out, "top {depth} symbols suffice; quotient has {states} states").map_err(io)?
            }
        }
        if let Some(w) = &v.witness {
            write!(out, "{w}").map_err(io)?;
        }
    }
    Ok(if v.regular { EXIT_HOLDS } else { EXIT_FAILS })
}

fn generate(g: GenCommand) -> Result<String, Error> {
    match g {
        GenCommand::HardV1ca { afa } => {
            let afa = parse_afa(&read(&afa)?)?;
            let (sys, l, r) = gen_hard_v1ca(&afa)?;
            Ok(format!(
                "# left {} right {}\n{sys}",
                sys.format_configuration(&l),
                sys.format_configuration(&r)
            ))
        }
        GenCommand::Regularity { bpa, symbol } => {
            let bpa = parse_pda(&read(&bpa)?)?;
            let x = bpa.symbol_id(&symbol).ok_or(Error::Unknown {
                kind: "stack symbol",
                name: symbol,
            })?;
            let (sys, probe) = gen_regularity_instance(&bpa, x)?;
            let state = sys.state_name(sys.state_ids().next().expect("one state"));
            Ok(format!("# probe {state}:{}\n{sys}", sys.symbol_name(probe)))
        }
        GenCommand::Random {
            kind,
            states,
            symbols,
            rules,
            seed,
        } => {
            let mut p = RandomParams::new(kind.into(), seed);
            p.states = states;
            p.symbols = symbols;
            p.rules = rules;
            Ok(gen_random(&p)?.to_string())
        }
        GenCommand::Afa { states, seed } => Ok(gen_random_afa(states, seed).to_string()),
    }
}
