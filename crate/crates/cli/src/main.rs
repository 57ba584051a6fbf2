use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context as _, Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use supcfg::grammar::Lint;
use supcfg::{
    enumerate_trees, learn, parse_grammar, parse_mta, parse_tree, pmta_to_wcfg, wcfg_to_pcfg, wcfg_to_pmta,
    LearnError, Limits, Mta, TargetMode, Teacher, TransformError, Wcfg,
};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_LIMIT: u8 = 3;
const EXIT_USAGE: u8 = 64;

/// Learn structurally unambiguous probabilistic grammars from structured
/// queries, and inspect the grammars and automata involved.
#[derive(Parser)]
#[command(name = "supcfg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a CMTA from a target grammar acting as the teacher.
    Learn(LearnArgs),
    /// Print the exact value of one structured string.
    Eval {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        tree: String,
    },
    /// Convert between automaton, grammar and PCFG text.
    Convert {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum)]
        to: Format,
        #[command(flatten)]
        numeric: Numeric,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a grammar (invertibility, rule sums) or an automaton (co-linearity).
    Check {
        #[command(flatten)]
        input: Input,
    },
    /// Print every tree up to a size with its value, tab separated.
    Enumerate {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        max_nodes: u32,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Input {
    /// Grammar file.
    #[arg(long, visible_alias = "wcfg")]
    grammar: Option<PathBuf>,
    /// Automaton file.
    #[arg(long)]
    cmta: Option<PathBuf>,
}

#[derive(Args)]
struct Numeric {
    /// Convergence tolerance for partition functions.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: usize,
}

#[derive(Args)]
struct LearnArgs {
    /// Target grammar answering the queries.
    #[arg(long, visible_alias = "wcfg")]
    grammar: PathBuf,
    /// Largest tree, in nodes, compared by an equivalence query.
    #[arg(long, default_value_t = 13, value_parser = clap::value_parser!(u32).range(1..))]
    seq_bound: u32,
    #[arg(long, value_enum, default_value_t = Emit::Cmta)]
    emit: Emit,
    /// Accept targets whose rule weights do not sum to one.
    #[arg(long)]
    weighted: bool,
    #[command(flatten)]
    numeric: Numeric,
    /// Output file; the transcript goes next to it with a `.transcript`
    /// suffix. Without it, output goes to stdout and the transcript to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Cmta,
    Wcfg,
    Pcfg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Cmta,
    Wcfg,
    Pcfg,
    All,
}

enum Loaded {
    Grammar(Wcfg),
    Automaton(Mta),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<LearnError>() {
            if matches!(err, LearnError::RoundLimit(_) | LearnError::TableLimit { .. }) {
                return EXIT_LIMIT;
            }
        }
        if let Some(TransformError::Divergence { .. }) = cause.downcast_ref::<TransformError>() {
            return EXIT_LIMIT;
        }
    }
    EXIT_INVALID
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Learn(args) => cmd_learn(args),
        Command::Eval { input, tree } => {
            let value = match load(&input)? {
                Loaded::Grammar(g) => {
                    let t = parse_tree(&tree, g.alphabet()).with_context(|| format!("tree `{tree}`"))?;
                    g.tree_weight(&t)?
                }
                Loaded::Automaton(a) => {
                    let t = parse_tree(&tree, a.alphabet()).with_context(|| format!("tree `{tree}`"))?;
                    a.value(&t)?
                }
            };
            println!("{value}");
            Ok(0)
        }
        Command::Convert { input, to, numeric, out } => {
            let text = match (load(&input)?, to) {
                (Loaded::Automaton(a), Format::Wcfg) => pmta_to_wcfg(&a)?.to_string(),
                (Loaded::Automaton(a), Format::Pcfg) => pcfg_text(&pmta_to_wcfg(&a)?, &numeric)?,
                (Loaded::Grammar(g), Format::Cmta) => wcfg_to_pmta(&g).to_string(),
                (Loaded::Grammar(g), Format::Pcfg) => pcfg_text(&g, &numeric)?,
                (Loaded::Automaton(a), Format::Cmta) => a.to_string(),
                (Loaded::Grammar(g), Format::Wcfg) => g.to_string(),
            };
            write_output(out.as_deref(), &text)?;
            Ok(0)
        }
        Command::Check { input } => cmd_check(load(&input)?),
        Command::Enumerate { input, max_nodes } => {
            let loaded = load(&input)?;
            let stdout = io::stdout();
            let mut out = io::BufWriter::new(stdout.lock());
            match &loaded {
                Loaded::Grammar(g) => {
                    let mut weigher = g.evaluator();
                    for t in enumerate_trees(g.alphabet(), max_nodes as usize) {
                        writeln!(out, "{t}\t{}", weigher.tree_weight(&t)?)?;
                    }
                }
                Loaded::Automaton(a) => {
                    for t in enumerate_trees(a.alphabet(), max_nodes as usize) {
                        writeln!(out, "{t}\t{}", a.value(&t)?)?;
                    }
                }
            }
            out.flush()?;
            Ok(0)
        }
    }
}

fn cmd_learn(args: LearnArgs) -> Result<u8> {
    let target = read_grammar(&args.grammar)?;
    let mode = if args.weighted { TargetMode::Weighted } else { TargetMode::Probabilistic };
    let teacher = Teacher::with_mode(target, args.seq_bound as usize, mode)?;
    let (a, transcript) = match learn(&teacher, Limits::default()) {
        Ok(result) => result,
        Err(e) => {
            if let LearnError::RoundLimit(t) | LearnError::TableLimit { transcript: t, .. } = &e {
                write_transcript(args.out.as_deref(), &t.to_string())?;
            }
            return Err(e.into());
        }
    };
    let text = match args.emit {
        Emit::Cmta => a.to_string(),
        Emit::Wcfg => pmta_to_wcfg(&a)?.to_string(),
        Emit::Pcfg => pcfg_text(&pmta_to_wcfg(&a)?, &args.numeric)?,
        Emit::All => {
            let g = pmta_to_wcfg(&a)?;
            format!("# cmta\n{a}\n# wcfg\n{g}\n# pcfg\n{}", pcfg_text(&g, &args.numeric)?)
        }
    };
    write_output(args.out.as_deref(), &text)?;
    write_transcript(args.out.as_deref(), &transcript.to_string())?;
    Ok(0)
}

fn cmd_check(loaded: Loaded) -> Result<u8> {
    let mut problems = Vec::new();
    let verdict = |ok: bool| if ok { "yes" } else { "no" };
    match loaded {
        Loaded::Grammar(g) => {
            let witness = g.check_invertible();
            let sums = g.check_probabilistic();
            println!("invertible: {}; probabilistic: {}", verdict(witness.is_none()), verdict(sums.is_probabilistic()));
            if let Some(w) = witness {
                problems.push(g.describe_witness(&w));
            }
            for n in sums.failing() {
                problems.push(format!("rules of {} sum to {}", g.nonterminals()[n], sums.sums[n]));
            }
            if !sums.root_sum.is_one() {
                problems.push(format!("root weights sum to {}", sums.root_sum));
            }
            for lint in g.lint() {
                match lint {
                    Lint::ZeroWeightRule(i) => eprintln!("warning: `{}` has weight 0", g.rule_text(i)),
                    Lint::Unreachable(n) => eprintln!("warning: {} is unreachable from the roots", g.nonterminals()[n]),
                }
            }
        }
        Loaded::Automaton(a) => {
            let report = a.check_colinear();
            println!(
                "colinear: {}; nonnegative: {}",
                verdict(report.has_single_nonzero_columns()),
                verdict(report.is_nonnegative())
            );
            if let Some(site) = &report.negative {
                problems.push(format!("negative weight at {site}"));
            }
            if let Some(site) = &report.crowded_column {
                problems.push(format!("more than one nonzero at {site}"));
            }
        }
    }
    for p in &problems {
        println!("  {p}");
    }
    Ok(if problems.is_empty() { 0 } else { EXIT_CHECK_FAILED })
}

fn pcfg_text(g: &Wcfg, numeric: &Numeric) -> Result<String> {
    Ok(wcfg_to_pcfg(g, numeric.tol, numeric.max_iter)?.to_string())
}

fn load(input: &Input) -> Result<Loaded> {
    match (&input.grammar, &input.cmta) {
        (Some(path), _) => Ok(Loaded::Grammar(read_grammar(path)?)),
        (None, Some(path)) => {
            let text = read(path)?;
            Ok(Loaded::Automaton(parse_mta(&text).with_context(|| path.display().to_string())?))
        }
        (None, None) => Err(anyhow!("one of --grammar or --cmta is required")),
    }
}

fn read_grammar(path: &Path) -> Result<Wcfg> {
    let text = read(path)?;
    parse_grammar(&text).with_context(|| path.display().to_string())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_transcript(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            let mut name = path.as_os_str().to_owned();
            name.push(".transcript");
            fs::write(&name, text).with_context(|| format!("writing {}", Path::new(&name).display()))
        }
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}
