//! The `mlcc` command line: compile contracts, check their gas annotations,
//! run bytecode, match order books and replay market scenarios.
//!
//! Exit statuses: 0 success, 1 verification or assertion failure, 2 usage
//! or IO error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bemp_core::trading::{nb_token, OrderBook};
use bemp_core::{oracle_max_tokens, trading, Address, Mode};
use bemp_corpus::{run_scenario, CorpusError, RunMode, RunOptions, Scenario};
use bemp_evm::{GasSchedule, Interpreter, Outcome, Tx, Word, World};
use clap::{Args, Parser, Subcommand};
use mlc::backend::{compile_program, CodegenOptions};
use mlc::gas::{check_program, DEFAULT_PATH_CAP};
use serde_json::json;
use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Where `run` deploys the code and who calls it.
pub const RUN_CONTRACT: u64 = 0xc0de;
pub const RUN_CALLER: u64 = 0xbeef;

#[derive(Debug, Parser)]
#[command(name = "mlcc", version, about = "Contract toolchain driver")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Machine-readable output.
    #[arg(long, global = true, conflicts_with = "quiet")]
    json: bool,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    /// Gas schedule file (`<MNEMONIC> <cost>` lines) replacing the default.
    #[arg(long, global = true, value_name = "PATH")]
    schedule: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compile a source file to NAME.evm, NAME.asm and NAME.gasmap.
    Compile {
        source: PathBuf,
        #[arg(short, long, default_value = ".")]
        out_dir: PathBuf,
        /// Also expose private functions with scalar signatures.
        #[arg(long)]
        expose_private: bool,
    },
    /// Check every path of every gas_checking function.
    CheckGas {
        source: PathBuf,
        /// Maximum number of paths per function.
        #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
        cap: usize,
    },
    /// Execute one transaction against hex bytecode.
    Run {
        code: PathBuf,
        /// Calldata in hex.
        #[arg(long, default_value = "")]
        calldata: String,
        #[arg(long, default_value_t = 10_000_000)]
        gas: u64,
        /// Wei sent with the call.
        #[arg(long, default_value_t = 0)]
        value: u64,
        /// Print one line per executed instruction.
        #[arg(long)]
        trace: bool,
    },
    /// Match an order-book file with the greedy matcher.
    Match {
        book: PathBuf,
        /// Also compute the maximum tradable volume and compare.
        #[arg(long)]
        oracle: bool,
    },
    /// Replay a market scenario.
    Scenario {
        file: PathBuf,
        #[arg(long, default_value = "both", value_parser = ["native", "compiled", "both"])]
        mode: String,
        /// Build the compiled lane with FROM's revert tag replaced by TO's.
        #[arg(long, value_name = "FROM:TO")]
        inject_fault: Option<String>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}: {1}")]
    Io(String, String),
    /// Compile errors, failed checks and mismatches.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(..) => EXIT_USAGE,
            CliError::Failed(_) => EXIT_FAIL,
        }
    }
}

/// Captured result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Output { stdout: String::new(), stderr: text, code }
            } else {
                Output { stdout: text, stderr: String::new(), code }
            };
        }
    };
    let mut out = String::new();
    let result = dispatch(&cli, &mut out);
    let (code, stderr) = match result {
        Ok(code) => (code, String::new()),
        Err(e) => (e.code(), format!("error: {e}\n")),
    };
    if cli.global.quiet && code == EXIT_OK {
        out.clear();
    }
    Output { stdout: out, stderr, code }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e.to_string()))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(path.display().to_string(), e.to_string()))
}

fn schedule(g: &Global) -> Result<GasSchedule, CliError> {
    match &g.schedule {
        None => Ok(GasSchedule::default()),
        Some(p) => GasSchedule::parse(&read(p)?).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
    }
}

fn dispatch(cli: &Cli, out: &mut String) -> Result<u8, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Compile { source, out_dir, expose_private } => compile(g, source, out_dir, *expose_private, out),
        Command::CheckGas { source, cap } => check_gas(g, source, *cap, out),
        Command::Run { code, calldata, gas, value, trace } => run_code(g, code, calldata, *gas, *value, *trace, out),
        Command::Match { book, oracle } => match_book(g, book, *oracle, out),
        Command::Scenario { file, mode, inject_fault } => scenario(g, file, mode, inject_fault.as_deref(), out),
    }
}

fn frontend(source: &Path, opts: CodegenOptions) -> Result<mlc::backend::Artifacts, CliError> {
    let text = read(source)?;
    let program = mlc::compile_source(&text).map_err(|e| CliError::Failed(format!("{}:{e}", source.display())))?;
    compile_program(&program, opts).map_err(|e| CliError::Failed(format!("{}: {e}", source.display())))
}

fn compile(g: &Global, source: &Path, out_dir: &Path, expose_private: bool, out: &mut String) -> Result<u8, CliError> {
    let art = frontend(source, CodegenOptions { expose_private })?;
    let stem = source.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(out_dir.display().to_string(), e.to_string()))?;
    let paths = ["evm", "asm", "gasmap"].map(|ext| out_dir.join(format!("{stem}.{ext}")));
    write(&paths[0], &art.hex())?;
    write(&paths[1], &art.asm())?;
    write(&paths[2], &art.gasmap())?;
    if g.json {
        let sel: Vec<_> = art.selectors.iter().map(|(n, s)| json!({"function": n, "selector": format!("0x{s:08x}")})).collect();
        let v = json!({
            "evm": paths[0], "asm": paths[1], "gasmap": paths[2],
            "code_size": art.code.len(), "selectors": sel,
        });
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        for p in &paths {
            let _ = writeln!(out, "wrote {}", p.display());
        }
        let _ = writeln!(out, "code size {} bytes", art.code.len());
    }
    Ok(EXIT_OK)
}

fn check_gas(g: &Global, source: &Path, cap: usize, out: &mut String) -> Result<u8, CliError> {
    let schedule = schedule(g)?;
    let art = frontend(source, CodegenOptions::default())?;
    let report = check_program(&art.sized, &schedule, cap).map_err(|e| CliError::Failed(e.to_string()))?;
    if g.json {
        let _ = writeln!(out, "{}", report.to_json());
    } else {
        out.push_str(&report.render());
        let _ = writeln!(out, "{}", if report.pass { "PASS" } else { "FAIL" });
    }
    Ok(if report.pass { EXIT_OK } else { EXIT_FAIL })
}

fn parse_hex(what: &str, text: &str) -> Result<Vec<u8>, CliError> {
    let t = text.trim();
    hex::decode(t.strip_prefix("0x").unwrap_or(t)).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

fn word_hex(w: Word) -> String {
    format!("0x{w:x}")
}

fn run_code(g: &Global, code: &Path, calldata: &str, gas: u64, value: u64, trace: bool, out: &mut String) -> Result<u8, CliError> {
    let schedule = schedule(g)?;
    let bytes = parse_hex(&code.display().to_string(), &read(code)?)?;
    let calldata = parse_hex("--calldata", calldata)?;
    let mut world = World::new();
    let (to, caller) = (Address::from_u64(RUN_CONTRACT), Address::from_u64(RUN_CALLER));
    world.deploy(to, bytes);
    world.set_balance(caller, Word::from(u64::MAX));
    let tx = Tx { to, caller, value: Word::from(value), calldata, gas_limit: gas };
    let mut it = Interpreter::new(&schedule);
    if trace {
        it = it.with_trace();
    }
    let r = it.exec_tx(&mut world, &tx);
    let outcome = match &r.outcome {
        Outcome::Return(d) => format!("return 0x{}", hex::encode(d)),
        Outcome::Revert { data, .. } => format!("revert 0x{}", hex::encode(data)),
        Outcome::OutOfGas => "out of gas".into(),
        Outcome::Fault(k) => format!("fault: {k}"),
    };
    if g.json {
        let delta: serde_json::Map<String, serde_json::Value> =
            r.storage_delta.iter().map(|(k, (a, b))| (word_hex(*k), json!([word_hex(*a), word_hex(*b)]))).collect();
        let mut v = json!({
            "outcome": outcome, "gas_used": r.gas_used, "storage_delta": delta, "logs": r.logs.len(),
        });
        if trace {
            v["trace"] = json!(r.trace);
        }
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        for line in &r.trace {
            let _ = writeln!(out, "{line}");
        }
        let _ = writeln!(out, "outcome {outcome}");
        let _ = writeln!(out, "gas_used {}", r.gas_used);
        for (k, (a, b)) in &r.storage_delta {
            let _ = writeln!(out, "storage {} {} -> {}", word_hex(*k), word_hex(*a), word_hex(*b));
        }
    }
    Ok(EXIT_OK)
}

fn match_book(g: &Global, path: &Path, oracle: bool, out: &mut String) -> Result<u8, CliError> {
    let book = OrderBook::parse(&read(path)?, true).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let trades = if book.buys.is_empty() || book.sells.is_empty() {
        Default::default()
    } else {
        trading(&book.buys, &book.sells, Mode::SpecCheck).map_err(|e| CliError::Failed(e.to_string()))?
    };
    let total = nb_token(&trades);
    let best = oracle.then(|| oracle_max_tokens(&book.buys, &book.sells));
    let optimal = best.as_ref().is_none_or(|b| *b == total);
    let list = trades.construction_order();
    if g.json {
        let ts: Vec<_> = list
            .iter()
            .map(|t| json!({"seller": t.seller_index, "buyer": t.buyer_index, "amount": t.amount.to_string()}))
            .collect();
        let mut v = json!({"trades": ts, "total": total.to_string()});
        if let Some(b) = &best {
            v["oracle"] = json!(b.to_string());
            v["optimal"] = json!(optimal);
        }
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        for t in &list {
            let _ = writeln!(out, "trade seller {} buyer {} amount {}", t.seller_index, t.buyer_index, t.amount);
        }
        let _ = writeln!(out, "total {total}");
        if let Some(b) = &best {
            let _ = writeln!(out, "oracle {b}");
            let _ = writeln!(out, "optimal {}", if optimal { "yes" } else { "no" });
        }
    }
    Ok(if optimal { EXIT_OK } else { EXIT_FAIL })
}

fn scenario(g: &Global, file: &Path, mode: &str, fault: Option<&str>, out: &mut String) -> Result<u8, CliError> {
    let mut opts = RunOptions::new(RunMode::parse(mode).expect("clap restricts the values"));
    if let Some(f) = fault {
        let (from, to) = f.split_once(':').ok_or_else(|| CliError::Usage("--inject-fault expects FROM:TO".into()))?;
        opts.fault = Some((from.into(), to.into()));
    }
    let s = Scenario::load(file).map_err(|e| match e {
        CorpusError::Io(p, m) => CliError::Io(p, m),
        e => CliError::Usage(e.to_string()),
    })?;
    let report = run_scenario(&s, &opts).map_err(|e| match e {
        CorpusError::Scenario(m) => CliError::Usage(m),
        e => CliError::Failed(e.to_string()),
    })?;
    let conserved = report.ether_conserved() && report.tokens_conserved() && report.books_indexed;
    if g.json {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("json"));
    } else {
        for st in &report.steps {
            let _ = write!(out, "step {} {}: {}", st.index, st.op, st.outcome);
            if let Some(n) = st.trades {
                let _ = write!(out, " ({n} trades)");
            }
            out.push('\n');
        }
        let _ = writeln!(out, "ether {} -> {}", report.ether_before, report.ether_after);
        let _ = writeln!(out, "tokens minted {} held {}", report.tokens_minted, report.tokens_total);
        let _ = writeln!(out, "{} {}", report.name, if conserved { "PASS" } else { "FAIL" });
    }
    Ok(if conserved { EXIT_OK } else { EXIT_FAIL })
}
