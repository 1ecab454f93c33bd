//! Market scenarios: JSON step lists run through the compiled contract, the
//! reference interpreter, or both in lockstep.

use std::collections::BTreeMap;
use std::path::Path;

use bemp_core::Address;
use bemp_evm::{Tx, Word, World};
use mlc::ir::Ty;
use mlc::refint::RefMode;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::book::{big, books_indexed, plan_settlements, read_books};
use crate::contracts::{calldata, Compiled, FLOATING_POINT_CORRECTION};
use crate::harness::{execute, retag, Engine, StepOutcome};
use crate::view::{address_word, StorageView};
use crate::CorpusError;

/// Where the market is deployed in scenario worlds.
pub const MARKET_ADDRESS: u64 = 0xe7_0000;
/// Account `i` of a scenario lives at this base plus `i`.
pub const ACCOUNT_BASE: u64 = 0x1000;
pub const DEFAULT_GAS_LIMIT: u64 = 10_000_000;
/// Pseudo-op that runs the native matcher over the on-chain books and
/// settles every resulting trade.
pub const RUN_TRADING: &str = "run_trading";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub accounts: Vec<AccountSpec>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountSpec {
    pub name: String,
    #[serde(default)]
    pub balance: u64,
    /// Hex bytecode for accounts that are contracts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub op: String,
    pub caller: String,
    #[serde(default)]
    pub args: BTreeMap<String, Arg>,
    #[serde(default)]
    pub value: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gas_limit: Option<u64>,
    pub expect: Expect,
}

/// An argument: a number, a decimal or `0x` string, or an account name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Arg {
    Int(u64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expect {
    /// Only `"ok"` is accepted.
    Ok(OkTag),
    Revert { revert: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OkTag {
    Ok,
}

impl Expect {
    pub fn ok() -> Self {
        Expect::Ok(OkTag::Ok)
    }

    pub fn revert(tag: &str) -> Self {
        Expect::Revert { revert: tag.into() }
    }

    fn matches(&self, got: &StepOutcome) -> bool {
        match self {
            Expect::Ok(_) => got.is_ok(),
            Expect::Revert { revert } => got.revert_tag() == Some(revert),
        }
    }

    fn describe(&self) -> String {
        match self {
            Expect::Ok(_) => "ok".into(),
            Expect::Revert { revert } => format!("revert {revert}"),
        }
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CorpusError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|e| CorpusError::Io(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text).map_err(|e| match e {
            CorpusError::Scenario(m) => CorpusError::Scenario(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn address_of(&self, name: &str) -> Option<Address> {
        self.accounts.iter().position(|a| a.name == name).map(|i| Address::from_u64(ACCOUNT_BASE + i as u64))
    }

    /// Checks names, ops and argument lists against the market's interface.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let market = crate::market()?;
        let err = |i: usize, m: String| Err(CorpusError::Scenario(format!("step {i}: {m}")));
        for (k, a) in self.accounts.iter().enumerate() {
            if self.accounts[..k].iter().any(|b| b.name == a.name) {
                return Err(CorpusError::Scenario(format!("duplicate account {}", a.name)));
            }
            if let Some(code) = &a.code {
                hex::decode(code).map_err(|e| CorpusError::Scenario(format!("account {}: {e}", a.name)))?;
            }
        }
        for (i, s) in self.steps.iter().enumerate() {
            if self.address_of(&s.caller).is_none() {
                return err(i, format!("unknown caller {}", s.caller));
            }
            if s.op == RUN_TRADING {
                if !s.args.is_empty() {
                    return err(i, format!("{RUN_TRADING} takes no arguments"));
                }
                continue;
            }
            if let Err(m) = self.encode(market, s) {
                return err(i, m);
            }
        }
        Ok(())
    }

    fn arg_word(&self, arg: &Arg, ty: Ty) -> Result<Word, String> {
        match arg {
            Arg::Int(v) => Ok(Word::from(*v)),
            Arg::Text(t) => {
                if let Some(a) = self.address_of(t) {
                    if ty != Ty::Address {
                        return Err(format!("account name {t} given for a non-address parameter"));
                    }
                    return Ok(address_word(a));
                }
                let parsed = match t.strip_prefix("0x") {
                    Some(h) => Word::from_str_radix(h, 16),
                    None => Word::from_str_radix(t, 10),
                };
                parsed.map_err(|_| format!("{t} is neither a number nor an account"))
            }
        }
    }

    fn encode(&self, market: &Compiled, s: &Step) -> Result<Vec<u8>, String> {
        let f = market.function(&s.op).ok_or_else(|| format!("unknown operation {}", s.op))?;
        if !market.entry_points().contains(&f) {
            return Err(format!("{} is not an entry point", s.op));
        }
        let names = market.param_names(f);
        if let Some(extra) = s.args.keys().find(|k| !names.contains(k)) {
            return Err(format!("{} has no parameter {extra}", s.op));
        }
        let mut words = Vec::new();
        for (n, t) in names.iter().zip(market.param_types(f)) {
            let a = s.args.get(n).ok_or_else(|| format!("{} is missing argument {n}", s.op))?;
            words.push(self.arg_word(a, t)?);
        }
        Ok(calldata(&s.op, &words))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Native,
    Compiled,
    Both,
}

impl RunMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "native" => Some(RunMode::Native),
            "compiled" => Some(RunMode::Compiled),
            "both" => Some(RunMode::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: RunMode,
    /// Compiled lane only: revert with the second exception wherever the
    /// source raises the first.
    pub fault: Option<(String, String)>,
    /// Keep every compiled transaction with the world it ran against.
    pub record: bool,
}

impl RunOptions {
    pub fn new(mode: RunMode) -> Self {
        RunOptions { mode, fault: None, record: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub index: usize,
    pub op: String,
    pub outcome: StepOutcome,
    /// Settlements issued by a trading step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trades: Option<usize>,
}

/// A compiled transaction as executed, for replay.
#[derive(Debug, Clone)]
pub struct TxRecord {
    pub world: World,
    pub tx: Tx,
    pub gas_used: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub steps: Vec<StepReport>,
    pub ether_before: String,
    pub ether_after: String,
    /// Tokens created by successful recordings.
    pub tokens_minted: String,
    /// Export, import and market balances summed over all accounts.
    pub tokens_total: String,
    pub books_indexed: bool,
    #[serde(skip)]
    pub transcript: Vec<TxRecord>,
    #[serde(skip)]
    pub final_world: World,
}

impl ScenarioReport {
    pub fn ether_conserved(&self) -> bool {
        self.ether_before == self.ether_after
    }

    pub fn tokens_conserved(&self) -> bool {
        self.tokens_minted == self.tokens_total
    }
}

struct Lane {
    engine: Engine,
    world: World,
    code: Option<Vec<u8>>,
}

fn lane_name(e: Engine) -> &'static str {
    match e {
        Engine::Compiled => "compiled",
        Engine::Reference(_) => "native",
    }
}

/// Runs `scenario` step by step, checking each outcome against the step's
/// expectation and, in [`RunMode::Both`], against the other lane.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<ScenarioReport, CorpusError> {
    scenario.validate()?;
    let market = crate::market()?;
    let contract = Address::from_u64(MARKET_ADDRESS);
    let mut base = World::new();
    base.deploy(contract, market.artifacts.code.clone());
    for (i, a) in scenario.accounts.iter().enumerate() {
        let addr = Address::from_u64(ACCOUNT_BASE + i as u64);
        base.set_balance(addr, Word::from(a.balance));
        if let Some(code) = &a.code {
            base.deploy(addr, hex::decode(code).expect("validated"));
        }
    }
    let compiled_code = opts.fault.as_ref().map(|(from, to)| retag(&market.artifacts.code, from, to));
    let engines: Vec<Engine> = match opts.mode {
        RunMode::Native => vec![Engine::Reference(RefMode::SpecCheck)],
        RunMode::Compiled => vec![Engine::Compiled],
        RunMode::Both => vec![Engine::Reference(RefMode::SpecCheck), Engine::Compiled],
    };
    let mut lanes: Vec<Lane> = engines
        .into_iter()
        .map(|engine| {
            let mut world = base.clone();
            let code = if engine == Engine::Compiled { compiled_code.clone() } else { None };
            if let Some(c) = &code {
                world.deploy(contract, c.clone());
            }
            Lane { engine, world, code }
        })
        .collect();

    let ether_before = base.total_ether();
    let mut minted = BigInt::from(0);
    let mut steps = Vec::new();
    let mut transcript = Vec::new();
    let mut books_ok = true;

    for (index, step) in scenario.steps.iter().enumerate() {
        let caller = scenario.address_of(&step.caller).expect("validated");
        let mut results = Vec::new();
        for lane in lanes.iter_mut() {
            let txs: Vec<Tx> = if step.op == RUN_TRADING {
                let books = read_books(&StorageView::new(&market.program, &lane.world, contract));
                let plan = plan_settlements(&books).map_err(|e| CorpusError::Trading(index, e.to_string()))?;
                plan.iter()
                    .map(|s| Tx {
                        to: contract,
                        caller,
                        value: Word::ZERO,
                        calldata: calldata(
                            "settle",
                            &[Word::from(s.sell_id), Word::from(s.buy_id), s.amount, s.ether],
                        ),
                        gas_limit: step.gas_limit.unwrap_or(DEFAULT_GAS_LIMIT),
                    })
                    .collect()
            } else {
                vec![Tx {
                    to: contract,
                    caller,
                    value: Word::from(step.value),
                    calldata: scenario.encode(market, step).expect("validated"),
                    gas_limit: step.gas_limit.unwrap_or(DEFAULT_GAS_LIMIT),
                }]
            };
            let mut outcome = StepOutcome::Ok(String::new());
            let mut deltas = Vec::new();
            for tx in &txs {
                let before = (opts.record && lane.engine == Engine::Compiled).then(|| lane.world.clone());
                let r = execute(market, lane.code.as_deref(), lane.engine, &mut lane.world, tx);
                if let Some(world) = before {
                    transcript.push(TxRecord { world, tx: tx.clone(), gas_used: r.gas_used.unwrap_or(0) });
                }
                deltas.push(r.storage_delta);
                if !r.outcome.is_ok() {
                    outcome = r.outcome;
                    break;
                }
                if step.op != RUN_TRADING {
                    outcome = r.outcome;
                }
            }
            let view = StorageView::new(&market.program, &lane.world, contract);
            books_ok &= books_indexed(&view);
            results.push((lane_name(lane.engine), outcome, deltas, lane.world.ether_snapshot(), txs.len()));
        }

        let (name0, out0, delta0, ether0, n0) = &results[0];
        for (name, out, delta, ether, _) in &results[1..] {
            if out != out0 || delta != delta0 || ether != ether0 {
                let what = if out != out0 {
                    format!("{name0} {out0} vs {name} {out}")
                } else if delta != delta0 {
                    format!("{name0} and {name} storage deltas differ")
                } else {
                    format!("{name0} and {name} ether balances differ")
                };
                return Err(CorpusError::StepMismatch { step: index, op: step.op.clone(), expected: out0.to_string(), got: what });
            }
        }
        for (name, out, ..) in &results {
            if !step.expect.matches(out) {
                return Err(CorpusError::StepMismatch {
                    step: index,
                    op: step.op.clone(),
                    expected: step.expect.describe(),
                    got: format!("{name}: {out}"),
                });
            }
        }
        if step.op == "recordImportsAndExports" && out0.is_ok() {
            let amount = |k: &str| match &step.args[k] {
                Arg::Int(v) => BigInt::from(*v),
                a => big(scenario.arg_word(a, Ty::Int(bemp_core::IntKind::UINT256)).expect("validated")),
            };
            minted += (amount("amount_b") + amount("amount_s")) * FLOATING_POINT_CORRECTION;
        }
        steps.push(StepReport {
            index,
            op: step.op.clone(),
            outcome: out0.clone(),
            trades: (step.op == RUN_TRADING).then_some(*n0),
        });
    }

    let world = lanes.pop().expect("at least one lane").world;
    let view = StorageView::new(&market.program, &world, contract);
    let mut tokens = BigInt::from(0);
    for i in 0..scenario.accounts.len() {
        let k = address_word(Address::from_u64(ACCOUNT_BASE + i as u64));
        for m in ["export_balance", "import_balance", "market_balance"] {
            tokens += big(view.get(m, k));
        }
    }
    Ok(ScenarioReport {
        name: scenario.name.clone(),
        steps,
        ether_before: ether_before.to_string(),
        ether_after: world.total_ether().to_string(),
        tokens_minted: minted.to_string(),
        tokens_total: tokens.to_string(),
        books_indexed: books_ok,
        transcript,
        final_world: world,
    })
}
