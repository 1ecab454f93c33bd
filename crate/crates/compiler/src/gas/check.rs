//! Per-path comparison of static cost against declared annotations.

use std::fmt::Write;

use bemp_evm::GasSchedule;
use serde::Serialize;
use thiserror::Error;

use super::cfg::{build_cfg, Cfg, CfgError};
use super::paths::{enumerate_paths, PathError};
use crate::backend::resolve::{FunctionRange, SizedProgram};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GasError {
    #[error(transparent)]
    Cfg(#[from] CfgError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("no function named `{0}`")]
    UnknownFunction(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathReport {
    /// Function name, with `/loop` for paths starting at a loop head.
    pub entry: String,
    pub entry_offset: usize,
    /// Start offsets of the blocks on the path.
    pub blocks: Vec<usize>,
    pub cost: u64,
    pub bound: u64,
    pub alloc: u64,
    pub alloc_bound: u64,
    pub pass: bool,
}

impl PathReport {
    pub fn line(&self) -> String {
        format!(
            "PATH {}@{} cost={} bound={} alloc={} allocbound={} {}",
            self.entry,
            self.entry_offset,
            self.cost,
            self.bound,
            self.alloc,
            self.alloc_bound,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionReport {
    pub name: String,
    /// False for functions without `[@gas_checking]`; they have no paths.
    pub checked: bool,
    pub paths: Vec<PathReport>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GasReport {
    pub functions: Vec<FunctionReport>,
    pub pass: bool,
}

impl GasReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for f in &self.functions {
            if !f.checked {
                let _ = writeln!(out, "SKIP {} (not gas_checking)", f.name);
                continue;
            }
            for p in &f.paths {
                let _ = writeln!(out, "{}", p.line());
            }
            let _ = writeln!(
                out,
                "FUNCTION {} {} ({} paths)",
                f.name,
                if f.pass { "PASS" } else { "FAIL" },
                f.paths.len()
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn function(&self, name: &str) -> Option<&FunctionReport> {
        self.functions.iter().find(|f| f.name == name)
    }
}

/// Checks every path of one function.
pub fn check_function(
    prog: &SizedProgram,
    cfg: &Cfg,
    f: &FunctionRange,
    schedule: &GasSchedule,
    cap: usize,
) -> Result<FunctionReport, GasError> {
    let entry = cfg.block_at(f.entry).ok_or(GasError::UnknownFunction(f.name.clone()))?;
    let mut entries = vec![(entry, f.name.clone())];
    for h in &cfg.loop_heads {
        let start = cfg.blocks[*h].start;
        if (f.start..f.end).contains(&start) && *h != entry {
            entries.push((*h, format!("{}/loop", f.name)));
        }
    }
    let mut paths = Vec::new();
    for (e, name) in entries {
        for p in enumerate_paths(cfg, e, cap)? {
            let mut r = PathReport {
                entry: name.clone(),
                entry_offset: cfg.blocks[e].start,
                blocks: p.blocks.iter().map(|b| cfg.blocks[*b].start).collect(),
                cost: 0,
                bound: 0,
                alloc: 0,
                alloc_bound: 0,
                pass: false,
            };
            for b in &p.blocks {
                let blk = &cfg.blocks[*b];
                r.cost += cfg.block_cost(prog, schedule, *b);
                let inside = |o: usize| blk.start <= o && o < blk.end;
                for a in prog.annotations.iter().filter(|a| inside(a.offset)) {
                    r.bound += a.used;
                    r.alloc_bound += a.alloc;
                }
                r.alloc += prog.alloc_sites.iter().filter(|(o, _)| inside(*o)).map(|(_, n)| n).sum::<u64>();
            }
            r.pass = r.cost <= r.bound && r.alloc <= r.alloc_bound;
            paths.push(r);
        }
    }
    let pass = paths.iter().all(|p| p.pass);
    Ok(FunctionReport { name: f.name.clone(), checked: true, paths, pass })
}

/// Checks every `[@gas_checking]` function; the others are listed as skipped.
pub fn check_program(prog: &SizedProgram, schedule: &GasSchedule, cap: usize) -> Result<GasReport, GasError> {
    let cfg = build_cfg(prog)?;
    let mut functions = Vec::new();
    for f in &prog.functions {
        if f.gas_checking {
            functions.push(check_function(prog, &cfg, f, schedule, cap)?);
        } else {
            functions.push(FunctionReport { name: f.name.clone(), checked: false, paths: Vec::new(), pass: true });
        }
    }
    let pass = functions.iter().all(|f| f.pass);
    Ok(GasReport { functions, pass })
}
