//! Path enumeration: acyclic walks from an entry block, cut wherever an edge
//! enters a loop head.

use thiserror::Error;

use super::cfg::Cfg;

pub const DEFAULT_PATH_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("more than {cap} paths from block {entry}; restructure the function")]
    PathExplosion { entry: usize, cap: usize },
    #[error("cycle through block {0} without a tagged back edge")]
    Unstructured(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub entry: usize,
    pub blocks: Vec<usize>,
}

/// All paths from `entry` in block-index lexicographic order. A path ends at
/// a block without successors or just before an edge into a loop head (other
/// than leaving `entry` itself when it is one).
pub fn enumerate_paths(cfg: &Cfg, entry: usize, cap: usize) -> Result<Vec<Path>, PathError> {
    let mut out = Vec::new();
    let mut stack = vec![entry];
    walk(cfg, entry, &mut stack, &mut out, cap)?;
    Ok(out)
}

fn walk(cfg: &Cfg, entry: usize, cur: &mut Vec<usize>, out: &mut Vec<Path>, cap: usize) -> Result<(), PathError> {
    let b = *cur.last().unwrap();
    let mut succ: Vec<usize> = cfg.successors(b).map(|e| e.to).collect();
    succ.sort_unstable();
    succ.dedup();
    let mut extended = false;
    let mut cut = false;
    for s in succ {
        if cfg.loop_heads.contains(&s) {
            cut = true;
            continue;
        }
        if cur.contains(&s) {
            return Err(PathError::Unstructured(s));
        }
        extended = true;
        cur.push(s);
        walk(cfg, entry, cur, out, cap)?;
        cur.pop();
    }
    if !extended || cut {
        if out.len() >= cap {
            return Err(PathError::PathExplosion { entry, cap });
        }
        out.push(Path { entry, blocks: cur.clone() });
    }
    Ok(())
}
