//! Code generation in three steps: [`codegen`] produces symbolic assembly,
//! [`resolve`] fixes label addresses, [`emit`] writes bytes.

pub mod codegen;
pub mod emit;
pub mod layout;
pub mod resolve;
pub mod sym;

use thiserror::Error;

use crate::diag::CompileError;
use crate::ir::Program;

pub use codegen::{codegen, CodegenOptions};
pub use layout::LayoutPlan;
pub use resolve::{resolve_labels, ResolveError, SizedProgram};
pub use sym::{SymInstr, SymProgram};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error(transparent)]
    Codegen(#[from] CompileError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
}

/// Everything produced for one program.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub layout: LayoutPlan,
    pub sym: SymProgram,
    pub sized: SizedProgram,
    pub code: Vec<u8>,
    /// Entry points reachable through the dispatcher, with their selectors.
    pub selectors: Vec<(String, u32)>,
}

impl Artifacts {
    pub fn hex(&self) -> String {
        emit::hex_artifact(&self.code)
    }

    pub fn asm(&self) -> String {
        emit::asm_listing(&self.sized)
    }

    pub fn gasmap(&self) -> String {
        emit::gasmap(&self.sized)
    }
}

pub fn compile_program(p: &Program, opts: CodegenOptions) -> Result<Artifacts, BackendError> {
    let layout = LayoutPlan::new(p);
    let sym = codegen(p, &layout, opts)?;
    let sized = resolve_labels(&sym)?;
    let code = emit::emit(&sized);
    let selectors = codegen::exposed(p, opts)
        .into_iter()
        .map(|f| {
            let name = p.functions[f].name.clone();
            let sel = layout::selector(&name);
            (name, sel)
        })
        .collect();
    Ok(Artifacts { layout, sym, sized, code, selectors })
}
