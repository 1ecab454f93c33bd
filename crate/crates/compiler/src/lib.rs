//! `mlc`: a compiler from a small ML-like contract language to EVM bytecode.
//!
//! The pipeline is [`parser`] → [`typeck`] (producing the typed [`ir`]) →
//! [`backend`] (symbolic assembly, label resolution, emission). [`gas`]
//! checks the emitted code against the `add_gas` annotations and [`refint`]
//! interprets the IR directly, which is what compiled code is tested against.

pub mod ast;
pub mod backend;
pub mod diag;
pub mod gas;
pub mod ir;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod refint;
pub mod typeck;

pub use diag::{CompileError, ErrorKind, Span};
pub use typeck::compile_source;
