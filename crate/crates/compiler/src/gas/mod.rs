//! Static gas checking: every path through a `[@gas_checking]` function
//! must cost no more than the `add_gas` annotations on it.

pub mod cfg;
pub mod check;
pub mod dynamic;
pub mod measure;
pub mod paths;

pub use cfg::{build_cfg, Cfg, CfgError, Edge, EdgeKind};
pub use dynamic::{measure_calls, CallMeasurement};
pub use check::{check_function, check_program, FunctionReport, GasError, GasReport, PathReport};
pub use measure::{measure_constants, AffineBound, MeasureError};
pub use paths::{enumerate_paths, Path, PathError, DEFAULT_PATH_CAP};
