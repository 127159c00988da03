//! Multiparty session types: Scribble front end, projection, endpoint
//! machines, composition checking and API generation.

pub mod ast;
pub mod codegen;
pub mod compose;
pub mod corpus;
pub mod efsm;
pub mod monitor;
pub mod parse;
pub mod project;
pub mod render;
pub mod validate;

pub use ast::*;
pub use efsm::{equivalent_to_depth, export_dot, export_efsm_json, import_efsm_json, split_labels, to_efsm, Efsm};
pub use parse::{parse_module, ParseError};
pub use project::{project, LocalType, ProjectError};
pub use render::render_module;
pub use validate::{check_well_formed, Diagnostic, Severity};
