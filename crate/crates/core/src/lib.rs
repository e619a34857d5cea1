//! Decision procedures for visibly pushdown systems: simulation-like
//! preorders and equivalences, bisimilarity, and regularity.

pub mod automaton;
pub mod error;
pub mod finite;
pub mod generators;
pub mod limits;
pub mod product;
pub mod regularity;
pub mod relations;
pub mod saturation;
pub mod system;
pub mod vbpa;

pub use error::{Error, Result};
pub use limits::Limits;
pub use system::{
    parse_pda, parse_system, ActionAlphabet, ActionId, ActionKind, Configuration, Rule, StateId,
    SymbolId, VpdaSystem,
};
