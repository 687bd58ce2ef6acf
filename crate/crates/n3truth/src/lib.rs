//! Strong Kleene supervaluation semantics with a Nelson-style conditional,
//! naive-truth fixed points over finite structures, set-sequent proof
//! search and an ordering-frame extension for `[]` and `~>`.

pub mod bits;
pub mod cli;
pub mod modal;
pub mod proof;
pub mod semantics;
pub mod syntax;
pub mod model;
pub mod truth;
