//! A reflective model-workbench kernel.
//!
//! Metamodels, instance models and viewpoints live in one [`store::Store`].
//! Every change is a transaction, so undo, replay and replication all work on
//! the same log. Viewpoints project models into render trees, rules react to
//! edits and gestures, and validation writes its findings back as markers.

pub mod collab;
pub mod console;
pub mod eca;
pub mod error;
pub mod fixtures;
pub mod id;
pub mod meta;
pub mod query;
pub mod store;
pub mod validation;
pub mod viewpoint;
pub mod workbench;

pub use error::{Error, Result};
pub use id::{ElementId, TxId};
pub use workbench::{Outcome, Workbench};
