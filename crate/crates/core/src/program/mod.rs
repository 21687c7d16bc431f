//! Typed GP program trees.
//!
//! A [`PrimitiveSet`] declares the node kinds a program may use; every kind
//! carries argument and result [`Sort`]s, so any subtree of sort `S` can be
//! grafted anywhere a child of sort `S` is expected.

mod builder;
mod codec;
mod primitives;
mod tree;

pub use builder::{build_random_tree, grow};
pub use codec::{deserialize, deserialize_bounded, serialize, DecodeError, ParseError};
pub use primitives::{Category, ConfigError, ConstantSource, NodeKind, PrimitiveSet, Sort};
pub use tree::{Node, ProgramTree, ValidationError};
