//! Reactive task trees: definitions, text format, and compilation into
//! channel-system processes.

pub mod compile;
pub mod def;
pub mod text;

pub use compile::{compile, tick_generator, BtCompileError, CompiledBt};
pub use def::{BtDefinition, BtError, BtNode, BtStatus, LeafBinding};
pub use text::{parse_bt, print_bt};
