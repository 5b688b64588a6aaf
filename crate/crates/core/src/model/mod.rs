//! Channel systems of program graphs and their execution engine.

pub mod engine;
pub mod guard;
pub mod pg;
pub mod system;
pub mod text;

pub use engine::{
    enabled_transitions, run, step, ChannelObserver, EntryKind, ExecutionTrace, ObserverOutcome,
    RandomScheduler, ReplayScheduler, RoundRobinScheduler, RunOptions, Scheduler, Terminal,
    TransitionInstance, Transmission, TssEntry,
};
pub use guard::{Action, Assignment, EffectCtx, Evaluation, Expr, Guard, NativeAction};
pub use pg::{
    initial_evaluation, ChannelId, CommAction, CommDir, Label, Payload, PgBuilder, ProgramGraph,
    Transition, VarDecl,
};
pub use system::{Channel, ChannelSystem, ChannelSystemBuilder, Configuration};
