//! Circuit construction for diagonal Hamiltonians.

pub mod gray;
pub mod round_robin;
pub mod schedule;

pub use gray::{gray_masks, gray_rank, gray_sequence};
pub use round_robin::round_robin;
pub use schedule::{schedule, DepthUnit, Gate, GateKind, GateSchedule, ScheduleSummary, Strategy};
