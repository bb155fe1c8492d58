//! TSP encodings into binary optimization problems.

pub mod enumeration;
pub mod hobo;
pub mod instance;
pub mod mixed;
pub mod problem;
pub mod qubo;

pub use enumeration::{encode_enum, index_to_permutation, permutation_to_index, EnumLayout};
pub use hobo::{encode_hobo, h_valid_hobo, HoboLayout};
pub use instance::{random_instance, Decoded, PenaltyPolicy, Route, TspInstance};
pub use mixed::{encode_mixed, MixedLayout};
pub use problem::{encode, Bits, EncodedProblem, EncodingKind, EncodingSummary, Layout};
pub use qubo::{encode_qubo, QuboLayout};
