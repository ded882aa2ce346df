//! Envy-free rent division with general demand oracles.
//!
//! Given a set of agents, a set of rooms, and a total rent, the solver finds
//! room prices (summing exactly to the rent) and an assignment under which no
//! agent prefers another room at those prices, up to a configurable epsilon.
//! Preferences are expressed through demand oracles — quasilinear values,
//! piecewise-linear utility curves, affine externalities, or arbitrary
//! user-supplied best-room functions — and four modes are supported: the
//! classic one-agent-per-room setting, roommates (room capacities), a
//! secretive agent whose preferences are unknown, and one extra agent who
//! will leave.
//!
//! The general path triangulates the price simplex and scans for a cell whose
//! demand graph supports the mode's target marginals, refining until an
//! epsilon-envy-free solution can be extracted and independently verified.
//! Quasilinear instances in classic mode also have an exact solver based on
//! maximum-weight matching and tight potentials. All price arithmetic is
//! exact rational.

pub mod cli;
pub mod domain;
pub mod engine;
pub mod matching;
pub mod mesh;
pub mod preferences;
pub mod quasilinear;
pub mod rational;
