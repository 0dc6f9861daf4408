//! Goal inference and receding-horizon planning for a turn-based kitchen
//! assistant.

pub mod attractor;
pub mod bank;
pub mod belief;
pub mod bundled;
pub mod domain;
pub mod harness;
pub mod human;
pub mod inquiry;
pub mod planner;
pub mod trace;
