//! Context-aware text-based speech editing.
//!
//! Edits are expressed against a forced alignment of each recording. The edited
//! region is re-timed and re-pitched with TD-PSOLA using prosody generated from
//! (or pinned by) the surrounding speech, then spliced back with equal-power
//! crossfades and A-weighted loudness matching.

pub mod audio;
pub mod eval;
pub mod alignment;
pub mod pitch;
pub mod prosody;
pub mod process;
pub mod pipeline;
pub mod psola;
pub mod synthetic;
