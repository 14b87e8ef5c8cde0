//! Permutation-group tools for skew products over finite labeled systems:
//! local groups and their conjugacy classes, relative speedup decisions,
//! castles over finite point systems, and finite speedup stages.

pub mod castle;
pub mod ergodic;
pub mod graph;
pub mod perm;
pub mod speeduprel;
pub mod symbolic;
pub mod synth;
