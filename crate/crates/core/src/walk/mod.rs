//! Random-walk models and samplers.
//!
//! The subordinate walk is `S_n = Z_{eta_1 + ... + eta_n}` where `Z` is the
//! simple walk and the `eta_i` are i.i.d. Sibuya(`alpha / 2`). Its
//! characteristic function is `1 - (1 - phi_Z)^{alpha/2}`, so it lies in the
//! domain of attraction of the symmetric `alpha`-stable law.

pub mod loops;
pub mod model;
pub mod path;
pub mod sibuya;

pub use loops::{geometric, insert_loops, insert_loops_with, LoopInsertionRecord};
pub use model::{simple_walk_displacement, BaseKind, Derived, ModelSpec, WalkModel};
pub use path::{sample_path, sample_path_from, LatticePath, MAX_HORIZON};
pub use sibuya::{sibuya_pmf, Sibuya, SibuyaDraw};
