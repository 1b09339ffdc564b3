//! Release-acquire transactional memory: view-based memory semantics, the
//! TMS2-RA specification, the TML-RA lock, exhaustive exploration of client
//! programs, assertion checking and refinement checking.
#![no_std]

extern crate alloc;

pub mod corpus;
pub mod explorer;
pub mod invariants;
pub mod lts;
pub mod memory;
pub mod outline;
pub mod program;
pub mod refinement;
pub mod rules;
pub mod taro;
pub mod tml;
pub mod tms2ra;

/// Index of a location. Client and transactional locations are numbered
/// separately.
pub type Loc = usize;
pub type ThreadId = usize;
pub type Reg = usize;
pub type Value = i64;

/// Register contents; `None` is the undefined value ⊥ left by an abort.
pub type RegFile = alloc::vec::Vec<Option<Value>>;
