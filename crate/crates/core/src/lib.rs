//! Right-angled Coxeter groups, their walls and Vinberg representations,
//! half-cone nesting in the projective model, and singular value gaps.

pub mod anosov;
pub mod appendix;
pub mod decompose;
pub mod error;
pub mod exact;
pub mod hilbert;
pub mod intmat;
pub mod lp;
pub mod projgeom;
pub mod report;
pub mod system;
pub mod vinberg;
pub mod walls;

pub use error::{Error, Result};
pub use system::{builtin, CoxeterSystem, Gen, NormalForm};
