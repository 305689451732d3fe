pub mod banded;
pub mod dense;
pub mod rcm;
pub mod sparse;

pub use banded::{BandedLu, Ordering};
pub use dense::{CMat, CVec};
pub use sparse::CsrMatrix;
