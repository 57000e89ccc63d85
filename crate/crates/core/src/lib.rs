#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod io;
pub mod matrix;
pub mod perm;
pub mod qr;
pub mod rand_srrqr;
pub mod sketch;
pub mod srrqr;
pub mod svd;
pub mod testmat;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use perm::PermutationSeq;
pub use qr::{partial_qr, qrcp, PartialQR};
pub use srrqr::{srrqr, SrrqrConfig, SrrqrResult, SrrqrState, StopRule, UpdateStrategy};
pub use svd::singular_values;
pub use sketch::{SketchKind, SketchOperator};
pub use testmat::{generate, MatrixKind, MatrixSpec};
pub use rand_srrqr::{qlp_values, rand_srrqr_rank, rand_srrqr_tol, ratio_report, RandSrrqrConfig, RandSrrqrResult, RatioReport};
