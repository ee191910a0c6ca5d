#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bernstein;
pub mod envelope;
pub mod error;
pub mod free_density;
pub mod geometry;
pub mod harness;
pub mod levy_kernel;
pub mod quad;
pub mod simulate;
pub mod special;

pub use bernstein::{BernsteinFunction, BernsteinKind, MixComponent, ScalingFit, ScalingRegime};
pub use error::{Error, Result};
pub use geometry::{Characteristics, Domain, Shape};
pub use levy_kernel::JumpKernel;
pub use simulate::{CellGrid, KilledPathConfig, McEstimate, SubordinatorSampler};
pub use harness::{Band, RatioOptions, RatioReport, Status};
