//! Influence kernels of causal-residual attention stacks at initialization.
//!
//! * [`exact_kernel`]: discrete Cesàro/residual matrix powers by exact,
//!   closed-form, integral and fast float routes.
//! * [`continuous`]: continuous-limit densities and kernels with an explicit
//!   point mass at `x = 1`.
//! * [`metrics`]: Spearman, Wasserstein-1 and peak-to-trough comparisons.
//! * [`toy`]: a linearized (or softmax) causal-residual network simulator
//!   with Jacobian-profile probes.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuous;
pub mod decimal;
pub mod error;
pub mod exact_kernel;
pub mod metrics;
pub mod profile;
pub mod quadrature;
pub mod toy;

pub use error::{Error, Result};
pub use exact_kernel::{Alpha, DiscreteKernel, KernelRow, Limits, Method, StorageMode};
pub use metrics::FitReport;
pub use profile::{InfluenceProfile, Scale};
pub use quadrature::{DomainTransform, QuadRule, QuadratureConfig};
