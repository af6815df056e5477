//! Borel interpolation: smooth functions with prescribed derivatives at one
//! end, flat at the other, with Gevrey-2 growth certificates.

pub mod finite_laplace;
pub mod coeffs;
pub mod flat;
pub mod laplace;
pub mod loss;
pub mod petzsche;

pub use finite_laplace::{finite_laplace_g, loss_lower_bound_probe, GTable, ProbeTable, SparseCoeffs};
pub use coeffs::{CoeffSequence, Convention};
pub use flat::{
    laplace_interpolate, steer_output_even, steer_output_odd, FlatOutput, LaplaceOptions, Method, Parity,
    SteerOptions,
};
pub use laplace::{LaplaceFunction, LaplaceKernel};
pub use loss::{measure_loss, LossReport};
pub use petzsche::{petzsche_interpolate, PetzscheFunction, PetzscheOptions};
