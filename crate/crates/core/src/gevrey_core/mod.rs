//! Gevrey building blocks: box-spline bumps, cutoffs, smooth steps and
//! derivative-growth certificates.

pub mod bump;
pub mod certificate;
pub mod spline;
pub mod step;
pub mod weights;

pub use bump::{make_bump, make_cutoff, sharpen_bump, BumpFunction, CutoffFunction, Sharpening};
pub use certificate::{fit_certificate, product_certificate, GevreyCertificate};
pub use step::{gevrey_step, GevreyStep};
pub use weights::WeightSequence;
