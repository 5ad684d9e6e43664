// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channel;
pub mod error;
pub mod estimator;
pub mod framing;
pub mod frft;
pub mod harness;
pub mod link;
pub mod ops;
pub mod signal;

pub use baselines::{complexity_report, ComplexityReport, TraditionalEstimate};
pub use channel::{ChannelConfig, RxSps};
pub use error::{Error, Result};
pub use estimator::{Estimator, JointEstimate, PeakCoordinate, SearchConfig, TsGeometry};
pub use framing::{FrameConfig, Modulation, TrainingSequence};
pub use harness::{compare_methods, run_sweep, run_trial, CompareReport, SweepConfig, ToMode, TrialResult, TrialRow, TsParams};
pub use frft::{fft, frft, ifft, FftPlan, FrftPlan};
pub use num_complex::Complex64;
pub use ops::OpCount;
pub use signal::{chirp, ChirpSpec, ComplexSignal, TimeOrigin};
