//! Reading the written state back out of measured curves.

mod angle;
mod estimate;
mod fit;
mod maxima;

pub use angle::{fit_angle_curve, AngleHarmonic};
pub use estimate::{estimate_state, StateEstimate};
pub use fit::{fit_delay_curve, FitModel, FitResult, FitUncertainty, MIN_IDENTIFIABLE_CONTRAST};
pub use maxima::locate_maxima;
