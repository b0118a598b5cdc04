//! Two-photon physics: coincidence rates for pairs whose momenta are
//! anti-correlated, imprinted with a phase in the far field of the source.

mod contrast;
mod counts;
mod diffuser;
mod emccd;
mod klyshko;
mod model;
mod rate;

pub use contrast::{contrast, CorrelationMap};
pub use counts::sample_counts;
pub use diffuser::{make_diffuser, DiffuserSpec};
pub use emccd::{emccd_capture, EmccdSpec};
pub use klyshko::rate_klyshko;
pub use model::{sigma_ratio_for_schmidt, DetectionModel, TwinPhotonModel, DEFAULT_SIGMA_RATIO};
pub use rate::{rate_delta, rate_full, single_rate, DeltaKernel, FullKernel, FULL_MAX_LINE, FULL_MAX_SQUARE};
