//! Numerical laboratory for escape rates of radial diffusions.
//!
//! The crate turns a volume growth law ln|B(r)| into the escape-rate function
//! psi (the inverse of the growth integral phi), builds the dyadic crossing
//! schedule with its tail bounds, simulates the associated radial SDE with
//! reproducible parallel ensembles, and checks the simulated paths against the
//! predicted envelopes.

pub mod models;
pub mod quad;
pub mod rate;
pub mod schedule;
pub mod sim;
pub mod verify;

pub use models::{parse_manifold, parse_model, Manifold, ModelError, VolumeGrowth, Warp};
pub use rate::{closed_form_rate, RateCase, RateError, RateFunction};
pub use schedule::{build_schedule, tail_bound, CrossingSchedule, ScheduleError};
pub use sim::{
    run_ensemble, simulate_radial_path, stationary_sample, Boundary, PathEnsemble, PathRecord,
    PolePolicy, SimConfig, SimError, StepPolicy,
};
pub use verify::{
    emit_report, empirical_crossing_tail, rate_violation_fraction, stationary_ks_test,
    wilson_interval, CheckRecord, ReportFormat, VerificationReport, VerifyError,
};
