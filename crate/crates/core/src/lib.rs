//! Chained CHSH and CH analysis of Hardy's ladder test of nonlocality.
//!
//! * [`behavior`]: joint-probability tables and everything evaluated on them.
//! * [`quantum`]: Born-rule behaviors of the Schmidt state with ladder
//!   observables, and the closed-form predictions they must reproduce.
//! * [`bounds`]: local, quantum and algebraic bounds, deterministic
//!   strategies, the extremal non-signaling box, Hardy-fraction maximization.
//! * [`proof`]: exact rational certificates that the all-minus probability
//!   balance follows from non-signaling plus the Hardy zeros.
//! * [`sim`]: finite-shot sampling and estimation with standard errors.

pub mod behavior;
pub mod bounds;
pub mod error;
pub mod proof;
pub mod quantum;
pub mod sim;

pub use behavior::{
    Behavior, ChValues, HardyReport, HardyZero, NsConstraint, NsReport, Outcome, Party, ProbIndex,
    RelationResiduals, Scenario,
};
pub use bounds::{
    bounds_record, extremal_ns_box, fig1_dataset, local_membership, lr_max_chsh, maximize_hardy,
    tsirelson_bound, upper_limit_l, BoundsRecord, DeterministicStrategy,
};
pub use error::{Error, Result};
pub use proof::{derive_cere2, hardy_zero_set, ns_system, LinearExpr, ProofCertificate};
pub use quantum::{
    born_behavior, closed_form_probs, ladder_angles, ladder_identity_residual, p_k_qm,
    ClosedFormProbs, LadderAngles, SchmidtState,
};
pub use sim::{estimate_report, sample_counts, CountsTable, EstimateReport};
