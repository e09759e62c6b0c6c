//! Cavity-mediated non-demolition measurement of the non-local operators:
//! truncated-Fock simulation of the geometric-phase and single-photon gates
//! on small qutrit registers, plus the closed-form fidelity and
//! inhomogeneity models.

mod fidelity;
mod protocol;
mod register;

pub use fidelity::{
    fidelity_gp, fidelity_sp, inhomogeneity_error, thooft_settings, wilson_settings,
    FidelityParams, InhomogeneityError,
};
pub use protocol::{
    thooft_protocol, wilson_protocol, PostMeasurementBranch, ProtocolReadout, ThooftMethod,
};
pub use register::{matrix_exp, CavityRegister, DispersiveMode, GateRecord};
