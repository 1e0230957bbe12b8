//! Vertex-domain generalized sampling, single- and two-channel.

pub mod multi;
pub mod neumann;
pub mod single;

pub use multi::{
    assemble_correction, assemble_correction_with, recover_mcs, recover_mcs_samples,
    recover_mcs_subband, sss_two_channel, subband_operators, CorrectionMatrix, McsRecovery,
    McsReport, McsSystem, SssMode, SubbandOperators, TwoChannelSelection,
};
pub use neumann::{initial_step, neumann_solve, NeumannIter, NeumannSolve};
pub use single::{
    apply_sampling, build_z, check_ds, recover_single, recover_single_with, schur_score,
    sss_greedy_exact, sss_greedy_neumann, ChannelSpec, DsStatus, Selection, SelectionOptions,
    SingleRecovery, DS_COND_MAX,
};

/// `10 log10(||x - x~||^2 / N)`; negative infinity for an exact match.
pub fn mse_db(x: &nalgebra::DVector<f64>, approx: &nalgebra::DVector<f64>) -> crate::Result<f64> {
    if x.len() != approx.len() {
        return Err(crate::Error::DimensionMismatch {
            expected: x.len(),
            actual: approx.len(),
        });
    }
    let se = (x - approx).norm_squared();
    Ok(10.0 * (se / x.len() as f64).log10())
}
