use thiserror::Error;

/// Errors surfaced by the numerical kernels.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("block index {j} exceeds j_max = {j_max}")]
    BlockOutOfRange { j: i64, j_max: u32 },

    #[error("multiplier symbol is not finite at occupied frequency {freq} (|coefficient| = {coeff_mag:.3e})")]
    NonFiniteSymbol { freq: f64, coeff_mag: f64 },

    #[error("scale {requested:.3e} is below grid resolution (need at least {minimum:.3e})")]
    Resolution { requested: f64, minimum: f64 },

    #[error("window too short: no admissible shift below T/2 = {half_window:.3e}")]
    WindowTooShort { half_window: f64 },

    #[error("symbol is not hyperbolic: max |Im lambda| = {im_max:.3e} exceeds tolerance {tol:.3e} at t index {t_index}")]
    NotHyperbolic { im_max: f64, tol: f64, t_index: usize },

    #[error("multiplicity pattern changes in time: {at_start:?} at t = 0 vs {found:?} at t index {t_index}")]
    NotConstantMultiplicity {
        at_start: Vec<usize>,
        found: Vec<usize>,
        t_index: usize,
    },

    #[error("eigenvector matrix ill-conditioned: cond = {cond:.3e} exceeds {max_cond:.3e} at t index {t_index}")]
    IllConditioned { cond: f64, max_cond: f64, t_index: usize },

    #[error("mollified eigenvector matrix singular at t index {t_index}; reduce eps = {eps:.3e}")]
    EpsTooLarge { eps: f64, t_index: usize },

    #[error("eigenvalue block gap {gap:.3e} below gap_min = {gap_min:.3e}; multiplicity pattern suspect")]
    NearDegenerate { gap: f64, gap_min: f64 },

    #[error("Picard iteration did not contract (mu raised to {mu_max}, last update {last_update:.3e})")]
    PicardDiverged { mu_max: u32, last_update: f64 },

    #[error("symmetrizer not positive at |xi| = {xi_mag:.3e}: K1 = {k1:.3e} (below R0)")]
    BelowR0 { xi_mag: f64, k1: f64 },

    #[error("integration step constraint unsatisfiable: need h <= {required:.3e}, grid offers {available:.3e}")]
    StepTooCoarse { required: f64, available: f64 },

    #[error("loss fit needs at least 3 frequencies, got {got}")]
    FitUnderdetermined { got: usize },
}

pub type Result<T> = std::result::Result<T, CoreError>;
