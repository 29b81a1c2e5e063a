use thiserror::Error;

/// Errors surfaced by the engine.
///
/// Verification routines are report-valued and do not use this type for
/// identity failures; errors here are structural (bad input, budget, window
/// too small, undefined operations).
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown generator symbol `{0}`")]
    UnknownGenerator(String),

    #[error("presentation mismatch: `{0}` vs `{1}`")]
    PresentationMismatch(String, String),

    #[error("tensor degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),

    #[error("rewrite budget exceeded after {0} steps (non-terminating rule set?)")]
    RewriteBudgetExceeded(usize),

    #[error("pole at q = {0}: denominator vanishes")]
    PoleAtValue(String),

    #[error("involution undefined for symbol `{0}`")]
    NoInvolution(String),

    #[error("window overflow: `{0}` does not lie in the degree-{1} window")]
    WindowOverflow(String, usize),

    #[error("quotient solve failed for `{0}`: quotient not stabilized at this degree")]
    QuotientUnstable(String),

    #[error("ideal generator `{0}` is not counit-annihilated")]
    GeneratorNotInKernel(String),

    #[error("ideal is not ad-invariant; witness: {0}")]
    IdealNotAdInvariant(String),

    #[error("star condition on the ideal fails; witness: {0}")]
    StarConditionFails(String),

    #[error("braid relation fails for this space; witness entry ({0},{1})")]
    BraidRelationFails(usize, usize),

    #[error("degree {0} exceeds the antisymmetrizer budget {1} (set QPB_BUDGET to raise)")]
    BudgetExceeded(usize, usize),

    #[error("relation ideal is not stable under the differential; witness: {0}")]
    DifferentialNotStable(String),

    #[error("freeness not witnessed at this window for `{0}` (raise the window or reject the bundle)")]
    FreenessNotWitnessed(String),

    #[error("multiplet coverage gap: `{0}` is not spanned by multiplet matrix entries")]
    MultipletCoverageGap(String),

    #[error("multiplet table violates the reconstruction identity at entry ({0},{1})")]
    MultipletInvalid(usize, usize),

    #[error("functional fails the counit-derivation law on ({0}, {1})")]
    NotEpsDerivation(String, String),

    #[error("antiderivation violates relation `{0}`")]
    RelationViolated(String),

    #[error("antiderivation axiom {0} fails; witness: {1}")]
    AxiomFailed(&'static str, String),

    #[error("empty preconnection family")]
    EmptyFamily,

    #[error("chart `{0}` is not part of the configured family")]
    ChartOutsideFamily(String),

    #[error("chart mismatch: `{0}` vs `{1}`")]
    ChartMismatch(String, String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("linear system has no solution")]
    NoSolution,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
