use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("z = {z} lies within {distance:.3e} of the spectrum; resolvent is singular")]
    SingularResolvent { z: String, distance: f64 },
    #[error("matrix is not sectorial: {0}")]
    NotSectorial(String),
    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionOverflow { dim: usize, cap: usize },
    #[error("degenerate region: {0}")]
    DegenerateRegion(String),
    #[error("spectrum point {point} lies outside E_r ∪ E")]
    SpectrumOutside { point: String },
    #[error("ill-conditioned point set: minimum pairwise distance {0:.3e}")]
    IllConditioned(f64),
    #[error("{what} did not converge (achieved {achieved:.3e} after {iterations} iterations)")]
    NotConverged {
        what: &'static str,
        achieved: f64,
        iterations: usize,
    },
    #[error("eigenvalue {0} is not semisimple")]
    NotSemisimple(String),
    #[error("operator is not a contraction: norm {0}")]
    NotContraction(f64),
    #[error("operators do not commute: commutator norm {0:.3e}")]
    NotCommuting(f64),
    #[error("intertwining J_{i}·T_{j} = (I⊗T_{j})·J_{i} fails by {defect:.3e}")]
    IntertwineFailed { i: usize, j: usize, defect: f64 },
    #[error("no joint similarity found: best margin {best_margin} after {iterations} iterations")]
    Infeasible { best_margin: f64, iterations: usize },
    #[error("polynomial sup-norm {0:.3e} is too small for a ratio")]
    DegeneratePoly(f64),
    #[error("spectrum point {point} is within {distance:.3e} of the contour")]
    SpectrumOnContour { point: String, distance: f64 },
    #[error("work estimate {needed} exceeds the budget {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("operator is not power bounded: ‖T^{power}‖ = {norm:.3e}")]
    NotPowerBounded { power: usize, norm: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
