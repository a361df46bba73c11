use thiserror::Error;

/// Errors raised by kinematics, trajectory analysis and metric evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("loop defect: dyad circles do not intersect{}", fmt_angle(*.angle))]
    LoopDefect { angle: Option<f64> },
    #[error("degenerate dyad: coincident base points")]
    DegenerateDyad,
    #[error("branch discontinuity between samples {index} and {next} (jump {jump:.3} mm)")]
    BranchDiscontinuity {
        index: usize,
        next: usize,
        jump: f64,
    },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no index pair satisfies the landing/take-off ordering")]
    NoValidPair,
    #[error("stance length is zero")]
    ZeroStanceLength,
    #[error("sample counts differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("time {t} outside [0, {period}]")]
    OutOfRange { t: f64, period: f64 },
    #[error("coupling constraints have no root")]
    NoRoot,
    #[error("coupling solve hit an imaginary branch")]
    ImaginaryBranch,
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("empty archive")]
    EmptyArchive,
    #[error("degenerate front: every member has the same objectives")]
    DegenerateFront,
    #[error("no feasible individual after {generations} generations")]
    NoFeasibleIndividual { generations: usize },
    #[error("incumbent violates the subtask constraints: {0}")]
    InfeasibleIncumbent(String),
    #[error("parse error in {what}: {message}")]
    Parse { what: String, message: String },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("evaluation panicked for genome {genome:?}: {message}")]
    EvaluationPanic { genome: Vec<f64>, message: String },
}

fn fmt_angle(angle: Option<f64>) -> String {
    match angle {
        Some(a) => format!(" at crank angle {a:.6} rad"),
        None => String::new(),
    }
}

impl Error {
    /// True for failures that the optimiser treats as "no kinematic solution".
    pub fn is_kinematic(&self) -> bool {
        matches!(
            self,
            Error::LoopDefect { .. }
                | Error::DegenerateDyad
                | Error::BranchDiscontinuity { .. }
                | Error::NoValidPair
                | Error::ZeroStanceLength
                | Error::NoRoot
                | Error::ImaginaryBranch
                | Error::InvalidTrajectory(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
