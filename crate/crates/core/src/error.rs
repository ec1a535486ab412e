use thiserror::Error;

/// Errors surfaced by the simulator.
///
/// Contract violations (mismatched dimensions handed to pure math kernels)
/// panic instead; these variants cover runtime and numerical failures that a
/// caller can meaningfully react to.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular system: condition estimate {cond:.3e} exceeds {limit:.1e}")]
    SingularSystem { cond: f64, limit: f64 },

    #[error("singular FFT bin {bin} ({count} bins total): condition estimate {cond:.3e}")]
    SingularBin { bin: usize, count: usize, cond: f64 },

    #[error("rank deficiency: requested {requested} streams but strongest tap has numerical rank {rank}")]
    RankDeficient { requested: usize, rank: usize },

    #[error("distance {0} m is inside the 1 m reference distance of the path-loss model")]
    OutOfModel(f64),

    #[error("spectrum never drops {0} dB below its peak; bandwidth undefined")]
    Bandwidth(f64),

    #[error("insufficient data: {got} samples, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("bad constellation order {0}: supported orders are 4, 16 and 64")]
    BadOrder(usize),

    #[error("config: {0}")]
    Config(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error("at grid point {axis}: {source}")]
    GridPoint {
        axis: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
