//! Crate error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value failed validation. Lists the offending keys.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Edge index outside the schedule/topology domain.
    #[error("unknown edge {0}")]
    UnknownEdge(u32),

    /// Satellite is not a member of the queried block.
    #[error("satellite {0} not in block")]
    NotInBlock(u32),

    /// Closeness centrality is undefined on a single-member block.
    #[error("closeness centrality undefined for a singleton block")]
    SingletonBlock,

    /// Directional connectivity is undefined without inter-unit links.
    #[error("forwarding unit has no inter-unit links")]
    NoInterUnitLinks,

    /// Two satellites are not connected inside the block subgraph.
    #[error("no intra-block path between {0} and {1}")]
    IntraBlockDisconnected(u32, u32),

    /// The chosen source satellite is not visible from the ground station.
    #[error("source satellite {0} not visible from ground station")]
    SourceNotVisible(u32),

    /// No satellite is visible from a ground station at this instant.
    #[error("coverage gap: no visible satellite for {0}")]
    CoverageGap(String),

    /// Name-service lookup failed (distinct from transport failures).
    #[error("unbound identifier {0:?}")]
    UnboundIdentifier(String),

    /// Endpoints are co-located; path stretch is undefined.
    #[error("zero great-circle distance between endpoints")]
    ZeroDistance,

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
