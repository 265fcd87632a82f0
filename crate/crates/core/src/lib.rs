//! Yearly hyperlink graphs between third-level web domains, built from
//! timestamped link logs, and the analyses run on them: second-level-domain
//! statistics, centrality against league rankings, partition modularity and
//! a gravity-law fit of link strength against distance.
//!
//! ```
//! use chronoscope::domain::{parse_domain_key, SuffixPolicy};
//!
//! let key = parse_domain_key("http://www.ox.ac.uk/about", &SuffixPolicy::uk_default()).unwrap();
//! assert_eq!(key.third_level(), "ox.ac.uk");
//! ```

pub mod domain;
pub mod gravity;
pub mod ingest;
pub mod metrics;
pub mod snapshot;
pub mod stats;
pub mod synth;
pub mod tables;

use thiserror::Error;

/// Any error the library reports, tagged with a stable kind for tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Policy(#[from] domain::PolicyError),
    #[error(transparent)]
    Domain(#[from] domain::DomainError),
    #[error(transparent)]
    Snapshot(#[from] snapshot::SnapshotError),
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Gravity(#[from] gravity::GravityError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
    #[error(transparent)]
    Table(#[from] tables::TableError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Policy(_) => "policy",
            Error::Domain(_) => "domain",
            Error::Snapshot(_) => "snapshot",
            Error::Ingest(_) => "ingest",
            Error::Stats(_) => "stats",
            Error::Metrics(_) => "metrics",
            Error::Gravity(_) => "gravity",
            Error::Synth(_) => "synth",
            Error::Table(_) => "input",
            Error::Io(_) => "io",
        }
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    struct Intro;
    #[doc = include_str!("../../../book/src/domains.md")]
    struct Domains;
    #[doc = include_str!("../../../book/src/ingest.md")]
    struct Ingest;
    #[doc = include_str!("../../../book/src/statistics.md")]
    struct Statistics;
    #[doc = include_str!("../../../book/src/centrality.md")]
    struct Centrality;
    #[doc = include_str!("../../../book/src/modularity.md")]
    struct Modularity;
    #[doc = include_str!("../../../book/src/gravity.md")]
    struct Gravity;
    #[doc = include_str!("../../../book/src/synthetic.md")]
    struct Synthetic;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
