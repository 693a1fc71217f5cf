//! Publishing-dynamics analytics for social-media event logs.
//!
//! The crate ingests post and comment tables keyed by 64-bit integer ids,
//! resolves comment chains to their root posts, and computes the catalog of
//! activity distributions (per-account performance, per-post aggregation,
//! inter-event intervals, first-comment delays). On top of that it fits a
//! rational power-law model to the account-performance histogram, detects the
//! support region where accounts exceed the smooth model, and estimates the
//! number of excess accounts.
//!
//! A seeded synthetic generator produces corpora with known ground truth so
//! every stage can be checked end to end.
//!
//! ```
//! use pubdyn::corpus::Corpus;
//! use pubdyn::ingest::{PostRecord, CommentRecord};
//! use pubdyn::metrics::{compute_distribution, MetricKind};
//!
//! let posts = vec![
//!     PostRecord { message_id: 1, author_id: 10, created: 0 },
//!     PostRecord { message_id: 2, author_id: 10, created: 60 },
//! ];
//! let comments = vec![CommentRecord { message_id: 3, author_id: 11, created: 30, parent_id: 1 }];
//! let corpus = Corpus::build(posts, comments);
//! let gaps = compute_distribution(&corpus, MetricKind::PostInterevent);
//! assert_eq!(gaps.histogram.count(60), 1);
//! ```

pub mod cli;
pub mod config;
pub mod corpus;
pub mod fitkit;
pub mod histogram;
pub mod ingest;
pub mod intern;
pub mod metrics;
pub mod report;
pub mod synth;

pub use corpus::Corpus;
pub use fitkit::{AnomalyReport, FitDiagnostics, FitModel};
pub use histogram::{CumulativeCurve, SparseHistogram};
pub use ingest::{CommentRecord, IngestReport, PostRecord};
pub use metrics::{DistributionResult, MetricKind, SummaryStats};
