//! Task offloading in LEO satellite networks over computation and
//! transmission fusion metagraphs.
//!
//! Modules, bottom up: [`orbital`] (constellation and VN mesh), [`traffic`]
//! (task generation), [`resources`] (capacity ledgers and delays),
//! [`metagraph`] (scheme graphs and edge weights), [`engine`] (path search
//! and simulation), [`metrics`], [`oracle`] (brute-force checks),
//! [`scenario`] (configuration) and [`experiment`] (CLI commands).

pub mod engine;
pub mod experiment;
pub mod metagraph;
pub mod metrics;
pub mod oracle;
pub mod orbital;
pub mod resources;
pub mod scenario;
pub mod traffic;
