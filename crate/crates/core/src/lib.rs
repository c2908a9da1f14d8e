//! Single-cell device-to-device network simulator.
//!
//! UEs switch on one at a time. Each runs a belief-desire-intention agent
//! ([`bdix`]) whose mode-selection plan ([`dais`]) picks a transmission mode
//! and a parent from the adverts of nearby serving nodes, maximising its
//! bottleneck path rate ([`wdr`]). [`baselines`] provides the comparison
//! strategies, [`metrics`] the network measurements, and [`experiment`] the
//! seeded sweeps behind the `d2d-dais` binary.
//!
//! ```
//! use d2d_dais::{experiment::RunConfig, metrics::measure_decisions, scenario, sim::Strategy};
//!
//! let cfg = RunConfig::default();
//! let sc = scenario::generate(30, 1, cfg.area, cfg.radio.clone(), cfg.dais.clone()).unwrap();
//! let dais = measure_decisions(Strategy::Dais, &sc, &cfg.sim).unwrap();
//! let direct = measure_decisions(Strategy::NoD2d, &sc, &cfg.sim).unwrap();
//! assert_eq!(direct.power_saved, 0.0);
//! assert!(dais.spectral_efficiency > 0.0);
//! ```

pub mod baselines;
pub mod bdix;
pub mod channel;
pub mod dais;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod scenario;
pub mod sim;
pub mod wdr;

pub use error::{D2dError, Result};
pub use model::{NodeId, Position, Topology, TransmissionMode};
pub use scenario::Scenario;
pub use sim::Strategy;
