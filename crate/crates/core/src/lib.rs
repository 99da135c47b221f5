//! Slot-based discrete-event simulation of multi-channel access radio
//! resource management mechanisms for 5G NR.
//!
//! Four mechanisms are modelled, each next to the baseline it improves on:
//!
//! * [`dupstat`]: PDCP duplication over multi-connectivity, with a UE
//!   duplication status report that lets the other nodes of the
//!   duplication set discard their copy.
//! * [`ccselect`]: rule-based component-carrier selection with score
//!   averaging and a minimum threshold, against RSRP-only selection.
//! * [`mecassoc`]: computation-aware decoupled uplink association for MEC
//!   offloading, against coupled max-RSRP association.
//! * [`compcoord`]: two-gNB cooperation (DC, non-coherent JT, IC-CoMP) for
//!   low-latency users, against single connectivity.
//!
//! [`engine`] holds the deterministic event core and random streams,
//! [`radio`] the shared PHY abstraction and [`metrics`] the distribution
//! accumulators. [`batch`] runs independent replications, in parallel when
//! the `parallel` feature is enabled.

pub mod batch;
pub mod ccselect;
pub mod compcoord;
pub mod config;
pub mod dupstat;
pub mod engine;
pub mod mecassoc;
pub mod metrics;
pub mod radio;
pub mod report;
pub mod runner;

pub use config::{Mechanism, ScenarioConfig};
pub use engine::{Engine, Event, RngStream, SlotClock, Stop};
pub use metrics::{CounterSet, EmpiricalDistribution};
