//! Simulation and construction toolkit for CONGEST lower-bound experiments.
//!
//! * [`congest`]: synchronous CONGEST(B) simulator on multigraphs.
//! * [`family`]: the layered network family with highways and long paths.
//! * [`pointer`]: two-party pointer chasing and a distributed relay for it.
//! * [`cutsim`]: Alice/Bob simulation of a network run across shrinking cuts.
//! * [`gadget`]: weighted random-walk gadget encoding pointer chasing.

pub mod bits;
pub mod congest;
pub mod cutsim;
pub mod exec;
pub mod family;
pub mod gadget;
pub mod graph;
pub mod pointer;
pub mod tape;

pub use bits::Bits;
pub use exec::ExecMode;
pub use graph::{EdgeClass, GraphBuilder, GraphError, MultiGraph, Multiplicity, NodeId};
pub use tape::RandomTape;
