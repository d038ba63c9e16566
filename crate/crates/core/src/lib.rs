//! Secrecy performance of two-user NOMA clusters in Poisson cellular networks with
//! massive-MIMO base stations and a pilot-contaminating adversary.

pub mod analytic;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod montecarlo;
pub mod oma;
pub mod params;
pub mod quadrature;
pub mod sinr;

pub use error::{Error, Result};
pub use params::{AlzerConstant, Message, SystemParams, UserRole};
pub use quadrature::{AnalyticResult, QuadratureSpec};
