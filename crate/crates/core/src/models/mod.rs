//! Example systems: exponential and truncated-normal laws, Weibull battery
//! lifetimes and the one-dimensional Ising chain.

pub mod exponential;
pub mod ising;
pub mod truncated_normal;
pub mod weibull;

pub use exponential::ExponentialModel;
pub use ising::{
    ising_enumerate, ising_enumerate_with, ising_gibbs_sample, ising_gibbs_sample_many, ising_kl_defect, GibbsConfig,
    IsingChain, IsingExact, IsingQoi, KlDefect, KlMethod,
};
pub use truncated_normal::TruncatedNormalModel;
pub use weibull::{lifetime_qois, FailureData, LifetimeQoi, WeibullModel};
