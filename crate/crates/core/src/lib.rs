//! Estimating f-divergence dependency between a viewpoint and a classifier's
//! predictions, and training linear classifiers under a budget on it.

pub mod bounds;
pub mod config;
pub mod dataset;
pub mod divergence;
pub mod error;
pub mod estimator;
pub mod fairness;
pub mod kernel;
pub mod learner;
pub mod ratio;
pub mod scorer;
pub mod synthetic;

pub use dataset::{Dataset, Sample};
pub use divergence::{exact_dependency, exact_f_divergence, DiscreteJoint, PhiGenerator, RatioBounds};
pub use error::{Error, Result};
pub use estimator::{dependency_bound, estimate_dependency, DependencyReport, EstimateOptions};
pub use kernel::{KernelKind, KernelSpec, LabeledPair};
pub use ratio::{estimate_ratio, RatioOptions, RatioTable};
pub use scorer::{empirical_risk, fit_unconstrained, LinearScorer};
pub use synthetic::{monte_carlo_dependency, DiscreteScenario, GaussianScenario, Scenario};
pub use fairness::{conjugate_dual_value, fairness_functional, fairness_subgradient, FairnessSpec, GammaMatrix};
pub use bounds::{constant_sweep, empirical_rademacher, generalization_bound, phi_shape_table, restriction_cost_bound, ComplexityEstimate, LossMatrix};
pub use config::KeyValues;
pub use learner::{sweep, train, TrainConfig, TrainedModel};
