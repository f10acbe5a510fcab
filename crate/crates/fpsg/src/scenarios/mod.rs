//! Generators for the two worked models: the insurance duopoly and the
//! energy management game. Both emit ordinary [`GameModel`](crate::model::GameModel)s,
//! so scenario output is solver input with no special path.

pub mod energy;
pub mod insurance;

pub use energy::{
    build_energy_model, build_energy_model_with, check_condition_c, condition_beta,
    convolve_demand, random_params, ActionCaps, ConditionReport, EnergyOutcome, EnergyParams,
    EnergyStageParams, EnergyTail, Pmf,
};
pub use insurance::build_insurance_model;
