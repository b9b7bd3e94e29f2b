pub mod instances;
pub mod naive;
