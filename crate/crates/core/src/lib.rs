pub mod corpus;
pub mod ensemble;
pub mod eval;
pub mod features;
pub mod fol;
pub mod lsi;
pub mod rankers;
pub mod synth;
