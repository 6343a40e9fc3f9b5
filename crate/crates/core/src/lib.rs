pub mod axioms;
pub mod functions;
pub mod model;
pub mod par;
pub mod preservation;
pub mod region;
pub mod suite;
pub mod triplets;
