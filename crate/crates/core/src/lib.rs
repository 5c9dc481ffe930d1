pub mod applications;
pub mod cli;
pub mod consequence;
pub mod corpus;
pub mod diagonalizer;
pub mod legacy;
pub mod model;
pub mod opponents;
pub mod parse;
pub mod run;
pub mod spec_file;
