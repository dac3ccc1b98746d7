pub mod abelian;
pub mod cayley_oracle;
pub mod classification;
pub mod cli;
pub mod document;
pub mod group_presentation;
pub mod loop_ring;
pub mod ra_loop;
pub mod sampling;
