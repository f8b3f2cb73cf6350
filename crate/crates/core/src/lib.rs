//! Exact computational laboratory for SL₂(𝔽_p): product-set growth,
//! trace amplification, Borel-subgroup factorization, and Cayley-graph
//! diameter/mixing statistics at desk scale.
//!
//! Everything that certifies an inequality does so in exact integer (or
//! rational) arithmetic; floating point appears only in measurements
//! (Fourier diagnostics, walk distributions, measured exponents).

pub mod arith;
pub mod bits;
pub mod borel;
pub mod cayley;
pub mod ffield;
pub mod growth;
pub mod gset;
pub mod seed;
pub mod sl2;
pub mod zpadd;

pub use ffield::{FpElem, Fq2Elem, PrimeField};
pub use gset::GroupSet;
pub use sl2::{SL2Ctx, SL2Elem};
