//! Polar and Reed-Muller codes with successive-cancellation and list decoding
//! over unquantized, ternary and joint LLR algebras.

pub mod channel;
pub mod code;
pub mod density;
pub mod epmu;
pub mod error;
pub mod llr;
pub mod numeric;
pub mod sc;
pub mod scl;
pub mod sim;
pub mod stats;

pub use code::{construct_rm, encode, polar_transform, CodeSpec, Construction};
pub use error::{Error, Result};
pub use llr::{JointAlgebra, JointLlr, LlrAlgebra, Ternary, TernaryAlgebra, Unquantized};
