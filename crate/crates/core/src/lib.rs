//! Fault-tolerant quantum computation toolkit for CSS codes: code algebra,
//! syndrome circuits, noise models, Pauli-frame and statevector simulation,
//! decoders, and a fault-tolerant compiler with resource accounting.

pub mod circuit;
pub mod code;
pub mod decoder;
pub mod exact_sim;
pub mod ftcompile;
pub mod gf2;
pub mod noise;
pub mod pauli;
pub mod pauli_sim;
