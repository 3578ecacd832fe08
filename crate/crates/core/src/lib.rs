//! RSA-trapdoored formula coloring and integer linear programming instances.

pub mod bits;
pub mod fc;
pub mod ilp;
pub mod instances;
pub mod numtheory;
pub mod pipeline;
pub mod qubo;
pub mod representations;
