pub mod certificate;
pub mod collapse;
pub mod error;
pub mod folding;
pub mod graph;
pub mod isometry;
pub mod lp;
pub mod morphism;
pub mod optimal;
pub mod path;
pub mod random;
pub mod rational;
pub mod skora;
pub mod splittings;
pub mod stallings;
pub mod whitehead;
pub mod word;

pub use error::{Error, Result};
pub use rational::Q;
pub use word::{Letter, Word};
