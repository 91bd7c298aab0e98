//! Small numerical building blocks used by the physics modules.

pub mod golden;
pub mod ode;
pub mod pchip;
pub mod roots;

pub use golden::golden_section_min;
pub use ode::{dormand_prince, OdeOptions};
pub use pchip::Pchip;
pub use roots::bisect;
