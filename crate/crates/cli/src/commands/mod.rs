pub mod aliasing;
pub mod analyze;
pub mod cff;
pub mod fit;
pub mod stimulus;
pub mod transition;
