pub mod count;
pub mod dynamics;
pub mod eval;
pub mod gradcheck;
pub mod stage;
