//! Magnetic-pixel soft robots. A film is a lattice of magnetized pixels
//! whose encoding can be rewritten by heating; this crate models that
//! encoding, the fields it sees and makes, the folded shape it settles
//! into, and the search for an encoding that reaches a requested shape.

pub mod encode;
pub mod field;
pub mod lattice;
pub mod mechanics;
pub mod inverse;
pub mod reprogram;
