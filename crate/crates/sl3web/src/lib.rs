//! Exact computation with SL3 tensor diagrams, Kuperberg webs, and the
//! cluster structures they induce on rings of invariants.
//!
//! The crate is organized around a handful of interlocking engines:
//!
//! * [`algebra`] — exact sparse integer polynomials, the oracle substrate;
//! * [`diagram`] — tensor diagrams, webs, canonical codes, boundary moves;
//! * [`evaluate`] — the invariant of a diagram via proper 3-labelings;
//! * [`skein`] — confluent reduction to the non-elliptic web basis;
//! * [`basis`] — web enumeration, basis expansion, structure constants;
//! * [`special`] — the J-family of special invariants and their identities;
//! * [`seed`] — seeds and quivers attached to polygon triangulations;
//! * [`cluster`] — quiver/seed mutation, cluster types, Laurent checks;
//! * [`arborize`] — the arborization rewriting system;
//! * [`thicken`] — honeycomb thickening and power checks.

pub mod algebra;
pub mod diagram;
pub mod evaluate;
