//! Statistics of rank-2 unimodular lattices.
//!
//! The crate computes, for lattices in the plane with covolume one:
//!
//! * exact lattice quantities — Lagrange-reduced bases, shortest sup-norm
//!   vectors, the cusp-excursion function `delta`, primitive-point
//!   enumeration inside convex regions, and the diagonal geodesic flow
//!   ([`lattice`]);
//! * bounded convex regions with membership, areas and line clipping
//!   ([`regions`]);
//! * seeded sampling from the Haar probability measure on the space of
//!   unimodular lattices ([`haar`]);
//! * first and second moments of primitive lattice-point counts, by closed
//!   form, by adaptive quadrature and by Monte Carlo, together with measures
//!   of the compact sets `K_r` ([`moments`]);
//! * geodesic-flow trajectories, certified shrinking-target hit detection
//!   and Borel-Cantelli style hit statistics ([`dynamics`]);
//! * the correspondence between approximation functions `psi` and flow
//!   rates `r`, and Dirichlet-improvability checks via continued fractions
//!   cross-validated against the flow criterion ([`dani`]).
//!
//! All stochastic computations are reproducible: a fixed seed yields a fixed
//! sample stream, and parallel runs aggregate deterministically regardless
//! of worker count.

// Negated float comparisons double as NaN rejection in argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dani;
pub mod dynamics;
mod error;
pub mod geom;
pub mod haar;
pub mod lattice;
pub mod moments;
pub mod regions;

pub use error::{Error, Result};
pub use geom::Vec2;
pub use lattice::{LatticeBasis, LatticePoint};
pub use regions::{ConvexRegion, Interval};
