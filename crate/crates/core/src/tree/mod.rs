//! Boundary representation of `Aut(T)` for the `(q+1)`-regular tree `T`.

pub mod geometry;

pub use geometry::{
    busemann, busemann_decomposition, busemann_profile, cell_count, cell_measure, cylinder_measure,
    sphere_size, sphere_vertices, sphere_volume, sphere_volume_scaled, BoundaryCell,
    CylinderFunction, Excluded, TreeParams, Vertex,
};
pub mod harish;

pub use harish::{
    ball_xi2, cubic_constant, folner_ratio, xi_closed, xi_oracle, MeasureKind, MeasureSpec,
    Normalization,
};
pub mod germ;

pub use germ::{
    haar_germ, parse_trace, Composition, GermTrace, GroupGerm, HaarMatchings, InverseGerm,
    LazyIsometry, MatchingSource, TableMatchings, TreeIsometry,
};
pub mod coefficient;

pub use coefficient::{
    coefficient, cylinder_average_f64, cylinder_integral, image_cell_mass, CoefficientMatrix,
};
pub mod kball;

pub use kball::{ball_automorphism_count, enumerate_ball_automorphisms, BallAutomorphism};
pub mod montecarlo;

pub use montecarlo::{
    ball_schur, cocycle_average_check, compressed_mean_norm, sphere_schur_mc, sphere_schur_sampled,
    BallRow, CocycleRow, Estimate, NormEstimate, SchurVectors,
};
#[cfg(feature = "exact-k1")]
pub mod exact_k1;
