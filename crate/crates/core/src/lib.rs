//! Projective structures on once-punctured tori.
//!
//! The crate computes holonomy of CP¹ structures by integrating a Lamé-type
//! equation around the torus, classifies the resulting representations by
//! trace growth on the Farey tree, traces pleating rays and Fuchsian centers
//! in the affine space of structures, and compares them with Jenkins–Strebel
//! differentials of the flat torus. A finite-difference toolkit checks the
//! Schwarzian-tensor calculus on explicit conformal metrics.

// NaN must fail validity checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discreteness;
pub mod elliptic;
pub mod error;
pub mod flatdiff;
pub mod holonomy;
pub mod loci;
pub mod mobius;
pub mod ode;
pub mod slicescan;
pub mod tensorlab;

pub use discreteness::{bq_classify, jorgensen_reject, neighbor_flip, ClassTag, PixelClass, TraceTriple};
pub use elliptic::Modulus;
pub use error::{Error, Result};

pub use holonomy::{
    calibrate_origin, holonomy_generators, potential, trace_triple, transport, Calibration, GeneratorPair,
    ProjectivePoint,
};

pub use flatdiff::{Slope, TorusQuadDiff};
pub use loci::{FuchsianCenter, RayPoint};
pub use mobius::MobiusMap;
pub use slicescan::{ClassificationRaster, ScanWindow};
