//! Quasi-static folding of the film: rigid pixel plates joined by torsional
//! hinges, equilibrated under hinge elasticity plus Zeeman energy.
//!
//! Units: mm, mT, rad, µJ. Moments enter as `V·M` with `V` in mm³ and `M`
//! in kA/m, which gives µJ/mT after the `1e-3` factor.

mod calibrate;
mod export;
mod graph;
mod measure;
mod model;
mod solver;

pub use calibrate::{calibrate_hinge_stiffness, platform_displacement, PLATFORM_DISPLACEMENT, PLATFORM_FIELD};
pub use export::{to_obj, trace_csv};
pub use graph::{build_hinge_graph, Hinge, HingeGraph, Plate};
pub use measure::{measure, Query};
pub use model::{DeformationState, HingeRole, Model, Pose, PENALTY_FACTOR, STANDARD_GRAVITY};
pub use solver::{linear_schedule, solve, solve_equilibrium, Solution, SolverOptions, StepRecord};

use nalgebra::{DVector, Rotation3};
use thiserror::Error;

use crate::field::{FieldError, FieldSource};
use crate::lattice::{EncodingMatrix, FilmSpec, LatticeError, PlateRef};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanicsError {
    #[error("mask has no active cells")]
    EmptyMask,
    #[error("active region is not connected (plate {components_hint} is unreachable)")]
    DisconnectedMask { components_hint: String },
    #[error("state does not match the hinge graph: {0}")]
    InconsistentState(String),
    #[error("no convergence at schedule step {step} ({magnitude} mT) after {iterations} iterations; final gradient norm {gradient_norm:e}")]
    NoConvergence { step: usize, magnitude: f64, iterations: usize, gradient_norm: f64, trace: Vec<f64> },
    #[error("film density must be positive and finite, got {0}")]
    InvalidDensity(f64),
    #[error("unknown measurement query `{0}`")]
    UnknownQuery(String),
    #[error("plate {0} does not exist in the hinge graph")]
    UnknownPlate(PlateRef),
    #[error("invalid field schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Everything the solver needs: what is magnetized, how stiff it is, what
/// drives it and how it is held.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySetup {
    pub encoding: EncodingMatrix,
    pub film: FilmSpec,
    pub source: FieldSource,
    /// First anchor is pinned; the rest are held to its ground plane but may
    /// slide in it. Empty means free-floating: the plate nearest the mask
    /// centroid is pinned.
    pub anchors: Vec<PlateRef>,
    /// Pose of the pinned plate's ground plane in the world.
    pub base_frame: Rotation3<f64>,
    /// Pairwise dipole–dipole coupling between plates.
    pub dipole_coupling: bool,
    /// Film density in g/cm³; `None` leaves gravity out. Weight acts
    /// along −z of the base frame.
    pub gravity: Option<f64>,
}

impl EnergySetup {
    pub fn new(encoding: EncodingMatrix, film: FilmSpec, source: FieldSource) -> Self {
        Self { encoding, film, source, anchors: Vec::new(), base_frame: Rotation3::identity(), dipole_coupling: false, gravity: None }
    }

    pub fn with_anchors(mut self, anchors: Vec<PlateRef>) -> Self {
        self.anchors = anchors;
        self
    }

    pub fn with_source(mut self, source: FieldSource) -> Self {
        self.source = source;
        self
    }
}

pub fn total_energy(state: &DeformationState, setup: &EnergySetup) -> Result<f64, MechanicsError> {
    let model = Model::new(setup)?;
    model.check_state(state)?;
    model.energy(&state.coords)
}

/// Gradient over the spanning-tree hinge angles.
pub fn energy_gradient(state: &DeformationState, setup: &EnergySetup) -> Result<DVector<f64>, MechanicsError> {
    let model = Model::new(setup)?;
    model.check_state(state)?;
    model.gradient(&state.coords)
}
