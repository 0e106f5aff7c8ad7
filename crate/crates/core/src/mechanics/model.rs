//! Compiled energy model over spanning-tree hinge coordinates.
//!
//! Generalized coordinates are the fold angles of the hinges on a BFS
//! spanning tree rooted at the pinned plate. Hinges off the tree close loops
//! and are enforced by a stiff quadratic penalty on their edge end points.
//! Additional anchors are grounded: their vertices are held to the base plane
//! by the same kind of penalty but may slide within it.
//!
//! Energy (µJ):
//!
//! ```text
//! E = Σ_h ½ k_h θ_h²                       hinge elasticity
//!   + Σ_loops ½ w Σ_ends |X_a − X_b|²       loop closure
//!   + Σ_grounded ½ w_g Σ_vertices (n·X)²    ground contact
//!   − Σ_p R_p μ_p · B(x_p)                  Zeeman
//!   [+ Σ_{p<q} dipole–dipole]               optional
//! ```
//!
//! The gradient is assembled from per-plate wrenches: each term reports the
//! force `F` and torque `T` (about the world origin) it exerts as an energy
//! derivative; a tree coordinate then sees `d·(T − a × F)` summed over its
//! subtree, where `a`, `d` are the hinge point and axis in world coordinates.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Unit, Vector3};

use super::graph::{build_hinge_graph, HingeGraph};
use super::{EnergySetup, MechanicsError};
use crate::field::FieldSource;
use crate::lattice::{ensure_valid, PlateRef};

/// Loop-closure and ground penalties are this multiple of hinge stiffness
/// (per pixel edge squared).
pub const PENALTY_FACTOR: f64 = 1e4;

/// µJ/mT per (kA/m · mm³).
const ZEEMAN_UNIT: f64 = 1e-3;

/// Dipole–dipole prefactor μ0/4π for moments in µJ/mT, lengths in mm, energy in µJ.
const DIPOLE_UNIT: f64 = 1e2;

/// m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn apply(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.translation
    }
}

/// Folded configuration: tree hinge angles plus the plate poses they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationState {
    pub coords: Vec<f64>,
    pub poses: Vec<Pose>,
}

#[derive(Debug, Clone)]
pub(crate) struct TreeJoint {
    pub parent: usize,
    /// Rest point on the hinge line.
    pub point: Vector3<f64>,
    /// Rest axis; positive rotation lifts the child toward the parent normal.
    pub axis: Vector3<f64>,
    pub stiffness: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LoopJoint {
    pub a: usize,
    pub b: usize,
    /// Rest axis oriented so that a positive angle lifts `b`.
    pub axis: Vector3<f64>,
    pub ends: (Vector3<f64>, Vector3<f64>),
    pub stiffness: f64,
    pub weight: f64,
}

/// How a hinge is represented in the coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HingeRole {
    Tree(usize),
    Loop(usize),
}

/// An [`EnergySetup`] compiled against its hinge graph.
#[derive(Debug, Clone)]
pub struct Model {
    pub graph: HingeGraph,
    pub root: usize,
    pub(crate) order: Vec<usize>,
    /// Joint index that places each plate (None for the root).
    pub(crate) placed_by: Vec<Option<usize>>,
    pub(crate) joints: Vec<TreeJoint>,
    pub(crate) loops: Vec<LoopJoint>,
    pub(crate) roles: Vec<HingeRole>,
    pub grounded: Vec<usize>,
    /// Rest-frame moments, µJ/mT.
    pub moments: Vec<Vector3<f64>>,
    pub base: Matrix3<f64>,
    pub source: FieldSource,
    pub ground_weight: f64,
    pub dipole_coupling: bool,
    /// Plate weights, µJ per mm of height; empty without gravity.
    pub weights: Vec<f64>,
    /// `hinge_stiffness × pixel_edge`, the reference torque scale (µJ/rad²).
    pub stiffness_scale: f64,
    pub pixel_edge: f64,
}

/// Axis along the hinge such that rotating `toward` (a point on the child
/// side) about it by a positive angle lifts it along +z.
fn lifting_axis(p0: Vector3<f64>, p1: Vector3<f64>, toward: Vector3<f64>) -> Vector3<f64> {
    let along = (p1 - p0).normalize();
    let rel = toward - p0;
    let out = (rel - along * rel.dot(&along)).normalize();
    out.cross(&Vector3::z())
}

fn rotation_about(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Unit::new_unchecked(*axis), angle).into_inner()
}

impl Model {
    pub fn new(setup: &EnergySetup) -> Result<Self, MechanicsError> {
        ensure_valid(&setup.encoding)?;
        setup.film.validate()?;
        if let Some(rho) = setup.gravity.filter(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(MechanicsError::InvalidDensity(rho));
        }
        let graph = build_hinge_graph(&setup.encoding.mask, &setup.film)?;
        let n = graph.plates.len();

        let anchors = resolve_anchors(&graph, &setup.anchors)?;
        let root = anchors[0];
        let grounded: Vec<usize> = anchors[1..].to_vec();

        // BFS spanning tree; hinges are visited in their sorted order
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (hi, h) in graph.hinges.iter().enumerate() {
            adj[h.plates.0].push((h.plates.1, hi));
            adj[h.plates.1].push((h.plates.0, hi));
        }
        let mut placed_by = vec![None; n];
        let mut visited = vec![false; n];
        let mut roles = vec![HingeRole::Loop(usize::MAX); graph.hinges.len()];
        let mut joints = Vec::new();
        let mut order = vec![root];
        visited[root] = true;
        let mut head = 0;
        while head < order.len() {
            let p = order[head];
            head += 1;
            for &(q, hi) in &adj[p] {
                if visited[q] {
                    continue;
                }
                visited[q] = true;
                let h = &graph.hinges[hi];
                let axis = lifting_axis(h.endpoints.0, h.endpoints.1, graph.plates[q].centroid);
                roles[hi] = HingeRole::Tree(joints.len());
                placed_by[q] = Some(joints.len());
                joints.push(TreeJoint { parent: p, point: h.endpoints.0, axis, stiffness: h.stiffness });
                order.push(q);
            }
        }

        let edge = setup.film.pixel_edge;
        let mut loops = Vec::new();
        for (hi, h) in graph.hinges.iter().enumerate() {
            if matches!(roles[hi], HingeRole::Tree(_)) {
                continue;
            }
            let (a, b) = h.plates;
            roles[hi] = HingeRole::Loop(loops.len());
            loops.push(LoopJoint {
                a,
                b,
                axis: lifting_axis(h.endpoints.0, h.endpoints.1, graph.plates[b].centroid),
                ends: h.endpoints,
                stiffness: h.stiffness,
                weight: PENALTY_FACTOR * h.stiffness / (edge * edge),
            });
        }

        let moments = graph
            .plates
            .iter()
            .map(|p| {
                let v = setup.encoding.get_part(p.id.row, p.id.col, p.id.part).map(|v| v.cosines()).unwrap_or_default();
                v * (setup.encoding.remanence * p.area * setup.film.core_thickness * ZEEMAN_UNIT)
            })
            .collect();

        // mg/mm³ · mm³ · 9.81 m/s² gives µJ per mm
        let weights = match setup.gravity {
            Some(rho) => graph.plates.iter().map(|p| rho * p.area * setup.film.film_thickness * STANDARD_GRAVITY * 1e-3).collect(),
            None => Vec::new(),
        };
        let stiffness_scale = setup.film.hinge_stiffness * edge;
        Ok(Self {
            graph,
            root,
            order,
            placed_by,
            joints,
            loops,
            roles,
            grounded,
            moments,
            base: setup.base_frame.into_inner(),
            source: setup.source,
            ground_weight: PENALTY_FACTOR * stiffness_scale / (edge * edge),
            dipole_coupling: setup.dipole_coupling,
            weights,
            stiffness_scale,
            pixel_edge: edge,
        })
    }

    pub fn n_coords(&self) -> usize {
        self.joints.len()
    }

    pub fn role(&self, hinge: usize) -> HingeRole {
        self.roles[hinge]
    }

    pub fn plate_index(&self, id: &PlateRef) -> Result<usize, MechanicsError> {
        self.graph.plate_index(id).ok_or(MechanicsError::UnknownPlate(*id))
    }

    /// Same model under a different applied field.
    pub fn with_source(&self, source: FieldSource) -> Self {
        Self { source, ..self.clone() }
    }

    pub fn rest_state(&self) -> DeformationState {
        self.state(vec![0.0; self.n_coords()]).expect("rest coordinates are consistent")
    }

    pub fn state(&self, coords: Vec<f64>) -> Result<DeformationState, MechanicsError> {
        if coords.len() != self.n_coords() || !coords.iter().all(|q| q.is_finite()) {
            return Err(MechanicsError::InconsistentState(format!(
                "expected {} finite coordinates, got {}",
                self.n_coords(),
                coords.len()
            )));
        }
        let poses = self.poses(&coords);
        Ok(DeformationState { coords, poses })
    }

    pub fn check_state(&self, s: &DeformationState) -> Result<(), MechanicsError> {
        if s.coords.len() != self.n_coords() || s.poses.len() != self.graph.plates.len() {
            return Err(MechanicsError::InconsistentState(format!(
                "state has {} coordinates / {} poses, model has {} / {}",
                s.coords.len(),
                s.poses.len(),
                self.n_coords(),
                self.graph.plates.len()
            )));
        }
        Ok(())
    }

    pub fn poses(&self, q: &[f64]) -> Vec<Pose> {
        let mut poses = vec![Pose { rotation: self.base, translation: Vector3::zeros() }; self.graph.plates.len()];
        for &p in &self.order[1..] {
            let j = &self.joints[self.placed_by[p].unwrap()];
            let parent = poses[j.parent];
            let rot = rotation_about(&j.axis, q[self.placed_by[p].unwrap()]);
            poses[p] = Pose {
                rotation: parent.rotation * rot,
                translation: parent.rotation * (j.point - rot * j.point) + parent.translation,
            };
        }
        poses
    }

    /// Ground-plane normal in world coordinates.
    pub fn up(&self) -> Vector3<f64> {
        self.base * Vector3::z()
    }

    /// Signed dihedral angle of any hinge, rad.
    pub fn hinge_angle(&self, q: &[f64], poses: &[Pose], hinge: usize) -> f64 {
        match self.roles[hinge] {
            HingeRole::Tree(j) => q[j],
            HingeRole::Loop(l) => {
                let lj = &self.loops[l];
                loop_angle(&poses[lj.a], &poses[lj.b], &lj.axis).0
            }
        }
    }

    pub fn hinge_angles(&self, s: &DeformationState) -> Vec<f64> {
        (0..self.graph.hinges.len()).map(|h| self.hinge_angle(&s.coords, &s.poses, h)).collect()
    }

    pub fn energy(&self, q: &[f64]) -> Result<f64, MechanicsError> {
        let poses = self.poses(q);
        self.energy_at(q, &poses)
    }

    fn energy_at(&self, q: &[f64], poses: &[Pose]) -> Result<f64, MechanicsError> {
        let mut e = 0.0;
        for (j, joint) in self.joints.iter().enumerate() {
            e += 0.5 * joint.stiffness * q[j] * q[j];
        }
        for lj in &self.loops {
            let (pa, pb) = (&poses[lj.a], &poses[lj.b]);
            let theta = loop_angle(pa, pb, &lj.axis).0;
            e += 0.5 * lj.stiffness * theta * theta;
            for end in [lj.ends.0, lj.ends.1] {
                e += 0.5 * lj.weight * (pa.apply(&end) - pb.apply(&end)).norm_squared();
            }
        }
        let up = self.up();
        for &g in &self.grounded {
            for v in &self.graph.plates[g].vertices {
                let h = up.dot(&poses[g].apply(v));
                e += 0.5 * self.ground_weight * h * h;
            }
        }
        for (p, w) in self.weights.iter().enumerate() {
            e += w * up.dot(&poses[p].apply(&self.graph.plates[p].centroid));
        }
        let moments = self.world_moments(poses);
        for (p, plate) in self.graph.plates.iter().enumerate() {
            let b = self.source.field_at(poses[p].apply(&plate.centroid))?;
            e -= moments[p].dot(&b);
        }
        if self.dipole_coupling {
            let centers = self.world_centroids(poses);
            for p in 0..moments.len() {
                for r in p + 1..moments.len() {
                    e += dipole_pair(&moments[p], &moments[r], &(centers[r] - centers[p])).0;
                }
            }
        }
        Ok(e)
    }

    fn world_moments(&self, poses: &[Pose]) -> Vec<Vector3<f64>> {
        poses.iter().zip(&self.moments).map(|(p, m)| p.rotation * m).collect()
    }

    pub fn world_centroids(&self, poses: &[Pose]) -> Vec<Vector3<f64>> {
        poses.iter().zip(&self.graph.plates).map(|(p, pl)| p.apply(&pl.centroid)).collect()
    }

    /// Per-plate (force, torque) energy derivatives, excluding tree-hinge
    /// elasticity (which acts directly on the coordinates).
    fn wrenches(&self, poses: &[Pose], with_elastic: bool, with_field: bool) -> Result<Vec<(Vector3<f64>, Vector3<f64>)>, MechanicsError> {
        let n = poses.len();
        let mut w = vec![(Vector3::zeros(), Vector3::zeros()); n];
        if with_elastic {
            for lj in &self.loops {
                let (pa, pb) = (&poses[lj.a], &poses[lj.b]);
                let (theta, dta, dtb) = loop_angle_with_derivative(pa, pb, &lj.axis);
                w[lj.a].1 += dta * (lj.stiffness * theta);
                w[lj.b].1 += dtb * (lj.stiffness * theta);
                for end in [lj.ends.0, lj.ends.1] {
                    let (xa, xb) = (pa.apply(&end), pb.apply(&end));
                    let f = (xa - xb) * lj.weight;
                    w[lj.a].0 += f;
                    w[lj.a].1 += xa.cross(&f);
                    w[lj.b].0 -= f;
                    w[lj.b].1 -= xb.cross(&f);
                }
            }
            let up = self.up();
            for &g in &self.grounded {
                for v in &self.graph.plates[g].vertices {
                    let x = poses[g].apply(v);
                    let f = up * (self.ground_weight * up.dot(&x));
                    w[g].0 += f;
                    w[g].1 += x.cross(&f);
                }
            }
            for (p, weight) in self.weights.iter().enumerate() {
                let x = poses[p].apply(&self.graph.plates[p].centroid);
                let f = up * *weight;
                w[p].0 += f;
                w[p].1 += x.cross(&f);
            }
        }
        if with_field {
            let moments = self.world_moments(poses);
            let centers = self.world_centroids(poses);
            for p in 0..n {
                let m = moments[p];
                if m == Vector3::zeros() {
                    continue;
                }
                let b = self.source.field_at(centers[p])?;
                let f = if self.source.is_uniform() { Vector3::zeros() } else { -(self.source.jacobian(centers[p])?.transpose() * m) };
                w[p].0 += f;
                w[p].1 += b.cross(&m) + centers[p].cross(&f);
            }
            if self.dipole_coupling {
                for p in 0..n {
                    for r in p + 1..n {
                        let d = centers[r] - centers[p];
                        let (_, grad_r, field_at_p, field_at_r) = dipole_pair(&moments[p], &moments[r], &d);
                        // U = m_p·G_p = m_r·G_r; ∂U/∂x_r = grad_r = −∂U/∂x_p
                        w[p].0 -= grad_r;
                        w[p].1 += moments[p].cross(&field_at_p) + centers[p].cross(&(-grad_r));
                        w[r].0 += grad_r;
                        w[r].1 += moments[r].cross(&field_at_r) + centers[r].cross(&grad_r);
                    }
                }
            }
        }
        Ok(w)
    }

    fn project(&self, q: &[f64], poses: &[Pose], wrench: Vec<(Vector3<f64>, Vector3<f64>)>, with_elastic: bool) -> DVector<f64> {
        let mut acc = wrench;
        let mut g = DVector::zeros(self.n_coords());
        for &p in self.order[1..].iter().rev() {
            let ji = self.placed_by[p].unwrap();
            let j = &self.joints[ji];
            let parent = &poses[j.parent];
            let a = parent.apply(&j.point);
            let d = parent.rotation * j.axis;
            let (f, t) = acc[p];
            g[ji] = d.dot(&(t - a.cross(&f)));
            if with_elastic {
                g[ji] += j.stiffness * q[ji];
            }
            acc[j.parent].0 += f;
            acc[j.parent].1 += t;
        }
        g
    }

    pub fn gradient(&self, q: &[f64]) -> Result<DVector<f64>, MechanicsError> {
        let poses = self.poses(q);
        let w = self.wrenches(&poses, true, true)?;
        Ok(self.project(q, &poses, w, true))
    }

    pub fn energy_and_gradient(&self, q: &[f64]) -> Result<(f64, DVector<f64>), MechanicsError> {
        let poses = self.poses(q);
        let e = self.energy_at(q, &poses)?;
        let w = self.wrenches(&poses, true, true)?;
        Ok((e, self.project(q, &poses, w, true)))
    }

    /// Gradient of the Zeeman term alone when plate `p` carries the
    /// rest-frame moment `m` and every other plate is unmagnetized. The
    /// Zeeman gradient is linear in the moments, so these columns give its
    /// exact sensitivity to each plate's moment.
    pub fn zeeman_gradient_for_moment(&self, q: &[f64], p: usize, m: Vector3<f64>) -> Result<DVector<f64>, MechanicsError> {
        let mut single = self.clone();
        single.moments = vec![Vector3::zeros(); self.moments.len()];
        single.moments[p] = m;
        single.dipole_coupling = false;
        let poses = single.poses(q);
        let w = single.wrenches(&poses, false, true)?;
        Ok(single.project(q, &poses, w, false))
    }

    /// Central-difference Hessian of the analytic gradient, symmetrized.
    pub fn hessian(&self, q: &[f64]) -> Result<DMatrix<f64>, MechanicsError> {
        let n = self.n_coords();
        let h = 1e-6;
        let mut hess = DMatrix::zeros(n, n);
        let mut x = q.to_vec();
        for j in 0..n {
            x[j] = q[j] + h;
            let gp = self.gradient(&x)?;
            x[j] = q[j] - h;
            let gm = self.gradient(&x)?;
            x[j] = q[j];
            hess.set_column(j, &((gp - gm) / (2.0 * h)));
        }
        Ok((&hess + hess.transpose()) * 0.5)
    }
}

fn resolve_anchors(graph: &HingeGraph, anchors: &[PlateRef]) -> Result<Vec<usize>, MechanicsError> {
    if anchors.is_empty() {
        // free-floating: pin the plate nearest the area-weighted centroid
        let total: f64 = graph.plates.iter().map(|p| p.area).sum();
        let c = graph.plates.iter().fold(Vector3::zeros(), |acc, p| acc + p.centroid * p.area) / total;
        let mut best = 0;
        for (i, p) in graph.plates.iter().enumerate() {
            if (p.centroid - c).norm() < (graph.plates[best].centroid - c).norm() - 1e-12 {
                best = i;
            }
        }
        return Ok(vec![best]);
    }
    let mut out = Vec::with_capacity(anchors.len());
    for a in anchors {
        let i = graph.plate_index(a).ok_or(MechanicsError::UnknownPlate(*a))?;
        if !out.contains(&i) {
            out.push(i);
        }
    }
    Ok(out)
}

/// `θ = atan2((n_a × n_b)·e, n_a·n_b)` with `e` the hinge axis carried by `a`.
fn loop_angle(pa: &Pose, pb: &Pose, axis: &Vector3<f64>) -> (f64, Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let na = pa.rotation.column(2).into_owned();
    let nb = pb.rotation.column(2).into_owned();
    let e = pa.rotation * axis;
    let y = na.cross(&nb).dot(&e);
    let x = na.dot(&nb);
    (y.atan2(x), na, nb, e)
}

/// Angle and its derivatives with respect to infinitesimal rotations of
/// plate `a` and plate `b`.
fn loop_angle_with_derivative(pa: &Pose, pb: &Pose, axis: &Vector3<f64>) -> (f64, Vector3<f64>, Vector3<f64>) {
    let (theta, na, nb, e) = loop_angle(pa, pb, axis);
    let nab = na.cross(&nb);
    let y = nab.dot(&e);
    let x = na.dot(&nb);
    let dx_a = nab;
    let dx_b = -nab;
    let dy_a = na.cross(&nb.cross(&e)) + e.cross(&nab);
    let dy_b = nb.cross(&e.cross(&na));
    let r2 = x * x + y * y;
    (theta, (dy_a * x - dx_a * y) / r2, (dy_b * x - dx_b * y) / r2)
}

/// Dipole pair energy `U`, `∂U/∂x_r`, and the fields `G_p`, `G_r` with
/// `U = m_p·G_p = m_r·G_r`; `d = x_r − x_p`.
fn dipole_pair(
    mp: &Vector3<f64>,
    mr: &Vector3<f64>,
    d: &Vector3<f64>,
) -> (f64, Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let r2 = d.norm_squared();
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let r7 = r5 * r2;
    let a = mp.dot(mr);
    let pd = mp.dot(d);
    let rd = mr.dot(d);
    let u = DIPOLE_UNIT * (a / r3 - 3.0 * pd * rd / r5);
    let grad = (d * (-3.0 * a / r5) - (mp * rd + mr * pd) * (3.0 / r5) + d * (15.0 * pd * rd / r7)) * DIPOLE_UNIT;
    let gp = (mr / r3 - d * (3.0 * rd / r5)) * DIPOLE_UNIT;
    let gr = (mp / r3 - d * (3.0 * pd / r5)) * DIPOLE_UNIT;
    (u, grad, gp, gr)
}
