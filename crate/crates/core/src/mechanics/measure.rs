//! Geometric readings of a folded state.
//!
//! Query syntax: `max_z_displacement`, `centroid_displacement:r,c;r,c;...`,
//! `fold_angle:r,c|r,c`, `twist_angle:r,c|r,c`. Plate references accept a
//! trailing `a`/`b` for the halves of a split cell.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Rotation3, UnitQuaternion, Vector3};

use super::model::{DeformationState, Model};
use super::MechanicsError;
use crate::lattice::PlateRef;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    /// Largest out-of-plane vertex displacement (signed), mm.
    MaxZDisplacement,
    /// Out-of-plane displacement of the area-weighted centroid of the plates, mm.
    CentroidDisplacement(Vec<PlateRef>),
    /// Dihedral angle of the hinge shared by two plates, rad; positive when
    /// both plates rise toward the film normal.
    FoldAngle(PlateRef, PlateRef),
    /// Relative rotation of the second plate about the line joining the two
    /// centroids, rad.
    TwistAngle(PlateRef, PlateRef),
}

fn pair(s: &str, whole: &str) -> Result<(PlateRef, PlateRef), MechanicsError> {
    let bad = || MechanicsError::UnknownQuery(whole.to_string());
    let (a, b) = s.split_once('|').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

impl FromStr for Query {
    type Err = MechanicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || MechanicsError::UnknownQuery(s.to_string());
        let (kind, args) = match s.split_once(':') {
            Some((k, a)) => (k.trim(), Some(a)),
            None => (s, None),
        };
        match (kind, args) {
            ("max_z_displacement", None) => Ok(Query::MaxZDisplacement),
            ("centroid_displacement", Some(a)) => {
                let plates = a
                    .split(';')
                    .filter(|p| !p.trim().is_empty())
                    .map(|p| p.trim().parse::<PlateRef>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>, _>>()?;
                if plates.is_empty() {
                    return Err(bad());
                }
                Ok(Query::CentroidDisplacement(plates))
            }
            ("fold_angle", Some(a)) => pair(a, s).map(|(a, b)| Query::FoldAngle(a, b)),
            ("twist_angle", Some(a)) => pair(a, s).map(|(a, b)| Query::TwistAngle(a, b)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::MaxZDisplacement => write!(f, "max_z_displacement"),
            Query::CentroidDisplacement(ps) => {
                let list: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
                write!(f, "centroid_displacement:{}", list.join(";"))
            }
            Query::FoldAngle(a, b) => write!(f, "fold_angle:{a}|{b}"),
            Query::TwistAngle(a, b) => write!(f, "twist_angle:{a}|{b}"),
        }
    }
}

impl Query {
    /// Fails if the query names plates or hinges absent from the model.
    pub fn check(&self, model: &Model) -> Result<(), MechanicsError> {
        match self {
            Query::MaxZDisplacement => Ok(()),
            Query::CentroidDisplacement(ps) => ps.iter().try_for_each(|p| model.plate_index(p).map(|_| ())),
            Query::FoldAngle(a, b) => {
                let (i, j) = (model.plate_index(a)?, model.plate_index(b)?);
                model.graph.hinge_between(i, j).map(|_| ()).ok_or_else(|| MechanicsError::UnknownQuery(self.to_string()))
            }
            Query::TwistAngle(a, b) => {
                let (i, j) = (model.plate_index(a)?, model.plate_index(b)?);
                if i == j {
                    return Err(MechanicsError::UnknownQuery(self.to_string()));
                }
                Ok(())
            }
        }
    }
}

pub fn measure(model: &Model, state: &DeformationState, query: &Query) -> Result<f64, MechanicsError> {
    model.check_state(state)?;
    query.check(model)?;
    let up = model.up();
    let poses = &state.poses;
    Ok(match query {
        Query::MaxZDisplacement => {
            let mut best = 0.0f64;
            for (p, plate) in model.graph.plates.iter().enumerate() {
                for v in &plate.vertices {
                    let dz = up.dot(&(poses[p].apply(v) - model.base * v));
                    if dz.abs() > best.abs() {
                        best = dz;
                    }
                }
            }
            best
        }
        Query::CentroidDisplacement(ps) => {
            let mut area = 0.0;
            let mut acc = 0.0;
            for id in ps {
                let i = model.plate_index(id)?;
                let plate = &model.graph.plates[i];
                acc += plate.area * up.dot(&(poses[i].apply(&plate.centroid) - model.base * plate.centroid));
                area += plate.area;
            }
            acc / area
        }
        Query::FoldAngle(a, b) => {
            let (i, j) = (model.plate_index(a)?, model.plate_index(b)?);
            let h = model.graph.hinge_between(i, j).unwrap();
            model.hinge_angle(&state.coords, poses, h)
        }
        Query::TwistAngle(a, b) => {
            let (i, j) = (model.plate_index(a)?, model.plate_index(b)?);
            let (pa, pb) = (&poses[i], &poses[j]);
            let ca = pa.apply(&model.graph.plates[i].centroid);
            let cb = pb.apply(&model.graph.plates[j].centroid);
            let axis: Vector3<f64> = (pa.rotation.transpose() * (cb - ca)).normalize();
            let rel = Rotation3::from_matrix_unchecked(pa.rotation.transpose() * pb.rotation);
            let quat = UnitQuaternion::from_rotation_matrix(&rel);
            let (w, v) = (quat.w, quat.imag());
            let twist = 2.0 * v.dot(&axis).atan2(w);
            // wrap to (-π, π]
            (twist + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI
        }
    })
}
