use std::fmt::Write as _;

use super::measure::{measure, Query};
use super::model::{DeformationState, Model};
use super::solver::Solution;
use super::MechanicsError;

/// Wavefront OBJ of the folded plates in mm, one face per plate. Vertices
/// are duplicated per plate so every face carries its own rigid pose.
pub fn to_obj(model: &Model, state: &DeformationState) -> Result<String, MechanicsError> {
    model.check_state(state)?;
    let mut s = String::from("# magpixel deformed film, mm\n");
    let mut faces = Vec::new();
    let mut next = 1;
    for (plate, pose) in model.graph.plates.iter().zip(&state.poses) {
        let _ = writeln!(s, "o plate_{}", plate.id.to_string().replace(',', "_"));
        let mut face = Vec::new();
        for v in &plate.vertices {
            let x = pose.apply(v);
            let _ = writeln!(s, "v {:.6} {:.6} {:.6}", x.x + 0.0, x.y + 0.0, x.z + 0.0);
            face.push(next.to_string());
            next += 1;
        }
        faces.push(face.join(" "));
    }
    for f in faces {
        let _ = writeln!(s, "f {f}");
    }
    Ok(s)
}

/// `step,field_mT,energy,gradient_norm,measure` with one row per schedule point.
pub fn trace_csv(solution: &Solution, query: &Query) -> Result<String, MechanicsError> {
    let mut s = String::from("step,field_mT,energy,gradient_norm,measure\n");
    for (i, rec) in solution.steps.iter().enumerate() {
        let m = measure(&solution.model, &solution.state_at(i), query)?;
        let _ = writeln!(s, "{i},{},{:.12e},{:.6e},{:.9}", rec.magnitude, rec.energy, rec.gradient_norm, m);
    }
    Ok(s)
}
