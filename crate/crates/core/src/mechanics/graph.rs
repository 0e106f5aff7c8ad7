//! Discretization of the film into rigid plates and torsional hinges.

use std::collections::{BTreeMap, HashMap};

use nalgebra::Vector3;

use super::MechanicsError;
use crate::lattice::{Cell, Diagonal, FilmSpec, Part, PixelMask, PlateRef};

/// Rigid plate in its rest (flat) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Plate {
    pub id: PlateRef,
    /// Lattice corner indices, counter-clockwise seen from +z.
    pub corners: Vec<(usize, usize)>,
    /// Rest vertex positions, mm.
    pub vertices: Vec<Vector3<f64>>,
    pub centroid: Vector3<f64>,
    /// mm².
    pub area: f64,
}

/// Torsional spring along the edge shared by two plates (`plates.0 < plates.1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Hinge {
    pub plates: (usize, usize),
    pub corners: ((usize, usize), (usize, usize)),
    /// Rest edge end points, mm.
    pub endpoints: (Vector3<f64>, Vector3<f64>),
    pub length: f64,
    /// µJ/rad².
    pub stiffness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HingeGraph {
    pub plates: Vec<Plate>,
    pub hinges: Vec<Hinge>,
    index: HashMap<PlateRef, usize>,
}

impl HingeGraph {
    pub fn plate_index(&self, id: &PlateRef) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Hinge joining the two plates, in either order.
    pub fn hinge_between(&self, a: usize, b: usize) -> Option<usize> {
        let key = (a.min(b), a.max(b));
        self.hinges.iter().position(|h| h.plates == key)
    }

    /// Plates in a pixel: one for a whole cell, two for a split cell.
    pub fn plates_of_cell(&self, row: usize, col: usize) -> Vec<usize> {
        [Part::Whole, Part::A, Part::B]
            .iter()
            .filter_map(|&part| self.plate_index(&PlateRef { row, col, part }))
            .collect()
    }
}

fn cell_polygons(r: usize, c: usize, cell: Cell) -> Vec<(Part, Vec<(usize, usize)>)> {
    let (p00, p10, p11, p01) = ((r, c), (r + 1, c), (r + 1, c + 1), (r, c + 1));
    match cell {
        Cell::Removed => vec![],
        Cell::Whole => vec![(Part::Whole, vec![p00, p10, p11, p01])],
        Cell::Split(Diagonal::Main) => vec![(Part::A, vec![p00, p10, p11]), (Part::B, vec![p00, p11, p01])],
        Cell::Split(Diagonal::Anti) => vec![(Part::A, vec![p00, p10, p01]), (Part::B, vec![p10, p11, p01])],
    }
}

fn corner_position(corner: (usize, usize), edge: f64) -> Vector3<f64> {
    Vector3::new(corner.0 as f64 * edge, corner.1 as f64 * edge, 0.0)
}

/// One plate per active cell (two for a diagonally split cell) and one hinge
/// per edge shared by two plates, with stiffness `hinge_stiffness × length`.
pub fn build_hinge_graph(mask: &PixelMask, film: &FilmSpec) -> Result<HingeGraph, MechanicsError> {
    if mask.active_count() == 0 {
        return Err(MechanicsError::EmptyMask);
    }
    let edge = film.pixel_edge;
    let mut plates = Vec::new();
    let mut index = HashMap::new();
    for (r, c) in mask.active_cells() {
        for (part, corners) in cell_polygons(r, c, mask.cell(r, c)) {
            let vertices: Vec<Vector3<f64>> = corners.iter().map(|&k| corner_position(k, edge)).collect();
            let (area, centroid) = polygon_area_centroid(&vertices);
            let id = PlateRef { row: r, col: c, part };
            index.insert(id, plates.len());
            plates.push(Plate { id, corners, vertices, centroid, area });
        }
    }

    // edge key -> plates using it; BTreeMap keeps hinge order deterministic
    let mut edges: BTreeMap<((usize, usize), (usize, usize)), Vec<usize>> = BTreeMap::new();
    for (i, p) in plates.iter().enumerate() {
        let n = p.corners.len();
        for k in 0..n {
            let (u, v) = (p.corners[k], p.corners[(k + 1) % n]);
            edges.entry((u.min(v), u.max(v))).or_default().push(i);
        }
    }
    let mut hinges: Vec<Hinge> = edges
        .into_iter()
        .filter(|(_, ps)| ps.len() == 2)
        .map(|((u, v), ps)| {
            let endpoints = (corner_position(u, edge), corner_position(v, edge));
            let length = (endpoints.1 - endpoints.0).norm();
            Hinge {
                plates: (ps[0].min(ps[1]), ps[0].max(ps[1])),
                corners: (u, v),
                endpoints,
                length,
                stiffness: film.hinge_stiffness * length,
            }
        })
        .collect();
    hinges.sort_by_key(|h| (h.plates, h.corners));

    let graph = HingeGraph { plates, hinges, index };
    check_connected(&graph)?;
    Ok(graph)
}

fn check_connected(g: &HingeGraph) -> Result<(), MechanicsError> {
    let n = g.plates.len();
    let mut adj = vec![Vec::new(); n];
    for h in &g.hinges {
        adj[h.plates.0].push(h.plates.1);
        adj[h.plates.1].push(h.plates.0);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(p) = stack.pop() {
        for &q in &adj[p] {
            if !seen[q] {
                seen[q] = true;
                count += 1;
                stack.push(q);
            }
        }
    }
    if count != n {
        let orphan = g.plates[seen.iter().position(|s| !s).unwrap()].id;
        return Err(MechanicsError::DisconnectedMask { components_hint: orphan.to_string() });
    }
    Ok(())
}

fn polygon_area_centroid(v: &[Vector3<f64>]) -> (f64, Vector3<f64>) {
    let n = v.len();
    let mut a2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for k in 0..n {
        let (p, q) = (v[k], v[(k + 1) % n]);
        let cross = p.x * q.y - q.x * p.y;
        a2 += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    let area = a2 / 2.0;
    (area.abs(), Vector3::new(cx / (3.0 * a2), cy / (3.0 * a2), 0.0))
}
