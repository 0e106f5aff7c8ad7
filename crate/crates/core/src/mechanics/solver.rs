//! Continuation over field magnitude with a damped Newton inner loop.

use nalgebra::{DMatrix, DVector};

use super::model::{DeformationState, Model};
use super::{EnergySetup, MechanicsError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Schedule intervals between zero and the target magnitude.
    pub steps: usize,
    pub max_iterations: usize,
    /// Largest gradient component allowed at a converged point, as a fraction
    /// of `hinge_stiffness × pixel_edge`.
    pub gradient_tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { steps: 20, max_iterations: 200, gradient_tolerance: 1e-8 }
    }
}

/// Converged minimum at one schedule point.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub magnitude: f64,
    pub coords: Vec<f64>,
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Energy after every accepted iterate, starting point included.
    pub energy_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub model: Model,
    pub state: DeformationState,
    pub steps: Vec<StepRecord>,
}

impl Solution {
    pub fn state_at(&self, step: usize) -> DeformationState {
        self.model.state(self.steps[step].coords.clone()).expect("recorded coordinates are consistent")
    }
}

/// `steps + 1` equally spaced magnitudes from 0 to `target`.
pub fn linear_schedule(target: f64, steps: usize) -> Vec<f64> {
    let n = steps.max(1);
    (0..=n).map(|i| target * i as f64 / n as f64).collect()
}

/// Continuation from zero to the setup's own field magnitude.
pub fn solve(setup: &EnergySetup, options: &SolverOptions) -> Result<Solution, MechanicsError> {
    solve_equilibrium(setup, &linear_schedule(setup.source.magnitude(), options.steps), options)
}

/// Minimizes at each schedule magnitude, starting from the previous minimum.
/// The field direction (or magnet geometry) comes from `setup.source`.
pub fn solve_equilibrium(setup: &EnergySetup, schedule: &[f64], options: &SolverOptions) -> Result<Solution, MechanicsError> {
    check_schedule(schedule)?;
    let model = Model::new(setup)?;
    let mut q = vec![0.0; model.n_coords()];
    let mut steps = Vec::with_capacity(schedule.len());
    for (i, &magnitude) in schedule.iter().enumerate() {
        let at = model.with_source(setup.source.with_magnitude(magnitude));
        let rec = relax(&at, &q, options).map_err(|e| match e {
            MechanicsError::NoConvergence { iterations, gradient_norm, trace, .. } => {
                MechanicsError::NoConvergence { step: i, magnitude, iterations, gradient_norm, trace }
            }
            other => other,
        })?;
        q = rec.coords.clone();
        steps.push(StepRecord { magnitude, ..rec });
    }
    let state = model.state(q)?;
    let model = model.with_source(setup.source.with_magnitude(*schedule.last().unwrap()));
    Ok(Solution { model, state, steps })
}

fn check_schedule(schedule: &[f64]) -> Result<(), MechanicsError> {
    match schedule.first() {
        None => return Err(MechanicsError::InvalidSchedule("schedule is empty".into())),
        Some(&s) if s != 0.0 => return Err(MechanicsError::InvalidSchedule(format!("schedule starts at {s}, not 0"))),
        _ => {}
    }
    if schedule.iter().any(|m| !m.is_finite()) || schedule.windows(2).any(|w| w[1] < w[0]) {
        return Err(MechanicsError::InvalidSchedule("magnitudes must be finite and non-decreasing".into()));
    }
    Ok(())
}

fn lowest_mode(h: &DMatrix<f64>) -> (f64, f64, DVector<f64>) {
    let eig = h.clone().symmetric_eigen();
    let mut imin = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[imin] {
            imin = i;
        }
    }
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    (eig.eigenvalues[imin], lmax, eig.eigenvectors.column(imin).into_owned())
}

/// Local minimization from `q0` at the model's current field.
///
/// Newton steps on `(H + μI)` with an Armijo backtracking line search. When
/// the Hessian has a clearly negative eigenvalue the step follows that mode
/// instead, oriented downhill or, at an exact saddle, with its largest
/// component positive.
///
/// Convergence is judged on the max-norm of the gradient: the loop-closure
/// penalties make the Hessian stiff enough that coordinate roundoff alone
/// leaves a per-component residual near `1e-9·k`, and the Euclidean norm
/// sums that floor over every coordinate.
pub fn relax(model: &Model, q0: &[f64], options: &SolverOptions) -> Result<StepRecord, MechanicsError> {
    let n = model.n_coords();
    let k_ref = model.stiffness_scale;
    let tol = options.gradient_tolerance * k_ref;
    let mut q = DVector::from_column_slice(q0);
    let (mut e, mut g) = model.energy_and_gradient(q.as_slice())?;
    let mut trace = vec![e];
    if n == 0 {
        return Ok(StepRecord { magnitude: 0.0, coords: vec![], energy: e, gradient_norm: 0.0, iterations: 0, energy_trace: trace });
    }
    for it in 0..options.max_iterations {
        let gn = g.amax();
        let h = model.hessian(q.as_slice())?;
        let (lmin, lmax, mode) = lowest_mode(&h);
        let neg_tol = (1e-6 * k_ref).max(1e-9 * lmax);
        if gn < tol && lmin >= -neg_tol {
            return Ok(StepRecord { magnitude: 0.0, coords: q.as_slice().to_vec(), energy: e, gradient_norm: gn, iterations: it, energy_trace: trace });
        }

        let (p, slope) = if lmin < -neg_tol {
            let gv = g.dot(&mode);
            let sign = if gv.abs() > 1e-12 * gn.max(k_ref) {
                -gv.signum()
            } else {
                let imax = mode.iamax();
                mode[imax].signum()
            };
            let p = &mode * (0.5 * sign);
            let slope = g.dot(&p);
            (p, slope)
        } else {
            let mu = if lmin > 0.0 { 0.0 } else { -lmin + 1e-12 * lmax.max(k_ref) };
            let shifted = &h + DMatrix::identity(n, n) * mu;
            let mut p = match shifted.cholesky() {
                Some(c) => -c.solve(&g),
                None => -&g / lmax.max(k_ref),
            };
            let pn = p.norm();
            if pn > 1.0 {
                p /= pn;
            }
            let slope = g.dot(&p);
            (p, slope)
        };

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &q + &p * alpha;
            let et = model.energy(trial.as_slice())?;
            if et <= e + 1e-4 * alpha * slope && et < e {
                accepted = Some((trial, et));
                break;
            }
            alpha *= 0.5;
        }
        if accepted.is_none() {
            // near the optimum energy differences drown in roundoff; take the
            // full step if it still shrinks the gradient
            let trial = &q + &p;
            let (et, gt) = model.energy_and_gradient(trial.as_slice())?;
            if et <= e + 1e-13 * (e.abs() + k_ref) && gt.amax() < gn {
                q = trial;
                e = et;
                g = gt;
                trace.push(e);
                continue;
            }
            return Err(MechanicsError::NoConvergence { step: 0, magnitude: 0.0, iterations: it, gradient_norm: gn, trace });
        }
        let (trial, et) = accepted.unwrap();
        q = trial;
        e = et;
        g = model.gradient(q.as_slice())?;
        trace.push(e);
    }
    let gradient_norm = g.amax();
    Err(MechanicsError::NoConvergence { step: 0, magnitude: 0.0, iterations: options.max_iterations, gradient_norm, trace })
}
