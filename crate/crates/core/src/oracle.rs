//! Independent checks: a direct trapezoidal transcription of the optimal
//! control problem, and the spectrum of the classical Hamiltonian matrix.

use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numeric::{eigenvalues, multiset_distance, C64};
use crate::problem::{float_json, Endpoint, LQProblem};
use crate::qmat::vec_to_f64;
use crate::solver::Trajectory;
use crate::turnpike::Pipeline;

#[derive(Clone, Debug)]
pub struct TranscriptionSolution {
    pub step: f64,
    pub grid: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    /// `|K s - rhs|_inf` of the solved KKT system.
    pub kkt_residual: f64,
    pub objective: f64,
}

/// Minimise the trapezoidal cost subject to trapezoidal dynamics and the
/// endpoint rows, through one sparse LU solve of the KKT system.
pub fn transcribe_solve(p: &LQProblem, steps: usize) -> Result<TranscriptionSolution> {
    if steps < 10 {
        return Err(Error::Usage("transcription needs at least 10 steps".into()));
    }
    if p.control_traces.iter().any(|t| t.order > 0) {
        return Err(Error::OracleUnavailable(
            "control traces on derivatives are not transcribed".into(),
        ));
    }
    let (n, m, k) = (p.n(), p.m(), p.k());
    let (a, b, q, r) = (p.a.to_f64(), p.b.to_f64(), p.q.to_f64(), p.r.to_f64());
    let (m0, m1) = (p.m0.to_f64(), p.m1.to_f64());
    let x_ref = vec_to_f64(&p.x_ref);
    let u_ref = vec_to_f64(&p.u_ref);
    let h = p.horizon / steps as f64;
    let node = n + m;
    let primal = (steps + 1) * node;
    let xi = |i: usize| i * node;
    let ui = |i: usize| i * node + n;
    let dyn_row = |i: usize| primal + i * n;
    let end_row = primal + steps * n;
    let trace_row = end_row + k;
    let size = trace_row + p.control_traces.len();

    let mut trip: Vec<Triplet<usize, usize, f64>> = Vec::new();
    let mut rhs = vec![0.0; size];
    let sym = |trip: &mut Vec<Triplet<usize, usize, f64>>, row: usize, col: usize, v: f64| {
        if v != 0.0 {
            trip.push(Triplet::new(row, col, v));
            trip.push(Triplet::new(col, row, v));
        }
    };
    for i in 0..=steps {
        let w = if i == 0 || i == steps { 0.5 * h } else { h };
        for r_ in 0..n {
            for c in 0..n {
                if q[(r_, c)] != 0.0 {
                    trip.push(Triplet::new(xi(i) + r_, xi(i) + c, w * q[(r_, c)]));
                }
            }
            rhs[xi(i) + r_] = w * (&q * &x_ref)[r_];
        }
        for r_ in 0..m {
            for c in 0..m {
                if r[(r_, c)] != 0.0 {
                    trip.push(Triplet::new(ui(i) + r_, ui(i) + c, w * r[(r_, c)]));
                }
            }
            rhs[ui(i) + r_] = w * (&r * &u_ref)[r_];
        }
    }
    // x_{i+1} - x_i - h/2 (A x_i + B u_i + A x_{i+1} + B u_{i+1}) = 0
    for i in 0..steps {
        for r_ in 0..n {
            let row = dyn_row(i) + r_;
            for c in 0..n {
                let id = if r_ == c { 1.0 } else { 0.0 };
                sym(&mut trip, row, xi(i) + c, -id - 0.5 * h * a[(r_, c)]);
                sym(&mut trip, row, xi(i + 1) + c, id - 0.5 * h * a[(r_, c)]);
            }
            for c in 0..m {
                sym(&mut trip, row, ui(i) + c, -0.5 * h * b[(r_, c)]);
                sym(&mut trip, row, ui(i + 1) + c, -0.5 * h * b[(r_, c)]);
            }
        }
    }
    for r_ in 0..k {
        for c in 0..n {
            sym(&mut trip, end_row + r_, xi(0) + c, m0[(r_, c)]);
            sym(&mut trip, end_row + r_, xi(steps) + c, m1[(r_, c)]);
        }
        rhs[end_row + r_] = crate::polymat::to_f64(&p.gamma[r_]);
    }
    for (j, t) in p.control_traces.iter().enumerate() {
        let at = match t.endpoint {
            Endpoint::Initial => 0,
            Endpoint::Final => steps,
        };
        for (c, coeff) in t.coefficients.iter().enumerate() {
            sym(&mut trip, trace_row + j, ui(at) + c, crate::polymat::to_f64(coeff));
        }
        rhs[trace_row + j] = crate::polymat::to_f64(&t.value);
    }

    let kkt = SparseColMat::<usize, f64>::try_new_from_triplets(size, size, &trip)
        .map_err(|e| Error::OracleUnavailable(format!("KKT assembly failed: {e:?}")))?;
    let lu = kkt
        .sp_lu()
        .map_err(|e| Error::OracleUnavailable(format!("KKT factorization failed: {e:?}")))?;
    let rhs_mat = faer::Mat::<f64>::from_fn(size, 1, |i, _| rhs[i]);
    let sol = lu.solve(&rhs_mat);
    let s: Vec<f64> = (0..size).map(|i| sol[(i, 0)]).collect();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::OracleUnavailable("singular KKT system".into()));
    }
    let ks = &kkt * &sol;
    let kkt_residual = (0..size).map(|i| (ks[(i, 0)] - rhs[i]).abs()).fold(0.0, f64::max);
    let rhs_scale = rhs.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let sol_scale = s.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if kkt_residual > 1e-6 * rhs_scale.max(sol_scale) {
        return Err(Error::OracleUnavailable(format!(
            "KKT residual {kkt_residual:e}: system is numerically singular"
        )));
    }

    let x: Vec<DVector<f64>> = (0..=steps).map(|i| DVector::from_column_slice(&s[xi(i)..xi(i) + n])).collect();
    let u: Vec<DVector<f64>> = (0..=steps).map(|i| DVector::from_column_slice(&s[ui(i)..ui(i) + m])).collect();
    let running: Vec<f64> = x
        .iter()
        .zip(&u)
        .map(|(xv, uv)| {
            let dx = xv - &x_ref;
            let du = uv - &u_ref;
            0.5 * (dx.dot(&(&q * &dx)) + du.dot(&(&r * &du)))
        })
        .collect();
    let objective = running.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
    Ok(TranscriptionSolution {
        step: h,
        grid: (0..=steps).map(|i| i as f64 * h).collect(),
        x,
        u,
        kkt_residual,
        objective,
    })
}

/// Sup-norm distance between the states of two sampled trajectories on the same grid.
pub fn state_distance(oracle: &TranscriptionSolution, traj: &Trajectory) -> Result<f64> {
    if oracle.grid.len() != traj.grid.len() {
        return Err(Error::Dimension("trajectories sampled on different grids".into()));
    }
    Ok(oracle
        .x
        .iter()
        .zip(&traj.x)
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max))
}

/// Solve with the pipeline and the transcription on the same nodes and
/// return the state distance.
pub fn transcription_distance(pipe: &Pipeline, steps: usize) -> Result<f64> {
    let horizon = pipe.problem.horizon;
    let oracle = transcribe_solve(&pipe.problem, steps)?;
    let sol = pipe.solve(horizon)?;
    let traj = pipe.trajectory(&sol, &oracle.grid)?;
    state_distance(&oracle, &traj)
}

/// Eigenvalues of `[[A, -B R^{-1} B^T], [-Q, -A^T]]`.
pub fn hamiltonian_spectrum(p: &LQProblem) -> Result<Vec<C64>> {
    let r_inv = p
        .r
        .inverse()
        .map_err(|_| Error::Singular("control weight R".into()))?
        .to_f64();
    let (a, b, q) = (p.a.to_f64(), p.b.to_f64(), p.q.to_f64());
    let n = p.n();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&a);
    h.view_mut((0, n), (n, n)).copy_from(&(-(&b * r_inv * b.transpose())));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    Ok(eigenvalues(&h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleChoice {
    Transcription,
    Hamiltonian,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyTolerances {
    pub transcription: f64,
    pub spectral: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances {
            transcription: 1e-3,
            spectral: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CheckOutcome {
    Passed(f64),
    Failed(f64),
    Skipped(String),
}

impl CheckOutcome {
    fn judge(value: f64, tol: f64) -> Self {
        if value <= tol {
            CheckOutcome::Passed(value)
        } else {
            CheckOutcome::Failed(value)
        }
    }

    pub fn failed(&self) -> bool {
        matches!(self, CheckOutcome::Failed(_))
    }

    fn to_json(&self, tol: f64) -> Value {
        match self {
            CheckOutcome::Passed(v) => json!({"status": "pass", "distance": float_json(*v), "tolerance": tol}),
            CheckOutcome::Failed(v) => json!({"status": "fail", "distance": float_json(*v), "tolerance": tol}),
            CheckOutcome::Skipped(why) => json!({"status": "skipped", "reason": why}),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub steps: usize,
    pub tolerances: VerifyTolerances,
    pub transcription: Option<CheckOutcome>,
    pub hamiltonian: Option<CheckOutcome>,
    pub notes: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        ![&self.transcription, &self.hamiltonian]
            .iter()
            .any(|c| c.as_ref().is_some_and(CheckOutcome::failed))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "steps": self.steps,
            "passed": self.passed(),
            "transcription": self.transcription.as_ref().map(|c| c.to_json(self.tolerances.transcription)),
            "hamiltonian": self.hamiltonian.as_ref().map(|c| c.to_json(self.tolerances.spectral)),
            "notes": self.notes,
        })
    }
}

/// Run the selected oracles against the pipeline. Unavailable checks are
/// reported as skipped; disagreements as failures.
pub fn verify(pipe: &Pipeline, choice: OracleChoice, steps: usize, tol: VerifyTolerances) -> Result<VerifyReport> {
    let mut report = VerifyReport {
        steps,
        tolerances: tol,
        transcription: None,
        hamiltonian: None,
        notes: Vec::new(),
    };
    if matches!(choice, OracleChoice::Hamiltonian | OracleChoice::Both) {
        report.hamiltonian = Some(if !pipe.problem.control_weight_definite() {
            CheckOutcome::Skipped("control weight is not positive definite".into())
        } else {
            let ham = hamiltonian_spectrum(&pipe.problem)?;
            CheckOutcome::judge(multiset_distance(&ham, &pipe.certificate.root_multiset()), tol.spectral)
        });
    }
    if matches!(choice, OracleChoice::Transcription | OracleChoice::Both) {
        report.transcription = Some(match transcription_distance(pipe, steps) {
            Ok(d) => CheckOutcome::judge(d, tol.transcription),
            Err(Error::OracleUnavailable(why)) => CheckOutcome::Skipped(why),
            Err(e) => return Err(e),
        });
        if !pipe.problem.control_weight_definite() {
            report.notes.push(
                "control weight is singular: the discrete problem may approach a relaxed minimizer with endpoint jumps"
                    .into(),
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::load_problem;
    use crate::turnpike::AnalyzeOptions;

    fn double_integrator(q1: &str, q2: &str, r: &str, gamma: [&str; 4], horizon: f64) -> LQProblem {
        load_problem(&format!(
            r#"{{"n": 2, "m": 1, "k": 4, "A": [[0, 1], [0, 0]], "B": [[0], [1]],
                "Q": [[{q1}, 0], [0, {q2}]], "R": [[{r}]],
                "M0": [[1, 0], [0, 1], [0, 0], [0, 0]], "M1": [[0, 0], [0, 0], [1, 0], [0, 1]],
                "gamma": ["{}", "{}", "{}", "{}"], "x_ref": [0, 0], "u_ref": [0], "T": {horizon}}}"#,
            gamma[0], gamma[1], gamma[2], gamma[3]
        ))
        .unwrap()
    }

    /// Roots of `l^4 - (q2/r) l^2 + q1/r` via the quadratic in `l^2`.
    fn quartic_roots(q1: f64, q2: f64, r: f64) -> Vec<C64> {
        let (bq, cq) = (-q2 / r, q1 / r);
        let disc = C64::new(bq * bq - 4.0 * cq, 0.0).sqrt();
        let mut out = Vec::new();
        for s in [(-bq + disc) / 2.0, (-bq - disc) / 2.0] {
            let z = s.sqrt();
            out.push(z);
            out.push(-z);
        }
        out
    }

    #[test]
    fn hamiltonian_matches_quartic() {
        for (q1, q2, r) in [(1.0, 1.0, 1.0), (4.0, 1.0, 2.0), (1.0, 3.0, 1.0)] {
            let p = double_integrator(&q1.to_string(), &q2.to_string(), &r.to_string(), ["1", "0", "0", "0"], 5.0);
            let ham = hamiltonian_spectrum(&p).unwrap();
            assert!(multiset_distance(&ham, &quartic_roots(q1, q2, r)) < 1e-9);
        }
    }

    #[test]
    fn hamiltonian_without_state_cost() {
        let p = double_integrator("0", "0", "1", ["1", "0", "0", "0"], 5.0);
        let ham = hamiltonian_spectrum(&p).unwrap();
        assert!(ham.iter().all(|z| z.norm() < 1e-6));
        let p = double_integrator("1", "0", "0", ["1", "0", "0", "0"], 5.0);
        assert!(matches!(hamiltonian_spectrum(&p), Err(Error::Singular(_))));
    }

    #[test]
    fn short_horizon_agrees_closely() {
        let p = double_integrator("1", "1", "1", ["1", "0", "1", "0"], 0.1);
        let pipe = Pipeline::build(&p, &AnalyzeOptions::default()).unwrap();
        assert!(transcription_distance(&pipe, 100).unwrap() < 1e-6);
    }

    #[test]
    fn static_data_is_zero_solution() {
        let p = double_integrator("1", "1", "1", ["0", "0", "0", "0"], 3.0);
        let t = transcribe_solve(&p, 50).unwrap();
        assert!(t.x.iter().chain(&t.u).all(|v| v.amax() < 1e-13));
        assert!(t.objective.abs() < 1e-20);
    }

    #[test]
    fn endpoint_rows_hold() {
        let p = double_integrator("1", "1", "1", ["1", "0", "0", "0"], 4.0);
        let t = transcribe_solve(&p, 100).unwrap();
        assert!((t.x[0][0] - 1.0).abs() < 1e-12 && t.x[100].amax() < 1e-12);
        assert!(t.kkt_residual < 1e-10);
        assert!(matches!(transcribe_solve(&p, 5), Err(Error::Usage(_))));
    }
}
