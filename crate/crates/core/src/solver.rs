//! Finite-horizon boundary value solve and trajectory evaluation.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::boundary::{endpoint_maps, require_admissible, BoundaryOperator, ReducedSystem};
use crate::error::{Error, Result};
use crate::flatness::FlatParametrization;
use crate::problem::StaticOptimum;
use crate::qmat::vec_to_f64;
use crate::realization::Realization;

/// Relative residual accepted after the linear solve.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct BVPSolution {
    /// Stable coordinates, anchored at `t = 0`.
    pub a: DVector<f64>,
    /// Unstable coordinates, anchored at `t = T`.
    pub b: DVector<f64>,
    pub horizon: f64,
    pub reduced: ReducedSystem,
    pub condition: f64,
    pub residual: f64,
    pub eta_norm: f64,
    /// Set when `e^{-mu T}` is not small against the smallest singular value
    /// of the infinite-horizon system, so the solve is not in the asymptotic regime.
    pub below_threshold_horizon: bool,
    /// Horizon beyond which the warning above no longer applies.
    pub threshold_horizon: f64,
}

impl BVPSolution {
    pub fn theta(&self) -> DVector<f64> {
        let mut t = DVector::zeros(self.a.len() + self.b.len());
        t.rows_mut(0, self.a.len()).copy_from(&self.a);
        t.rows_mut(self.a.len(), self.b.len()).copy_from(&self.b);
        t
    }

    /// Realization state `Z(t)`.
    pub fn state(&self, r: &Realization, t: f64) -> Result<DVector<f64>> {
        let split = r.split()?;
        let zs = &split.stable_basis * (split.stable_flow(t) * &self.a);
        let zu = &split.unstable_basis * (split.unstable_flow_back(self.horizon - t) * &self.b);
        Ok(zs + zu)
    }
}

pub fn solve_bvp(r: &Realization, bo: &BoundaryOperator, horizon: f64) -> Result<BVPSolution> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Horizon(horizon));
    }
    require_admissible(bo)?;
    let split = r.split()?;
    let (phi0, phi1) = endpoint_maps(split, Some(horizon));
    let reduced = bo.reduce(&phi0, &phi1);
    if !reduced.is_square_regular() {
        return Err(Error::NotAdmissible(format!(
            "reduced system at T = {horizon} has rank {} of {}",
            reduced.effective_rank,
            reduced.matrix.ncols()
        )));
    }
    if !reduced.compatible(bo.options.compat_tol) {
        return Err(Error::NotAdmissible(format!(
            "boundary data incompatible at T = {horizon}"
        )));
    }
    if reduced.condition > bo.options.cond_bound {
        return Err(Error::IllConditioned(reduced.condition));
    }
    let n_z = r.dim();
    let theta = if n_z == 0 {
        DVector::zeros(0)
    } else {
        reduced
            .matrix
            .clone()
            .lu()
            .solve(&reduced.rhs)
            .ok_or_else(|| Error::Singular("reduced boundary matrix".into()))?
    };
    let residual = reduced.residual(&theta);
    let eta_norm = reduced.retained_rhs_norm();
    if residual > RESIDUAL_TOL * eta_norm.max(1.0) {
        return Err(Error::Invariant(format!(
            "boundary residual {residual:e} exceeds tolerance"
        )));
    }
    let threshold_horizon = if split.gap.is_finite() && bo.sigma_min_infinity > 0.0 {
        (-(0.1 * bo.sigma_min_infinity).ln() / split.gap).max(0.0)
    } else {
        f64::INFINITY
    };
    let ns = split.n_stable();
    Ok(BVPSolution {
        a: theta.rows(0, ns).into_owned(),
        b: theta.rows(ns, n_z - ns).into_owned(),
        horizon,
        condition: reduced.condition,
        reduced,
        residual,
        eta_norm,
        below_threshold_horizon: horizon < threshold_horizon,
        threshold_horizon,
    })
}

/// Output grid: uniform points plus logarithmic clusters near both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub uniform: usize,
    pub per_decade: usize,
    pub min_fraction: f64,
    pub max_fraction: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            uniform: 1000,
            per_decade: 25,
            min_fraction: 1e-3,
            max_fraction: 1e-1,
        }
    }
}

impl GridSpec {
    pub fn points(&self, horizon: f64) -> Vec<f64> {
        let mut pts: Vec<f64> = (0..self.uniform.max(2))
            .map(|i| horizon * i as f64 / (self.uniform.max(2) - 1) as f64)
            .collect();
        if self.per_decade > 0 && self.min_fraction > 0.0 && self.max_fraction > self.min_fraction {
            let decades = (self.max_fraction / self.min_fraction).log10();
            let count = (decades * self.per_decade as f64).round() as usize;
            for i in 0..=count {
                let frac = self.min_fraction * 10f64.powf(i as f64 / self.per_decade as f64);
                pts.push(horizon * frac);
                pts.push(horizon * (1.0 - frac));
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * horizon);
        pts
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    /// Column `c` holds `y^{(c)}(t)` for `c` up to the flat order.
    pub y_jets: Vec<DMatrix<f64>>,
    /// `|x - xbar| + |u - ubar|`.
    pub deviation: Vec<f64>,
    pub x_bar: DVector<f64>,
    pub u_bar: DVector<f64>,
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        self.grid.last().copied().unwrap_or(0.0)
    }

    /// Largest deviation over `[lo T, hi T]`.
    pub fn max_deviation_on(&self, lo: f64, hi: f64) -> f64 {
        let t = self.horizon();
        self.grid
            .iter()
            .zip(&self.deviation)
            .filter(|(s, _)| **s >= lo * t && **s <= hi * t)
            .map(|(_, d)| *d)
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let n = self.x_bar.len();
        let m = self.u_bar.len();
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",x_{i}");
        }
        for i in 1..=m {
            let _ = write!(out, ",u_{i}");
        }
        out.push_str(",deviation\n");
        for (k, t) in self.grid.iter().enumerate() {
            let _ = write!(out, "{t:.16e}");
            for v in self.x[k].iter().chain(self.u[k].iter()) {
                let _ = write!(out, ",{v:.16e}");
            }
            let _ = writeln!(out, ",{:.16e}", self.deviation[k]);
        }
        out
    }

    /// Max over interior grid points of `|x' - A x - B u|`, with `x'` from
    /// second-order differences on the (possibly nonuniform) grid.
    pub fn dynamics_residual(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let mut worst = 0.0f64;
        for k in 1..self.grid.len().saturating_sub(1) {
            let h1 = self.grid[k] - self.grid[k - 1];
            let h2 = self.grid[k + 1] - self.grid[k];
            let dx = &self.x[k - 1] * (-h2 / (h1 * (h1 + h2)))
                + &self.x[k] * ((h2 - h1) / (h1 * h2))
                + &self.x[k + 1] * (h1 / (h2 * (h1 + h2)));
            let res = dx - a * &self.x[k] - b * &self.u[k];
            worst = worst.max(res.amax());
        }
        worst
    }
}

/// `x = X(D) y + xbar`, `u = U(D) y + ubar` with `y = L Z + ybar`.
pub fn eval_trajectory(
    sol: &BVPSolution,
    r: &Realization,
    fp: &FlatParametrization,
    s: &StaticOptimum,
    ybar: &[f64],
    grid: &[f64],
) -> Result<Trajectory> {
    let xlift = r.lift(&fp.x_op).to_f64();
    let ulift = r.lift(&fp.u_op).to_f64();
    let ybar = DVector::from_column_slice(ybar);
    let x_bar = vec_to_f64(&s.x_bar);
    let u_bar = vec_to_f64(&s.u_bar);
    let x_off = fp.x_op.at_zero().to_f64() * &ybar;
    let u_off = fp.u_op.at_zero().to_f64() * &ybar;
    let order = fp.order();
    let jet_maps: Vec<DMatrix<f64>> = (0..=order).map(|c| r.jet_map_exact(c).to_f64()).collect();

    let mut out = Trajectory {
        grid: grid.to_vec(),
        x: Vec::with_capacity(grid.len()),
        u: Vec::with_capacity(grid.len()),
        y_jets: Vec::with_capacity(grid.len()),
        deviation: Vec::with_capacity(grid.len()),
        x_bar: x_bar.clone(),
        u_bar: u_bar.clone(),
    };
    for &t in grid {
        let z = sol.state(r, t)?;
        let dx = &xlift * &z + &x_off;
        let du = &ulift * &z + &u_off;
        let mut jets = DMatrix::zeros(fp.m(), order + 1);
        for (c, jm) in jet_maps.iter().enumerate() {
            let mut col = jm * &z;
            if c == 0 {
                col += &ybar;
            }
            jets.set_column(c, &col);
        }
        out.deviation.push(dx.norm() + du.norm());
        out.x.push(dx + &x_bar);
        out.u.push(du + &u_bar);
        out.y_jets.push(jets);
    }
    Ok(out)
}

/// Convenience for the objective in original coordinates, by the trapezoid rule.
pub fn running_cost(traj: &Trajectory, q: &DMatrix<f64>, r: &DMatrix<f64>, x_ref: &DVector<f64>, u_ref: &DVector<f64>) -> f64 {
    let f: Vec<f64> = traj
        .x
        .iter()
        .zip(&traj.u)
        .map(|(x, u)| {
            let dx = x - x_ref;
            let du = u - u_ref;
            0.5 * (dx.dot(&(q * &dx)) + du.dot(&(r * &du)))
        })
        .collect();
    traj.grid
        .windows(2)
        .zip(f.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}
