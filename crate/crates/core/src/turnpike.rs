//! Turnpike analysis: full pipeline, exponential envelope fit, boundary
//! layers, report and horizon sweeps.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::boundary::{assemble, build_momenta, endpoint_maps, Admissibility, BoundaryOperator, BoundaryOptions};
use crate::error::{Error, Result};
use crate::euler_lagrange::{
    build_el, certify_hyperbolic, classify, ELOperator, HyperbolicityCertificate, Regime, Verdict, Witness,
};
use crate::flatness::{brunovsky, FlatParametrization};
use crate::numeric::spectral_norm;
use crate::polymat::format_rational;
use crate::problem::{center, float_json, static_optimum, AffineResidual, LQProblem, StaticOptimum};
use crate::realization::{realize, spectral_split, Realization, DEFAULT_GAP_FLOOR};
use crate::solver::{eval_trajectory, solve_bvp, BVPSolution, GridSpec, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyzeOptions {
    pub gap_floor: f64,
    pub boundary: BoundaryOptions,
    pub grid: GridSpec,
    /// Layer ends where the deviation drops below this fraction of its endpoint value.
    pub layer_threshold: f64,
    /// Largest accepted RMS log residual of the envelope fit.
    pub fit_residual_max: f64,
    /// Samples at or below this fraction of the peak deviation are left out of the fit.
    pub fit_floor: f64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            gap_floor: DEFAULT_GAP_FLOOR,
            boundary: BoundaryOptions::default(),
            grid: GridSpec::default(),
            layer_threshold: 0.05,
            fit_residual_max: 1.0,
            fit_floor: 1e-14,
        }
    }
}

/// Every intermediate object of the analysis, built once per problem.
#[derive(Clone, Debug)]
pub struct Pipeline {
    pub problem: LQProblem,
    pub optimum: StaticOptimum,
    pub centered: LQProblem,
    pub affine: AffineResidual,
    pub flat: FlatParametrization,
    pub el: ELOperator,
    pub certificate: HyperbolicityCertificate,
    pub regime: Regime,
    /// Present when the certificate is hyperbolic.
    pub realization: Option<Realization>,
    pub boundary: Option<BoundaryOperator>,
    pub options: AnalyzeOptions,
}

impl Pipeline {
    pub fn build(p: &LQProblem, options: &AnalyzeOptions) -> Result<Pipeline> {
        Self::build_with(p, options, |el| el)
    }

    /// As [`Pipeline::build`], with a hook applied to the Euler-Lagrange operator.
    pub fn build_with(
        p: &LQProblem,
        options: &AnalyzeOptions,
        hook: impl FnOnce(ELOperator) -> ELOperator,
    ) -> Result<Pipeline> {
        p.validate()?;
        let optimum = static_optimum(p)?;
        let (centered, affine) = center(p, &optimum)?;
        let flat = brunovsky(&centered.a, &centered.b)?;
        let el = hook(build_el(&flat, &centered.q, &centered.r, &affine)?);
        let certificate = certify_hyperbolic(&el)?;
        let regime = classify(&certificate, el.order, p.n());
        let (realization, boundary) = if certificate.verdict == Verdict::Hyperbolic {
            let r = spectral_split(&realize(&el)?, options.gap_floor)?;
            let mo = build_momenta(&el)?;
            let bo = assemble(&centered, &flat, &r, &mo, &el, options.boundary)?;
            (Some(r), Some(bo))
        } else {
            (None, None)
        };
        Ok(Pipeline {
            problem: p.clone(),
            optimum,
            centered,
            affine,
            flat,
            el,
            certificate,
            regime,
            realization,
            boundary,
            options: *options,
        })
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.certificate.verdict == Verdict::Hyperbolic
    }

    fn parts(&self) -> Result<(&Realization, &BoundaryOperator)> {
        match (&self.realization, &self.boundary) {
            (Some(r), Some(b)) => Ok((r, b)),
            _ => Err(Error::NotAdmissible(format!(
                "characteristic equation is not hyperbolic ({})",
                self.certificate.verdict.label()
            ))),
        }
    }

    pub fn solve(&self, horizon: f64) -> Result<BVPSolution> {
        let (r, bo) = self.parts()?;
        solve_bvp(r, bo, horizon)
    }

    pub fn trajectory(&self, sol: &BVPSolution, grid: &[f64]) -> Result<Trajectory> {
        let (r, bo) = self.parts()?;
        eval_trajectory(sol, r, &self.flat, &self.optimum, &bo.particular, grid)
    }

    pub fn solve_on_grid(&self, horizon: f64) -> Result<(BVPSolution, Trajectory)> {
        let sol = self.solve(horizon)?;
        let traj = self.trajectory(&sol, &self.options.grid.points(horizon))?;
        Ok((sol, traj))
    }

    /// `|B_T - B_inf|` for the assembled boundary map.
    pub fn boundary_gap(&self, horizon: f64) -> Result<f64> {
        let (r, bo) = self.parts()?;
        let split = r.split()?;
        let (i0, i1) = endpoint_maps(split, None);
        let (t0, t1) = endpoint_maps(split, Some(horizon));
        let diff: DMatrix<f64> = &bo.c0 * (t0 - i0) + &bo.c1 * (t1 - i1);
        Ok(if diff.is_empty() { 0.0 } else { spectral_norm(&diff) })
    }
}

/// `(left, right)` widths where the deviation first drops below
/// `threshold` times its value at the corresponding endpoint. An end the
/// deviation never drops away from has no layer and width zero.
pub fn layer_widths(traj: &Trajectory, threshold: f64) -> (f64, f64) {
    let t = traj.horizon();
    let dev = &traj.deviation;
    if dev.is_empty() {
        return (0.0, 0.0);
    }
    let left_ref = threshold * dev[0];
    let left = traj
        .grid
        .iter()
        .zip(dev)
        .find(|(_, d)| **d < left_ref)
        .map_or(0.0, |(s, _)| *s);
    let right_ref = threshold * dev[dev.len() - 1];
    let right = traj
        .grid
        .iter()
        .zip(dev)
        .rev()
        .find(|(_, d)| **d < right_ref)
        .map_or(0.0, |(s, _)| t - *s);
    (left, right)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeFit {
    /// Smallest `C` with `dev(t) <= C (e^{-mu t} + e^{-mu (T-t)})` on the grid.
    pub c_fitted: f64,
    pub mu_fitted: f64,
    /// RMS of `ln(model) - ln(dev)` on the window.
    pub residual: f64,
    /// Separate left and right amplitudes of the least-squares model.
    pub c_left: f64,
    pub c_right: f64,
    pub layer_widths: (f64, f64),
    pub window: (f64, f64),
    pub points: usize,
}

struct Window {
    t: Vec<f64>,
    log_dev: Vec<f64>,
    horizon: f64,
}

impl Window {
    /// Gauss-Newton on `(ln C_L, ln C_R)` at fixed `mu`, returning the RMS
    /// log residual and both amplitudes.
    fn fit_at(&self, mu: f64) -> (f64, f64, f64) {
        let len = self.t.len() as f64;
        let el: Vec<f64> = self.t.iter().map(|t| -mu * t).collect();
        let er: Vec<f64> = self.t.iter().map(|t| -mu * (self.horizon - t)).collect();
        let lo = self.log_dev.iter().copied().fold(f64::INFINITY, f64::min) - 60.0;
        let mean = |e: &[f64]| self.log_dev.iter().zip(e).map(|(l, x)| l - x).sum::<f64>() / len;
        let eval = |al: f64, ar: f64| -> (f64, Vec<f64>, Vec<f64>) {
            let mut sq = 0.0;
            let mut res = Vec::with_capacity(self.t.len());
            let mut frac = Vec::with_capacity(self.t.len());
            for i in 0..self.t.len() {
                let (x, y) = (al + el[i], ar + er[i]);
                let top = x.max(y);
                let lm = top + ((x - top).exp() + (y - top).exp()).ln();
                let r = lm - self.log_dev[i];
                sq += r * r;
                res.push(r);
                frac.push((x - lm).exp());
            }
            ((sq / len).sqrt(), res, frac)
        };
        let starts = [(mean(&el), lo), (lo, mean(&er)), (mean(&el) - 0.7, mean(&er) - 0.7)];
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for (mut al, mut ar) in starts {
            let mut damping = 1e-6;
            let (mut cost, mut res, mut frac) = eval(al, ar);
            for _ in 0..60 {
                let (mut jll, mut jlr, mut jrr, mut gl, mut gr) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for i in 0..res.len() {
                    let (fl, fr) = (frac[i], 1.0 - frac[i]);
                    jll += fl * fl;
                    jlr += fl * fr;
                    jrr += fr * fr;
                    gl += fl * res[i];
                    gr += fr * res[i];
                }
                let (a11, a22) = (jll * (1.0 + damping) + 1e-12, jrr * (1.0 + damping) + 1e-12);
                let det = a11 * a22 - jlr * jlr;
                let dl = -(a22 * gl - jlr * gr) / det;
                let dr = -(a11 * gr - jlr * gl) / det;
                let (nl, nr) = (al + dl, (ar + dr).max(lo));
                let nl = nl.max(lo);
                let (ncost, nres, nfrac) = eval(nl, nr);
                if ncost < cost {
                    let done = cost - ncost < 1e-13 * cost.max(1e-300);
                    (al, ar, cost, res, frac) = (nl, nr, ncost, nres, nfrac);
                    damping = (damping * 0.3).max(1e-9);
                    if done {
                        break;
                    }
                } else {
                    damping *= 10.0;
                    if damping > 1e8 {
                        break;
                    }
                }
            }
            if cost < best.0 {
                best = (cost, al.exp(), ar.exp());
            }
        }
        best
    }
}

/// Fit `dev(t) ~ C_L e^{-mu t} + C_R e^{-mu (T-t)}` outside the boundary
/// layers by least squares on `ln dev`, then size the symmetric envelope
/// constant on the whole grid.
pub fn fit_envelope(traj: &Trajectory, mu0: f64, options: &AnalyzeOptions) -> Result<EnvelopeFit> {
    let horizon = traj.horizon();
    let scale = traj.deviation.iter().copied().fold(0.0, f64::max);
    if !(scale > 0.0) || !(horizon > 0.0) {
        return Err(Error::DegenerateWindow);
    }
    let widths = layer_widths(traj, options.layer_threshold);
    let (lo, hi) = (widths.0, horizon - widths.1);
    let mut window = Window {
        t: Vec::new(),
        log_dev: Vec::new(),
        horizon,
    };
    for (t, d) in traj.grid.iter().zip(&traj.deviation) {
        if *t >= lo && *t <= hi && *d > options.fit_floor * scale {
            window.t.push(*t);
            window.log_dev.push(d.ln());
        }
    }
    if window.t.len() < 3 {
        return Err(Error::DegenerateWindow);
    }

    // coarse logarithmic scan, then golden-section refinement
    let top = 20.0 * if mu0.is_finite() { mu0.max(1.0) } else { 1.0 };
    let bottom = 1e-4;
    let steps = 240;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| bottom * (top / bottom).powf(i as f64 / steps as f64))
        .collect();
    let costs: Vec<f64> = grid.iter().map(|&mu| window.fit_at(mu).0).collect();
    let k = (0..costs.len()).min_by(|&i, &j| costs[i].total_cmp(&costs[j])).unwrap_or(0);
    let (mut a, mut b) = (grid[k.saturating_sub(1)].ln(), grid[(k + 1).min(steps)].ln());
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let f = |x: f64| window.fit_at(x.exp()).0;
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let mu = (0.5 * (a + b)).exp();
    let (residual, c_left, c_right) = window.fit_at(mu);
    let c_fitted = traj
        .grid
        .iter()
        .zip(&traj.deviation)
        .map(|(t, d)| d / ((-mu * t).exp() + (-mu * (horizon - t)).exp()))
        .fold(0.0, f64::max);
    Ok(EnvelopeFit {
        c_fitted,
        mu_fitted: mu,
        residual,
        c_left,
        c_right,
        layer_widths: widths,
        window: (lo, hi),
        points: window.t.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TurnpikeVerdict {
    ExponentialTurnpike,
    NoTurnpikeNonhyperbolic,
    IncompatibleBoundary,
    /// Hyperbolic and admissible, but the envelope fit missed its residual bound.
    InconclusiveFit,
}

impl TurnpikeVerdict {
    pub fn label(self) -> &'static str {
        match self {
            TurnpikeVerdict::ExponentialTurnpike => "exponential_turnpike",
            TurnpikeVerdict::NoTurnpikeNonhyperbolic => "no_turnpike_nonhyperbolic",
            TurnpikeVerdict::IncompatibleBoundary => "incompatible_boundary",
            TurnpikeVerdict::InconclusiveFit => "inconclusive_fit",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            TurnpikeVerdict::ExponentialTurnpike => 0,
            TurnpikeVerdict::NoTurnpikeNonhyperbolic => 2,
            TurnpikeVerdict::IncompatibleBoundary => 3,
            TurnpikeVerdict::InconclusiveFit => 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TurnpikeReport {
    pub verdict: TurnpikeVerdict,
    pub regime: Regime,
    pub certificate: HyperbolicityCertificate,
    pub invariant_factors: Vec<String>,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub order: Option<usize>,
    pub horizon: f64,
    pub admissibility: Option<Admissibility>,
    pub defect: Option<usize>,
    pub assembled_rows: Option<usize>,
    pub condition_infinity: Option<f64>,
    pub compatibility: Vec<(Vec<f64>, f64)>,
    pub mu_predicted: f64,
    pub fit: Option<EnvelopeFit>,
    pub interior_max_deviation: Option<f64>,
    /// Norm of the centered boundary data, reported next to `C_fitted`.
    pub data_norm: Option<f64>,
    pub boundary_residual: Option<f64>,
    pub condition_horizon: Option<f64>,
    pub threshold_horizon: Option<f64>,
    pub static_optimum_unique: bool,
    pub notes: Vec<String>,
}

fn witness_json(w: &Witness) -> Value {
    match w {
        Witness::SingularFactor { factor } => json!({"kind": "singular_factor", "factor": factor}),
        Witness::ZeroRoot { factor, multiplicity } => {
            json!({"kind": "zero_root", "factor": factor, "multiplicity": multiplicity})
        }
        Witness::ImaginaryRoot { factor, lo, hi, frequency } => json!({
            "kind": "imaginary_root",
            "factor": factor,
            "interval": [format_rational(lo), format_rational(hi)],
            "frequency": float_json(*frequency),
        }),
    }
}

pub fn certificate_json(c: &HyperbolicityCertificate) -> Value {
    json!({
        "verdict": c.verdict.label(),
        "gap": float_json(c.gap),
        "roots": c.roots.iter().map(|r| json!({
            "re": float_json(r.value.re),
            "im": float_json(r.value.im),
            "multiplicity": r.multiplicity,
            "factor": r.factor,
        })).collect::<Vec<_>>(),
        "witnesses": c.witnesses.iter().map(witness_json).collect::<Vec<_>>(),
        "axis_counts": c.axis_counts,
    })
}

fn opt_float(x: Option<f64>) -> Value {
    x.map_or(Value::Null, float_json)
}

impl TurnpikeReport {
    pub fn to_json(&self) -> Value {
        let fit = self.fit.as_ref();
        json!({
            "verdict": self.verdict.label(),
            "regime": self.regime.label(),
            "hyperbolicity": certificate_json(&self.certificate),
            "invariant_factors": self.invariant_factors,
            "N": self.order,
            "n": self.n,
            "m": self.m,
            "k": self.k,
            "T": float_json(self.horizon),
            "admissibility": {
                "verdict": self.admissibility.map(Admissibility::label),
                "defect": self.defect,
                "assembled_rows": self.assembled_rows,
                "condition_infinity": opt_float(self.condition_infinity),
                "compatibility": self.compatibility.iter().map(|(w, a)| json!({
                    "weights": w.iter().map(|x| float_json(*x)).collect::<Vec<_>>(),
                    "violation": float_json(*a),
                })).collect::<Vec<_>>(),
            },
            "mu_predicted": float_json(self.mu_predicted),
            "mu_fitted": opt_float(fit.map(|f| f.mu_fitted)),
            "C_fitted": opt_float(fit.map(|f| f.c_fitted)),
            "fit_residual": opt_float(fit.map(|f| f.residual)),
            "fit_window": fit.map(|f| vec![float_json(f.window.0), float_json(f.window.1)]),
            "layer_widths": fit.map(|f| vec![float_json(f.layer_widths.0), float_json(f.layer_widths.1)]),
            "interior_max_deviation": opt_float(self.interior_max_deviation),
            "data_norm": opt_float(self.data_norm),
            "boundary_residual": opt_float(self.boundary_residual),
            "condition_T": opt_float(self.condition_horizon),
            "threshold_horizon": opt_float(self.threshold_horizon),
            "static_optimum_unique": self.static_optimum_unique,
            "notes": self.notes,
        })
    }

    pub fn serialize(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report is valid JSON");
        s.push('\n');
        s
    }
}

/// Run the pipeline at the problem horizon and classify the outcome.
pub fn analyze(p: &LQProblem, options: &AnalyzeOptions) -> Result<TurnpikeReport> {
    let pipe = Pipeline::build(p, options)?;
    analyze_pipeline(&pipe, p.horizon)
}

pub fn analyze_pipeline(pipe: &Pipeline, horizon: f64) -> Result<TurnpikeReport> {
    let p = &pipe.problem;
    let options = &pipe.options;
    let cert = &pipe.certificate;
    let mut report = TurnpikeReport {
        verdict: TurnpikeVerdict::NoTurnpikeNonhyperbolic,
        regime: pipe.regime,
        certificate: cert.clone(),
        invariant_factors: pipe.el.smith.factors.iter().map(|d| d.to_string()).collect(),
        n: p.n(),
        m: p.m(),
        k: p.k(),
        order: pipe.el.order,
        horizon,
        admissibility: None,
        defect: None,
        assembled_rows: None,
        condition_infinity: None,
        compatibility: Vec::new(),
        mu_predicted: cert.gap,
        fit: None,
        interior_max_deviation: None,
        data_norm: None,
        boundary_residual: None,
        condition_horizon: None,
        threshold_horizon: None,
        static_optimum_unique: pipe.optimum.unique,
        notes: Vec::new(),
    };
    if !pipe.optimum.unique {
        report
            .notes
            .push("static optimum is not unique; the minimum-norm point is used".into());
    }
    let Some(bo) = &pipe.boundary else {
        report.notes.push(match cert.verdict {
            Verdict::ZeroRoot => format!(
                "zero characteristic root of multiplicity {}: polynomial modes, at best a linear turnpike",
                cert.zero_root_multiplicity()
            ),
            Verdict::ImaginaryRoot => "purely imaginary characteristic roots: oscillatory modes do not decay".into(),
            _ => "a Smith invariant factor vanishes: the reduced equation is underdetermined".into(),
        });
        return Ok(report);
    };

    report.admissibility = Some(bo.admissibility);
    report.defect = Some(bo.rank_info.defect);
    report.assembled_rows = Some(bo.rank_info.assembled_rows);
    report.condition_infinity = Some(bo.condition_infinity);
    report.data_norm = Some(bo.eta.norm());
    if bo.admissibility != Admissibility::Admissible {
        report.verdict = TurnpikeVerdict::IncompatibleBoundary;
        report.compatibility = bo
            .compatibility
            .iter()
            .map(|c| (c.weights.clone(), c.absolute))
            .collect();
        report.notes.push(match bo.admissibility {
            Admissibility::RankDeficient => "infinite-horizon boundary map is singular or ill-conditioned".into(),
            _ => format!(
                "{} boundary rows for {} stationary modes: data violates {} compatibility relation(s)",
                bo.rank_info.assembled_rows,
                pipe.el.order.unwrap_or(0),
                bo.compatibility.iter().filter(|c| c.absolute > options.boundary.compat_tol * bo.eta.norm()).count()
            ),
        });
        return Ok(report);
    }

    let (sol, traj) = pipe.solve_on_grid(horizon)?;
    report.boundary_residual = Some(sol.residual);
    report.condition_horizon = Some(sol.condition);
    report.threshold_horizon = Some(sol.threshold_horizon);
    report.interior_max_deviation = Some(traj.max_deviation_on(0.25, 0.75));
    if sol.below_threshold_horizon {
        report.notes.push(format!(
            "horizon below the asymptotic threshold {:.6e}",
            sol.threshold_horizon
        ));
    }
    match fit_envelope(&traj, cert.gap, options) {
        Ok(fit) => {
            report.verdict = if fit.residual <= options.fit_residual_max {
                TurnpikeVerdict::ExponentialTurnpike
            } else {
                TurnpikeVerdict::InconclusiveFit
            };
            report.fit = Some(fit);
        }
        Err(Error::DegenerateWindow) => {
            report.verdict = TurnpikeVerdict::ExponentialTurnpike;
            report
                .notes
                .push("trajectory stays at the static optimum; no envelope to fit".into());
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub horizon: f64,
    pub interior_max_deviation: f64,
    pub mu_fitted: Option<f64>,
    pub condition: f64,
    pub boundary_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub mu_predicted: f64,
    /// Least-squares slope of `ln interior_max_deviation` against `T`.
    pub slope: f64,
    /// Same slope against `T/4`, the distance from the interior window to the
    /// nearest endpoint; comparable with `-mu_predicted`.
    pub window_slope: f64,
    /// Slope of `ln |B_T - B_inf|` against `T`.
    pub boundary_slope: f64,
}

pub fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn sweep(pipe: &Pipeline, horizons: &[f64]) -> Result<SweepReport> {
    if horizons.len() < 2 {
        return Err(Error::Usage("a sweep needs at least two horizons".into()));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) || horizons[0] <= 0.0 {
        return Err(Error::Usage("sweep horizons must be positive and increasing".into()));
    }
    let rows: Vec<SweepRow> = horizons
        .par_iter()
        .map(|&t| -> Result<SweepRow> {
            let (sol, traj) = pipe.solve_on_grid(t)?;
            let mu_fitted = match fit_envelope(&traj, pipe.certificate.gap, &pipe.options) {
                Ok(f) => Some(f.mu_fitted),
                Err(Error::DegenerateWindow) => None,
                Err(e) => return Err(e),
            };
            Ok(SweepRow {
                horizon: t,
                interior_max_deviation: traj.max_deviation_on(0.25, 0.75),
                mu_fitted,
                condition: sol.condition,
                boundary_gap: pipe.boundary_gap(t)?,
            })
        })
        .collect::<Result<_>>()?;
    let ts: Vec<f64> = rows.iter().map(|r| r.horizon).collect();
    let quarter: Vec<f64> = ts.iter().map(|t| t / 4.0).collect();
    let dev: Vec<f64> = rows.iter().map(|r| r.interior_max_deviation.ln()).collect();
    let gaps: Vec<f64> = rows.iter().map(|r| r.boundary_gap.ln()).collect();
    Ok(SweepReport {
        slope: linear_slope(&ts, &dev),
        window_slope: linear_slope(&quarter, &dev),
        boundary_slope: linear_slope(&ts, &gaps),
        mu_predicted: pipe.certificate.gap,
        rows,
    })
}

impl SweepReport {
    pub fn to_json(&self) -> Value {
        json!({
            "mu_predicted": float_json(self.mu_predicted),
            "slope": float_json(self.slope),
            "window_slope": float_json(self.window_slope),
            "boundary_slope": float_json(self.boundary_slope),
            "rows": self.rows.iter().map(|r| json!({
                "T": float_json(r.horizon),
                "interior_max_deviation": float_json(r.interior_max_deviation),
                "mu_fitted": opt_float(r.mu_fitted),
                "condition_T": float_json(r.condition),
                "boundary_gap": float_json(r.boundary_gap),
            })).collect::<Vec<_>>(),
        })
    }

    /// Delimited table, one row per horizon.
    pub fn to_table(&self) -> String {
        let mut out = String::from("T,interior_max_deviation,mu_fitted,condition_T,boundary_gap\n");
        for r in &self.rows {
            let mu = r.mu_fitted.map_or_else(|| "nan".to_string(), |m| format!("{m:.16e}"));
            out.push_str(&format!(
                "{:.16e},{:.16e},{},{:.16e},{:.16e}\n",
                r.horizon, r.interior_max_deviation, mu, r.condition, r.boundary_gap
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::load_problem;

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

    #[test]
    fn regular_case_is_exponential_turnpike() {
        let p = double_integrator("1", "1", "1", ["1", "0", "0", "0"], 30.0);
        let rep = analyze(&p, &AnalyzeOptions::default()).unwrap();
        assert_eq!(rep.verdict, TurnpikeVerdict::ExponentialTurnpike);
        let fit = rep.fit.unwrap();
        let mu0 = 3f64.sqrt() / 2.0;
        assert!((fit.mu_fitted / mu0 - 1.0).abs() < 0.05, "mu_fitted {}", fit.mu_fitted);
        assert!((rep.mu_predicted - mu0).abs() < 1e-12);
    }

    #[test]
    fn envelope_bounds_the_deviation() {
        let p = double_integrator("1", "3", "1", ["1", "-1", "2", "0"], 20.0);
        let pipe = Pipeline::build(&p, &AnalyzeOptions::default()).unwrap();
        let (_, traj) = pipe.solve_on_grid(20.0).unwrap();
        let fit = fit_envelope(&traj, pipe.certificate.gap, &pipe.options).unwrap();
        for (t, d) in traj.grid.iter().zip(&traj.deviation) {
            let env = fit.c_fitted * ((-fit.mu_fitted * t).exp() + (-fit.mu_fitted * (20.0 - t)).exp());
            assert!(*d <= 1.05 * env);
        }
        assert!(fit.mu_fitted >= 0.9 * pipe.certificate.gap);
    }

    #[test]
    fn nonhyperbolic_regimes_are_reported() {
        let p = double_integrator("0", "1", "0", ["1", "0", "0", "0"], 10.0);
        let rep = analyze(&p, &AnalyzeOptions::default()).unwrap();
        assert_eq!(rep.verdict, TurnpikeVerdict::NoTurnpikeNonhyperbolic);
        assert_eq!(rep.regime, Regime::Affine);
        let p = double_integrator("0", "0", "1", ["1", "0", "0", "0"], 10.0);
        let rep = analyze(&p, &AnalyzeOptions::default()).unwrap();
        assert_eq!(rep.regime, Regime::Polynomial);
        assert_eq!(rep.certificate.zero_root_multiplicity(), 4);
    }

    #[test]
    fn cheap_full_state_is_incompatible() {
        let p = double_integrator("4", "1", "0", ["1", "0", "0", "0"], 10.0);
        let rep = analyze(&p, &AnalyzeOptions::default()).unwrap();
        assert_eq!(rep.verdict, TurnpikeVerdict::IncompatibleBoundary);
        assert_eq!(rep.defect, Some(2));
        assert_eq!(rep.compatibility.len(), 2);
    }

    #[test]
    fn zero_trajectory_is_degenerate() {
        let p = double_integrator("1", "1", "1", ["0", "0", "0", "0"], 10.0);
        let pipe = Pipeline::build(&p, &AnalyzeOptions::default()).unwrap();
        let (_, traj) = pipe.solve_on_grid(10.0).unwrap();
        assert!(matches!(fit_envelope(&traj, pipe.certificate.gap, &pipe.options), Err(Error::DegenerateWindow)));
    }

    #[test]
    fn layer_widths_of_pure_decay() {
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let dev: Vec<f64> = grid.iter().map(|t| (-2.0 * t).exp()).collect();
        let n = grid.len();
        let traj = Trajectory {
            grid,
            x: vec![nalgebra::DVector::zeros(1); n],
            u: vec![nalgebra::DVector::zeros(1); n],
            y_jets: vec![DMatrix::zeros(1, 1); n],
            deviation: dev,
            x_bar: nalgebra::DVector::zeros(1),
            u_bar: nalgebra::DVector::zeros(1),
        };
        let (l, _) = layer_widths(&traj, 0.05);
        assert!((l - (20f64.ln() / 2.0)).abs() < 0.011);
        let fit = fit_envelope(&traj, 2.0, &AnalyzeOptions::default()).unwrap();
        assert!((fit.mu_fitted - 2.0).abs() < 1e-6);
        assert!(fit.residual < 1e-8);
    }

    #[test]
    fn report_is_deterministic_json() {
        let p = double_integrator("1", "1", "1", ["1", "0", "0", "0"], 10.0);
        let a = analyze(&p, &AnalyzeOptions::default()).unwrap().serialize();
        let b = analyze(&p, &AnalyzeOptions::default()).unwrap().serialize();
        assert_eq!(a, b);
        let v: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["verdict"], "exponential_turnpike");
        assert_eq!(v["N"], 4);
    }
}
