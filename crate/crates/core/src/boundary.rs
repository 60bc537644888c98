//! Two-point boundary operator `C0 Z(0) + C1 Z(T) = eta`: prescribed endpoint
//! rows, control traces, natural transversality rows, and the reduction
//! deciding admissibility.
//!
//! Sign convention of the boundary form: `[P . dJ]_0^T`, i.e. the momentum
//! pairing enters with `-` at `t = 0` and `+` at `t = T`.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::euler_lagrange::ELOperator;
use crate::flatness::FlatParametrization;
use crate::numeric::{condition_number, full_svd, numerical_rank, thin_qr};
use crate::polymat::{rat, to_f64, PolyMatrix, RatPoly, Rational};
use crate::problem::{Endpoint, LQProblem};
use crate::qmat::{vec_to_f64, QMatrix};
use crate::realization::{Realization, SpectralSplit};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentumOperators {
    /// `p_j(D)` for `j = 0 .. K - 1`.
    pub momenta: Vec<PolyMatrix>,
    /// Constant part `l_{j+1}` of each momentum from the affine residual.
    pub constants: Vec<Vec<Rational>>,
}

fn signed_shift(w: &PolyMatrix, s: usize) -> PolyMatrix {
    let sign = if s % 2 == 0 { rat(1) } else { rat(-1) };
    w.scale(&RatPoly::monomial(sign, s))
}

/// `W_a(D) = sum_b G_ab D^b`.
fn w_operators(el: &ELOperator) -> Result<Vec<PolyMatrix>> {
    el.gram.iter().map(|row| PolyMatrix::from_coefficients(row)).collect()
}

pub fn build_momenta(el: &ELOperator) -> Result<MomentumOperators> {
    let w = w_operators(el)?;
    let m = el.m();
    let k = w.len().saturating_sub(1);
    let momenta = (0..k)
        .map(|j| {
            (j + 1..=k).fold(PolyMatrix::zeros(m, m), |acc, a| &acc + &signed_shift(&w[a], a - j - 1))
        })
        .collect();
    let constants = (0..k).map(|j| el.linear[j + 1].clone()).collect();
    Ok(MomentumOperators { momenta, constants })
}

/// Integration-by-parts bookkeeping: `sum_a (-D)^a W_a(D) = E(D)`.
pub fn momentum_identity_holds(el: &ELOperator) -> Result<bool> {
    let w = w_operators(el)?;
    let m = el.m();
    let total = w
        .iter()
        .enumerate()
        .fold(PolyMatrix::zeros(m, m), |acc, (a, wa)| &acc + &signed_shift(wa, a));
    Ok(total == el.e_op)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Prescribed,
    ControlTrace,
    Natural,
}

impl RowKind {
    pub fn label(self) -> &'static str {
        match self {
            RowKind::Prescribed => "prescribed",
            RowKind::ControlTrace => "control_trace",
            RowKind::Natural => "natural",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Admissibility {
    Admissible,
    OverdeterminedIncompatible,
    RankDeficient,
}

impl Admissibility {
    pub fn label(self) -> &'static str {
        match self {
            Admissibility::Admissible => "admissible",
            Admissibility::OverdeterminedIncompatible => "overdetermined_incompatible",
            Admissibility::RankDeficient => "rank_deficient",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryOptions {
    /// Singular values below `rank_tol * largest` count as zero.
    pub rank_tol: f64,
    /// Largest acceptable condition number of the reduced infinite-horizon map.
    pub cond_bound: f64,
    /// Compatibility relations with `|w . eta| > compat_tol * |eta_P|` are violated.
    pub compat_tol: f64,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        BoundaryOptions {
            rank_tol: 1e-10,
            cond_bound: 1e8,
            compat_tol: 1e-8,
        }
    }
}

/// Consistency requirement `w . eta_P = 0` exposed by a rank-deficient
/// constraint block.
#[derive(Clone, Debug, PartialEq)]
pub struct CompatibilityRelation {
    pub weights: Vec<f64>,
    pub absolute: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankInfo {
    pub assembled_rows: usize,
    pub prescribed_rank: usize,
    pub effective_rank: usize,
    /// Assembled rows minus the retained rank.
    pub defect: usize,
}

/// Square system obtained by reducing the assembled rows on a given pair of
/// endpoint maps `Z(0) = Phi0 theta`, `Z(T) = Phi1 theta`.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    /// Assembled map `C0 Phi0 + C1 Phi1` (q x N).
    pub full: DMatrix<f64>,
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub prescribed_rank: usize,
    pub effective_rank: usize,
    pub condition: f64,
    pub compatibility: Vec<CompatibilityRelation>,
    pub smallest_singular_value: f64,
    prescribed_rows: DMatrix<f64>,
    prescribed_rhs: DVector<f64>,
    natural_block: DMatrix<f64>,
    natural_block_rhs: DVector<f64>,
}

impl ReducedSystem {
    pub fn is_square_regular(&self) -> bool {
        self.matrix.nrows() == self.matrix.ncols() && self.effective_rank == self.matrix.ncols()
    }

    /// Residual of the retained conditions: every prescribed row plus the
    /// natural rows restricted to the solution space.
    pub fn residual(&self, theta: &DVector<f64>) -> f64 {
        let p = &self.prescribed_rows * theta - &self.prescribed_rhs;
        let q = &self.natural_block * theta - &self.natural_block_rhs;
        (p.norm_squared() + q.norm_squared()).sqrt()
    }

    pub fn retained_rhs_norm(&self) -> f64 {
        (self.prescribed_rhs.norm_squared() + self.natural_block_rhs.norm_squared()).sqrt()
    }

    pub fn compatible(&self, tol: f64) -> bool {
        let scale = self.prescribed_rhs.norm();
        self.compatibility.iter().all(|c| c.absolute <= tol * scale)
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryOperator {
    pub c0: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub eta: DVector<f64>,
    pub row_labels: Vec<RowKind>,
    pub rank_info: RankInfo,
    pub admissibility: Admissibility,
    pub condition_infinity: f64,
    /// Relations evaluated on the finite-horizon map of the problem.
    pub compatibility: Vec<CompatibilityRelation>,
    /// Constant particular solution `ybar` folded into `eta`.
    pub particular: Vec<f64>,
    pub options: BoundaryOptions,
    /// `J = jet_lift Z` lists `y_i^{(j)}`, `j < nu_i`.
    pub jet_lift: DMatrix<f64>,
    /// Orthonormal basis of admissible jet variations `(dJ(0), dJ(T))`.
    pub variation_basis: DMatrix<f64>,
    /// Smallest singular value of the reduced infinite-horizon map.
    pub sigma_min_infinity: f64,
}

/// `Z(0) = Phi0 theta`, `Z(T) = Phi1 theta` with `theta = (a, b)` in the
/// stable and unstable bases; `None` gives the infinite-horizon limit.
pub fn endpoint_maps(split: &SpectralSplit, horizon: Option<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qs = &split.stable_basis;
    let qu = &split.unstable_basis;
    let n = qs.nrows();
    let ns = qs.ncols();
    let nu = qu.ncols();
    let mut phi0 = DMatrix::zeros(n, ns + nu);
    let mut phi1 = DMatrix::zeros(n, ns + nu);
    phi0.view_mut((0, 0), (n, ns)).copy_from(qs);
    phi1.view_mut((0, ns), (n, nu)).copy_from(qu);
    if let Some(t) = horizon {
        phi0.view_mut((0, ns), (n, nu)).copy_from(&(qu * split.unstable_flow_back(t)));
        phi1.view_mut((0, 0), (n, ns)).copy_from(&(qs * split.stable_flow(t)));
    }
    (phi0, phi1)
}

impl BoundaryOperator {
    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn prescribed_count(&self) -> usize {
        self.row_labels.iter().filter(|k| **k != RowKind::Natural).count()
    }

    pub fn reduce(&self, phi0: &DMatrix<f64>, phi1: &DMatrix<f64>) -> ReducedSystem {
        let n_z = phi0.ncols();
        let full = &self.c0 * phi0 + &self.c1 * phi1;
        let pres: Vec<usize> = (0..self.rows()).filter(|&i| self.row_labels[i] != RowKind::Natural).collect();
        let nat: Vec<usize> = (0..self.rows()).filter(|&i| self.row_labels[i] == RowKind::Natural).collect();
        let b_p = full.select_rows(&pres);
        let eta_p = self.eta.select_rows(&pres);
        let b_n = full.select_rows(&nat);
        let eta_n = self.eta.select_rows(&nat);

        let (u, s, v) = full_svd(&b_p);
        let r_p = numerical_rank(&s, self.options.rank_tol);
        let u_r = u.columns(0, r_p).into_owned();
        let eta_norm = eta_p.norm();
        let compatibility = (r_p..pres.len())
            .map(|c| {
                let w = u.column(c);
                let absolute = w.dot(&eta_p).abs();
                CompatibilityRelation {
                    weights: w.iter().copied().collect(),
                    absolute,
                    relative: if eta_norm > 0.0 { absolute / eta_norm } else { 0.0 },
                }
            })
            .collect();
        let kernel = v.columns(r_p, n_z - r_p).into_owned();

        // natural rows restricted to variations tangent to the solution space
        let n_jets = self.jet_lift.nrows();
        let mut pair = DMatrix::zeros(2 * n_jets, n_z);
        pair.view_mut((0, 0), (n_jets, n_z)).copy_from(&(&self.jet_lift * phi0));
        pair.view_mut((n_jets, 0), (n_jets, n_z)).copy_from(&(&self.jet_lift * phi1));
        let alpha = self.variation_basis.transpose() * pair * &kernel;
        let natural_block = alpha.transpose() * &b_n;
        let natural_block_rhs = alpha.transpose() * &eta_n;

        let retained = u_r.transpose() * &b_p;
        let mut matrix = DMatrix::zeros(retained.nrows() + natural_block.nrows(), n_z);
        matrix.view_mut((0, 0), retained.shape()).copy_from(&retained);
        matrix
            .view_mut((retained.nrows(), 0), natural_block.shape())
            .copy_from(&natural_block);
        let mut rhs = DVector::zeros(matrix.nrows());
        rhs.rows_mut(0, r_p).copy_from(&(u_r.transpose() * &eta_p));
        rhs.rows_mut(r_p, natural_block_rhs.len()).copy_from(&natural_block_rhs);

        let (_, sm, _) = full_svd(&matrix);
        let effective_rank = numerical_rank(&sm, self.options.rank_tol);
        let condition = if matrix.is_empty() { 1.0 } else { condition_number(&matrix) };
        let smallest_singular_value = if n_z == 0 {
            f64::INFINITY
        } else if sm.len() < n_z {
            0.0
        } else {
            sm[n_z - 1]
        };
        ReducedSystem {
            full,
            matrix,
            rhs,
            prescribed_rank: r_p,
            effective_rank,
            condition,
            compatibility,
            smallest_singular_value,
            prescribed_rows: b_p,
            prescribed_rhs: eta_p,
            natural_block,
            natural_block_rhs,
        }
    }
}

/// Rows for control-trace conditions `c . u^{(order)}(endpoint) = value`,
/// returned as `(endpoint, row over Z, value)` in centered variables.
pub fn control_trace_rows(
    p: &LQProblem,
    fp: &FlatParametrization,
    r: &Realization,
    ybar: &[Rational],
) -> Result<Vec<(Endpoint, QMatrix, Rational)>> {
    let u0_ybar = fp.u_op.at_zero().mul_vec(ybar)?;
    p.control_traces
        .iter()
        .map(|t| {
            let shifted = fp.u_op.scale(&RatPoly::monomial(rat(1), t.order));
            let lift = r.lift(&shifted);
            let coeff = QMatrix::from_rows(vec![t.coefficients.clone()])?;
            let row = &coeff * &lift;
            let offset: Rational = if t.order == 0 {
                t.coefficients.iter().zip(&u0_ybar).map(|(c, u)| c * u).sum()
            } else {
                Rational::zero()
            };
            Ok((t.endpoint, row, &t.value - offset))
        })
        .collect()
}

/// Assemble all rows and decide admissibility at the problem horizon. The
/// realization must carry its spectral split.
pub fn assemble(
    p: &LQProblem,
    fp: &FlatParametrization,
    r: &Realization,
    mo: &MomentumOperators,
    el: &ELOperator,
    options: BoundaryOptions,
) -> Result<BoundaryOperator> {
    let split = r.split()?;
    let (n, k) = (p.n(), p.k());
    let n_z = r.dim();
    let ybar = el.particular()?;

    // prescribed endpoint constraints
    let xlift = r.lift(&fp.x_op);
    let x_ybar = fp.x_op.at_zero().mul_vec(&ybar)?;
    let m0_x = &p.m0 * &xlift;
    let m1_x = &p.m1 * &xlift;
    let shift = (&p.m0 + &p.m1).mul_vec(&x_ybar)?;
    let gamma: Vec<Rational> = p.gamma.iter().zip(&shift).map(|(g, s)| g - s).collect();

    let mut c0_rows: Vec<DVector<f64>> = Vec::new();
    let mut c1_rows: Vec<DVector<f64>> = Vec::new();
    let mut eta = Vec::new();
    let mut labels = Vec::new();
    let row_f64 = |m: &QMatrix, i: usize| DVector::from_iterator(m.cols(), m.row(i).iter().map(to_f64));
    for i in 0..k {
        c0_rows.push(row_f64(&m0_x, i));
        c1_rows.push(row_f64(&m1_x, i));
        eta.push(to_f64(&gamma[i]));
        labels.push(RowKind::Prescribed);
    }
    for (endpoint, row, value) in control_trace_rows(p, fp, r, &ybar)? {
        let v = row_f64(&row, 0);
        let zero = DVector::zeros(n_z);
        match endpoint {
            Endpoint::Initial => {
                c0_rows.push(v);
                c1_rows.push(zero);
            }
            Endpoint::Final => {
                c0_rows.push(zero);
                c1_rows.push(v);
            }
        }
        eta.push(to_f64(&value));
        labels.push(RowKind::ControlTrace);
    }

    // jets and momenta on the realization
    let jets = fp.jet_index();
    let jet_lift = QMatrix::from_fn(jets.len(), n_z, |row, c| {
        let (i, j) = jets[row];
        r.jet_map_exact(j)[(i, c)].clone()
    });
    let mom_lifts: Vec<QMatrix> = mo.momenta.iter().map(|pj| r.lift(pj)).collect();
    let p_lift = QMatrix::from_fn(jets.len(), n_z, |row, c| {
        let (i, j) = jets[row];
        mom_lifts[j][(i, c)].clone()
    });
    let p_const: Vec<Rational> = jets
        .iter()
        .map(|&(i, j)| {
            let at_ybar = mo.momenta[j].at_zero().mul_vec(&ybar).expect("square")[i].clone();
            at_ybar + &mo.constants[j][i]
        })
        .collect();

    // admissible variations of the endpoint jets
    let xjet = fp.state_jet_map();
    let jac = (&p.m0 * &xjet).hstack(&(&p.m1 * &xjet))?;
    let kernel = jac.nullspace().to_f64();
    let (variation_basis, _) = thin_qr(&kernel);
    let p_lift_f = p_lift.to_f64();
    let p_const_f = vec_to_f64(&p_const);
    for c in 0..variation_basis.ncols() {
        let v0 = variation_basis.column(c).rows(0, n).into_owned();
        let vt = variation_basis.column(c).rows(n, n).into_owned();
        c0_rows.push(-(p_lift_f.transpose() * &v0));
        c1_rows.push(p_lift_f.transpose() * &vt);
        eta.push(v0.dot(&p_const_f) - vt.dot(&p_const_f));
        labels.push(RowKind::Natural);
    }
    debug_assert_eq!(labels.iter().filter(|l| **l == RowKind::Natural).count(), 2 * n - k);

    let q = labels.len();
    let stack = |rows: &[DVector<f64>]| DMatrix::from_fn(q, n_z, |i, j| rows[i][j]);
    let mut bo = BoundaryOperator {
        c0: stack(&c0_rows),
        c1: stack(&c1_rows),
        eta: DVector::from_vec(eta),
        row_labels: labels,
        rank_info: RankInfo {
            assembled_rows: q,
            prescribed_rank: 0,
            effective_rank: 0,
            defect: 0,
        },
        admissibility: Admissibility::RankDeficient,
        condition_infinity: f64::INFINITY,
        compatibility: Vec::new(),
        particular: ybar.iter().map(to_f64).collect(),
        options,
        jet_lift: jet_lift.to_f64(),
        variation_basis,
        sigma_min_infinity: 0.0,
    };

    let (i0, i1) = endpoint_maps(split, None);
    let inf = bo.reduce(&i0, &i1);
    let (t0, t1) = endpoint_maps(split, Some(p.horizon));
    let fin = bo.reduce(&t0, &t1);
    bo.condition_infinity = inf.condition;
    bo.sigma_min_infinity = inf.smallest_singular_value;
    bo.rank_info.prescribed_rank = inf.prescribed_rank;
    bo.rank_info.effective_rank = inf.effective_rank;
    bo.rank_info.defect = q - inf.effective_rank;
    bo.admissibility = if !inf.is_square_regular() || inf.condition > options.cond_bound {
        Admissibility::RankDeficient
    } else if !fin.compatible(options.compat_tol) {
        Admissibility::OverdeterminedIncompatible
    } else {
        Admissibility::Admissible
    };
    bo.compatibility = fin.compatibility;
    Ok(bo)
}

/// Check that the operator supports a finite-horizon solve.
pub fn require_admissible(bo: &BoundaryOperator) -> Result<()> {
    match bo.admissibility {
        Admissibility::Admissible => Ok(()),
        other => Err(Error::NotAdmissible(other.label().into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler_lagrange::build_el;
    use crate::flatness::brunovsky;
    use crate::problem::{center, static_optimum, AffineResidual, ControlTrace};
    use crate::realization::{realize, spectral_split, DEFAULT_GAP_FLOOR};

    fn p(c: &[i64]) -> RatPoly {
        RatPoly::from_i64(c)
    }

    fn double_integrator(q1: i64, q2: i64, r: i64, m0: &[i64], m1: &[i64], gamma: &[i64]) -> LQProblem {
        let k = gamma.len();
        LQProblem {
            a: QMatrix::from_i64(2, 2, &[0, 1, 0, 0]),
            b: QMatrix::from_i64(2, 1, &[0, 1]),
            q: QMatrix::from_i64(2, 2, &[q1, 0, 0, q2]),
            r: QMatrix::from_i64(1, 1, &[r]),
            m0: QMatrix::from_i64(k, 2, m0),
            m1: QMatrix::from_i64(k, 2, m1),
            gamma: gamma.iter().map(|&g| rat(g)).collect(),
            x_ref: vec![rat(0), rat(0)],
            u_ref: vec![rat(0)],
            horizon: 20.0,
            control_traces: Vec::new(),
        }
    }

    const FULL_M0: [i64; 8] = [1, 0, 0, 1, 0, 0, 0, 0];
    const FULL_M1: [i64; 8] = [0, 0, 0, 0, 1, 0, 0, 1];

    fn pipeline(prob: &LQProblem) -> BoundaryOperator {
        let s = static_optimum(prob).unwrap();
        let (c, res) = center(prob, &s).unwrap();
        let fp = brunovsky(&c.a, &c.b).unwrap();
        let el = build_el(&fp, &c.q, &c.r, &res).unwrap();
        let r = spectral_split(&realize(&el).unwrap(), DEFAULT_GAP_FLOOR).unwrap();
        let mo = build_momenta(&el).unwrap();
        assemble(&c, &fp, &r, &mo, &el, BoundaryOptions::default()).unwrap()
    }

    #[test]
    fn double_integrator_momenta() {
        let prob = double_integrator(2, 3, 5, &FULL_M0, &FULL_M1, &[1, 0, 0, 0]);
        let fp = brunovsky(&prob.a, &prob.b).unwrap();
        let el = build_el(&fp, &prob.q, &prob.r, &AffineResidual::zero(2, 1)).unwrap();
        let mo = build_momenta(&el).unwrap();
        assert_eq!(mo.momenta.len(), 2);
        assert_eq!(mo.momenta[1][(0, 0)], p(&[0, 0, 5]));
        assert_eq!(mo.momenta[0][(0, 0)], p(&[0, 3, 0, -5]));
        assert!(momentum_identity_holds(&el).unwrap());
    }

    #[test]
    fn cheap_control_single_momentum() {
        let prob = double_integrator(4, 1, 0, &FULL_M0, &FULL_M1, &[1, 0, 0, 0]);
        let fp = brunovsky(&prob.a, &prob.b).unwrap();
        let el = build_el(&fp, &prob.q, &prob.r, &AffineResidual::zero(2, 1)).unwrap();
        let mo = build_momenta(&el).unwrap();
        assert_eq!(mo.momenta[0][(0, 0)], p(&[0, 1]));
        assert!(mo.momenta[1].is_zero());
    }

    #[test]
    fn regular_full_state_is_admissible() {
        let bo = pipeline(&double_integrator(1, 1, 1, &FULL_M0, &FULL_M1, &[1, 0, 0, 0]));
        assert_eq!(bo.rows(), 4);
        assert!(bo.row_labels.iter().all(|l| *l == RowKind::Prescribed));
        assert_eq!(bo.admissibility, Admissibility::Admissible);
        assert!(bo.condition_infinity.is_finite());
        assert_eq!(bo.rank_info.defect, 0);
    }

    #[test]
    fn regular_free_endpoint_uses_natural_rows() {
        // x(0) fixed, x(T) free: two natural rows
        let bo = pipeline(&double_integrator(1, 1, 1, &[1, 0, 0, 1], &[0, 0, 0, 0], &[1, 0]));
        assert_eq!(bo.rows(), 4);
        assert_eq!(bo.row_labels.iter().filter(|l| **l == RowKind::Natural).count(), 2);
        assert_eq!(bo.admissibility, Admissibility::Admissible);
    }

    #[test]
    fn cheap_control_full_state_is_incompatible() {
        let bo = pipeline(&double_integrator(4, 1, 0, &FULL_M0, &FULL_M1, &[1, 0, 0, 0]));
        assert_eq!(bo.admissibility, Admissibility::OverdeterminedIncompatible);
        assert_eq!(bo.rank_info.defect, 2);
        assert_eq!(bo.compatibility.len(), 2);
    }

    #[test]
    fn cheap_control_mixed_conditions_are_admissible() {
        // y(0) + y'(0) = 1, 3 y(T) - y'(T) = 0 with omega = 2
        let bo = pipeline(&double_integrator(4, 1, 0, &[1, 1, 0, 0], &[0, 0, 3, -1], &[1, 0]));
        assert_eq!(bo.admissibility, Admissibility::Admissible);
        assert_eq!(bo.rank_info.defect, 2);
    }

    #[test]
    fn control_trace_rows_on_double_integrator() {
        let mut prob = double_integrator(1, 1, 1, &FULL_M0, &FULL_M1, &[1, 0, 0, 0]);
        prob.control_traces.push(ControlTrace {
            endpoint: Endpoint::Initial,
            order: 0,
            coefficients: vec![rat(1)],
            value: rat(0),
        });
        let fp = brunovsky(&prob.a, &prob.b).unwrap();
        let el = build_el(&fp, &prob.q, &prob.r, &AffineResidual::zero(2, 1)).unwrap();
        let r = realize(&el).unwrap();
        let rows = control_trace_rows(&prob, &fp, &r, &[rat(0)]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].1, r.jet_map_exact(2));
        let bo = pipeline(&prob);
        assert_eq!(bo.rows(), 5);
        // a generic u(0) = 0 condition on top of four state rows is not compatible
        assert_eq!(bo.admissibility, Admissibility::OverdeterminedIncompatible);
        prob.control_traces.clear();
        assert!(control_trace_rows(&prob, &fp, &r, &[rat(0)]).unwrap().is_empty());
    }
}
