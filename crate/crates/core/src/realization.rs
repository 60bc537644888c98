//! First-order realization `Z' = A Z`, `y = L Z` of `E(D) y = 0` built from
//! the Smith data, and its stable/unstable spectral splitting.

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::euler_lagrange::ELOperator;
use crate::numeric::{companion, expm, real_poly_from_roots, roots_with_multiplicity, spectral_norm, thin_qr, C64};
use crate::polymat::{rat, PolyMatrix, RatPoly};
use crate::qmat::QMatrix;

pub const DEFAULT_GAP_FLOOR: f64 = 1e-7;

/// Companion block of one nonconstant invariant factor.
#[derive(Clone, Debug, PartialEq)]
pub struct CompanionBlock {
    pub factor: usize,
    pub offset: usize,
    pub dim: usize,
    pub poly: RatPoly,
}

#[derive(Clone, Debug)]
pub struct SpectralSplit {
    /// Orthonormal basis of `E^s` (N x n_s).
    pub stable_basis: DMatrix<f64>,
    pub unstable_basis: DMatrix<f64>,
    /// `A` restricted to `E^s` in the stable basis: `A Q_s = Q_s A_s`.
    pub stable_generator: DMatrix<f64>,
    pub unstable_generator: DMatrix<f64>,
    pub proj_stable: DMatrix<f64>,
    pub proj_unstable: DMatrix<f64>,
    /// Coordinates of a vector in the stable basis along the splitting.
    pub stable_coords: DMatrix<f64>,
    pub unstable_coords: DMatrix<f64>,
    pub gap: f64,
    pub epsilon: f64,
    /// Semigroup bound `|e^{tA} P_s| <= c e^{-mu t}` with `mu = gap - epsilon`.
    pub constant: f64,
    pub mu: f64,
    pub eigenvalues: Vec<C64>,
}

impl SpectralSplit {
    pub fn n_stable(&self) -> usize {
        self.stable_basis.ncols()
    }

    pub fn n_unstable(&self) -> usize {
        self.unstable_basis.ncols()
    }

    /// `e^{t A_s}` for `t >= 0`.
    pub fn stable_flow(&self, t: f64) -> DMatrix<f64> {
        expm(&(&self.stable_generator * t))
    }

    /// `e^{-t A_u}` for `t >= 0`.
    pub fn unstable_flow_back(&self, t: f64) -> DMatrix<f64> {
        expm(&(&self.unstable_generator * (-t)))
    }

    /// `|e^{tA} P_s|` and `|e^{-tA} P_u|` via the restricted generators.
    pub fn decay_norms(&self, t: f64) -> (f64, f64) {
        let s = spectral_norm(&(&self.stable_basis * self.stable_flow(t) * &self.stable_coords));
        let u = spectral_norm(&(&self.unstable_basis * self.unstable_flow_back(t) * &self.unstable_coords));
        (s, u)
    }
}

#[derive(Clone, Debug)]
pub struct Realization {
    pub amat: DMatrix<f64>,
    pub lmat: DMatrix<f64>,
    /// `jet_maps[c] = L A^c`.
    pub jet_maps: Vec<DMatrix<f64>>,
    pub blocks: Vec<CompanionBlock>,
    pub split: Option<SpectralSplit>,
    amat_exact: QMatrix,
    jets_exact: Vec<QMatrix>,
}

impl Realization {
    pub fn dim(&self) -> usize {
        self.amat.nrows()
    }

    pub fn m(&self) -> usize {
        self.lmat.nrows()
    }

    pub fn amat_exact(&self) -> &QMatrix {
        &self.amat_exact
    }

    /// Exact `L A^c`, extended past the precomputed range on demand.
    pub fn jet_map_exact(&self, c: usize) -> QMatrix {
        if let Some(j) = self.jets_exact.get(c) {
            return j.clone();
        }
        let last = self.jets_exact.len() - 1;
        (last..c).fold(self.jets_exact[last].clone(), |acc, _| &acc * &self.amat_exact)
    }

    /// Lift of a polynomial operator acting on `y`: `sum_c P_c L A^c`.
    pub fn lift(&self, op: &PolyMatrix) -> QMatrix {
        let mut out = QMatrix::zeros(op.rows(), self.dim());
        if self.dim() == 0 {
            return out;
        }
        for (c, coeff) in op.coefficients().iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            out = &out + &(coeff * &self.jet_map_exact(c));
        }
        out
    }

    pub fn split(&self) -> Result<&SpectralSplit> {
        self.split
            .as_ref()
            .ok_or_else(|| Error::Invariant("spectral split not computed".into()))
    }
}

/// Exact block-companion realization over the nonconstant invariant factors.
pub fn realize(el: &ELOperator) -> Result<Realization> {
    if el.smith.has_zero_factor() {
        return Err(Error::SingularFactor);
    }
    let m = el.m();
    let v = &el.smith.right;
    let mut blocks = Vec::new();
    let mut offset = 0;
    for (j, d) in el.smith.factors.iter().enumerate() {
        if d.is_constant() {
            continue;
        }
        let dim = d.degree_or_zero();
        blocks.push(CompanionBlock {
            factor: j,
            offset,
            dim,
            poly: d.monic(),
        });
        offset += dim;
    }
    let n_total = offset;
    let mut amat = QMatrix::zeros(n_total, n_total);
    let mut lmat = QMatrix::zeros(m, n_total);
    for blk in &blocks {
        let mut cj = QMatrix::zeros(blk.dim, blk.dim);
        for i in 0..blk.dim - 1 {
            cj[(i, i + 1)] = rat(1);
        }
        for (c, coeff) in blk.poly.coeffs()[..blk.dim].iter().enumerate() {
            cj[(blk.dim - 1, c)] = -coeff;
        }
        for r in 0..blk.dim {
            for c in 0..blk.dim {
                amat[(blk.offset + r, blk.offset + c)] = cj[(r, c)].clone();
            }
        }
        // y = sum_k V_k[:, j] z_j^{(k)} with z_j^{(k)} = e_1^T C_j^k Z_j
        let mut row = QMatrix::zeros(1, blk.dim);
        row[(0, 0)] = rat(1);
        let deg = (0..m).filter_map(|i| v[(i, blk.factor)].degree()).max().unwrap_or(0);
        for k in 0..=deg {
            for i in 0..m {
                let coeff = v[(i, blk.factor)].coeff(k);
                if coeff.is_zero() {
                    continue;
                }
                for c in 0..blk.dim {
                    let t = &coeff * &row[(0, c)];
                    lmat[(i, blk.offset + c)] += t;
                }
            }
            row = &row * &cj;
        }
    }
    let depth = 2 * el.gram.len().max(1) + 2;
    let mut jets_exact = vec![lmat.clone()];
    for c in 1..=depth {
        let next = &jets_exact[c - 1] * &amat;
        jets_exact.push(next);
    }
    Ok(Realization {
        amat: amat.to_f64(),
        lmat: lmat.to_f64(),
        jet_maps: jets_exact.iter().map(QMatrix::to_f64).collect(),
        blocks,
        split: None,
        amat_exact: amat,
        jets_exact,
    })
}

/// Coordinates of the invariant subspace of a companion block attached to
/// the monic real factor with the given roots: rows `e_1^T C^l`.
fn block_basis(roots: &[C64], dim: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = roots.len();
    if k == 0 {
        return (DMatrix::zeros(dim, 0), DMatrix::zeros(0, 0));
    }
    let coeffs = real_poly_from_roots(roots);
    let c = companion(&coeffs[..k]);
    let mut basis = DMatrix::zeros(dim, k);
    let mut row = DMatrix::zeros(1, k);
    row[(0, 0)] = 1.0;
    for l in 0..dim {
        basis.set_row(l, &row.row(0));
        row = &row * &c;
    }
    (basis, c)
}

fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(n, n);
    let mut o = 0;
    for b in blocks {
        out.view_mut((o, o), (b.nrows(), b.ncols())).copy_from(b);
        o += b.nrows();
    }
    out
}

pub fn spectral_split(r: &Realization, gap_floor: f64) -> Result<Realization> {
    let n = r.dim();
    let mut s_cols = Vec::new();
    let mut u_cols = Vec::new();
    let mut s_comp = Vec::new();
    let mut u_comp = Vec::new();
    let mut eigenvalues = Vec::new();
    for blk in &r.blocks {
        let mut stable = Vec::new();
        let mut unstable = Vec::new();
        for (z, mult) in roots_with_multiplicity(&blk.poly) {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Invariant(format!("root finder failed on factor {}", blk.factor)));
            }
            if z.re.abs() < gap_floor {
                return Err(Error::NearImaginary {
                    re: z.re,
                    im: z.im,
                    floor: gap_floor,
                });
            }
            let side = if z.re < 0.0 { &mut stable } else { &mut unstable };
            side.extend(std::iter::repeat_n(z, mult));
            eigenvalues.extend(std::iter::repeat_n(z, mult));
        }
        for (roots, cols, comps) in [(&stable, &mut s_cols, &mut s_comp), (&unstable, &mut u_cols, &mut u_comp)] {
            let (local, c) = block_basis(roots, blk.dim);
            let mut embedded = DMatrix::zeros(n, local.ncols());
            embedded.view_mut((blk.offset, 0), (blk.dim, local.ncols())).copy_from(&local);
            cols.push(embedded);
            comps.push(c);
        }
    }
    let hstack = |parts: &[DMatrix<f64>]| -> DMatrix<f64> {
        let cols: usize = parts.iter().map(|p| p.ncols()).sum();
        let mut out = DMatrix::zeros(n, cols);
        let mut o = 0;
        for p in parts {
            out.view_mut((0, o), (n, p.ncols())).copy_from(p);
            o += p.ncols();
        }
        out
    };
    let restrict = |basis: DMatrix<f64>, comp: DMatrix<f64>| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let (q, rr) = thin_qr(&basis);
        if rr.nrows() == 0 {
            return Ok((q, rr));
        }
        let r_inv = rr
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("invariant subspace basis".into()))?;
        Ok((q, &rr * comp * r_inv))
    };
    let (qs, a_s) = restrict(hstack(&s_cols), block_diag(&s_comp))?;
    let (qu, a_u) = restrict(hstack(&u_cols), block_diag(&u_comp))?;
    let ns = qs.ncols();
    let mut p = DMatrix::zeros(n, n);
    p.view_mut((0, 0), (n, ns)).copy_from(&qs);
    p.view_mut((0, ns), (n, n - ns)).copy_from(&qu);
    let p_inv = if n == 0 {
        DMatrix::zeros(0, 0)
    } else {
        p.clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Singular("stable/unstable splitting".into()))?
    };
    let stable_coords = p_inv.rows(0, ns).into_owned();
    let unstable_coords = p_inv.rows(ns, n - ns).into_owned();
    let proj_stable = &qs * &stable_coords;
    let proj_unstable = &qu * &unstable_coords;

    let gap = eigenvalues.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    let (epsilon, mu) = if gap.is_finite() {
        let eps = (gap / 10.0).min(0.05);
        (eps, gap - eps)
    } else {
        (0.0, f64::INFINITY)
    };
    let mut split = SpectralSplit {
        stable_basis: qs,
        unstable_basis: qu,
        stable_generator: a_s,
        unstable_generator: a_u,
        proj_stable,
        proj_unstable,
        stable_coords,
        unstable_coords,
        gap,
        epsilon,
        constant: 1.0,
        mu,
        eigenvalues,
    };
    split.constant = semigroup_constant(&split, n);
    Ok(Realization {
        split: Some(split),
        ..r.clone()
    })
}

/// Sample `|e^{tA} P_s| e^{mu t}` and its unstable twin over the range where
/// the polynomial factors can still grow, with a 5% safety margin.
fn semigroup_constant(s: &SpectralSplit, n: usize) -> f64 {
    if n == 0 || !s.mu.is_finite() {
        return 1.0;
    }
    let t_max = (n as f64 + 5.0) / s.epsilon.max(1e-3);
    let samples = 400;
    let mut worst: f64 = 0.0;
    for i in 0..=samples {
        let x = i as f64 / samples as f64;
        let t = t_max * x * x;
        let (a, b) = s.decay_norms(t);
        for v in [a, b] {
            if v > 0.0 && v.is_finite() {
                worst = worst.max((v.ln() + s.mu * t).exp());
            }
        }
    }
    1.05 * worst.max(1.0)
}
