//! Reduced Euler-Lagrange operator `E(D) = X(D)* Q X(D) + U(D)* R U(D)`, its
//! Smith form, and the hyperbolicity certificate.

use nalgebra::DVector;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::flatness::FlatParametrization;
use crate::numeric::{roots_with_multiplicity, C64};
use crate::polymat::{ratio, smith_form, sturm_real_roots, to_f64, PolyMatrix, RatPoly, Rational, SmithDecomposition};
use crate::problem::AffineResidual;
use crate::qmat::QMatrix;

#[derive(Clone, Debug)]
pub struct ELOperator {
    pub e_op: PolyMatrix,
    /// Constant right-hand side `c_0` of `E(D) y = c_0`.
    pub forcing: Vec<Rational>,
    pub smith: SmithDecomposition,
    /// Effective order `N = sum deg d_j`; `None` if a factor vanishes.
    pub order: Option<usize>,
    /// `gram[a][b] = X_a^T Q X_b + U_a^T R U_b`.
    pub gram: Vec<Vec<QMatrix>>,
    /// Linear running-cost coefficients `l_a` multiplying `y^{(a)}`.
    pub linear: Vec<Vec<Rational>>,
}

impl ELOperator {
    pub fn m(&self) -> usize {
        self.e_op.rows()
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.e_op.adjoint() == self.e_op
    }

    /// Constant particular solution of `E(D) y = c_0`, i.e. `E(0)^{-1} c_0`.
    pub fn particular(&self) -> Result<Vec<Rational>> {
        if self.forcing.iter().all(Zero::is_zero) {
            return Ok(vec![Rational::zero(); self.m()]);
        }
        self.e_op.at_zero().solve(&self.forcing)
    }

    /// Operator with `E(D)` replaced and the Smith data recomputed; the gram
    /// table is kept. Used to inject faults into verification runs.
    pub fn with_operator(&self, e_op: PolyMatrix) -> ELOperator {
        let smith = smith_form(&e_op);
        let order = smith.total_order();
        ELOperator {
            e_op,
            smith,
            order,
            ..self.clone()
        }
    }
}

pub fn build_el(fp: &FlatParametrization, q: &QMatrix, r: &QMatrix, affine: &AffineResidual) -> Result<ELOperator> {
    let m = fp.m();
    let k = fp.order();
    let xs: Vec<QMatrix> = (0..=k).map(|a| fp.x_op.coefficient(a)).collect();
    let us: Vec<QMatrix> = (0..=k).map(|a| fp.u_op.coefficient(a)).collect();
    let mut gram = Vec::with_capacity(k + 1);
    for a in 0..=k {
        let xa_q = &xs[a].transpose() * q;
        let ua_r = &us[a].transpose() * r;
        let row: Vec<QMatrix> = (0..=k).map(|b| &(&xa_q * &xs[b]) + &(&ua_r * &us[b])).collect();
        gram.push(row);
    }
    let mut coeffs = vec![QMatrix::zeros(m, m); 2 * k + 1];
    for (a, row) in gram.iter().enumerate() {
        for (b, g) in row.iter().enumerate() {
            let term = if a % 2 == 0 { g.clone() } else { -g };
            coeffs[a + b] = &coeffs[a + b] + &term;
        }
    }
    let e_op = PolyMatrix::from_coefficients(&coeffs)?;
    if e_op.adjoint() != e_op {
        return Err(Error::Invariant("Euler-Lagrange operator is not self-adjoint".into()));
    }
    let linear: Vec<Vec<Rational>> = (0..=k)
        .map(|a| {
            let mut l = xs[a].transpose().mul_vec(&affine.state)?;
            let lu = us[a].transpose().mul_vec(&affine.input)?;
            for (x, y) in l.iter_mut().zip(lu) {
                *x += y;
            }
            Ok(l)
        })
        .collect::<Result<_>>()?;
    let forcing = linear[0].iter().map(|c| -c).collect();
    let smith = smith_form(&e_op);
    let order = smith.total_order();
    Ok(ELOperator {
        e_op,
        forcing,
        smith,
        order,
        gram,
        linear,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Hyperbolic,
    ImaginaryRoot,
    ZeroRoot,
    SingularFactor,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Hyperbolic => "hyperbolic",
            Verdict::ImaginaryRoot => "imaginary_root",
            Verdict::ZeroRoot => "zero_root",
            Verdict::SingularFactor => "singular_factor",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    SingularFactor {
        factor: usize,
    },
    ZeroRoot {
        factor: usize,
        multiplicity: usize,
    },
    /// Root `i w` with `w` isolated in `(lo, hi]`.
    ImaginaryRoot {
        factor: usize,
        lo: Rational,
        hi: Rational,
        frequency: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootEntry {
    pub value: C64,
    pub multiplicity: usize,
    pub factor: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HyperbolicityCertificate {
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    pub roots: Vec<RootEntry>,
    /// `min |Re lambda|`; infinite when there are no roots.
    pub gap: f64,
    /// Exact number of distinct imaginary-axis roots (zero included) per factor.
    pub axis_counts: Vec<usize>,
}

impl HyperbolicityCertificate {
    pub fn root_count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn zero_root_multiplicity(&self) -> usize {
        self.witnesses
            .iter()
            .map(|w| match w {
                Witness::ZeroRoot { multiplicity, .. } => *multiplicity,
                _ => 0,
            })
            .sum()
    }

    /// Roots as a flat multiset (each root repeated by multiplicity).
    pub fn root_multiset(&self) -> Vec<C64> {
        self.roots
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity))
            .collect()
    }
}

pub fn certify_hyperbolic(el: &ELOperator) -> Result<HyperbolicityCertificate> {
    let mut witnesses = Vec::new();
    let mut roots = Vec::new();
    let mut axis_counts = Vec::new();
    let mut singular = false;
    let mut zero = false;
    let mut imaginary = false;
    for (j, d) in el.smith.factors.iter().enumerate() {
        if d.is_zero() {
            singular = true;
            witnesses.push(Witness::SingularFactor { factor: j });
            axis_counts.push(0);
            continue;
        }
        if d.is_constant() {
            axis_counts.push(0);
            continue;
        }
        let (re, im) = d.imaginary_axis_parts();
        let g = RatPoly::gcd(&re, &im);
        let mut count = 0;
        if !g.is_constant() {
            let mut iso = sturm_real_roots(&g, None)?;
            iso.refine(&g, &ratio(1, 1 << 40));
            count = iso.count;
            for (lo, hi) in iso.intervals {
                let contains_zero = !lo.is_positive() && !hi.is_negative() && g.coeff(0).is_zero();
                if contains_zero {
                    continue;
                }
                imaginary = true;
                let frequency = 0.5 * (to_f64(&lo) + to_f64(&hi));
                witnesses.push(Witness::ImaginaryRoot {
                    factor: j,
                    lo,
                    hi,
                    frequency,
                });
            }
        }
        let mult = d.zero_root_multiplicity();
        if mult > 0 {
            zero = true;
            witnesses.push(Witness::ZeroRoot {
                factor: j,
                multiplicity: mult,
            });
        }
        axis_counts.push(count);
        for (value, multiplicity) in roots_with_multiplicity(d) {
            roots.push(RootEntry {
                value,
                multiplicity,
                factor: j,
            });
        }
    }
    let verdict = if singular {
        Verdict::SingularFactor
    } else if zero {
        Verdict::ZeroRoot
    } else if imaginary {
        Verdict::ImaginaryRoot
    } else {
        Verdict::Hyperbolic
    };
    let gap = roots.iter().map(|r| r.value.re.abs()).fold(f64::INFINITY, f64::min);
    Ok(HyperbolicityCertificate {
        verdict,
        witnesses,
        roots,
        gap,
        axis_counts,
    })
}

/// Structural regime of the reduced equation relative to the state dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Hyperbolic with full order `N = 2n`.
    Hyperbolic,
    /// Hyperbolic with `0 < N < 2n`.
    OrderDrop,
    /// `N = 0`: the only classical trajectory of the centered problem is zero.
    ZeroEquation,
    /// Zero root alongside nonzero roots.
    ZeroRoot,
    /// Every root is zero and `N <= 2`: affine trajectories.
    Affine,
    /// Every root is zero and `N > 2`: polynomial trajectories.
    Polynomial,
    /// Nonzero purely imaginary roots.
    Oscillatory,
    Singular,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Hyperbolic => "hyperbolic",
            Regime::OrderDrop => "order_drop",
            Regime::ZeroEquation => "zero_equation",
            Regime::ZeroRoot => "zero_root",
            Regime::Affine => "affine",
            Regime::Polynomial => "polynomial",
            Regime::Oscillatory => "oscillatory",
            Regime::Singular => "singular",
        }
    }
}

pub fn classify(cert: &HyperbolicityCertificate, order: Option<usize>, n: usize) -> Regime {
    let Some(order) = order else {
        return Regime::Singular;
    };
    match cert.verdict {
        Verdict::SingularFactor => Regime::Singular,
        Verdict::Hyperbolic if order == 0 => Regime::ZeroEquation,
        Verdict::Hyperbolic if order < 2 * n => Regime::OrderDrop,
        Verdict::Hyperbolic => Regime::Hyperbolic,
        Verdict::ImaginaryRoot => Regime::Oscillatory,
        Verdict::ZeroRoot => {
            if cert.zero_root_multiplicity() < order {
                Regime::ZeroRoot
            } else if order <= 2 {
                Regime::Affine
            } else {
                Regime::Polynomial
            }
        }
    }
}

/// `|xi* E(iw) xi - (|Q^{1/2} X(iw) xi|^2 + |R^{1/2} U(iw) xi|^2)|`.
pub fn freq_identity_check(
    el: &ELOperator,
    fp: &FlatParametrization,
    q: &QMatrix,
    r: &QMatrix,
    omega: f64,
    xi: &[C64],
) -> f64 {
    let z = C64::new(0.0, omega);
    let xi = DVector::from_column_slice(xi);
    let lhs = (xi.adjoint() * el.e_op.eval_complex(z) * &xi)[(0, 0)];
    let qc = q.to_f64().map(|v| C64::new(v, 0.0));
    let rc = r.to_f64().map(|v| C64::new(v, 0.0));
    let xv = fp.x_op.eval_complex(z) * &xi;
    let uv = fp.u_op.eval_complex(z) * &xi;
    let rhs = (xv.adjoint() * qc * &xv)[(0, 0)] + (uv.adjoint() * rc * &uv)[(0, 0)];
    (lhs - rhs).norm()
}

/// One orbit `{lambda, -lambda, conj lambda, -conj lambda}` of a factor.
#[derive(Clone, Debug, PartialEq)]
pub struct RootOrbit {
    pub factor: usize,
    pub multiplicity: usize,
    pub members: Vec<C64>,
}

pub fn root_quartets(cert: &HyperbolicityCertificate, tol: f64) -> Result<Vec<RootOrbit>> {
    let mut used = vec![false; cert.roots.len()];
    let mut orbits = Vec::new();
    for i in 0..cert.roots.len() {
        if used[i] {
            continue;
        }
        let seed = &cert.roots[i];
        let lam = seed.value;
        let scale = tol * lam.norm().max(1.0);
        let mut images: Vec<C64> = Vec::new();
        for img in [lam, -lam, lam.conj(), -lam.conj()] {
            if images.iter().all(|z| (z - img).norm() > scale) {
                images.push(img);
            }
        }
        let mut members = Vec::new();
        for img in images {
            let hit = (0..cert.roots.len()).find(|&j| {
                !used[j]
                    && cert.roots[j].factor == seed.factor
                    && cert.roots[j].multiplicity == seed.multiplicity
                    && (cert.roots[j].value - img).norm() <= scale
            });
            match hit {
                Some(j) => {
                    used[j] = true;
                    members.push(cert.roots[j].value);
                }
                None => {
                    return Err(Error::QuartetViolation { re: img.re, im: img.im });
                }
            }
        }
        orbits.push(RootOrbit {
            factor: seed.factor,
            multiplicity: seed.multiplicity,
            members,
        });
    }
    Ok(orbits)
}
