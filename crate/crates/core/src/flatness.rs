//! Controllability test and the flat parametrization `x = X(D) y`, `u = U(D) y`
//! obtained from the Brunovsky normal form.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::polymat::{rat, PolyMatrix, RatPoly};
use crate::qmat::QMatrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Controllability {
    pub rank: usize,
    pub controllable: bool,
}

/// Flat parametrization with the Brunovsky change of coordinates
/// `xi = T x`, `v = F x + G u`, where `xi` stacks the chains
/// `(y_i, y_i', ..., y_i^{(nu_i - 1)})` and `v_i = y_i^{(nu_i)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatParametrization {
    pub x_op: PolyMatrix,
    pub u_op: PolyMatrix,
    pub indices: Vec<usize>,
    pub state_transform: QMatrix,
    pub input_transform: QMatrix,
    pub feedback: QMatrix,
}

impl FlatParametrization {
    /// Highest derivative order of `y` entering `u`.
    pub fn order(&self) -> usize {
        self.indices.iter().copied().max().unwrap_or(0)
    }

    pub fn n(&self) -> usize {
        self.x_op.rows()
    }

    pub fn m(&self) -> usize {
        self.u_op.rows()
    }

    /// Jet coordinates `(i, j)`, `j < nu_i`, in chain order.
    pub fn jet_index(&self) -> Vec<(usize, usize)> {
        self.indices
            .iter()
            .enumerate()
            .flat_map(|(i, &nu)| (0..nu).map(move |j| (i, j)))
            .collect()
    }

    /// Constant map from the jet vector to the state: column `(i, j)` is
    /// column `i` of the `D^j` coefficient of `X(D)`.
    pub fn state_jet_map(&self) -> QMatrix {
        let jets = self.jet_index();
        let coeffs = self.x_op.coefficients();
        QMatrix::from_fn(self.n(), jets.len(), |r, c| {
            let (i, j) = jets[c];
            coeffs.get(j).map_or_else(Zero::zero, |x| x[(r, i)].clone())
        })
    }

    /// Exact check of `D X = A X + B U`.
    pub fn satisfies_identity(&self, a: &QMatrix, b: &QMatrix) -> bool {
        let dx = self.x_op.scale(&RatPoly::x());
        let rhs = &(&PolyMatrix::from_constant(a) * &self.x_op) + &(&PolyMatrix::from_constant(b) * &self.u_op);
        dx == rhs
    }
}

fn kalman_matrix(a: &QMatrix, b: &QMatrix) -> QMatrix {
    let n = a.rows();
    let mut blocks = b.clone();
    let mut current = b.clone();
    for _ in 1..n {
        current = a * &current;
        blocks = blocks.hstack(&current).expect("same row count");
    }
    blocks
}

pub fn check_controllable(a: &QMatrix, b: &QMatrix) -> Result<Controllability> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::Dimension("A must be n x n and B n x m".into()));
    }
    let n = a.rows();
    let rank = if b.cols() == 0 { 0 } else { kalman_matrix(a, b).rank() };
    Ok(Controllability {
        rank,
        controllable: rank == n,
    })
}

pub fn brunovsky(a: &QMatrix, b: &QMatrix) -> Result<FlatParametrization> {
    let (n, m) = (a.rows(), b.cols());
    let ctrl = check_controllable(a, b)?;
    let b_rank = b.rank();
    if b_rank < m {
        return Err(Error::RedundantInputs { rank: b_rank, m });
    }
    if !ctrl.controllable {
        return Err(Error::Uncontrollable { rank: ctrl.rank, n });
    }

    // crate-order selection of (B, AB, A^2 B, ...)
    let mut indices = vec![0usize; m];
    let mut active = vec![true; m];
    let mut selected = QMatrix::zeros(n, 0);
    let mut powers = b.clone();
    let mut total = 0;
    while total < n {
        for i in 0..m {
            if !active[i] || total == n {
                continue;
            }
            let candidate = selected
                .hstack(&QMatrix::column(&powers.col_vec(i)))
                .expect("same row count");
            if candidate.rank() > total {
                selected = candidate;
                indices[i] += 1;
                total += 1;
            } else {
                active[i] = false;
            }
        }
        powers = a * &powers;
    }

    // controllability matrix grouped by input
    let mut grouped = QMatrix::zeros(n, 0);
    for (i, &nu) in indices.iter().enumerate() {
        let mut v = QMatrix::column(&b.col_vec(i));
        for _ in 0..nu {
            grouped = grouped.hstack(&v).expect("same row count");
            v = a * &v;
        }
    }
    let grouped_inv = grouped.inverse()?;

    let mut t_rows = Vec::with_capacity(n);
    let mut f_rows = Vec::with_capacity(m);
    let mut g_rows = Vec::with_capacity(m);
    let mut sigma = 0;
    for &nu in &indices {
        sigma += nu;
        let mut h = grouped_inv.row_vec(sigma - 1);
        for _ in 0..nu {
            t_rows.push(h.row(0).to_vec());
            h = &h * a;
        }
        f_rows.push(h.row(0).to_vec());
        let last = QMatrix::from_rows(vec![t_rows.last().expect("nu >= 1").clone()])?;
        g_rows.push((&last * b).row(0).to_vec());
    }
    let t = QMatrix::from_rows(t_rows)?;
    let f = QMatrix::from_rows(f_rows)?;
    let g = QMatrix::from_rows(g_rows)?;
    let t_inv = t.inverse()?;
    let g_inv = g.inverse()?;

    let mut jets = PolyMatrix::zeros(n, m);
    let mut diag = PolyMatrix::zeros(m, m);
    let mut row = 0;
    for (i, &nu) in indices.iter().enumerate() {
        for j in 0..nu {
            jets[(row, i)] = RatPoly::monomial(rat(1), j);
            row += 1;
        }
        diag[(i, i)] = RatPoly::monomial(rat(1), nu);
    }
    let x_op = &PolyMatrix::from_constant(&t_inv) * &jets;
    let u_op = &PolyMatrix::from_constant(&g_inv) * &(&diag - &(&PolyMatrix::from_constant(&f) * &x_op));
    let fp = FlatParametrization {
        x_op,
        u_op,
        indices,
        state_transform: t,
        input_transform: g,
        feedback: f,
    };
    debug_assert!(fp.satisfies_identity(a, b));
    Ok(fp)
}
