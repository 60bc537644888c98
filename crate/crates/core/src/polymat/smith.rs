use super::{PolyMatrix, RatPoly};
use crate::error::Result;

/// Unimodular reduction `left * E * right = diag(factors)`.
///
/// Factors are monic and form a divisibility chain. When `E` is singular as a
/// polynomial matrix the trailing factors are the zero polynomial; they are
/// kept in place and counted by [`SmithDecomposition::zero_factor_count`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithDecomposition {
    pub left: PolyMatrix,
    pub right: PolyMatrix,
    pub factors: Vec<RatPoly>,
}

impl SmithDecomposition {
    pub fn zero_factor_count(&self) -> usize {
        self.factors.iter().filter(|d| d.is_zero()).count()
    }

    pub fn has_zero_factor(&self) -> bool {
        self.zero_factor_count() > 0
    }

    /// Total order `sum deg d_j`; `None` when a zero factor is present.
    pub fn total_order(&self) -> Option<usize> {
        if self.has_zero_factor() {
            return None;
        }
        Some(self.factors.iter().map(RatPoly::degree_or_zero).sum())
    }

    pub fn product(&self) -> RatPoly {
        self.factors.iter().fold(RatPoly::one(), |acc, d| &acc * d)
    }

    /// Re-check every structural invariant exactly.
    pub fn verify(&self, e: &PolyMatrix) -> Result<bool> {
        let diag = PolyMatrix::diag(&self.factors);
        if &(&self.left * e) * &self.right != diag {
            return Ok(false);
        }
        if !self.factors.windows(2).all(|w| w[0].divides(&w[1])) {
            return Ok(false);
        }
        let monic = self
            .factors
            .iter()
            .all(|d| d.is_zero() || d.leading().is_some_and(num_traits::One::is_one));
        let unimodular = |m: &PolyMatrix| -> Result<bool> {
            let d = m.det()?;
            Ok(!d.is_zero() && d.is_constant())
        };
        Ok(monic && unimodular(&self.left)? && unimodular(&self.right)?)
    }
}

fn pivot_key(p: &RatPoly) -> (usize, u64) {
    (p.degree_or_zero(), p.bit_size())
}

/// Smith normal form over `Q[D]` by Euclidean pivoting.
///
/// The pivot is the nonzero entry of least degree in the trailing block,
/// ties broken by smallest coefficient bit-size. Scalar normalisations are
/// absorbed into `left`.
pub fn smith_form(e: &PolyMatrix) -> SmithDecomposition {
    assert!(e.is_square(), "Smith form of a non-square matrix");
    let m = e.rows();
    let mut a = e.clone();
    let mut left = PolyMatrix::identity(m);
    let mut right = PolyMatrix::identity(m);

    'outer: for k in 0..m {
        loop {
            let pivot = (k..m)
                .flat_map(|i| (k..m).map(move |j| (i, j)))
                .filter(|&(i, j)| !a[(i, j)].is_zero())
                .min_by_key(|&(i, j)| pivot_key(&a[(i, j)]));
            let Some((pi, pj)) = pivot else {
                break 'outer;
            };
            a.swap_rows(k, pi);
            left.swap_rows(k, pi);
            a.swap_cols(k, pj);
            right.swap_cols(k, pj);

            let mut dirty = false;
            for i in k + 1..m {
                if a[(i, k)].is_zero() {
                    continue;
                }
                let (q, r) = a[(i, k)].divmod(&a[(k, k)]).expect("pivot is nonzero");
                let neg_q = -q;
                a.add_row_multiple(i, k, &neg_q);
                left.add_row_multiple(i, k, &neg_q);
                dirty |= !r.is_zero();
            }
            for j in k + 1..m {
                if a[(k, j)].is_zero() {
                    continue;
                }
                let (q, r) = a[(k, j)].divmod(&a[(k, k)]).expect("pivot is nonzero");
                let neg_q = -q;
                a.add_col_multiple(j, k, &neg_q);
                right.add_col_multiple(j, k, &neg_q);
                dirty |= !r.is_zero();
            }
            if dirty {
                continue;
            }
            // row and column k are clear; the pivot must divide the rest
            let offender = (k + 1..m).find(|&i| (k + 1..m).any(|j| !a[(k, k)].divides(&a[(i, j)])));
            match offender {
                Some(i) => {
                    let one = RatPoly::one();
                    a.add_row_multiple(k, i, &one);
                    left.add_row_multiple(k, i, &one);
                }
                None => break,
            }
        }
        let lc = a[(k, k)].leading().expect("pivot is nonzero").recip();
        a.scale_row(k, &lc);
        left.scale_row(k, &lc);
    }

    let factors = (0..m).map(|i| a[(i, i)].clone()).collect();
    SmithDecomposition { left, right, factors }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[i64]) -> RatPoly {
        RatPoly::from_i64(c)
    }

    #[test]
    fn coprime_diagonal_merges_into_product() {
        let e = PolyMatrix::diag(&[p(&[-1, 0, 1]), p(&[-4, 0, 1])]);
        let s = smith_form(&e);
        assert_eq!(s.factors, vec![RatPoly::one(), &p(&[-1, 0, 1]) * &p(&[-4, 0, 1])]);
        assert!(s.verify(&e).unwrap());
        assert_eq!(s.total_order(), Some(4));
    }

    #[test]
    fn scalar_factor_is_made_monic() {
        // r D^4 - q2 D^2 + q1 with r = 2, q2 = 3, q1 = 5
        let e = PolyMatrix::diag(&[p(&[5, 0, -3, 0, 2])]);
        let s = smith_form(&e);
        assert_eq!(s.factors[0], p(&[5, 0, -3, 0, 2]).monic());
        assert!(s.verify(&e).unwrap());
    }

    #[test]
    fn identity_is_fixed() {
        let s = smith_form(&PolyMatrix::identity(3));
        assert_eq!(s.factors, vec![RatPoly::one(); 3]);
        assert_eq!(s.left, PolyMatrix::identity(3));
        assert_eq!(s.right, PolyMatrix::identity(3));
    }

    #[test]
    fn singular_matrix_flags_zero_factor() {
        // rank-one polynomial matrix [[D, D^2], [1, D]]
        let e = PolyMatrix::from_entries(2, 2, vec![p(&[0, 1]), p(&[0, 0, 1]), p(&[1]), p(&[0, 1])])
            .unwrap();
        let s = smith_form(&e);
        assert_eq!(s.factors, vec![RatPoly::one(), RatPoly::zero()]);
        assert!(s.has_zero_factor());
        assert_eq!(s.total_order(), None);
        assert!(s.verify(&e).unwrap());
    }

    #[test]
    fn divisibility_repair_step() {
        // diag(D, D + 1) is not in Smith form: gcd is 1
        let e = PolyMatrix::diag(&[p(&[0, 1]), p(&[1, 1])]);
        let s = smith_form(&e);
        assert_eq!(s.factors, vec![RatPoly::one(), p(&[0, 1, 1])]);
        assert!(s.verify(&e).unwrap());
    }

    #[test]
    fn zero_matrix() {
        let s = smith_form(&PolyMatrix::zeros(2, 2));
        assert_eq!(s.zero_factor_count(), 2);
        assert_eq!(s.product(), RatPoly::zero());
    }
}
