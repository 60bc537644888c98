use num_traits::{One, Signed, Zero};

use super::{rat, RatPoly, Rational};
use crate::error::{Error, Result};

/// Sturm chain of the square-free part of a polynomial.
#[derive(Clone, Debug)]
pub struct SturmChain {
    chain: Vec<RatPoly>,
}

impl SturmChain {
    pub fn new(p: &RatPoly) -> Result<Self> {
        if p.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let sf = p.square_free_part();
        let mut chain = vec![sf.clone(), sf.derivative()];
        while !chain.last().is_some_and(RatPoly::is_zero) {
            let n = chain.len();
            let r = chain[n - 2].rem(&chain[n - 1])?;
            if r.is_zero() {
                break;
            }
            // positive rescaling keeps the signs and tames the coefficients
            let lc = r.leading().expect("nonzero").abs();
            chain.push(-&r.scale(&lc.recip()));
        }
        chain.retain(|q| !q.is_zero());
        Ok(SturmChain { chain })
    }

    pub fn base(&self) -> &RatPoly {
        &self.chain[0]
    }

    fn variations(signs: impl Iterator<Item = i32>) -> usize {
        let mut last = 0;
        let mut count = 0;
        for s in signs.filter(|&s| s != 0) {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    fn variations_at(&self, x: &Rational) -> usize {
        Self::variations(self.chain.iter().map(|q| q.sign_at(x)))
    }

    fn variations_at_infinity(&self, positive: bool) -> usize {
        Self::variations(self.chain.iter().map(|q| {
            let lc_sign = if q.leading().expect("nonzero").is_positive() { 1 } else { -1 };
            let odd = q.degree_or_zero() % 2 == 1;
            if positive || !odd {
                lc_sign
            } else {
                -lc_sign
            }
        }))
    }

    /// Distinct roots in the half-open interval `(a, b]`.
    pub fn count_half_open(&self, a: &Rational, b: &Rational) -> usize {
        self.variations_at(a) - self.variations_at(b)
    }

    pub fn count_all(&self) -> usize {
        self.variations_at_infinity(false) - self.variations_at_infinity(true)
    }
}

/// Exact real-root count with rational isolating intervals.
///
/// Each interval `(lo, hi]` contains exactly one distinct root; a degenerate
/// interval `lo == hi` marks a rational root hit exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootIsolation {
    pub count: usize,
    pub intervals: Vec<(Rational, Rational)>,
}

/// Cauchy bound: every root satisfies `|x| < 1 + max |a_i / a_n|`.
fn root_bound(p: &RatPoly) -> Rational {
    let lc = p.leading().expect("nonzero").abs();
    let max = p
        .coeffs()
        .iter()
        .map(|c| c.abs() / &lc)
        .fold(Rational::zero(), |m, c| if c > m { c } else { m });
    max + Rational::one()
}

pub fn sturm_real_roots(p: &RatPoly, interval: Option<(Rational, Rational)>) -> Result<RootIsolation> {
    let chain = SturmChain::new(p)?;
    let base = chain.base().clone();
    if base.is_constant() {
        return Ok(RootIsolation {
            count: 0,
            intervals: Vec::new(),
        });
    }
    let bound = root_bound(&base);
    let (lo, hi, closed_lo) = match interval {
        Some((a, b)) => {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            (a, b, true)
        }
        None => (-bound.clone(), bound, false),
    };
    let mut intervals = Vec::new();
    if closed_lo && base.sign_at(&lo) == 0 {
        intervals.push((lo.clone(), lo.clone()));
    }
    let mut stack = vec![(lo, hi)];
    let two = rat(2);
    while let Some((a, b)) = stack.pop() {
        let c = chain.count_half_open(&a, &b);
        match c {
            0 => {}
            1 => {
                if base.sign_at(&b) == 0 {
                    intervals.push((b.clone(), b));
                } else {
                    intervals.push((a, b));
                }
            }
            _ => {
                let mid = (&a + &b) / &two;
                stack.push((mid.clone(), b));
                stack.push((a, mid));
            }
        }
    }
    intervals.sort();
    Ok(RootIsolation {
        count: intervals.len(),
        intervals,
    })
}

impl RootIsolation {
    /// Shrink every non-degenerate interval below `width` by bisection on sign changes.
    pub fn refine(&mut self, p: &RatPoly, width: &Rational) {
        let sf = p.square_free_part();
        let two = rat(2);
        for (a, b) in self.intervals.iter_mut() {
            while &(&*b - &*a) > width {
                let mid = (&*a + &*b) / &two;
                let sm = sf.sign_at(&mid);
                if sm == 0 {
                    *a = mid.clone();
                    *b = mid;
                    break;
                }
                // the root lies in (a, b] and the endpoints straddle it
                if sm == sf.sign_at(b) {
                    *b = mid;
                } else {
                    *a = mid;
                }
            }
        }
    }
}
