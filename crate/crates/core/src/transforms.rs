//! Differential qd transforms on bidiagonal factorizations: stationary shift,
//! twisted factorization, Sturm counts and the twisted eigenvector solve.

use crate::precision::{Precision, Real};
use crate::tridiag::{repair_pivot, BidiagRep, TwistedRep};

/// Arithmetic used to evaluate a Sturm count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arithmetic {
    Narrow,
    Wide,
}

#[inline(always)]
fn clamp<R: Real>(x: R) -> R {
    if x.is_finite() {
        x
    } else if x > R::zero() {
        R::max_value()
    } else {
        -R::max_value()
    }
}

/// Stationary qd transform: factors `L D L^T - tau I = L+ D+ L+^T`.
pub fn dstqds<W: Real>(rep: &BidiagRep<W>, tau: W) -> BidiagRep<W> {
    let n = rep.n();
    let pivmin = rep.pivmin;
    let mut d = Vec::with_capacity(n);
    let mut l = Vec::with_capacity(n - 1);
    let mut s = -tau;
    for i in 0..n - 1 {
        let dp = repair_pivot(rep.d[i] + s, pivmin);
        let lp = rep.ld[i] / dp;
        s = lp * rep.l[i] * s - tau;
        d.push(dp);
        l.push(lp);
    }
    d.push(repair_pivot(rep.d[n - 1] + s, pivmin));
    let mut child = BidiagRep {
        d,
        l,
        ld: Vec::new(),
        lld: Vec::new(),
        sigma: rep.sigma + tau,
        depth: rep.depth + 1,
        spdiam: rep.spdiam,
        pivmin,
    };
    child.refresh();
    child
}

/// Number of negative pivots of `L D L^T - x I`, given pivots `d` and `l_i^2 d_i`.
///
/// Overflowing intermediates are clamped so the kernel is total in any format.
pub fn negcount<R: Real>(d: &[R], lld: &[R], x: R, pivmin: R) -> usize {
    let n = d.len();
    let mut neg = 0;
    let mut s = -x;
    for i in 0..n - 1 {
        let dp = repair_pivot(clamp(d[i] + s), pivmin);
        if dp < R::zero() {
            neg += 1;
        }
        let t = clamp(s / dp);
        s = clamp(t * lld[i] - x);
    }
    let dp = repair_pivot(clamp(d[n - 1] + s), pivmin);
    if dp < R::zero() {
        neg += 1;
    }
    neg
}

/// Narrow-precision copy of the data needed for Sturm counts.
#[derive(Debug, Clone)]
pub struct NarrowCopy<N> {
    pub(crate) d: Vec<N>,
    pub(crate) lld: Vec<N>,
    pub(crate) pivmin: N,
}

impl<N: Real> NarrowCopy<N> {
    pub fn new<P: Precision<Narrow = N>>(rep: &BidiagRep<P::Wide>) -> Self {
        NarrowCopy {
            d: rep.d.iter().map(|&x| P::narrow(x)).collect(),
            lld: rep.lld.iter().map(|&x| P::narrow(x)).collect(),
            pivmin: P::narrow(rep.pivmin).max(N::min_positive()),
        }
    }

    pub fn count(&self, x: N) -> usize {
        negcount(&self.d, &self.lld, x, self.pivmin)
    }
}

/// Number of eigenvalues of `rep` below `x`.
///
/// In narrow arithmetic both the representation and `x` are rounded once to the
/// narrow format before counting.
pub fn sturm_count<P: Precision>(rep: &BidiagRep<P::Wide>, x: P::Wide, arith: Arithmetic) -> usize {
    match arith {
        Arithmetic::Wide => negcount(&rep.d, &rep.lld, x, rep.pivmin),
        Arithmetic::Narrow => NarrowCopy::new::<P>(rep).count(P::narrow(x)),
    }
}

/// Twisted factorization of `L D L^T - lambda I` at the twist minimizing `|gamma_k|`.
pub fn twisted_factorize<W: Real>(rep: &BidiagRep<W>, lambda: W) -> TwistedRep<W> {
    let mut tw = TwistedRep {
        lambda,
        twist: 0,
        gamma: W::zero(),
        dplus: Vec::new(),
        lplus: Vec::new(),
        omega: Vec::new(),
        uminus: Vec::new(),
    };
    twisted_factorize_into(rep, lambda, &mut tw, &mut Vec::new());
    tw
}

/// As [`twisted_factorize`], reusing the buffers of `tw` and `scratch`.
pub(crate) fn twisted_factorize_into<W: Real>(
    rep: &BidiagRep<W>,
    lambda: W,
    tw: &mut TwistedRep<W>,
    scratch: &mut Vec<W>,
) {
    let n = rep.n();
    let pivmin = rep.pivmin;
    tw.lambda = lambda;
    tw.dplus.clear();
    tw.lplus.clear();
    tw.omega.clear();
    tw.uminus.clear();
    tw.dplus.resize(n, W::zero());
    tw.lplus.resize(n.saturating_sub(1), W::zero());
    tw.omega.resize(n, W::zero());
    tw.uminus.resize(n.saturating_sub(1), W::zero());
    let sfw = scratch;
    sfw.clear();
    sfw.resize(n, W::zero());

    let mut s = -lambda;
    for i in 0..n - 1 {
        sfw[i] = s;
        let dp = repair_pivot(rep.d[i] + s, pivmin);
        let lp = rep.ld[i] / dp;
        tw.dplus[i] = dp;
        tw.lplus[i] = lp;
        s = lp * rep.l[i] * s - lambda;
    }
    sfw[n - 1] = s;
    tw.dplus[n - 1] = repair_pivot(rep.d[n - 1] + s, pivmin);

    let mut p = rep.d[n - 1] - lambda;
    let mut best = n - 1;
    let mut best_gamma = sfw[n - 1] + p + lambda;
    for i in (0..n - 1).rev() {
        let om = repair_pivot(rep.lld[i] + p, pivmin);
        tw.omega[i + 1] = om;
        let tmp = rep.d[i] / om;
        tw.uminus[i] = rep.l[i] * tmp;
        p = p * tmp - lambda;
        let g = sfw[i] + p + lambda;
        if g.abs() <= best_gamma.abs() {
            best = i;
            best_gamma = g;
        }
    }
    tw.omega[0] = p;
    tw.twist = best;
    tw.gamma = if best_gamma == W::zero() {
        W::eps() * rep.pivmin
    } else {
        best_gamma
    };
}

/// Solves `N_k^T z = e_k`: unnormalized eigenvector approximation with `z_k = 1`.
pub fn solve_twisted<W: Real>(tw: &TwistedRep<W>) -> Vec<W> {
    let mut z = vec![W::zero(); tw.n()];
    solve_twisted_into(tw, &mut z);
    z
}

pub(crate) fn solve_twisted_into<W: Real>(tw: &TwistedRep<W>, z: &mut [W]) {
    let n = tw.n();
    let k = tw.twist;
    z[k] = W::one();
    for i in (0..k).rev() {
        z[i] = -(tw.lplus[i] * z[i + 1]);
    }
    for i in k..n - 1 {
        z[i + 1] = -(tw.uminus[i] * z[i]);
    }
}
