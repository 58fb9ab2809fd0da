use crate::bisect::{refine_intervals, EigInterval};
use crate::precision::{Precision, Real};
use crate::transforms::{solve_twisted_into, twisted_factorize_into, Arithmetic};
use crate::tridiag::{BidiagRep, EigenPair, TwistedRep};

use super::SolverConfig;

/// Result of [`rqi_singleton`]: eigenvalue in the coordinates of `rep` and a unit
/// eigenvector, both wide.
#[derive(Debug, Clone)]
pub struct RqiOutcome<W> {
    pub pair: EigenPair<W>,
    /// Iteration budget exhausted; the pair came from full-precision bisection.
    pub fell_back: bool,
    pub iterations: usize,
}

struct Workspace<W> {
    tw: TwistedRep<W>,
    scratch: Vec<W>,
    z: Vec<W>,
}

impl<W: Real> Workspace<W> {
    fn new(n: usize) -> Self {
        Workspace {
            tw: TwistedRep {
                lambda: W::zero(),
                twist: 0,
                gamma: W::zero(),
                dplus: Vec::with_capacity(n),
                lplus: Vec::with_capacity(n),
                omega: Vec::with_capacity(n),
                uminus: Vec::with_capacity(n),
            },
            scratch: Vec::with_capacity(n),
            z: vec![W::zero(); n],
        }
    }

    /// One twisted solve at `lambda`; returns `(gamma, |z|^2)`.
    fn step(&mut self, rep: &BidiagRep<W>, lambda: W) -> (W, W) {
        twisted_factorize_into(rep, lambda, &mut self.tw, &mut self.scratch);
        solve_twisted_into(&self.tw, &mut self.z);
        let nrm2 = self.z.iter().fold(W::zero(), |s, &x| s + x * x);
        (self.tw.gamma, nrm2)
    }

    fn finish(self, index: usize, lambda: W, nrm2: W) -> EigenPair<W> {
        let inv = W::one() / nrm2.sqrt();
        EigenPair {
            index,
            lambda,
            z: self.z.into_iter().map(|x| x * inv).collect(),
        }
    }
}

/// Rayleigh quotient iteration on twisted factorizations, guarded by the
/// certified enclosure `iv`; `gap` is a lower bound on the distance to the
/// other eigenvalues of `rep`.
pub fn rqi_singleton<P: Precision>(
    rep: &BidiagRep<P::Wide>,
    iv: &EigInterval<P::Wide>,
    gap: P::Wide,
    config: &SolverConfig,
) -> RqiOutcome<P::Wide> {
    type W<P> = <P as Precision>::Wide;
    let n = rep.n();
    let gap = gap.min(rep.spdiam());
    let tol = gap * W::<P>::from_f64(config.k_rs * P::eps_narrow() * (n as f64).sqrt());
    let stagnation = W::<P>::from_f64(8.0 * P::eps_wide());
    let mut ws = Workspace::new(n);
    let (mut lo, mut hi) = (iv.lo, iv.hi);
    let mut lambda = iv.mid();

    for it in 1..=config.max_rqi_iters {
        let (gamma, nrm2) = ws.step(rep, lambda);
        let corr = gamma / nrm2;
        let stalled = corr.abs() <= stagnation * lambda.abs();
        if stalled || gamma.abs() / nrm2.sqrt() <= tol {
            let next = lambda + corr;
            let out = if !stalled && next >= lo && next <= hi { next } else { lambda };
            return RqiOutcome {
                pair: ws.finish(iv.index, out, nrm2),
                fell_back: false,
                iterations: it,
            };
        }
        if ws.tw.negcount() > iv.index {
            hi = hi.min(lambda);
        } else {
            lo = lo.max(lambda);
        }
        let next = lambda + corr;
        lambda = if next > lo && next < hi { next } else { (lo + hi).mul_pow2(-1) };
    }

    let rtol = 4.0 * n as f64 * P::eps_wide();
    let sharp = refine_intervals::<P>(rep, &[EigInterval { index: iv.index, lo, hi }], rtol, Arithmetic::Wide);
    let lambda = sharp.intervals[0].mid();
    let (_, nrm2) = ws.step(rep, lambda);
    RqiOutcome {
        pair: ws.finish(iv.index, lambda, nrm2),
        fell_back: true,
        iterations: config.max_rqi_iters,
    }
}

/// Eigenpair from full-precision bisection followed by a single twisted solve.
pub(crate) fn bisect_and_solve<P: Precision>(rep: &BidiagRep<P::Wide>, iv: &EigInterval<P::Wide>) -> EigenPair<P::Wide> {
    let rtol = 4.0 * rep.n() as f64 * P::eps_wide();
    let sharp = refine_intervals::<P>(rep, std::slice::from_ref(iv), rtol, Arithmetic::Wide);
    let lambda = sharp.intervals[0].mid();
    let mut ws = Workspace::new(rep.n());
    let (_, nrm2) = ws.step(rep, lambda);
    ws.finish(iv.index, lambda, nrm2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bisect::bisect_eigenvalues;
    use crate::precision::{DoubleDouble, DoubleQuad, PrecisionMode, SingleDouble};
    use crate::tridiag::{ldl_factorize, SymTridiag};

    fn certified<P: Precision>(rep: &BidiagRep<P::Wide>, index: usize) -> EigInterval<P::Wide> {
        bisect_eigenvalues::<P>(rep, &[index], 1e-6, Arithmetic::Wide)[0]
    }

    #[test]
    fn two_by_two() {
        let t = SymTridiag::new(vec![2.0, 2.0], vec![1.0]).unwrap().map(DoubleDouble::from_f64);
        let rep = ldl_factorize(&t, DoubleDouble::zero());
        let iv = certified::<DoubleQuad>(&rep, 0);
        let cfg = SolverConfig::new(PrecisionMode::DoubleQuad);
        let out = rqi_singleton::<DoubleQuad>(&rep, &iv, DoubleDouble::from_f64(2.0), &cfg);
        assert!(!out.fell_back);
        assert!((out.pair.lambda - DoubleDouble::one()).abs().to_f64() <= 4.0 * DoubleQuad::eps_wide() * 3.0);
        let s = 0.5f64.sqrt();
        let z: Vec<f64> = out.pair.z.iter().map(|x| x.to_f64()).collect();
        let sign = z[0].signum();
        assert!((sign * z[0] - s).abs() < 1e-10 && (sign * z[1] + s).abs() < 1e-10, "{z:?}");
    }

    #[test]
    fn diagonal_is_exact() {
        let rep = BidiagRep::from_data(vec![1.0f64, 3.0, 5.0], vec![0.0, 0.0], 0.0, 0, 4.0);
        let iv = EigInterval { index: 1, lo: 2.5, hi: 3.5 };
        let cfg = SolverConfig::new(PrecisionMode::SingleDouble);
        let out = rqi_singleton::<SingleDouble>(&rep, &iv, 2.0, &cfg);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.pair.lambda, 3.0);
        assert_eq!(out.pair.z, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn kac_residuals() {
        let n = 5;
        let e: Vec<f64> = (1..n).map(|i| ((i * (n - i)) as f64).sqrt()).collect();
        let t = SymTridiag::new(vec![0.0; n], e).unwrap();
        let rep = ldl_factorize(&t, -4.5);
        let cfg = SolverConfig::new(PrecisionMode::SingleDouble);
        for k in 0..n {
            let iv = certified::<SingleDouble>(&rep, k);
            let out = rqi_singleton::<SingleDouble>(&rep, &iv, 2.0, &cfg);
            let lambda = out.pair.lambda + rep.sigma();
            let tz = t.apply(&out.pair.z);
            let r = tz.iter().zip(&out.pair.z).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            assert!(r <= 2.0 * SingleDouble::eps_narrow() * 5f64.sqrt(), "k = {k}: {r:e}");
            assert!((lambda - (2.0 * k as f64 - 4.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn exhausted_budget_falls_back() {
        let t = SymTridiag::new(vec![2.0, 2.0, 2.0], vec![1.0, 1.0]).unwrap();
        let rep = ldl_factorize(&t, 0.0);
        let iv = certified::<SingleDouble>(&rep, 1);
        let mut cfg = SolverConfig::new(PrecisionMode::SingleDouble);
        cfg.max_rqi_iters = 1;
        let out = rqi_singleton::<SingleDouble>(&rep, &iv, 1e-30, &cfg);
        assert!(out.fell_back);
        assert!((out.pair.lambda - 2.0).abs() < 1e-14);
        let norm: f64 = out.pair.z.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-14);
    }
}
