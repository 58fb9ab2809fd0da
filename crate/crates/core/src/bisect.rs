//! Sturm-count bisection for eigenvalues of a bidiagonal representation, with
//! counting in either the narrow or the wide format.

use rayon::prelude::*;

use crate::precision::{Precision, Real};
use crate::transforms::{negcount, Arithmetic, NarrowCopy};
use crate::tridiag::BidiagRep;

/// Certified enclosure of the eigenvalue with zero-based `index`:
/// `count(lo) <= index < count(hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigInterval<W> {
    pub index: usize,
    pub lo: W,
    pub hi: W,
}

impl<W: Real> EigInterval<W> {
    pub fn mid(&self) -> W {
        (self.lo + self.hi).mul_pow2(-1)
    }

    pub fn width(&self) -> W {
        self.hi - self.lo
    }

    /// Translates the interval by `-tau`.
    pub fn shifted(&self, tau: W) -> Self {
        EigInterval {
            index: self.index,
            lo: self.lo - tau,
            hi: self.hi - tau,
        }
    }
}

/// Narrow arithmetic is admissible when `rtol >= 40 n eps_x`.
pub fn counting_mode(n: usize, rtol: f64, eps_narrow: f64) -> Arithmetic {
    if rtol >= 40.0 * n as f64 * eps_narrow {
        Arithmetic::Narrow
    } else {
        Arithmetic::Wide
    }
}

/// Sturm counter bound to one representation and one arithmetic.
pub(crate) enum Counter<'a, P: Precision> {
    Wide(&'a BidiagRep<P::Wide>),
    Narrow(NarrowCopy<P::Narrow>),
}

impl<'a, P: Precision> Counter<'a, P> {
    pub(crate) fn new(rep: &'a BidiagRep<P::Wide>, arith: Arithmetic) -> Self {
        match arith {
            Arithmetic::Wide => Counter::Wide(rep),
            Arithmetic::Narrow => Counter::Narrow(NarrowCopy::new::<P>(rep)),
        }
    }

    /// Count at `x`, which must be representable in the counting format.
    fn count(&self, x: P::Wide) -> usize {
        match self {
            Counter::Wide(rep) => negcount(&rep.d, &rep.lld, x, rep.pivmin),
            Counter::Narrow(c) => c.count(P::narrow(x)),
        }
    }

    /// Rounds `x` into the counting format.
    fn snap(&self, x: P::Wide) -> P::Wide {
        match self {
            Counter::Wide(_) => x,
            Counter::Narrow(_) => P::widen(P::narrow(x)),
        }
    }

    fn eps(&self) -> f64 {
        match self {
            Counter::Wide(_) => P::eps_wide(),
            Counter::Narrow(_) => P::eps_narrow(),
        }
    }
}

/// Gershgorin interval of the matrix represented by `rep`.
pub fn rep_gershgorin<W: Real>(rep: &BidiagRep<W>) -> (W, W) {
    let n = rep.n();
    let mut gl = W::max_value();
    let mut gu = -W::max_value();
    for i in 0..n {
        let mut diag = rep.d[i];
        let mut r = W::zero();
        if i > 0 {
            diag += rep.lld[i - 1];
            r += rep.ld[i - 1].abs();
        }
        if i + 1 < n {
            r += rep.ld[i].abs();
        }
        gl = gl.min(diag - r);
        gu = gu.max(diag + r);
    }
    (gl, gu)
}

struct Bisector<'a, P: Precision> {
    counter: Counter<'a, P>,
    rtol: P::Wide,
    floor: P::Wide,
    enclosure: (P::Wide, P::Wide),
}

impl<'a, P: Precision> Bisector<'a, P> {
    fn new(rep: &'a BidiagRep<P::Wide>, rtol: f64, arith: Arithmetic) -> Self {
        let counter = Counter::<P>::new(rep, arith);
        let rtol = rtol.max(4.0 * counter.eps());
        let n = rep.n();
        let (gl, gu) = rep_gershgorin(rep);
        let slack = (gl.abs().max(gu.abs())).mul_pow2(1) * P::Wide::from_f64(n as f64 * counter.eps())
            + rep.pivmin.mul_pow2(1);
        let mut lo = counter.snap(gl - slack);
        let mut hi = counter.snap(gu + slack);
        let mut step = slack.max(gu - gl).max(P::Wide::min_positive());
        while counter.count(lo) > 0 {
            lo = counter.snap(lo - step);
            step = step.mul_pow2(1);
        }
        let mut step = slack.max(gu - gl).max(P::Wide::min_positive());
        while counter.count(hi) < n {
            hi = counter.snap(hi + step);
            step = step.mul_pow2(1);
        }
        Bisector {
            counter,
            rtol: P::Wide::from_f64(rtol),
            floor: P::Wide::from_f64(P::eps_wide()) * rep.spdiam,
            enclosure: (lo, hi),
        }
    }

    fn converged(&self, lo: P::Wide, hi: P::Wide) -> bool {
        let tol = (self.rtol * lo.abs().max(hi.abs())).mul_pow2(1).max(self.floor);
        hi - lo <= tol
    }

    fn certified(&self, iv: &EigInterval<P::Wide>) -> bool {
        self.counter.count(iv.lo) <= iv.index && self.counter.count(iv.hi) > iv.index
    }

    fn run(&self, mut iv: EigInterval<P::Wide>) -> EigInterval<P::Wide> {
        let i = iv.index;
        while !self.converged(iv.lo, iv.hi) {
            let mid = self.counter.snap(iv.mid());
            if mid <= iv.lo || mid >= iv.hi {
                break;
            }
            if self.counter.count(mid) > i {
                iv.hi = mid;
            } else {
                iv.lo = mid;
            }
        }
        iv
    }
}

fn par_map<T: Send + Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    if items.len() < 16 {
        items.iter().map(f).collect()
    } else {
        items.par_iter().with_min_len(8).map(f).collect()
    }
}

/// Encloses the eigenvalues with the given zero-based indices to relative width `rtol`
/// (or the absolute floor `eps_y * spdiam`).
pub fn bisect_eigenvalues<P: Precision>(
    rep: &BidiagRep<P::Wide>,
    indices: &[usize],
    rtol: f64,
    arith: Arithmetic,
) -> Vec<EigInterval<P::Wide>> {
    if indices.is_empty() {
        return Vec::new();
    }
    let b = Bisector::<P>::new(rep, rtol, arith);
    let (lo, hi) = b.enclosure;
    par_map(indices, |&index| {
        assert!(index < rep.n(), "eigenvalue index {index} out of range");
        b.run(EigInterval { index, lo, hi })
    })
}

/// Result of [`refine_intervals`].
#[derive(Debug, Clone)]
pub struct Refined<W> {
    pub intervals: Vec<EigInterval<W>>,
    /// Inputs whose enclosure failed certification and were restarted from Gershgorin.
    pub recertified: usize,
}

/// Shrinks certified enclosures to relative width `rtol`.
pub fn refine_intervals<P: Precision>(
    rep: &BidiagRep<P::Wide>,
    intervals: &[EigInterval<P::Wide>],
    rtol: f64,
    arith: Arithmetic,
) -> Refined<P::Wide> {
    if intervals.is_empty() {
        return Refined {
            intervals: Vec::new(),
            recertified: 0,
        };
    }
    let b = Bisector::<P>::new(rep, rtol, arith);
    let out = par_map(intervals, |iv| {
        let snapped = EigInterval {
            index: iv.index,
            lo: b.counter.snap(iv.lo),
            hi: b.counter.snap(iv.hi),
        };
        if b.converged(iv.lo, iv.hi) && snapped == *iv && b.certified(iv) {
            return (*iv, false);
        }
        if snapped.lo <= snapped.hi && b.certified(&snapped) {
            (b.run(snapped), false)
        } else {
            let (lo, hi) = b.enclosure;
            (
                b.run(EigInterval {
                    index: iv.index,
                    lo,
                    hi,
                }),
                true,
            )
        }
    });
    let recertified = out.iter().filter(|(_, r)| *r).count();
    Refined {
        intervals: out.into_iter().map(|(iv, _)| iv).collect(),
        recertified,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::{DoubleDouble, DoubleQuad, SingleDouble};
    use crate::tridiag::{ldl_factorize, SymTridiag};

    fn kac(n: usize) -> SymTridiag<f64> {
        let e = (1..n).map(|i| ((i * (n - i)) as f64).sqrt()).collect();
        SymTridiag::new(vec![0.0; n], e).unwrap()
    }

    fn certify<P: Precision>(rep: &BidiagRep<P::Wide>, iv: &EigInterval<P::Wide>, arith: Arithmetic) {
        let c = Counter::<P>::new(rep, arith);
        assert!(c.count(iv.lo) <= iv.index, "{iv:?}");
        assert!(c.count(iv.hi) > iv.index, "{iv:?}");
    }

    #[test]
    fn diagonal_middle_eigenvalue() {
        let rep = BidiagRep::from_data(vec![1.0, 2.0, 3.0], vec![0.0, 0.0], 0.0, 0, 2.0);
        for arith in [Arithmetic::Wide, Arithmetic::Narrow] {
            let ivs = bisect_eigenvalues::<SingleDouble>(&rep, &[1], 1e-6, arith);
            assert_eq!(ivs.len(), 1);
            assert!(ivs[0].lo <= 2.0 && 2.0 <= ivs[0].hi);
            assert!(ivs[0].width() <= 4e-6 * 1.0001);
            certify::<SingleDouble>(&rep, &ivs[0], arith);
        }
    }

    #[test]
    fn kac_spectrum() {
        let t = kac(5).map(DoubleDouble::from_f64);
        let mu = DoubleDouble::from_f64(-5.0);
        let rep = ldl_factorize(&t, mu);
        let ivs = bisect_eigenvalues::<DoubleQuad>(&rep, &[0, 1, 2, 3, 4], 1e-10, Arithmetic::Wide);
        for (iv, want) in ivs.iter().zip([-4.0, -2.0, 0.0, 2.0, 4.0]) {
            let got = (iv.mid() + mu).to_f64();
            assert!((got - want).abs() <= 1e-9 * 8.0, "{got} vs {want}");
            certify::<DoubleQuad>(&rep, iv, Arithmetic::Wide);
        }
    }

    #[test]
    fn zero_eigenvalue_uses_absolute_floor() {
        let t = kac(5).map(DoubleDouble::from_f64);
        let rep = ldl_factorize(&t, DoubleDouble::zero());
        let ivs = bisect_eigenvalues::<DoubleQuad>(&rep, &[2], 1e-20, Arithmetic::Wide);
        assert!(ivs[0].width().to_f64() <= 4.0 * DoubleDouble::EPS * rep.spdiam().to_f64());
        assert!(ivs[0].mid().abs().to_f64() < 1e-25);
    }

    #[test]
    fn one_two_one_spectrum() {
        let t = SymTridiag::new(vec![2.0; 4], vec![1.0; 3]).unwrap();
        let rep = ldl_factorize(&t, -0.5);
        let rtol = 1e-12;
        let ivs = bisect_eigenvalues::<SingleDouble>(&rep, &[0, 1, 2, 3], rtol, Arithmetic::Wide);
        for (k, iv) in ivs.iter().enumerate() {
            let want = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / 5.0).cos();
            let got = iv.mid() - 0.5;
            assert!((got - want).abs() <= 2.0 * rtol * (want + 0.5), "{got} vs {want}");
        }
    }

    #[test]
    fn empty_index_set() {
        let rep = BidiagRep::from_data(vec![1.0], vec![], 0.0, 0, 1.0);
        assert!(bisect_eigenvalues::<SingleDouble>(&rep, &[], 1e-3, Arithmetic::Wide).is_empty());
    }

    #[test]
    fn refine_is_idempotent_at_target() {
        let t = kac(5).map(DoubleDouble::from_f64);
        let rep = ldl_factorize(&t, DoubleDouble::from_f64(-5.0));
        let ivs = bisect_eigenvalues::<DoubleQuad>(&rep, &[0, 1, 2, 3, 4], 1e-8, Arithmetic::Wide);
        let again = refine_intervals::<DoubleQuad>(&rep, &ivs, 1e-8, Arithmetic::Wide);
        assert_eq!(again.intervals, ivs);
        assert_eq!(again.recertified, 0);
    }

    #[test]
    fn refine_shrinks_coarse_intervals() {
        let t = kac(5).map(DoubleDouble::from_f64);
        let mu = DoubleDouble::from_f64(-5.0);
        let rep = ldl_factorize(&t, mu);
        let coarse: Vec<_> = [1.0, 3.0, 5.0, 7.0, 9.0]
            .iter()
            .enumerate()
            .map(|(index, &c)| EigInterval {
                index,
                lo: DoubleDouble::from_f64(c - 0.25),
                hi: DoubleDouble::from_f64(c + 0.25),
            })
            .collect();
        let r = refine_intervals::<DoubleQuad>(&rep, &coarse, 1e-12, Arithmetic::Wide);
        assert_eq!(r.recertified, 0);
        for (iv, c) in r.intervals.iter().zip(&coarse) {
            assert!(iv.width() <= c.width());
            let floor = DoubleDouble::EPS * rep.spdiam().to_f64();
            assert!(iv.width().to_f64() <= (2e-12 * iv.hi.to_f64()).max(floor));
            certify::<DoubleQuad>(&rep, iv, Arithmetic::Wide);
        }
    }

    #[test]
    fn refine_recovers_from_bad_bracket() {
        let t = kac(5).map(DoubleDouble::from_f64);
        let rep = ldl_factorize(&t, DoubleDouble::from_f64(-5.0));
        let wrong = [EigInterval {
            index: 2,
            lo: DoubleDouble::from_f64(1.5),
            hi: DoubleDouble::from_f64(2.5),
        }];
        let r = refine_intervals::<DoubleQuad>(&rep, &wrong, 1e-12, Arithmetic::Wide);
        assert_eq!(r.recertified, 1);
        assert!((r.intervals[0].mid().to_f64() - 5.0).abs() < 1e-10);
    }

    #[test]
    fn narrow_refinement_tracks_wide() {
        let n = 100;
        let d: Vec<f64> = (0..n).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| 0.5 + ((i * 31) % 17) as f64 / 40.0).collect();
        let t = SymTridiag::new(d, e).unwrap();
        let (gl, _) = crate::tridiag::gershgorin_bounds(&t);
        let rep = ldl_factorize(&t, gl - 0.1);
        let idx: Vec<usize> = (0..n).collect();
        let rtol = 1e-2 * 1e-5;
        assert_eq!(counting_mode(n, rtol, f32::EPS as f64), Arithmetic::Wide);
        let rtol = 1e-3;
        assert_eq!(counting_mode(n, rtol, f32::EPS as f64), Arithmetic::Narrow);
        let narrow = bisect_eigenvalues::<SingleDouble>(&rep, &idx, rtol, Arithmetic::Narrow);
        let wide = bisect_eigenvalues::<SingleDouble>(&rep, &idx, 1e-15, Arithmetic::Wide);
        for (a, b) in narrow.iter().zip(&wide) {
            let bound = 40.0 * n as f64 * f32::EPS as f64 + rtol;
            assert!((a.mid() - b.mid()).abs() <= bound * b.mid().abs());
        }
    }
}
