//! Symmetric tridiagonal matrices and their bidiagonal / twisted factorizations.

use thiserror::Error;

use crate::precision::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TridiagError {
    #[error("matrix dimension must be at least 1")]
    Empty,
    #[error("expected {expected} off-diagonal entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite entry at position {0}")]
    NonFinite(usize),
}

/// Real symmetric tridiagonal matrix stored as its diagonal and sub-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag<T> {
    d: Vec<T>,
    e: Vec<T>,
}

impl<T: Real> SymTridiag<T> {
    pub fn new(d: Vec<T>, e: Vec<T>) -> Result<Self, TridiagError> {
        if d.is_empty() {
            return Err(TridiagError::Empty);
        }
        if e.len() + 1 != d.len() {
            return Err(TridiagError::LengthMismatch {
                expected: d.len() - 1,
                got: e.len(),
            });
        }
        if let Some(i) = d.iter().chain(&e).position(|x| !x.is_finite()) {
            return Err(TridiagError::NonFinite(i));
        }
        Ok(SymTridiag { d, e })
    }

    pub(crate) fn from_parts(d: Vec<T>, e: Vec<T>) -> Self {
        debug_assert_eq!(e.len() + 1, d.len());
        SymTridiag { d, e }
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn diag(&self) -> &[T] {
        &self.d
    }

    pub fn offdiag(&self) -> &[T] {
        &self.e
    }

    pub fn into_parts(self) -> (Vec<T>, Vec<T>) {
        (self.d, self.e)
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> SymTridiag<U> {
        SymTridiag {
            d: self.d.iter().map(|&x| f(x)).collect(),
            e: self.e.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.d[i].abs();
                if i > 0 {
                    s += self.e[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.e[i].abs();
                }
                s
            })
            .fold(T::zero(), T::max)
    }

    /// `T * x`.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.d[i] * x[i];
                if i > 0 {
                    s += self.e[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.e[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

/// Interval `[gl, gu]` containing every eigenvalue.
pub fn gershgorin_bounds<T: Real>(t: &SymTridiag<T>) -> (T, T) {
    let n = t.n();
    let mut gl = T::max_value();
    let mut gu = -T::max_value();
    for i in 0..n {
        let mut r = T::zero();
        if i > 0 {
            r += t.e[i - 1].abs();
        }
        if i + 1 < n {
            r += t.e[i].abs();
        }
        gl = gl.min(t.d[i] - r);
        gu = gu.max(t.d[i] + r);
    }
    (gl, gu)
}

/// Replaces a pivot smaller than `pivmin` in magnitude by `±pivmin`, keeping its sign;
/// an exact zero becomes `+pivmin`.
#[inline(always)]
pub(crate) fn repair_pivot<T: Real>(p: T, pivmin: T) -> T {
    if p.abs() < pivmin {
        if p < T::zero() {
            -pivmin
        } else {
            pivmin
        }
    } else {
        p
    }
}

/// Lower bidiagonal factorization `L D L^T` of a shifted block (N-representation).
#[derive(Debug, Clone, PartialEq)]
pub struct BidiagRep<W> {
    pub(crate) d: Vec<W>,
    pub(crate) l: Vec<W>,
    pub(crate) ld: Vec<W>,
    pub(crate) lld: Vec<W>,
    pub(crate) sigma: W,
    pub(crate) depth: usize,
    /// Spectral diameter estimate of the root block, shared by the whole tree.
    pub(crate) spdiam: W,
    pub(crate) pivmin: W,
}

impl<W: Real> BidiagRep<W> {
    /// Builds a representation from explicit pivots and multipliers.
    pub fn from_data(pivots: Vec<W>, mult: Vec<W>, sigma: W, depth: usize, spdiam: W) -> Self {
        assert_eq!(pivots.len(), mult.len() + 1, "need n pivots and n-1 multipliers");
        let pivmin = pivmin_for(spdiam);
        let mut rep = BidiagRep {
            d: pivots,
            l: mult,
            ld: Vec::new(),
            lld: Vec::new(),
            sigma,
            depth,
            spdiam,
            pivmin,
        };
        for p in &mut rep.d {
            *p = repair_pivot(*p, pivmin);
        }
        rep.refresh();
        rep
    }

    pub(crate) fn refresh(&mut self) {
        self.ld = self.d.iter().zip(&self.l).map(|(&d, &l)| d * l).collect();
        self.lld = self.ld.iter().zip(&self.l).map(|(&ld, &l)| ld * l).collect();
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn pivots(&self) -> &[W] {
        &self.d
    }

    pub fn mult(&self) -> &[W] {
        &self.l
    }

    pub fn sigma(&self) -> W {
        self.sigma
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn spdiam(&self) -> W {
        self.spdiam
    }

    pub fn pivmin(&self) -> W {
        self.pivmin
    }

    /// All pivots share one sign.
    pub fn is_definite(&self) -> bool {
        let pos = self.d.iter().all(|&p| p > W::zero());
        let neg = self.d.iter().all(|&p| p < W::zero());
        pos || neg
    }

    pub fn is_finite(&self) -> bool {
        self.d.iter().chain(&self.l).all(|x| x.is_finite())
    }

    /// Wide-precision storage held by this representation, in scalars.
    pub fn footprint(&self) -> usize {
        self.d.len() + self.l.len() + self.ld.len() + self.lld.len()
    }
}

pub(crate) fn pivmin_for<W: Real>(spdiam: W) -> W {
    (W::eps() * spdiam).max(W::min_positive())
}

fn spdiam_estimate<W: Real>(t: &SymTridiag<W>) -> W {
    let (gl, gu) = gershgorin_bounds(t);
    let w = gu - gl;
    if w > W::zero() {
        w
    } else {
        t.d.iter().fold(W::zero(), |m, x| m.max(x.abs())).max(W::one())
    }
}

/// Factors `T - mu I = L D L^T`, repairing pivots below `eps * spdiam(T)`.
pub fn ldl_factorize<W: Real>(t: &SymTridiag<W>, mu: W) -> BidiagRep<W> {
    let n = t.n();
    let spdiam = spdiam_estimate(t);
    let pivmin = pivmin_for(spdiam);
    let mut d = Vec::with_capacity(n);
    let mut l = Vec::with_capacity(n - 1);
    let mut p = repair_pivot(t.d[0] - mu, pivmin);
    d.push(p);
    for i in 0..n - 1 {
        let li = t.e[i] / p;
        l.push(li);
        p = repair_pivot(t.d[i + 1] - mu - li * t.e[i], pivmin);
        d.push(p);
    }
    let mut rep = BidiagRep {
        d,
        l,
        ld: Vec::new(),
        lld: Vec::new(),
        sigma: mu,
        depth: 0,
        spdiam,
        pivmin,
    };
    rep.refresh();
    rep
}

/// Entries of the tridiagonal matrix `L D L^T` represented by `rep`.
pub fn reconstruct_entries<W: Real>(rep: &BidiagRep<W>) -> SymTridiag<W> {
    let n = rep.n();
    let mut diag = Vec::with_capacity(n);
    diag.push(rep.d[0]);
    for i in 0..n - 1 {
        diag.push(rep.d[i + 1] + rep.lld[i]);
    }
    SymTridiag::from_parts(diag, rep.ld.clone())
}

/// Largest entry of `|L| |D| |L^T|` relative to `spdiam_root`.
pub fn element_growth<W: Real>(rep: &BidiagRep<W>, spdiam_root: W) -> f64 {
    let n = rep.n();
    let mut m = W::zero();
    for i in 0..n {
        let mut diag = rep.d[i].abs();
        if i > 0 {
            diag += rep.lld[i - 1].abs();
            m = m.max(rep.ld[i - 1].abs());
        }
        m = m.max(diag);
    }
    (m / spdiam_root).to_f64()
}

/// Eigenvalue with its unit eigenvector; `index` is the zero-based position in the
/// ascending spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub index: usize,
    pub lambda: T,
    pub z: Vec<T>,
}

/// Twisted factorization `N_k Delta_k N_k^T` of `L D L^T - lambda I`.
#[derive(Debug, Clone)]
pub struct TwistedRep<W> {
    pub(crate) lambda: W,
    pub(crate) twist: usize,
    pub(crate) gamma: W,
    pub(crate) dplus: Vec<W>,
    pub(crate) lplus: Vec<W>,
    pub(crate) omega: Vec<W>,
    pub(crate) uminus: Vec<W>,
}

impl<W: Real> TwistedRep<W> {
    pub fn n(&self) -> usize {
        self.dplus.len()
    }

    pub fn lambda(&self) -> W {
        self.lambda
    }

    /// Zero-based twist index.
    pub fn twist(&self) -> usize {
        self.twist
    }

    pub fn gamma(&self) -> W {
        self.gamma
    }

    /// Forward pivots above the twist.
    pub fn dplus(&self) -> &[W] {
        &self.dplus[..self.twist]
    }

    /// Backward pivots below the twist.
    pub fn omega(&self) -> &[W] {
        &self.omega[self.twist + 1..]
    }

    pub fn lplus(&self) -> &[W] {
        &self.lplus[..self.twist]
    }

    pub fn uminus(&self) -> &[W] {
        &self.uminus[self.twist..]
    }

    /// Negative eigenvalue count of `Delta_k`, i.e. the number of eigenvalues below `lambda`.
    pub fn negcount(&self) -> usize {
        let neg = |x: &&W| **x < W::zero();
        self.dplus().iter().filter(neg).count()
            + self.omega().iter().filter(neg).count()
            + usize::from(self.gamma < W::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::DoubleDouble;
    use proptest::prelude::*;

    fn t2() -> SymTridiag<f64> {
        SymTridiag::new(vec![2.0, 2.0], vec![1.0]).unwrap()
    }

    fn one_two_one(n: usize) -> SymTridiag<f64> {
        SymTridiag::new(vec![2.0; n], vec![1.0; n - 1]).unwrap()
    }

    #[test]
    fn construction_is_validated() {
        assert_eq!(SymTridiag::<f64>::new(vec![], vec![]), Err(TridiagError::Empty));
        assert!(matches!(
            SymTridiag::new(vec![1.0, 2.0], vec![]),
            Err(TridiagError::LengthMismatch { .. })
        ));
        assert_eq!(
            SymTridiag::new(vec![1.0, f64::NAN], vec![0.0]),
            Err(TridiagError::NonFinite(1))
        );
    }

    #[test]
    fn gershgorin_examples() {
        let diag = SymTridiag::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(gershgorin_bounds(&diag), (1.0, 3.0));
        let t = SymTridiag::new(vec![2.0, 1.0], vec![1.0]).unwrap();
        assert_eq!(gershgorin_bounds(&t), (0.0, 3.0));
        assert_eq!(gershgorin_bounds(&one_two_one(3)), (0.0, 4.0));
    }

    #[test]
    fn ldl_examples() {
        let rep = ldl_factorize(&t2(), 0.0);
        assert_eq!(rep.pivots(), &[2.0, 1.5]);
        assert_eq!(rep.mult(), &[0.5]);

        let rep = ldl_factorize(&t2(), 1.0);
        assert_eq!(rep.pivots()[0], 1.0);
        assert_eq!(rep.mult(), &[1.0]);
        let p = rep.pivots()[1];
        assert!(p > 0.0 && p <= 4.0 * f64::EPS * rep.spdiam());

        let diag = SymTridiag::new(vec![1.0, 2.0, 3.0], vec![0.0, 0.0]).unwrap();
        let rep = ldl_factorize(&diag, 0.0);
        assert_eq!(rep.pivots(), &[1.0, 2.0, 3.0]);
        assert_eq!(rep.mult(), &[0.0, 0.0]);
    }

    #[test]
    fn reconstruct_examples() {
        let rep = BidiagRep::from_data(vec![2.0, 1.5], vec![0.5], 0.0, 0, 4.0);
        let t = reconstruct_entries(&rep);
        assert_eq!(t.diag(), &[2.0, 2.0]);
        assert_eq!(t.offdiag(), &[1.0]);

        let rep = BidiagRep::from_data(vec![3.0, -1.0, 2.0], vec![0.0, 0.0], 0.0, 0, 4.0);
        let t = reconstruct_entries(&rep);
        assert_eq!(t.diag(), &[3.0, -1.0, 2.0]);
        assert_eq!(t.offdiag(), &[0.0, 0.0]);
    }

    #[test]
    fn element_growth_examples() {
        let rep = BidiagRep::from_data(vec![1.0, 2.0, 3.0], vec![0.0, 0.0], 0.0, 0, 2.0);
        assert_eq!(element_growth(&rep, 2.0), 1.5);

        let zero = BidiagRep {
            d: vec![0.0; 3],
            l: vec![0.0; 2],
            ld: vec![0.0; 2],
            lld: vec![0.0; 2],
            sigma: 0.0,
            depth: 0,
            spdiam: 1.0,
            pivmin: 0.0,
        };
        assert_eq!(element_growth(&zero, 1.0), 0.0);

        let tiny = 1e-14;
        let rep = BidiagRep::from_data(vec![1.0, tiny, 1.0], vec![1.0, 1e8], 0.0, 0, 4.0);
        assert!(element_growth(&rep, 4.0) > 1e1);
    }

    #[test]
    fn definiteness() {
        assert!(ldl_factorize(&t2(), -0.5).is_definite());
        assert!(ldl_factorize(&t2(), 3.5).is_definite());
        assert!(!ldl_factorize(&t2(), 2.0).is_definite());
    }

    #[test]
    fn norm_and_apply() {
        let t = one_two_one(4);
        assert_eq!(t.norm1(), 4.0);
        assert_eq!(t.apply(&[1.0, 1.0, 1.0, 1.0]), vec![3.0, 4.0, 4.0, 3.0]);
    }

    fn well_conditioned() -> impl Strategy<Value = SymTridiag<DoubleDouble>> {
        (1usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec(4.0f64..8.0, n),
                proptest::collection::vec(-1.5f64..1.5, n - 1),
            )
                .prop_map(|(d, e)| {
                    SymTridiag::new(d, e).unwrap().map(DoubleDouble::from_f64)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn factor_reconstruct_roundtrip(t in well_conditioned()) {
            let n = t.n();
            let back = reconstruct_entries(&ldl_factorize(&t, DoubleDouble::zero()));
            let tol = 8.0 * n as f64 * DoubleDouble::EPS;
            for (a, b) in back.diag().iter().zip(t.diag()) {
                prop_assert!(((*a - *b) / *b).abs().to_f64() <= tol);
            }
            for (a, b) in back.offdiag().iter().zip(t.offdiag()) {
                if b.to_f64() != 0.0 {
                    prop_assert!(((*a - *b) / *b).abs().to_f64() <= tol);
                }
            }
        }

        #[test]
        fn gershgorin_contains_rayleigh_quotients(t in well_conditioned(), v in proptest::collection::vec(-1.0f64..1.0, 40)) {
            let t = t.map(|x| x.to_f64());
            let x = &v[..t.n()];
            let nn: f64 = x.iter().map(|a| a * a).sum();
            prop_assume!(nn > 1e-3);
            let q: f64 = t.apply(x).iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / nn;
            let (gl, gu) = gershgorin_bounds(&t);
            prop_assert!(gl - 1e-12 <= q && q <= gu + 1e-12);
        }
    }
}
