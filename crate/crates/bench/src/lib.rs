//! Fixtures shared by the criterion benchmarks.

use mr3mix::harness::{generate, Family, MatrixSpec};
use mr3mix::precision::Real;
use mr3mix::tridiag::{gershgorin_bounds, ldl_factorize, BidiagRep};
use mr3mix::{Precision, SymTridiag};

/// Suite matrix of the given family, seed 1.
pub fn matrix<P: Precision>(family: Family, n: usize) -> SymTridiag<P::Narrow> {
    generate::<P>(&MatrixSpec::new(family, n, 1)).expect("generated families never fail")
}

/// Positive definite representation of a suite matrix, shifted just below its
/// Gershgorin interval.
pub fn definite_rep<P: Precision>(family: Family, n: usize) -> BidiagRep<P::Wide> {
    let t = matrix::<P>(family, n).map(P::widen);
    let (gl, gu) = gershgorin_bounds(&t);
    ldl_factorize(&t, gl - (gu - gl).mul_pow2(-6))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mr3mix::SingleDouble;

    #[test]
    fn fixtures() {
        assert_eq!(matrix::<SingleDouble>(Family::Wilkinson, 10).n(), 11);
        assert!(definite_rep::<SingleDouble>(Family::OneTwoOne, 50).is_definite());
    }
}
