//! Accuracy metrics and independent oracles.

use rayon::prelude::*;
use thiserror::Error;

use crate::harness::Family;
use crate::precision::{Precision, Real};
use crate::tridiag::{EigenPair, SymTridiag};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("no eigenpairs to check")]
    NoPairs,
    #[error("eigenvector {index} has length {got}, expected {expected}")]
    Dimension { index: usize, got: usize, expected: usize },
    #[error("gap must be positive, got {0:e}")]
    NonPositiveGap(f64),
    #[error("dense oracle limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("no closed-form spectrum for family `{0}`")]
    UnsupportedFamily(String),
}

/// Largest scaled residual and largest off-diagonal inner product of a pair set.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    /// `max_i |T z_i - lambda_i z_i|_1 / |T|_1`
    pub r: f64,
    /// `max_{i != j} |z_i^T z_j|`
    pub o: f64,
    pub n: usize,
    pub k: usize,
    pub worst_residual: usize,
    pub worst_pair: Option<(usize, usize)>,
}

/// Residual and orthogonality measures, accumulated in the wide format.
pub fn residual_and_orthogonality<P: Precision>(
    t: &SymTridiag<P::Narrow>,
    pairs: &[EigenPair<P::Narrow>],
) -> Result<AccuracyReport, VerifyError> {
    let n = t.n();
    if pairs.is_empty() {
        return Err(VerifyError::NoPairs);
    }
    if let Some(p) = pairs.iter().find(|p| p.z.len() != n) {
        return Err(VerifyError::Dimension {
            index: p.index,
            got: p.z.len(),
            expected: n,
        });
    }
    let tw = t.map(P::widen);
    let norm = tw.norm1();
    let d = tw.diag();
    let e = tw.offdiag();

    let residuals: Vec<P::Wide> = pairs
        .par_iter()
        .map(|p| {
            let lam = P::widen(p.lambda);
            let z: Vec<P::Wide> = p.z.iter().map(|&x| P::widen(x)).collect();
            let mut s = P::Wide::zero();
            for i in 0..n {
                let mut r = (d[i] - lam) * z[i];
                if i > 0 {
                    r += e[i - 1] * z[i - 1];
                }
                if i + 1 < n {
                    r += e[i] * z[i + 1];
                }
                s += r.abs();
            }
            s
        })
        .collect();
    let (worst_residual, rmax) = residuals
        .iter()
        .enumerate()
        .fold((0, P::Wide::zero()), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let r = if norm > P::Wide::zero() {
        (rmax / norm).to_f64()
    } else {
        rmax.to_f64()
    };

    let k = pairs.len();
    let rows: Vec<(f64, usize)> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0, i);
            for j in i + 1..k {
                let v = P::dot(&pairs[i].z, &pairs[j].z).abs().to_f64();
                if v > best.0 {
                    best = (v, j);
                }
            }
            best
        })
        .collect();
    let mut o = 0.0;
    let mut worst_pair = None;
    for (i, &(v, j)) in rows.iter().enumerate() {
        if v > o {
            o = v;
            worst_pair = Some((pairs[i].index, pairs[j].index));
        }
    }
    Ok(AccuracyReport {
        r,
        o,
        n,
        k,
        worst_residual: pairs[worst_residual].index,
        worst_pair,
    })
}

/// Bound on the sine of the angle between an approximate and an exact eigenvector.
pub fn gap_bound(r_norm: f64, gap: f64) -> Result<f64, VerifyError> {
    if gap > 0.0 {
        Ok(r_norm / gap)
    } else {
        Err(VerifyError::NonPositiveGap(gap))
    }
}

/// Sine of the angle between two unit vectors.
pub fn sin_angle<W: Real>(u: &[W], v: &[W]) -> W {
    let c: W = u.iter().zip(v).map(|(&a, &b)| a * b).sum();
    u.iter()
        .zip(v)
        .map(|(&a, &b)| {
            let r = a - c * b;
            r * r
        })
        .sum::<W>()
        .sqrt()
}

pub const JACOBI_MAX_N: usize = 2000;

/// Dense eigendecomposition by cyclic Jacobi rotations, eigenvalues ascending.
/// Eigenvectors are returned as columns, `vectors[j]` belonging to `values[j]`.
pub fn jacobi_oracle<W: Real>(t: &SymTridiag<W>) -> Result<(Vec<W>, Vec<Vec<W>>), VerifyError> {
    let n = t.n();
    if n > JACOBI_MAX_N {
        return Err(VerifyError::TooLarge {
            n,
            max: JACOBI_MAX_N,
        });
    }
    let mut a = vec![W::zero(); n * n];
    let mut v = vec![W::zero(); n * n];
    for i in 0..n {
        a[i * n + i] = t.diag()[i];
        v[i * n + i] = W::one();
        if i + 1 < n {
            a[i * n + i + 1] = t.offdiag()[i];
            a[(i + 1) * n + i] = t.offdiag()[i];
        }
    }
    let frob = a.iter().map(|&x| x * x).sum::<W>().sqrt();
    let target = W::from_f64(n as f64 * W::EPS) * frob;
    let one = W::one();
    let two = W::from_f64(2.0);
    for _sweep in 0..100 {
        let off = {
            let mut s = W::zero();
            for p in 0..n {
                for q in p + 1..n {
                    s += a[p * n + q] * a[p * n + q];
                }
            }
            (s * two).sqrt()
        };
        if off <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == W::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let diff = aqq - app;
                let tn = if diff.abs() > W::from_f64(1e100) * apq.abs() {
                    apq / diff
                } else {
                    let theta = diff / (two * apq);
                    let tn = one / (theta.abs() + (theta * theta + one).sqrt());
                    if theta < W::zero() {
                        -tn
                    } else {
                        tn
                    }
                };
                let c = one / (tn * tn + one).sqrt();
                let s = tn * c;
                let tau = s / (one + c);
                let h = tn * apq;
                a[p * n + p] = app - h;
                a[q * n + q] = aqq + h;
                a[p * n + q] = W::zero();
                a[q * n + p] = W::zero();
                for r in 0..n {
                    if r != p && r != q {
                        let g = a[r * n + p];
                        let hh = a[r * n + q];
                        let np = g - s * (hh + g * tau);
                        let nq = hh + s * (g - hh * tau);
                        a[r * n + p] = np;
                        a[p * n + r] = np;
                        a[r * n + q] = nq;
                        a[q * n + r] = nq;
                    }
                }
                for r in 0..n {
                    let g = v[r * n + p];
                    let hh = v[r * n + q];
                    v[r * n + p] = g - s * (hh + g * tau);
                    v[r * n + q] = hh + s * (g - hh * tau);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| (0..n).map(|r| v[r * n + j]).collect())
        .collect();
    Ok((values, vectors))
}

fn sin_series<W: Real>(x: W) -> W {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0;
    loop {
        term = -(term * x2) / W::from_f64((k + 1.0) * (k + 2.0));
        k += 2.0;
        sum += term;
        if term.abs() <= W::eps() * sum.abs() * W::from_f64(0.25) {
            return sum;
        }
    }
}

/// Closed-form spectra, ascending: the Clement (Kac) matrix has eigenvalues
/// `-(n-1), -(n-3), ..., n-1`; the 1-2-1 matrix has `4 sin^2(k pi / (2(n+1)))`.
pub fn analytic_spectrum<W: Real>(family: Family, n: usize) -> Result<Vec<W>, VerifyError> {
    match family {
        Family::Clement => Ok((0..n)
            .map(|k| W::from_f64(2.0 * k as f64 - (n as f64 - 1.0)))
            .collect()),
        Family::OneTwoOne => {
            let denom = W::from_usize(2 * (n + 1));
            Ok((1..=n)
                .map(|k| {
                    let s = sin_series(W::pi() * W::from_usize(k) / denom);
                    W::from_f64(4.0) * s * s
                })
                .collect())
        }
        other => Err(VerifyError::UnsupportedFamily(other.name().to_string())),
    }
}

/// Record of how a solve partitioned the spectrum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassificationTrace {
    pub n: usize,
    /// Sizes of the groups formed at each root representation.
    pub root_groups: Vec<usize>,
    /// Depth of every representation that produced eigenpairs.
    pub node_depths: Vec<usize>,
}

/// Clustering ratio (largest root-level group over `n`) and maximum tree depth.
pub fn clustering_stats(trace: &ClassificationTrace) -> (f64, usize) {
    let largest = trace.root_groups.iter().copied().max().unwrap_or(0);
    let rho = if trace.n == 0 {
        0.0
    } else {
        largest as f64 / trace.n as f64
    };
    let d_max = trace.node_depths.iter().copied().max().unwrap_or(0);
    (rho, d_max)
}
