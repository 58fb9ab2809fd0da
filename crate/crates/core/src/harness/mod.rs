//! Test matrix families, matrix and eigenpair files, and the benchmark runner.

mod bench;
mod io;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::mrrr::ConfigError;
use crate::precision::{Precision, Real};
use crate::tridiag::{SymTridiag, TridiagError};
use crate::verify::VerifyError;

pub use bench::{paper_suite, quick_suite, read_csv, run_bench, write_csv, BenchCase, BenchRecord, CSV_HEADER};
pub use io::{format_hex, parse_scalar, read_matrix, read_pairs, write_matrix, write_pairs};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown matrix family `{0}`")]
    UnknownFamily(String),
    #[error("matrix size must be positive")]
    EmptyMatrix,
    #[error("family `file` needs a path")]
    MissingPath,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Matrix(#[from] TridiagError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Uniform,
    Geometric,
    OneTwoOne,
    /// Kac matrix: zero diagonal, `e_i = sqrt(i (n - i))`.
    Clement,
    Wilkinson,
    /// Jacobi matrix of the Hermite polynomials: zero diagonal, `e_i = sqrt(i)`.
    Hermite,
    File,
}

impl Family {
    pub const GENERATED: [Family; 6] = [
        Family::Uniform,
        Family::Geometric,
        Family::OneTwoOne,
        Family::Clement,
        Family::Wilkinson,
        Family::Hermite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Geometric => "geometric",
            Family::OneTwoOne => "one_two_one",
            Family::Clement => "clement",
            Family::Wilkinson => "wilkinson",
            Family::Hermite => "hermite",
            Family::File => "file",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "uniform" => Ok(Family::Uniform),
            "geometric" => Ok(Family::Geometric),
            "one_two_one" | "121" | "1_2_1" => Ok(Family::OneTwoOne),
            "clement" | "kac" => Ok(Family::Clement),
            "wilkinson" => Ok(Family::Wilkinson),
            "hermite" => Ok(Family::Hermite),
            "file" => Ok(Family::File),
            _ => Err(HarnessError::UnknownFamily(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSpec {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    pub path: Option<PathBuf>,
}

impl MatrixSpec {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        MatrixSpec {
            family,
            n,
            seed,
            path: None,
        }
    }

    pub fn from_file(path: impl Into<PathBuf>) -> Self {
        MatrixSpec {
            family: Family::File,
            n: 0,
            seed: 0,
            path: Some(path.into()),
        }
    }

    /// Dimension of the generated matrix; Wilkinson sizes are rounded up to odd.
    pub fn size(&self) -> usize {
        match self.family {
            Family::Wilkinson => self.n | 1,
            _ => self.n,
        }
    }
}

/// Generates `spec` in the wide format of `P`; spectra that depend on the
/// precision use the narrow unit roundoff of `P`.
pub fn generate_wide<P: Precision>(spec: &MatrixSpec) -> Result<SymTridiag<P::Wide>, HarnessError> {
    type W<P> = <P as Precision>::Wide;
    if spec.family == Family::File {
        let path = spec.path.as_ref().ok_or(HarnessError::MissingPath)?;
        let t: SymTridiag<P::Narrow> = read_matrix(std::fs::File::open(path)?)?;
        return Ok(t.map(P::widen));
    }
    let n = spec.size();
    if n == 0 {
        return Err(HarnessError::EmptyMatrix);
    }
    let eps = P::eps_narrow();
    let t = match spec.family {
        Family::OneTwoOne => {
            SymTridiag::from_parts(vec![W::<P>::from_f64(2.0); n], vec![W::<P>::one(); n - 1])
        }
        Family::Clement => SymTridiag::from_parts(
            vec![W::<P>::zero(); n],
            (1..n).map(|i| W::<P>::from_usize(i * (n - i)).sqrt()).collect(),
        ),
        Family::Hermite => SymTridiag::from_parts(
            vec![W::<P>::zero(); n],
            (1..n).map(|i| W::<P>::from_usize(i).sqrt()).collect(),
        ),
        Family::Wilkinson => {
            let m = n / 2;
            SymTridiag::from_parts(
                (0..n).map(|i| W::<P>::from_usize(i.abs_diff(m))).collect(),
                vec![W::<P>::one(); n - 1],
            )
        }
        Family::Uniform => {
            let lambdas: Vec<W<P>> = if n == 1 {
                vec![W::<P>::from_f64(eps)]
            } else {
                let step = W::<P>::from_f64(1.0 - eps) / W::<P>::from_usize(n - 1);
                (0..n)
                    .map(|i| W::<P>::from_f64(eps) + W::<P>::from_usize(i) * step)
                    .collect()
            };
            prescribed_spectrum(&lambdas, spec.seed)
        }
        Family::Geometric => {
            let lambdas: Vec<W<P>> = if n == 1 {
                vec![W::<P>::from_f64(eps)]
            } else {
                (1..=n)
                    .map(|i| W::<P>::from_f64(eps.powf((n - i) as f64 / (n - 1) as f64)))
                    .collect()
            };
            prescribed_spectrum(&lambdas, spec.seed)
        }
        Family::File => unreachable!(),
    };
    Ok(t)
}

/// Generates `spec` and rounds it to the narrow format of `P`.
pub fn generate<P: Precision>(spec: &MatrixSpec) -> Result<SymTridiag<P::Narrow>, HarnessError> {
    Ok(generate_wide::<P>(spec)?.map(P::narrow))
}

/// Tridiagonal matrix with eigenvalues `lambdas`: a random reflector applied to
/// `diag(lambdas)` on both sides, then Householder tridiagonalization.
pub fn prescribed_spectrum<W: Real>(lambdas: &[W], seed: u64) -> SymTridiag<W> {
    let n = lambdas.len();
    assert!(n > 0, "empty spectrum");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: Vec<W> = (0..n).map(|_| W::from_f64(StandardNormal.sample(&mut rng))).collect();
    let norm = g.iter().map(|&x| x * x).sum::<W>().sqrt();
    let v: Vec<W> = g.iter().map(|&x| x / norm).collect();
    let w2: Vec<W> = v.iter().map(|&x| x * x).collect();

    // (H D H)_ij = lambda_i delta_ij + 2 v_i v_j (c_i + c_j), c_i = sum_k (lambda_k - lambda_i) v_k^2
    let c: Vec<W> = lambdas
        .iter()
        .map(|&li| lambdas.iter().zip(&w2).map(|(&lk, &wk)| (lk - li) * wk).sum())
        .collect();
    let two = W::from_f64(2.0);
    let mut a = vec![W::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = two * v[i] * v[j] * (c[i] + c[j]);
        }
        a[i * n + i] += lambdas[i];
    }
    householder_tridiag(a, n)
}

fn householder_tridiag<W: Real>(mut a: Vec<W>, n: usize) -> SymTridiag<W> {
    let mut d = vec![W::zero(); n];
    let mut e = vec![W::zero(); n.saturating_sub(1)];
    let mut v = vec![W::zero(); n];
    let mut p = vec![W::zero(); n];
    for k in 0..n.saturating_sub(2) {
        d[k] = a[k * n + k];
        let x0 = a[(k + 1) * n + k];
        let tail: W = (k + 2..n).map(|i| a[i * n + k] * a[i * n + k]).sum();
        if tail == W::zero() {
            e[k] = x0;
            continue;
        }
        let norm = (x0 * x0 + tail).sqrt();
        let alpha = if x0 > W::zero() { -norm } else { norm };
        let m = n - k - 1;
        v[0] = x0 - alpha;
        for i in 1..m {
            v[i] = a[(k + 1 + i) * n + k];
        }
        let beta = W::from_f64(2.0) / (v[0] * v[0] + tail);
        for i in 0..m {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            p[i] = beta * row.iter().zip(&v[..m]).map(|(&x, &y)| x * y).sum::<W>();
        }
        let kk = beta.mul_pow2(-1) * v[..m].iter().zip(&p[..m]).map(|(&x, &y)| x * y).sum::<W>();
        for i in 0..m {
            p[i] -= kk * v[i];
        }
        for i in 0..m {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for (j, x) in row.iter_mut().enumerate() {
                *x -= vi * p[j] + wi * v[j];
            }
        }
        e[k] = alpha;
    }
    if n >= 2 {
        d[n - 2] = a[(n - 2) * n + n - 2];
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    d[n - 1] = a[n * n - 1];
    SymTridiag::from_parts(d, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::{DoubleDouble, DoubleQuad, SingleDouble};
    use crate::verify::jacobi_oracle;

    #[test]
    fn family_examples() {
        let t = generate::<DoubleQuad>(&MatrixSpec::new(Family::Clement, 5, 0)).unwrap();
        assert_eq!(t.diag(), &[0.0; 5]);
        assert_eq!(t.offdiag(), &[2.0, 6f64.sqrt(), 6f64.sqrt(), 2.0]);
        let t = generate::<DoubleQuad>(&MatrixSpec::new(Family::Wilkinson, 4, 0)).unwrap();
        assert_eq!(t.diag(), &[2.0, 1.0, 0.0, 1.0, 2.0]);
        assert_eq!(t.offdiag(), &[1.0; 4]);
        let t = generate::<SingleDouble>(&MatrixSpec::new(Family::OneTwoOne, 3, 0)).unwrap();
        assert_eq!((t.diag(), t.offdiag()), (&[2.0f32; 3][..], &[1.0f32; 2][..]));
        let t = generate::<DoubleQuad>(&MatrixSpec::new(Family::Hermite, 4, 0)).unwrap();
        assert_eq!(t.offdiag(), &[1.0, 2f64.sqrt(), 3f64.sqrt()]);
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::GENERATED.into_iter().chain([Family::File]) {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("laplace".parse::<Family>().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        for f in Family::GENERATED {
            let a = generate::<SingleDouble>(&MatrixSpec::new(f, 30, 9)).unwrap();
            let b = generate::<SingleDouble>(&MatrixSpec::new(f, 30, 9)).unwrap();
            assert_eq!(a, b, "{f}");
        }
        let a = generate::<DoubleQuad>(&MatrixSpec::new(Family::Uniform, 30, 1)).unwrap();
        let b = generate::<DoubleQuad>(&MatrixSpec::new(Family::Uniform, 30, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn zero_size_is_rejected() {
        assert!(matches!(
            generate::<DoubleQuad>(&MatrixSpec::new(Family::Clement, 0, 0)),
            Err(HarnessError::EmptyMatrix)
        ));
    }

    #[test]
    fn constant_spectrum_stays_diagonal() {
        let t = prescribed_spectrum(&[1.5f64; 7], 3);
        assert!(t.offdiag().iter().all(|&x| x == 0.0));
        assert!(t.diag().iter().all(|&x| (x - 1.5).abs() < 1e-15));
    }

    #[test]
    fn two_by_two_invariants() {
        let t = prescribed_spectrum(&[1.0f64, 3.0], 11);
        let (a, c, b) = (t.diag()[0], t.diag()[1], t.offdiag()[0]);
        assert!((a + c - 4.0).abs() < 1e-14);
        assert!((a * c - b * b - 3.0).abs() < 1e-13);
    }

    #[test]
    fn oracle_recovers_prescribed_spectrum() {
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut lambdas: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lw: Vec<DoubleDouble> = lambdas.iter().map(|&x| DoubleDouble::from_f64(x)).collect();
        let t = prescribed_spectrum(&lw, 5);
        let (vals, _) = jacobi_oracle(&t).unwrap();
        let spdiam = (lw[n - 1] - lw[0]).to_f64();
        for (a, b) in vals.iter().zip(&lw) {
            assert!((*a - *b).abs().to_f64() <= 50.0 * n as f64 * DoubleDouble::EPS * spdiam);
        }
        let trace: DoubleDouble = t.diag().iter().copied().sum();
        let want: DoubleDouble = lw.iter().copied().sum();
        assert!((trace - want).abs().to_f64() <= 50.0 * n as f64 * DoubleDouble::EPS * spdiam);
    }

    #[test]
    fn uniform_and_geometric_spectra() {
        let n = 40;
        for f in [Family::Uniform, Family::Geometric] {
            let t = generate_wide::<DoubleQuad>(&MatrixSpec::new(f, n, 0)).unwrap();
            let (vals, _) = jacobi_oracle(&t).unwrap();
            assert!((vals[0].to_f64() - f64::EPSILON / 2.0).abs() < 1e-28, "{f}");
            assert!((vals[n - 1].to_f64() - 1.0).abs() < 1e-28, "{f}");
        }
    }
}
