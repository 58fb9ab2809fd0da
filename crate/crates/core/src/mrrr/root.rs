use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bisect::bisect_eigenvalues;
use crate::precision::{Precision, Real};
use crate::transforms::Arithmetic;
use crate::tridiag::{element_growth, gershgorin_bounds, ldl_factorize, repair_pivot, BidiagRep, SymTridiag};

/// Irreducible diagonal block of the input, scaled by `2^-scale_exp`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<W> {
    pub offset: usize,
    pub scale_exp: i32,
    pub t: SymTridiag<W>,
}

impl<W: Real> Block<W> {
    /// Maps an eigenvalue of the scaled block back to the input matrix.
    pub fn unscale(&self, x: W) -> W {
        x.mul_pow2(self.scale_exp)
    }
}

fn exponent_of(m: f64) -> i32 {
    let e = ((m.to_bits() >> 52) & 0x7ff) as i32;
    if e == 0 {
        m.log2().floor() as i32
    } else {
        e - 1023
    }
}

/// Splits `t` where `|e_i| <= eps_x |T|_1` and scales each block by a power of two
/// so that its largest Gershgorin endpoint lies in `[1, 2^20]`.
pub fn preprocess<P: Precision>(t: &SymTridiag<P::Narrow>) -> Vec<Block<P::Wide>> {
    let n = t.n();
    let thresh = P::eps_narrow() * t.norm1().to_f64();
    let mut cuts = vec![0];
    for (i, e) in t.offdiag().iter().enumerate() {
        if e.abs().to_f64() <= thresh {
            cuts.push(i + 1);
        }
    }
    cuts.push(n);
    cuts.windows(2)
        .map(|w| {
            let (s, end) = (w[0], w[1]);
            let d = &t.diag()[s..end];
            let e = &t.offdiag()[s..end - 1];
            let narrow = SymTridiag::from_parts(d.to_vec(), e.to_vec());
            let (gl, gu) = gershgorin_bounds(&narrow);
            let m = gl.abs().max(gu.abs()).to_f64();
            let scale_exp = if m == 0.0 || (1.0..=(1u64 << 20) as f64).contains(&m) {
                0
            } else {
                exponent_of(m)
            };
            let widen = |x: &P::Narrow| P::widen(*x).mul_pow2(-scale_exp);
            Block {
                offset: s,
                scale_exp,
                t: SymTridiag::from_parts(d.iter().map(widen).collect(), e.iter().map(widen).collect()),
            }
        })
        .collect()
}

/// End of the spectrum next to which the root shift is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootEnd {
    Left,
    Right,
}

/// End nearer the wanted index range; `None` for the whole spectrum.
pub(crate) fn subset_end(n: usize, wanted: Option<(usize, usize)>) -> Option<RootEnd> {
    match wanted {
        Some((lo, hi)) if !(lo == 0 && hi + 1 == n) => Some(if lo + hi < n { RootEnd::Left } else { RootEnd::Right }),
        _ => None,
    }
}

/// Classical Sturm count on the entries of `t`.
fn tridiag_count<W: Real>(t: &SymTridiag<W>, x: W, pivmin: W) -> usize {
    let (d, e) = (t.diag(), t.offdiag());
    let mut q = repair_pivot(d[0] - x, pivmin);
    let mut neg = usize::from(q < W::zero());
    for i in 1..t.n() {
        q = repair_pivot(d[i] - x - e[i - 1] * e[i - 1] / q, pivmin);
        neg += usize::from(q < W::zero());
    }
    neg
}

/// Definite factorization `T - mu I` with `mu` just beyond the extreme eigenvalue
/// at `end`, backed off by at least `backoff` times its magnitude.
fn end_root<P: Precision>(t: &SymTridiag<P::Wide>, end: RootEnd, backoff: f64) -> BidiagRep<P::Wide> {
    type W<P> = <P as Precision>::Wide;
    let n = t.n();
    let (gl, gu) = gershgorin_bounds(t);
    let spdiam = (gu - gl).max(gl.abs().max(gu.abs())).max(W::<P>::min_positive());
    let pivmin = (W::<P>::eps() * spdiam).max(W::<P>::min_positive());
    let floor = W::<P>::from_f64(4.0 * n as f64 * P::eps_wide()) * spdiam;
    let rtol = W::<P>::from_f64(4.0 * P::eps_narrow());
    let target = if end == RootEnd::Left { 0 } else { n - 1 };
    let mut lo = gl - floor - pivmin;
    let mut hi = gu + floor + pivmin;
    loop {
        let tol = (rtol * lo.abs().max(hi.abs())).max(floor);
        let mid = (lo + hi).mul_pow2(-1);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        if tridiag_count(t, mid, pivmin) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let mut delta = (hi - lo)
        .max(floor)
        .max(W::<P>::from_f64(backoff) * lo.abs().max(hi.abs()))
        .max(W::<P>::min_positive());
    loop {
        let mu = match end {
            RootEnd::Left => lo - delta,
            RootEnd::Right => hi + delta,
        };
        let rep = ldl_factorize(t, mu);
        let ok = match end {
            RootEnd::Left => rep.pivots().iter().all(|&p| p > W::<P>::zero()),
            RootEnd::Right => rep.pivots().iter().all(|&p| p < W::<P>::zero()),
        };
        if (ok && rep.is_finite()) || !delta.is_finite() {
            return rep;
        }
        delta = delta.mul_pow2(1);
    }
}

/// Root representation `T - mu I`, definite, with `mu` just outside the spectrum at
/// the end nearer the wanted indices, or at the end with less element growth when
/// the whole spectrum is wanted. `backoff` (the classification gaptol) bounds the
/// relative distance of `mu` from the extreme eigenvalue from below.
pub fn choose_root<P: Precision>(
    t: &SymTridiag<P::Wide>,
    wanted: Option<(usize, usize)>,
    backoff: f64,
) -> BidiagRep<P::Wide> {
    match subset_end(t.n(), wanted) {
        Some(end) => end_root::<P>(t, end, backoff),
        None => {
            let (gl, gu) = gershgorin_bounds(t);
            let spdiam = (gu - gl).max(P::Wide::min_positive());
            let left = end_root::<P>(t, RootEnd::Left, backoff);
            let right = end_root::<P>(t, RootEnd::Right, backoff);
            if element_growth(&right, spdiam) < element_growth(&left, spdiam) {
                right
            } else {
                left
            }
        }
    }
}

/// Multiplies every pivot and multiplier by `1 + xi u` with `u` uniform in `[-1, 1)`.
///
/// The draws come from a counter-based stream keyed by `(seed, stream)`; datum `j`
/// (pivots first, then multipliers) always receives the `j`-th draw.
pub fn perturb<W: Real>(rep: &BidiagRep<W>, xi: f64, seed: u64, stream: u64) -> BidiagRep<W> {
    let mut out = rep.clone();
    if xi == 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(0);
    let mut factor = || {
        let u = (rng.next_u64() >> 11) as f64 * 2f64.powi(-52) - 1.0;
        W::one() + W::from_f64(xi * u)
    };
    for x in out.d.iter_mut() {
        *x *= factor();
    }
    for x in out.l.iter_mut() {
        *x *= factor();
    }
    out.refresh();
    out
}

/// Per-block local index ranges covering the global eigenvalue indices `il..=iu`.
pub(crate) fn select_global<P: Precision>(
    blocks: &[Block<P::Wide>],
    il: usize,
    iu: usize,
    gaptol: f64,
) -> Vec<Option<(usize, usize)>> {
    let mut all: Vec<(P::Wide, usize, usize)> = Vec::new();
    for (k, b) in blocks.iter().enumerate() {
        let n = b.t.n();
        if n == 1 {
            all.push((b.unscale(b.t.diag()[0]), k, 0));
            continue;
        }
        let rep = choose_root::<P>(&b.t, None, gaptol);
        let idx: Vec<usize> = (0..n).collect();
        let rtol = 40.0 * n as f64 * P::eps_narrow();
        for iv in bisect_eigenvalues::<P>(&rep, &idx, rtol, Arithmetic::Narrow) {
            all.push((b.unscale(iv.mid() + rep.sigma), k, iv.index));
        }
    }
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut ranges: Vec<Option<(usize, usize)>> = vec![None; blocks.len()];
    for &(_, k, local) in &all[il..=iu] {
        ranges[k] = Some(match ranges[k] {
            None => (local, local),
            Some((a, b)) => (a.min(local), b.max(local)),
        });
    }
    ranges
}
