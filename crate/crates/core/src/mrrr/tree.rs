use std::ops::Range;

use rayon::prelude::*;

use crate::bisect::{bisect_eigenvalues, refine_intervals, EigInterval};
use crate::precision::{Precision, Real};
use crate::transforms::{dstqds, negcount, Arithmetic};
use crate::tridiag::{element_growth, BidiagRep};

use super::classify::{classify, reldist};
use super::root::{choose_root, perturb, Block};
use super::rqi::{bisect_and_solve, rqi_singleton};
use super::{BlockOut, Counters, SolverConfig};

/// Child representation produced for a cluster.
#[derive(Debug, Clone)]
pub struct ClusterShift<W> {
    pub child: BidiagRep<W>,
    /// Cluster enclosures in child coordinates, refined for classification.
    pub intervals: Vec<EigInterval<W>>,
    pub tau: W,
    /// The child passed the element growth test.
    pub robust: bool,
    pub recertified: usize,
}

/// Nearest eigenvalue bounds outside a set of enclosures: the upper end of the
/// left neighbour and the lower end of the right neighbour.
type Outer<W> = (Option<W>, Option<W>);

/// Refines enclosures to relative width `rtol`: narrow counts down to `40 n eps_x`,
/// then wide certification, then wide counts if `rtol` asks for more.
fn hybrid_refine<P: Precision>(
    rep: &BidiagRep<P::Wide>,
    ivs: &[EigInterval<P::Wide>],
    rtol: f64,
) -> (Vec<EigInterval<P::Wide>>, usize) {
    let narrow_limit = 40.0 * rep.n() as f64 * P::eps_narrow();
    let coarse = refine_intervals::<P>(rep, ivs, rtol.max(narrow_limit), Arithmetic::Narrow);
    let mut out = coarse.intervals;
    let mut recert = coarse.recertified + harden::<P>(rep, &mut out);
    if rtol < narrow_limit {
        let fine = refine_intervals::<P>(rep, &out, rtol, Arithmetic::Wide);
        recert += fine.recertified;
        out = fine.intervals;
    }
    (out, recert)
}

/// Widens narrow-certified enclosures until wide counts certify them.
fn harden<P: Precision>(rep: &BidiagRep<P::Wide>, ivs: &mut [EigInterval<P::Wide>]) -> usize {
    type W<P> = <P as Precision>::Wide;
    let n = rep.n();
    let count = |x: W<P>| negcount(&rep.d, &rep.lld, x, rep.pivmin);
    let rel = W::<P>::from_f64(20.0 * n as f64 * P::eps_narrow());
    let floor = rep.pivmin + W::<P>::from_f64(P::eps_wide()) * rep.spdiam;
    let mut rebuilt = 0;
    for iv in ivs.iter_mut() {
        let mut pad = rel * iv.lo.abs().max(iv.hi.abs()) + floor;
        let mut done = false;
        for _ in 0..=8 {
            let (lo, hi) = (iv.lo - pad, iv.hi + pad);
            if count(lo) <= iv.index && count(hi) > iv.index {
                iv.lo = lo;
                iv.hi = hi;
                done = true;
                break;
            }
            pad = pad.mul_pow2(2);
        }
        if !done {
            let rtol = 40.0 * n as f64 * P::eps_narrow();
            *iv = bisect_eigenvalues::<P>(rep, &[iv.index], rtol, Arithmetic::Wide)[0];
            rebuilt += 1;
        }
    }
    rebuilt
}

/// Shifts `rep` next to the cluster `ivs` and re-encloses its eigenvalues in the child.
///
/// Candidates alternate between the left and right cluster ends, backing off
/// geometrically; the first with element growth within the threshold wins, else
/// the one with least growth.
pub fn process_cluster<P: Precision>(
    rep: &BidiagRep<P::Wide>,
    ivs: &[EigInterval<P::Wide>],
    outer: (Option<P::Wide>, Option<P::Wide>),
    config: &SolverConfig,
) -> ClusterShift<P::Wide> {
    type W<P> = <P as Precision>::Wide;
    let n = rep.n();
    let eps_y = W::<P>::from_f64(P::eps_wide());
    let (first, last) = (ivs[0], ivs[ivs.len() - 1]);
    let room_left = outer.0.map_or(W::<P>::max_value(), |b| (first.lo - b).mul_pow2(-1));
    let room_right = outer.1.map_or(W::<P>::max_value(), |b| (b - last.hi).mul_pow2(-1));
    let base_left = first.width().max(eps_y.mul_pow2(2) * first.lo.abs()).max(rep.pivmin);
    let base_right = last.width().max(eps_y.mul_pow2(2) * last.hi.abs()).max(rep.pivmin);
    let elg_max = config.elg_threshold(n);

    let mut best: Option<(f64, W<P>, BidiagRep<W<P>>)> = None;
    let mut accepted = None;
    let mut tried: Vec<W<P>> = Vec::with_capacity(16);
    'search: for k in 0..8 {
        let left = first.lo - base_left.mul_pow2(2 * k).min(room_left.max(base_left));
        let right = last.hi + base_right.mul_pow2(2 * k).min(room_right.max(base_right));
        for tau in [left, right] {
            if tried.contains(&tau) {
                continue;
            }
            tried.push(tau);
            let child = dstqds(rep, tau);
            if !child.is_finite() {
                continue;
            }
            let growth = element_growth(&child, rep.spdiam);
            if growth <= elg_max {
                accepted = Some((tau, child));
                break 'search;
            }
            if best.as_ref().is_none_or(|b| growth < b.0) {
                best = Some((growth, tau, child));
            }
        }
    }
    let robust = accepted.is_some();
    let (tau, child) = accepted.unwrap_or_else(|| {
        let (_, tau, child) = best.expect("at least one finite shift candidate");
        (tau, child)
    });

    let two_n = W::<P>::from_f64(2.0 * n as f64);
    let moved: Vec<EigInterval<W<P>>> = ivs
        .iter()
        .map(|iv| {
            let slack = two_n * eps_y * (iv.lo.abs() + iv.hi.abs() + tau.abs()) + child.pivmin;
            let s = iv.shifted(tau);
            EigInterval {
                index: s.index,
                lo: s.lo - slack,
                hi: s.hi + slack,
            }
        })
        .collect();
    let (intervals, recertified) = hybrid_refine::<P>(&child, &moved, 1e-2 * config.gaptol);
    ClusterShift {
        child,
        intervals,
        tau,
        robust,
        recertified,
    }
}

/// Pair in block coordinates: local index, unscaled eigenvalue, narrow unit vector.
type LocalPair<W, N> = (usize, W, Vec<N>);

struct NodeOut<W, N> {
    pairs: Vec<LocalPair<W, N>>,
    depths: Vec<usize>,
    counters: Counters,
}

impl<W, N> NodeOut<W, N> {
    fn new() -> Self {
        NodeOut {
            pairs: Vec::new(),
            depths: Vec::new(),
            counters: Counters::default(),
        }
    }

    fn absorb(&mut self, o: NodeOut<W, N>) {
        self.pairs.extend(o.pairs);
        self.depths.extend(o.depths);
        self.counters.merge(&o.counters);
    }
}

struct Ctx<'a, W> {
    config: &'a SolverConfig,
    block: &'a Block<W>,
    wanted: (usize, usize),
}

impl<W: Real> Ctx<'_, W> {
    fn intersects(&self, ivs: &[EigInterval<W>]) -> bool {
        let (a, b) = (ivs[0].index, ivs[ivs.len() - 1].index);
        a <= self.wanted.1 && b >= self.wanted.0
    }

    fn is_wanted(&self, index: usize) -> bool {
        (self.wanted.0..=self.wanted.1).contains(&index)
    }
}

fn emit<P: Precision>(
    ctx: &Ctx<'_, P::Wide>,
    rep: &BidiagRep<P::Wide>,
    index: usize,
    lambda: P::Wide,
    z: Vec<P::Wide>,
    out: &mut NodeOut<P::Wide, P::Narrow>,
) {
    let z = z.into_iter().map(P::narrow).collect();
    out.pairs.push((index, ctx.block.unscale(lambda + rep.sigma), z));
    out.depths.push(rep.depth);
}

fn neighbour_bounds<W: Real>(ivs: &[EigInterval<W>], g: &Range<usize>, outer: Outer<W>) -> Outer<W> {
    let left = if g.start > 0 { Some(ivs[g.start - 1].hi) } else { outer.0 };
    let right = if g.end < ivs.len() { Some(ivs[g.end].lo) } else { outer.1 };
    (left, right)
}

fn process_group<P: Precision>(
    ctx: &Ctx<'_, P::Wide>,
    rep: &BidiagRep<P::Wide>,
    ivs: &[EigInterval<P::Wide>],
    g: Range<usize>,
    outer: Outer<P::Wide>,
) -> NodeOut<P::Wide, P::Narrow> {
    let mut out = NodeOut::new();
    let bounds = neighbour_bounds(ivs, &g, outer);
    let members = &ivs[g];
    if members.len() == 1 {
        let iv = &members[0];
        if !ctx.is_wanted(iv.index) {
            return out;
        }
        let inf = <P::Wide as Real>::max_value();
        let left = bounds.0.map_or(inf, |b| iv.lo - b);
        let right = bounds.1.map_or(inf, |b| b - iv.hi);
        let gap = left.min(right).max(rep.pivmin);
        let r = rqi_singleton::<P>(rep, iv, gap, ctx.config);
        out.counters.rqi_fallbacks += usize::from(r.fell_back);
        emit::<P>(ctx, rep, iv.index, r.pair.lambda, r.pair.z, &mut out);
        return out;
    }
    if rep.depth + 1 >= ctx.config.max_depth {
        out.counters.depth_fallbacks += 1;
        for iv in members.iter().filter(|iv| ctx.is_wanted(iv.index)) {
            let p = bisect_and_solve::<P>(rep, iv);
            emit::<P>(ctx, rep, iv.index, p.lambda, p.z, &mut out);
        }
        return out;
    }
    let shift = process_cluster::<P>(rep, members, bounds, ctx.config);
    out.counters.robustness_failures += usize::from(!shift.robust);
    out.counters.recertifications += shift.recertified;
    let tau = shift.tau;
    let child_outer = (bounds.0.map(|b| b - tau), bounds.1.map(|b| b - tau));
    out.absorb(process_node::<P>(ctx, &shift.child, &shift.intervals, child_outer));
    out
}

fn process_node<P: Precision>(
    ctx: &Ctx<'_, P::Wide>,
    rep: &BidiagRep<P::Wide>,
    ivs: &[EigInterval<P::Wide>],
    outer: Outer<P::Wide>,
) -> NodeOut<P::Wide, P::Narrow> {
    let mut out = NodeOut::new();
    for g in classify(ivs, ctx.config.gaptol) {
        if ctx.intersects(&ivs[g.clone()]) {
            out.absorb(process_group::<P>(ctx, rep, ivs, g, outer));
        }
    }
    out
}

/// Encloses `wanted` at the root and grows the set outward while neighbours stay
/// within `gaptol`, so clusters straddling the subset boundary are whole.
fn root_intervals<P: Precision>(
    rep: &BidiagRep<P::Wide>,
    wanted: (usize, usize),
    gaptol: f64,
) -> (Vec<EigInterval<P::Wide>>, Outer<P::Wide>, usize) {
    let n = rep.n();
    let rtol = 1e-2 * gaptol;
    let one = |index: usize| -> (EigInterval<P::Wide>, usize) {
        let start = bisect_eigenvalues::<P>(rep, &[index], 0.5, Arithmetic::Narrow);
        let (iv, r) = hybrid_refine::<P>(rep, &start, rtol);
        (iv[0], r)
    };
    let idx: Vec<usize> = (wanted.0..=wanted.1).collect();
    let narrow_limit = 40.0 * n as f64 * P::eps_narrow();
    let start = bisect_eigenvalues::<P>(rep, &idx, rtol.max(narrow_limit), Arithmetic::Narrow);
    let (mut ivs, mut recert) = hybrid_refine::<P>(rep, &start, rtol);

    let mut left = None;
    let mut j = wanted.0;
    let mut front = Vec::new();
    while j > 0 {
        let (iv, r) = one(j - 1);
        recert += r;
        let head = front.last().unwrap_or(&ivs[0]);
        if reldist(&iv, head) < gaptol {
            front.push(iv);
            j -= 1;
        } else {
            left = Some(iv.hi);
            break;
        }
    }
    let mut right = None;
    let mut j = wanted.1;
    while j + 1 < n {
        let (iv, r) = one(j + 1);
        recert += r;
        if reldist(&ivs[ivs.len() - 1], &iv) < gaptol {
            ivs.push(iv);
            j += 1;
        } else {
            right = Some(iv.lo);
            break;
        }
    }
    front.reverse();
    front.extend(ivs);
    (front, (left, right), recert)
}

/// Eigenpairs `wanted` (local, inclusive) of one block.
pub(crate) fn solve_block<P: Precision>(
    block: &Block<P::Wide>,
    wanted: (usize, usize),
    config: &SolverConfig,
) -> BlockOut<P::Wide, P::Narrow> {
    let n = block.t.n();
    if n == 1 {
        return BlockOut {
            pairs: vec![(0, block.unscale(block.t.diag()[0]), vec![P::Narrow::one()])],
            counters: Counters::default(),
            root_groups: vec![1],
            depths: vec![0],
        };
    }
    let root = choose_root::<P>(&block.t, Some(wanted), config.gaptol);
    let root = perturb(&root, config.xi, config.seed, block.offset as u64);
    let (ivs, outer, recert) = root_intervals::<P>(&root, wanted, config.gaptol);
    let ctx = Ctx { config, block, wanted };

    let groups: Vec<Range<usize>> = classify(&ivs, config.gaptol)
        .into_iter()
        .filter(|g| ctx.intersects(&ivs[g.clone()]))
        .collect();
    let root_groups = groups.iter().map(|g| g.len()).collect();
    let parts: Vec<NodeOut<P::Wide, P::Narrow>> = groups
        .into_par_iter()
        .map(|g| process_group::<P>(&ctx, &root, &ivs, g, outer))
        .collect();

    let mut all = NodeOut::new();
    all.counters.recertifications = recert;
    for p in parts {
        all.absorb(p);
    }
    let mut order: Vec<usize> = (0..all.pairs.len()).collect();
    order.sort_by_key(|&i| all.pairs[i].0);
    let mut slots: Vec<Option<LocalPair<P::Wide, P::Narrow>>> = all.pairs.into_iter().map(Some).collect();
    let pairs = order.iter().map(|&i| slots[i].take().unwrap()).collect();
    let depths = order.iter().map(|&i| all.depths[i]).collect();
    BlockOut {
        pairs,
        counters: all.counters,
        root_groups,
        depths,
    }
}
