//! The representation-tree eigensolver: preprocessing, root selection, random
//! perturbation, classification, cluster shifts and Rayleigh quotient iteration.

mod classify;
mod root;
mod rqi;
mod tree;

use rayon::prelude::*;
use thiserror::Error;

use crate::precision::{Precision, PrecisionMode, Real};
use crate::tridiag::{EigenPair, SymTridiag};
use crate::verify::{clustering_stats, ClassificationTrace};

pub use classify::{classify, reldist};
pub use root::{choose_root, perturb, preprocess, Block, RootEnd};
pub use rqi::{rqi_singleton, RqiOutcome};
pub use tree::{process_cluster, ClusterShift};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("gaptol {gaptol:e} outside [{lo:e}, {hi:e}] for a block of size {n}")]
    Gaptol { gaptol: f64, lo: f64, hi: f64, n: usize },
    #[error("perturbation xi = {xi:e} must be at least the narrow unit roundoff {eps:e}")]
    Xi { xi: f64, eps: f64 },
    #[error("k_rs = {0} must lie in (0, 10]")]
    Krs(f64),
    #[error("max_depth = {0} must be at least 2")]
    MaxDepth(usize),
    #[error("max_rqi_iters must be positive")]
    RqiIters,
    #[error("element growth threshold {0:e} must be positive")]
    ElementGrowth(f64),
    #[error("subset {il}..={iu} invalid for n = {n}")]
    Subset { il: usize, iu: usize, n: usize },
    #[error("configuration is for {config} but the solver was instantiated for {solver}")]
    ModeMismatch { config: PrecisionMode, solver: PrecisionMode },
}

/// Tunable parameters of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: PrecisionMode,
    /// Relative separation below which neighbouring eigenvalues form a cluster.
    pub gaptol: f64,
    /// Residual constant of the Rayleigh quotient stopping test.
    pub k_rs: f64,
    /// Relative magnitude of the random perturbation of the root representation.
    pub xi: f64,
    pub max_rqi_iters: usize,
    pub max_depth: usize,
    /// Element growth accepted for a shifted representation; `None` selects
    /// `max(10, eps_x / (eps_y sqrt(n)))` per block.
    pub robust_elg_max: Option<f64>,
    pub seed: u64,
    /// Zero-based inclusive index range; `None` computes every eigenpair.
    pub subset: Option<(usize, usize)>,
}

impl SolverConfig {
    pub fn new(mode: PrecisionMode) -> Self {
        SolverConfig {
            mode,
            gaptol: match mode {
                PrecisionMode::SingleDouble => 1e-5,
                PrecisionMode::DoubleQuad => 1e-10,
            },
            k_rs: 1.0,
            xi: mode.eps_narrow(),
            max_rqi_iters: 10,
            max_depth: 8,
            robust_elg_max: None,
            seed: 0x5eed_0f_3a11,
            subset: None,
        }
    }

    pub fn with_gaptol(mut self, gaptol: f64) -> Self {
        self.gaptol = gaptol;
        self
    }

    pub fn with_subset(mut self, il: usize, iu: usize) -> Self {
        self.subset = Some((il, iu));
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Admissible gaptol interval for a block of size `n`.
    pub fn gaptol_range(mode: PrecisionMode, n: usize) -> (f64, f64) {
        let lo = (mode.eps_wide() * (n as f64).sqrt() / mode.eps_narrow()).min(1e-3);
        (lo, 1e-3)
    }

    pub fn elg_threshold(&self, n: usize) -> f64 {
        self.robust_elg_max.unwrap_or_else(|| {
            let m = self.mode;
            (m.eps_narrow() / (m.eps_wide() * (n as f64).sqrt())).max(10.0)
        })
    }

    /// Checks every size-independent constraint.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let eps = self.mode.eps_narrow();
        if !(self.xi >= eps) {
            return Err(ConfigError::Xi { xi: self.xi, eps });
        }
        if !(self.k_rs > 0.0 && self.k_rs <= 10.0) {
            return Err(ConfigError::Krs(self.k_rs));
        }
        if self.max_depth < 2 {
            return Err(ConfigError::MaxDepth(self.max_depth));
        }
        if self.max_rqi_iters == 0 {
            return Err(ConfigError::RqiIters);
        }
        if let Some(g) = self.robust_elg_max {
            if !(g > 0.0) {
                return Err(ConfigError::ElementGrowth(g));
            }
        }
        Ok(())
    }

    pub fn validate_gaptol(&self, n: usize) -> Result<(), ConfigError> {
        let (lo, hi) = Self::gaptol_range(self.mode, n);
        if self.gaptol >= lo && self.gaptol <= hi {
            Ok(())
        } else {
            Err(ConfigError::Gaptol {
                gaptol: self.gaptol,
                lo,
                hi,
                n,
            })
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverStats {
    /// Deepest representation that produced eigenpairs; 0 when the root resolved everything.
    pub d_max: usize,
    /// Largest root-level cluster divided by `n`.
    pub rho: f64,
    /// Shifted representations accepted despite failing the element growth test.
    pub robustness_failures: usize,
    /// Singletons whose Rayleigh quotient iteration did not converge.
    pub rqi_fallbacks: usize,
    pub blocks: usize,
    /// Intervals that lost their enclosure after a shift and were rebuilt.
    pub recertifications: usize,
    /// Clusters still unresolved at `max_depth`.
    pub depth_fallbacks: usize,
}

#[derive(Debug, Clone)]
pub struct EigenResult<N> {
    pub pairs: Vec<EigenPair<N>>,
    pub stats: SolverStats,
    pub trace: ClassificationTrace,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Counters {
    pub robustness_failures: usize,
    pub rqi_fallbacks: usize,
    pub recertifications: usize,
    pub depth_fallbacks: usize,
}

impl Counters {
    pub(crate) fn merge(&mut self, o: &Counters) {
        self.robustness_failures += o.robustness_failures;
        self.rqi_fallbacks += o.rqi_fallbacks;
        self.recertifications += o.recertifications;
        self.depth_fallbacks += o.depth_fallbacks;
    }
}

/// Output of one block: pairs in block coordinates ordered by local index.
pub(crate) struct BlockOut<W, N> {
    pub pairs: Vec<(usize, W, Vec<N>)>,
    pub counters: Counters,
    pub root_groups: Vec<usize>,
    pub depths: Vec<usize>,
}

/// Computes the requested eigenpairs of `t`.
pub fn solve<P: Precision>(
    t: &SymTridiag<P::Narrow>,
    config: &SolverConfig,
) -> Result<EigenResult<P::Narrow>, ConfigError> {
    if config.mode != P::MODE {
        return Err(ConfigError::ModeMismatch {
            config: config.mode,
            solver: P::MODE,
        });
    }
    config.validate()?;
    let n = t.n();
    if let Some((il, iu)) = config.subset {
        if il > iu || iu >= n {
            return Err(ConfigError::Subset { il, iu, n });
        }
    }
    let blocks = preprocess::<P>(t);
    for b in &blocks {
        config.validate_gaptol(b.t.n())?;
    }

    let wanted: Vec<Option<(usize, usize)>> = match config.subset {
        None => blocks.iter().map(|b| Some((0, b.t.n() - 1))).collect(),
        Some(s) if blocks.len() == 1 => vec![Some(s)],
        Some((il, iu)) => root::select_global::<P>(&blocks, il, iu, config.gaptol),
    };

    let outs: Vec<Option<BlockOut<P::Wide, P::Narrow>>> = blocks
        .par_iter()
        .zip(wanted.par_iter())
        .map(|(b, w)| w.map(|w| tree::solve_block::<P>(b, w, config)))
        .collect();

    let mut stats = SolverStats {
        blocks: blocks.len(),
        ..Default::default()
    };
    let mut counters = Counters::default();
    let mut trace = ClassificationTrace {
        n,
        ..Default::default()
    };
    let mut lists = Vec::new();
    for (b, out) in blocks.iter().zip(outs) {
        let Some(out) = out else { continue };
        counters.merge(&out.counters);
        trace.root_groups.extend(&out.root_groups);
        trace.node_depths.extend(&out.depths);
        lists.push((b.offset, b.t.n(), out.pairs));
    }
    let merged = merge_blocks(lists);
    let first = if blocks.len() > 1 {
        config.subset.map_or(0, |s| s.0)
    } else {
        0
    };
    let pairs = merged
        .into_iter()
        .enumerate()
        .map(|(pos, (offset, bn, local, lambda, zb))| {
            let mut z = vec![P::Narrow::zero(); n];
            z[offset..offset + bn].copy_from_slice(&zb);
            EigenPair {
                index: if blocks.len() > 1 { first + pos } else { local },
                lambda: P::narrow(lambda),
                z,
            }
        })
        .collect();

    let (rho, d_max) = clustering_stats(&trace);
    stats.rho = rho;
    stats.d_max = d_max;
    stats.robustness_failures = counters.robustness_failures;
    stats.rqi_fallbacks = counters.rqi_fallbacks;
    stats.recertifications = counters.recertifications;
    stats.depth_fallbacks = counters.depth_fallbacks;
    Ok(EigenResult { pairs, stats, trace })
}

type Merged<W, N> = (usize, usize, usize, W, Vec<N>);

/// Merges per-block ascending lists by eigenvalue, preferring earlier blocks on ties.
fn merge_blocks<W: Real, N>(lists: Vec<(usize, usize, Vec<(usize, W, Vec<N>)>)>) -> Vec<Merged<W, N>> {
    let total = lists.iter().map(|l| l.2.len()).sum();
    let mut iters: Vec<_> = lists
        .into_iter()
        .map(|(off, bn, v)| (off, bn, v.into_iter().peekable()))
        .collect();
    let mut out = Vec::with_capacity(total);
    loop {
        let mut best: Option<(usize, W)> = None;
        for (k, (_, _, it)) in iters.iter_mut().enumerate() {
            if let Some((_, lam, _)) = it.peek() {
                if best.is_none_or(|(_, b)| *lam < b) {
                    best = Some((k, *lam));
                }
            }
        }
        let Some((k, _)) = best else { break };
        let (off, bn, it) = &mut iters[k];
        let (local, lam, z) = it.next().unwrap();
        out.push((*off, *bn, local, lam, z));
    }
    out
}
