use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;

use super::{generate, HarnessError, MatrixSpec};
use crate::harness::Family;
use crate::mrrr::{solve, SolverConfig};
use crate::precision::{DoubleQuad, Precision, PrecisionMode, SingleDouble};
use crate::verify::residual_and_orthogonality;

pub const CSV_HEADER: [&str; 11] = [
    "family",
    "n",
    "mode",
    "gaptol",
    "R",
    "O",
    "rho",
    "d_max",
    "robustness_failures",
    "rqi_fallbacks",
    "wall_ms",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCase {
    pub spec: MatrixSpec,
    pub config: SolverConfig,
}

/// One CSV row. Measurements are `None` when the run failed, with the reason in
/// `diagnostic`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub family: String,
    pub n: usize,
    pub mode: PrecisionMode,
    pub gaptol: f64,
    pub r: Option<f64>,
    pub o: Option<f64>,
    pub rho: Option<f64>,
    pub d_max: Option<usize>,
    pub robustness_failures: Option<usize>,
    pub rqi_fallbacks: Option<usize>,
    pub wall_ms: f64,
    pub diagnostic: Option<String>,
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map_or_else(String::new, T::to_string)
}

impl BenchRecord {
    pub fn fields(&self) -> Vec<String> {
        let mut f = vec![
            self.family.clone(),
            self.n.to_string(),
            self.mode.to_string(),
            self.gaptol.to_string(),
            opt(&self.r),
            opt(&self.o),
            opt(&self.rho),
            opt(&self.d_max),
            opt(&self.robustness_failures),
            opt(&self.rqi_fallbacks),
            self.wall_ms.to_string(),
        ];
        if let Some(d) = &self.diagnostic {
            f.push(d.clone());
        }
        f
    }

    pub fn from_fields(rec: &csv::StringRecord) -> Option<Self> {
        fn o<T: std::str::FromStr>(s: &str) -> Option<Option<T>> {
            if s.is_empty() {
                Some(None)
            } else {
                s.parse().ok().map(Some)
            }
        }
        Some(BenchRecord {
            family: rec.get(0)?.to_string(),
            n: rec.get(1)?.parse().ok()?,
            mode: rec.get(2)?.parse().ok()?,
            gaptol: rec.get(3)?.parse().ok()?,
            r: o(rec.get(4)?)?,
            o: o(rec.get(5)?)?,
            rho: o(rec.get(6)?)?,
            d_max: o(rec.get(7)?)?,
            robustness_failures: o(rec.get(8)?)?,
            rqi_fallbacks: o(rec.get(9)?)?,
            wall_ms: rec.get(10)?.parse().ok()?,
            diagnostic: rec.get(11).map(str::to_string),
        })
    }
}

fn run_mode<P: Precision>(case: &BenchCase) -> Result<BenchRecord, (usize, HarnessError)> {
    let t = generate::<P>(&case.spec).map_err(|e| (case.spec.size(), e))?;
    let n = t.n();
    let out = solve::<P>(&t, &case.config).map_err(|e| (n, e.into()))?;
    let acc = residual_and_orthogonality::<P>(&t, &out.pairs).map_err(|e| (n, e.into()))?;
    Ok(BenchRecord {
        family: case.spec.family.name().to_string(),
        n,
        mode: P::MODE,
        gaptol: case.config.gaptol,
        r: Some(acc.r),
        o: Some(acc.o),
        rho: Some(out.stats.rho),
        d_max: Some(out.stats.d_max),
        robustness_failures: Some(out.stats.robustness_failures),
        rqi_fallbacks: Some(out.stats.rqi_fallbacks),
        wall_ms: 0.0,
        diagnostic: None,
    })
}

fn run_case(case: &BenchCase) -> BenchRecord {
    let start = Instant::now();
    let res = match case.config.mode {
        PrecisionMode::SingleDouble => run_mode::<SingleDouble>(case),
        PrecisionMode::DoubleQuad => run_mode::<DoubleQuad>(case),
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match res {
        Ok(rec) => BenchRecord { wall_ms, ..rec },
        Err((n, e)) => BenchRecord {
            family: case.spec.family.name().to_string(),
            n,
            mode: case.config.mode,
            gaptol: case.config.gaptol,
            r: None,
            o: None,
            rho: None,
            d_max: None,
            robustness_failures: None,
            rqi_fallbacks: None,
            wall_ms,
            diagnostic: Some(e.to_string()),
        },
    }
}

/// Generates, solves and verifies every case; rows follow the order of `cases`.
/// `threads` sizes a dedicated worker pool (default: the global pool).
pub fn run_bench(cases: &[BenchCase], threads: Option<usize>) -> Result<Vec<BenchRecord>, HarnessError> {
    let go = || cases.par_iter().map(run_case).collect();
    match threads {
        None => Ok(go()),
        Some(p) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(p)
                .build()
                .map_err(|e| std::io::Error::other(e.to_string()))?;
            Ok(pool.install(go))
        }
    }
}

pub fn write_csv(w: impl Write, records: &[BenchRecord]) -> Result<(), HarnessError> {
    let mut wr = csv::WriterBuilder::new().flexible(true).from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in records {
        wr.write_record(r.fields())?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv(r: impl Read) -> Result<Vec<BenchRecord>, HarnessError> {
    let mut rd = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        out.push(BenchRecord::from_fields(&rec).ok_or(HarnessError::Parse {
            line: i + 2,
            msg: "malformed benchmark row".into(),
        })?);
    }
    Ok(out)
}

fn cases(sizes: &[usize], seed: u64) -> Vec<BenchCase> {
    let mut out = Vec::new();
    for mode in [PrecisionMode::SingleDouble, PrecisionMode::DoubleQuad] {
        for family in Family::GENERATED {
            for &n in sizes {
                out.push(BenchCase {
                    spec: MatrixSpec::new(family, n, seed),
                    config: SolverConfig::new(mode),
                });
            }
        }
    }
    out
}

/// Small sizes across all families and both modes.
pub fn quick_suite() -> Vec<BenchCase> {
    cases(&[40, 101], 1)
}

/// Accuracy suite at `n` in {101, 251, 501, 1001} plus the Hermite clustering runs at `n = 2500`.
pub fn paper_suite() -> Vec<BenchCase> {
    let mut out = cases(&[101, 251, 501, 1001], 1);
    for gaptol in [1e-3, 1e-10] {
        out.push(BenchCase {
            spec: MatrixSpec::new(Family::Hermite, 2500, 1),
            config: SolverConfig::new(PrecisionMode::DoubleQuad).with_gaptol(gaptol),
        });
    }
    out
}
