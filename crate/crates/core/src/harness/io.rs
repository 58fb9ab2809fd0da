use std::io::{BufRead, BufReader, Read, Write};

use hexf_parse::parse_hexf64;

use super::HarnessError;
use crate::precision::Real;
use crate::tridiag::{EigenPair, SymTridiag};

/// Hexadecimal float literal that reads back bit for bit, e.g. `-0x1.8p1`.
pub fn format_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if biased == 0 && frac == 0 {
        return format!("{sign}0x0p0");
    }
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exp}")
    } else {
        format!("{sign}0x{lead}.{digits}p{exp}")
    }
}

/// Parses a decimal or hexadecimal float.
pub fn parse_scalar(s: &str) -> Option<f64> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    if body.starts_with("0x") || body.starts_with("0X") {
        let s = s.strip_prefix('+').unwrap_or(s);
        parse_hexf64(&s.replace("0X", "0x"), false).ok()
    } else {
        s.parse().ok()
    }
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    line: usize,
}

impl<R: Read> Lines<R> {
    fn new(r: R) -> Self {
        Lines {
            inner: BufReader::new(r).lines(),
            line: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> HarnessError {
        HarnessError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    /// Next non-blank line, or `None` at end of input.
    fn next_line(&mut self) -> Result<Option<String>, HarnessError> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            if !l.trim().is_empty() {
                return Ok(Some(l));
            }
        }
        Ok(None)
    }

    fn scalars<T: Real>(&mut self, expected: usize, what: &str) -> Result<Vec<T>, HarnessError> {
        if expected == 0 {
            return Ok(Vec::new());
        }
        let l = self.next_line()?.ok_or_else(|| self.err(format!("missing {what}")))?;
        let vals = l
            .split_whitespace()
            .map(|tok| {
                parse_scalar(tok)
                    .map(T::from_f64)
                    .ok_or_else(|| self.err(format!("bad number `{tok}`")))
            })
            .collect::<Result<Vec<T>, _>>()?;
        if vals.len() != expected {
            return Err(self.err(format!("expected {expected} {what}, found {}", vals.len())));
        }
        Ok(vals)
    }

    fn sizes(&mut self, count: usize) -> Result<Vec<usize>, HarnessError> {
        let l = self.next_line()?.ok_or_else(|| self.err("missing header"))?;
        let vals = l
            .split_whitespace()
            .map(|tok| tok.parse().map_err(|_| self.err(format!("bad size `{tok}`"))))
            .collect::<Result<Vec<usize>, _>>()?;
        if vals.len() != count {
            return Err(self.err(format!("expected {count} header fields")));
        }
        Ok(vals)
    }
}

/// Reads `n`, then the diagonal, then the off-diagonal, one line each.
pub fn read_matrix<T: Real>(r: impl Read) -> Result<SymTridiag<T>, HarnessError> {
    let mut lines = Lines::new(r);
    let n = lines.sizes(1)?[0];
    if n == 0 {
        return Err(HarnessError::EmptyMatrix);
    }
    let d = lines.scalars(n, "diagonal entries")?;
    let e = lines.scalars(n - 1, "off-diagonal entries")?;
    Ok(SymTridiag::new(d, e)?)
}

pub fn write_matrix<T: Real>(mut w: impl Write, t: &SymTridiag<T>) -> Result<(), HarnessError> {
    let row = |xs: &[T]| xs.iter().map(|x| format_hex(x.to_f64())).collect::<Vec<_>>().join(" ");
    writeln!(w, "{}", t.n())?;
    writeln!(w, "{}", row(t.diag()))?;
    writeln!(w, "{}", row(t.offdiag()))?;
    Ok(())
}

/// Writes `n k`, then one line per pair: one-based index, eigenvalue, eigenvector.
pub fn write_pairs<T: Real>(mut w: impl Write, n: usize, pairs: &[EigenPair<T>]) -> Result<(), HarnessError> {
    writeln!(w, "{n} {}", pairs.len())?;
    for p in pairs {
        write!(w, "{} {}", p.index + 1, format_hex(p.lambda.to_f64()))?;
        for x in &p.z {
            write!(w, " {}", format_hex(x.to_f64()))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_pairs<T: Real>(r: impl Read) -> Result<(usize, Vec<EigenPair<T>>), HarnessError> {
    let mut lines = Lines::new(r);
    let h = lines.sizes(2)?;
    let (n, k) = (h[0], h[1]);
    let mut pairs = Vec::with_capacity(k);
    for _ in 0..k {
        let l = lines.next_line()?.ok_or_else(|| lines.err("missing eigenpair"))?;
        let mut toks = l.split_whitespace();
        let index: usize = toks
            .next()
            .and_then(|s| s.parse().ok())
            .filter(|&i| i >= 1)
            .ok_or_else(|| lines.err("bad eigenpair index"))?;
        let vals = toks
            .map(|tok| parse_scalar(tok).map(T::from_f64).ok_or_else(|| lines.err(format!("bad number `{tok}`"))))
            .collect::<Result<Vec<T>, _>>()?;
        if vals.len() != n + 1 {
            return Err(lines.err(format!("expected eigenvalue and {n} components")));
        }
        pairs.push(EigenPair {
            index: index - 1,
            lambda: vals[0],
            z: vals[1..].to_vec(),
        });
    }
    Ok((n, pairs))
}
