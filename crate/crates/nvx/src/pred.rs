//! Command-line predicate grammar.
//!
//! * `all` — every node
//! * `id<0.25` — ids below a quarter of the id space (fractions ≤ 1.0
//!   scale by `n`; larger values are absolute thresholds)
//! * `idrange:100:500` — inclusive absolute id range
//! * `label=7` — label equality
//! * `rand:0.1:42` — exact-count uniform sample of 10% with seed 42

use nvx_core::Predicate;

use crate::error::{Error, Result};

pub fn parse_pred(s: &str, n: usize) -> Result<Predicate> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("all") {
        return Ok(Predicate::All);
    }
    if let Some(rest) = s.strip_prefix("id<") {
        let v: f64 = rest
            .parse()
            .map_err(|_| Error::usage(format!("bad id threshold '{rest}'")))?;
        if v < 0.0 {
            return Err(Error::usage("id threshold must be nonnegative"));
        }
        let threshold = if v <= 1.0 {
            (v * n as f64).round() as u64
        } else {
            v as u64
        };
        return Ok(Predicate::IdLessThan(threshold));
    }
    if let Some(rest) = s.strip_prefix("idrange:") {
        let (lo, hi) = rest
            .split_once(':')
            .ok_or_else(|| Error::usage("idrange wants idrange:LO:HI"))?;
        let lo: u64 = lo.parse().map_err(|_| Error::usage("bad idrange LO"))?;
        let hi: u64 = hi.parse().map_err(|_| Error::usage("bad idrange HI"))?;
        return Ok(Predicate::IdRange(lo, hi));
    }
    if let Some(rest) = s.strip_prefix("label=") {
        let label: u32 = rest
            .parse()
            .map_err(|_| Error::usage(format!("bad label '{rest}'")))?;
        return Ok(Predicate::LabelEquals(label));
    }
    if let Some(rest) = s.strip_prefix("rand:") {
        let (rate, seed) = match rest.split_once(':') {
            Some((r, s)) => (
                r.parse::<f64>()
                    .map_err(|_| Error::usage("bad sample rate"))?,
                s.parse::<u64>().map_err(|_| Error::usage("bad seed"))?,
            ),
            None => (
                rest.parse::<f64>()
                    .map_err(|_| Error::usage("bad sample rate"))?,
                0,
            ),
        };
        return Ok(Predicate::RandomSample { rate, seed });
    }
    Err(Error::usage(format!(
        "unrecognized predicate '{s}' (try all, id<F, idrange:LO:HI, label=L, rand:R:SEED)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_grammar() {
        assert!(matches!(parse_pred("all", 100).unwrap(), Predicate::All));
        assert!(matches!(
            parse_pred("id<0.25", 100).unwrap(),
            Predicate::IdLessThan(25)
        ));
        assert!(matches!(
            parse_pred("id<500", 100).unwrap(),
            Predicate::IdLessThan(500)
        ));
        assert!(matches!(
            parse_pred("idrange:3:9", 100).unwrap(),
            Predicate::IdRange(3, 9)
        ));
        assert!(matches!(
            parse_pred("label=7", 100).unwrap(),
            Predicate::LabelEquals(7)
        ));
        match parse_pred("rand:0.1:42", 100).unwrap() {
            Predicate::RandomSample { rate, seed } => {
                assert_eq!(rate, 0.1);
                assert_eq!(seed, 42);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_pred("nonsense", 100).is_err());
    }
}
