//! Inverse-transform sampling from a closed-form tail.

use super::laws::Law;
use crate::error::{Error, Result};
use rand::distr::Open01;
use rand::Rng;

/// Default ceiling on sampled values.
pub const DEFAULT_CAP: u64 = 1 << 62;

const TABLE_LEN: usize = 4096;

/// A law together with a cached tail table for fast lookups.
#[derive(Debug, Clone)]
pub struct TailSampler {
    pub law: Law,
    table: Vec<f64>,
    cap: u64,
}

impl TailSampler {
    pub fn new(law: Law, cap: u64) -> Self {
        let len = match &law {
            Law::Finite { pmf, .. } => pmf.len().max(1),
            _ => TABLE_LEN,
        };
        let table = (0..len as u64).map(|n| law.tail(n)).collect();
        TailSampler { law, table, cap }
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        let u: f64 = rng.sample(Open01);
        self.from_uniform(u)
    }

    /// Smallest `n` with `P(X > n) < u`.
    pub fn from_uniform(&self, u: f64) -> Result<u64> {
        let t = &self.table;
        if t[0] < u {
            return Ok(0);
        }
        let last = t.len() - 1;
        if t[last] < u {
            // t[lo] ≥ u > t[hi]
            let (mut lo, mut hi) = (0usize, last);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if t[mid] < u {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return self.capped(hi as u64);
        }
        if matches!(self.law, Law::Finite { .. }) {
            // a finite law has zero tail past its support
            return self.capped(t.len() as u64);
        }
        let mut lo = last as u64;
        let mut hi = lo * 2;
        while self.law.tail(hi) >= u {
            if hi >= self.cap {
                return Err(Error::CapExceeded { cap: self.cap });
            }
            lo = hi;
            hi = hi.saturating_mul(2).min(self.cap);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.law.tail(mid) < u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.capped(hi)
    }

    fn capped(&self, n: u64) -> Result<u64> {
        if n > self.cap {
            Err(Error::CapExceeded { cap: self.cap })
        } else {
            Ok(n)
        }
    }
}
