//! Stage schedules `(d_n)`, `(a_n)` for prescribed entropy targets `(r, s)`.
//!
//! Rule for `n >= 3`:
//! `d_n = max(d_{n-1} + d_{n-2}, a_{n-1}, ceil(c * 2^n))` with `c = 2s / ln 2`
//! off spike steps and `c = 2r / ln 2` on spike steps `j(j+1)/2 + 2`. An
//! infinite target uses `n * 2^n` in place of `ceil(c * 2^n)`.
//! `a_1 = d_2 + 1` and `a_{n+1} = a_n + d_n`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Entropy target in `[0, ∞]`.
///
/// `LogMultiple(p, q)` is the exact value `(p / q) * ln 2`, which makes
/// `2t / ln 2 = 2p / q` rational and the schedule exact. Decimal targets go
/// through `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Decimal(f64),
    LogMultiple(u64, u64),
    Infinite,
}

impl Target {
    pub fn value(&self) -> f64 {
        match *self {
            Target::Decimal(x) => x,
            Target::LogMultiple(p, q) => p as f64 / q as f64 * std::f64::consts::LN_2,
            Target::Infinite => f64::INFINITY,
        }
    }

    fn compare(&self, other: &Target) -> Ordering {
        match (self, other) {
            (Target::Infinite, Target::Infinite) => Ordering::Equal,
            (Target::Infinite, _) => Ordering::Greater,
            (_, Target::Infinite) => Ordering::Less,
            (Target::LogMultiple(p1, q1), Target::LogMultiple(p2, q2)) => {
                (u128::from(*p1) * u128::from(*q2)).cmp(&(u128::from(*p2) * u128::from(*q1)))
            }
            _ => self
                .value()
                .partial_cmp(&other.value())
                .unwrap_or(Ordering::Equal),
        }
    }

    /// `ceil(2t / ln 2 * 2^n)`, or `None` for an infinite target.
    fn threshold(&self, n: u32) -> Result<Option<u64>> {
        let overflow = || Error::InvalidParameter(format!("schedule overflows at step {n}"));
        match *self {
            Target::Infinite => Ok(None),
            Target::LogMultiple(p, q) => {
                let num = (2 * u128::from(p))
                    .checked_shl(n)
                    .filter(|v| v >> n == 2 * u128::from(p))
                    .ok_or_else(overflow)?;
                let v = num.div_ceil(u128::from(q));
                u64::try_from(v).map(Some).map_err(|_| overflow())
            }
            Target::Decimal(x) => {
                let v = (2.0 * x / std::f64::consts::LN_2 * 2f64.powi(n as i32)).ceil();
                if v.is_finite() && v < 2f64.powi(63) {
                    Ok(Some(v.max(0.0) as u64))
                } else {
                    Err(overflow())
                }
            }
        }
    }
}

impl FromStr for Target {
    type Err = Error;

    /// Accepts `inf`, a non-negative decimal, or an exact multiple of `ln2`:
    /// `ln2`, `ln2/q`, `p*ln2`, `p*ln2/q`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("invalid entropy target {s:?}"));
        let t = s.trim();
        if matches!(t, "inf" | "infinity" | "∞") {
            return Ok(Target::Infinite);
        }
        if let Some(pos) = t.find("ln2") {
            let (pre, post) = (&t[..pos], &t[pos + 3..]);
            let p = match pre.strip_suffix('*') {
                Some(p) => p.trim().parse::<u64>().map_err(|_| bad())?,
                None if pre.is_empty() => 1,
                None => return Err(bad()),
            };
            let q = match post.strip_prefix('/') {
                Some(q) => q.trim().parse::<u64>().map_err(|_| bad())?,
                None if post.is_empty() => 1,
                None => return Err(bad()),
            };
            if q == 0 {
                return Err(bad());
            }
            return Ok(Target::LogMultiple(p, q));
        }
        let x: f64 = t.parse().map_err(|_| bad())?;
        if !x.is_finite() || x < 0.0 {
            return Err(bad());
        }
        Ok(Target::Decimal(x))
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Target::Decimal(x) => write!(f, "{x}"),
            Target::LogMultiple(1, 1) => write!(f, "ln2"),
            Target::LogMultiple(1, q) => write!(f, "ln2/{q}"),
            Target::LogMultiple(p, 1) => write!(f, "{p}*ln2"),
            Target::LogMultiple(p, q) => write!(f, "{p}*ln2/{q}"),
            Target::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Target {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sequences `d_1..d_N`, `a_1..a_N` (stored zero-based) and the spike steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSchedule {
    pub r: Target,
    pub s: Target,
    pub d: Vec<u64>,
    pub a: Vec<u64>,
    pub spike_steps: Vec<u32>,
}

impl StageSchedule {
    /// `d_n` for one-based `n`.
    pub fn d(&self, n: usize) -> u64 {
        self.d[n - 1]
    }

    /// `a_n` for one-based `n`.
    pub fn a(&self, n: usize) -> u64 {
        self.a[n - 1]
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Checks the recursive constraints. `d_n >= a_{n-1}` is checked from
    /// `n = 3`: at `n = 2` it contradicts `a_1 = d_2 + 1`.
    pub fn validate(&self) -> Result<()> {
        let fail = |what: String| Err(Error::InvalidParameter(what));
        if self.d.len() != self.a.len() {
            return fail("d and a lengths differ".into());
        }
        if self.d.contains(&0) {
            return fail("d_n must be positive".into());
        }
        if self.d.len() >= 2 && self.a[0] != self.d[1] + 1 {
            return fail("a_1 != d_2 + 1".into());
        }
        for i in 1..self.a.len() {
            if self.a[i] != self.a[i - 1] + self.d[i - 1] {
                return fail(format!("a_{} != a_{} + d_{}", i + 1, i, i));
            }
        }
        for n in 3..=self.d.len() {
            if self.d(n) < self.d(n - 1) + self.d(n - 2) {
                return fail(format!("d_{n} < d_{} + d_{}", n - 1, n - 2));
            }
            if self.d(n) < self.a(n - 1) {
                return fail(format!("d_{n} < a_{}", n - 1));
            }
        }
        for n in 1..=self.a.len() {
            if self.a(n) < n as u64 + 2 {
                return fail(format!("a_{n} < {n} + 2"));
            }
        }
        if self.spike_steps.windows(2).any(|w| w[0] >= w[1]) {
            return fail("spike steps not strictly increasing".into());
        }
        Ok(())
    }
}

/// Spike steps `j(j+1)/2 + 2` up to `n_max`.
pub fn spike_steps(n_max: u32) -> Vec<u32> {
    (1u32..)
        .map(|j| j * (j + 1) / 2 + 2)
        .take_while(|&n| n <= n_max)
        .collect()
}

pub fn schedule(r: Target, s: Target, n_max: u32, d1: u64, d2: u64) -> Result<StageSchedule> {
    if s.compare(&r) == Ordering::Greater {
        return Err(Error::InvalidParameter(format!(
            "entropy targets require s <= r, got r = {r}, s = {s}"
        )));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    if d1 == 0 || d2 < 2 {
        return Err(Error::InvalidParameter(
            "d1 >= 1 and d2 >= 2 are required".into(),
        ));
    }
    let spikes = spike_steps(n_max);
    let overflow = |n: u32| Error::InvalidParameter(format!("schedule overflows at step {n}"));
    let mut d: Vec<u64> = Vec::with_capacity(n_max as usize);
    let mut a: Vec<u64> = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let dn = match n {
            1 => d1,
            2 => d2,
            _ => {
                let i = n as usize - 1;
                let base = (d[i - 1] + d[i - 2]).max(a[i - 1]);
                let target = if spikes.contains(&n) { r } else { s };
                let growth = match target.threshold(n)? {
                    Some(t) => t,
                    None => u64::from(n)
                        .checked_mul(1u64.checked_shl(n).ok_or_else(|| overflow(n))?)
                        .filter(|_| n < 58)
                        .ok_or_else(|| overflow(n))?,
                };
                base.max(growth)
            }
        };
        d.push(dn);
        if n == 1 {
            // a_1 = d_2 + 1 needs d_2, known up front
            a.push(d2 + 1);
        } else {
            let i = n as usize - 1;
            a.push(a[i - 1].checked_add(d[i - 1]).ok_or_else(|| overflow(n))?);
        }
    }
    let sched = StageSchedule {
        r,
        s,
        d,
        a,
        spike_steps: spikes,
    };
    sched.validate()?;
    Ok(sched)
}
