//! Finite point sets in `Z[1/2]`, well-placedness, `Δ_V` and model sets.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::ball::{coset_rep, in_ball, transversal};
use crate::dyadic::Dyadic;
use crate::{Error, Result};

const MODEL_SET_CAP: u64 = 1 << 26;

/// Sorted, duplicate-free finite subset of `Z[1/2]`.
///
/// `scale = Some(a)` records that the set is well placed in `A_a`; it is
/// validated whenever it is attached.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FinitePointSet {
    points: Vec<Dyadic>,
    scale: Option<u32>,
}

impl FinitePointSet {
    pub fn new(points: impl IntoIterator<Item = Dyadic>) -> Self {
        let mut points: Vec<Dyadic> = points.into_iter().collect();
        points.sort_unstable();
        points.dedup();
        FinitePointSet {
            points,
            scale: None,
        }
    }

    /// Wraps points already in ascending order without duplicates.
    pub(crate) fn from_sorted(points: Vec<Dyadic>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        FinitePointSet {
            points,
            scale: None,
        }
    }

    /// The transversal `ξ_a`, tagged as well placed in `A_a`.
    pub fn xi(a: u32) -> Self {
        let pts = transversal(i64::from(a), 0).expect("ξ_a is always defined");
        FinitePointSet {
            points: pts,
            scale: Some(a),
        }
    }

    /// Attaches the well-placed claim after checking it.
    pub fn with_scale(mut self, a: u32) -> Result<Self> {
        if !well_placed(&self, a) {
            return Err(Error::Precondition("well placed"));
        }
        self.scale = Some(a);
        Ok(self)
    }

    pub fn scale(&self) -> Option<u32> {
        self.scale
    }

    pub fn points(&self) -> &[Dyadic] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        self.points.binary_search(x).is_ok()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Dyadic> {
        self.points.iter()
    }

    /// `S - g`.
    pub fn translate(&self, g: &Dyadic) -> FinitePointSet {
        FinitePointSet::from_sorted(self.points.iter().map(|x| x - g).collect())
    }

    /// `S ∩ A_n`.
    pub fn restrict(&self, n: i64) -> FinitePointSet {
        FinitePointSet::from_sorted(
            self.points
                .iter()
                .filter(|x| in_ball(x, n))
                .cloned()
                .collect(),
        )
    }

    pub fn is_subset(&self, other: &FinitePointSet) -> bool {
        self.points.iter().all(|x| other.contains(x))
    }

    pub fn into_points(self) -> Vec<Dyadic> {
        self.points
    }
}

impl<'a> IntoIterator for &'a FinitePointSet {
    type Item = &'a Dyadic;
    type IntoIter = std::slice::Iter<'a, Dyadic>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

#[derive(Serialize, Deserialize)]
struct PointSetRepr {
    scale: Option<u32>,
    points: Vec<Dyadic>,
}

impl Serialize for FinitePointSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PointSetRepr {
            scale: self.scale,
            points: self.points.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FinitePointSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PointSetRepr::deserialize(d)?;
        let set = FinitePointSet::new(repr.points);
        match repr.scale {
            None => Ok(set),
            Some(a) => set.with_scale(a).map_err(serde::de::Error::custom),
        }
    }
}

/// Exactly one point in each of the `2^a` unit balls of `A_a`.
pub fn well_placed(set: &FinitePointSet, a: u32) -> bool {
    let expected = match 1usize.checked_shl(a) {
        Some(n) => n,
        None => return false,
    };
    if set.len() != expected || !set.iter().all(|x| in_ball(x, i64::from(a))) {
        return false;
    }
    let mut seen = HashSet::with_capacity(set.len());
    set.iter().all(|x| seen.insert(coset_rep(x, 0)))
}

/// `S Δ_{V_k} T`: points of either set with no partner of the other set in `V_k`.
pub fn delta_v(s: &FinitePointSet, t: &FinitePointSet, k: i64) -> FinitePointSet {
    let classes = |set: &FinitePointSet| -> HashSet<Dyadic> {
        set.iter().map(|x| coset_rep(x, -k)).collect()
    };
    let (cs, ct) = (classes(s), classes(t));
    FinitePointSet::new(
        s.iter()
            .filter(|x| !ct.contains(&coset_rep(x, -k)))
            .chain(t.iter().filter(|x| !cs.contains(&coset_rep(x, -k))))
            .cloned(),
    )
}

/// Half-open real interval `[lo, hi)` with dyadic endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl Interval {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Self {
        Interval { lo, hi }
    }
}

/// `ceil(x * 2^n)`.
fn ceil_scaled(x: &Dyadic, n: u32) -> BigInt {
    match x.scaled_numerator(n) {
        Some(m) => m,
        None => x.num().div_ceil(&(BigInt::one() << (x.exp() - n) as u64)),
    }
}

/// Model set of the scheme `(Q_2, R, {(g, g)})` for a finite union of
/// half-open dyadic windows, truncated to `A_n`:
/// `{x ∈ Z[1/2] : |x|_2 <= 2^n, x ∈ W}`.
pub fn model_set(window: &[Interval], n: u32) -> Result<FinitePointSet> {
    let mut sorted: Vec<&Interval> = window.iter().collect();
    sorted.sort_by(|x, y| x.lo.cmp(&y.lo));
    for w in &sorted {
        if w.lo >= w.hi {
            return Err(Error::InvalidParameter(format!(
                "empty window interval [{}, {})",
                w.lo, w.hi
            )));
        }
    }
    for pair in sorted.windows(2) {
        if pair[0].hi > pair[1].lo {
            return Err(Error::InvalidParameter(
                "overlapping window intervals".into(),
            ));
        }
    }
    let mut points = Vec::new();
    let mut total = BigInt::from(0);
    for w in sorted {
        let start = ceil_scaled(&w.lo, n);
        let end = ceil_scaled(&w.hi, n);
        total += &end - &start;
        if total > BigInt::from(MODEL_SET_CAP) {
            return Err(Error::InvalidParameter("model set too large".into()));
        }
        let mut m = start;
        while m < end {
            points.push(Dyadic::new(m.clone(), n));
            m += 1;
        }
    }
    Ok(FinitePointSet::from_sorted(points))
}

/// `(ξ^k + F) ∩ A_n`, where `ξ^k = Z[1/2] ∩ [0, 2^{-k})` is the canonical
/// transversal of `A_k`.
///
/// For each `f`, the points of `ξ^k + f` inside `A_n` are `t + f` with `t` the
/// `ξ^k`-representative of `s - f` for `s ∈ ξ_n^k`.
pub fn xi_plus(f: &FinitePointSet, k: u32, n: u32) -> Result<FinitePointSet> {
    if n < k {
        return Err(Error::InvalidParameter(format!(
            "xi_plus requires n >= k, got n = {n}, k = {k}"
        )));
    }
    let reps = transversal(i64::from(n), i64::from(k))?;
    let k = i64::from(k);
    Ok(FinitePointSet::new(f.iter().flat_map(|x| {
        reps.iter().map(move |s| &coset_rep(&(s - x), k) + x)
    })))
}

/// Result of [`delone_check`].
///
/// `separation_exp = Some(e)` means distinct points are at 2-adic distance
/// at least `2^e` (attained). `covering_exp = Some(j)` means every coset of
/// `A_j` inside `A_a` holds a point, `j` minimal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeloneReport {
    pub uniformly_discrete: bool,
    pub separation_exp: Option<i64>,
    pub relatively_dense: bool,
    pub covering_exp: Option<i64>,
}

fn distinct_reps(set: &FinitePointSet, k: i64) -> usize {
    set.iter()
        .map(|x| coset_rep(x, k))
        .collect::<HashSet<_>>()
        .len()
}

pub fn delone_check(set: &FinitePointSet, a: i64) -> Result<DeloneReport> {
    if let Some(x) = set.iter().find(|x| !in_ball(x, a)) {
        return Err(Error::InvalidParameter(format!("{x} lies outside A_{a}")));
    }
    let separation_exp = if set.len() < 2 {
        None
    } else {
        // injectivity of x ↦ x + A_e is monotone in e; distances are powers of 2
        let mut e = a - 1;
        while distinct_reps(set, e) < set.len() {
            e -= 1;
        }
        Some(e + 1)
    };
    let covering_exp = if set.is_empty() {
        None
    } else {
        let mut j = a;
        while (a - j + 1) < 63 && distinct_reps(set, j - 1) as u64 == 1u64 << (a - j + 1) {
            j -= 1;
        }
        Some(j)
    };
    Ok(DeloneReport {
        uniformly_discrete: separation_exp.is_some(),
        separation_exp,
        relatively_dense: covering_exp.is_some(),
        covering_exp,
    })
}
