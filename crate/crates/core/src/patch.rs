//! Patches `(S - g) ∩ A_m`, patch counting and exact patch frequencies.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::ball::{coset_rep, haar, in_ball};
use crate::construction::StageSet;
use crate::dyadic::Dyadic;
use crate::pointset::FinitePointSet;
use crate::{Error, Result};

/// A finite point set inside `A_m`, compared literally (sorted encoding).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawPatch")]
pub struct Patch {
    #[serde(rename = "m")]
    pub radius_exp: i64,
    pub points: Vec<Dyadic>,
}

#[derive(Deserialize)]
struct RawPatch {
    m: i64,
    points: Vec<Dyadic>,
}

impl TryFrom<RawPatch> for Patch {
    type Error = Error;
    fn try_from(raw: RawPatch) -> Result<Self> {
        Patch::new(raw.m, raw.points)
    }
}

impl Patch {
    pub fn new(radius_exp: i64, points: impl IntoIterator<Item = Dyadic>) -> Result<Self> {
        let mut points: Vec<Dyadic> = points.into_iter().collect();
        points.sort_unstable();
        points.dedup();
        if let Some(p) = points.iter().find(|p| !in_ball(p, radius_exp)) {
            return Err(Error::InvalidParameter(format!(
                "patch point {p} lies outside A_{radius_exp}"
            )));
        }
        Ok(Patch { radius_exp, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Points of a set grouped by their `A_m`-coset.
pub(crate) struct CosetIndex<'a> {
    m: i64,
    points: &'a [Dyadic],
    groups: HashMap<Dyadic, Vec<usize>>,
}

impl<'a> CosetIndex<'a> {
    pub(crate) fn new(set: &'a FinitePointSet, m: i64) -> Self {
        let mut groups: HashMap<Dyadic, Vec<usize>> = HashMap::new();
        for (i, x) in set.iter().enumerate() {
            groups.entry(coset_rep(x, m)).or_default().push(i);
        }
        CosetIndex {
            m,
            points: set.points(),
            groups,
        }
    }

    /// `(S - g) ∩ A_m` for an arbitrary `g`.
    pub(crate) fn patch_around(&self, g: &Dyadic) -> Patch {
        let points = match self.groups.get(&coset_rep(g, self.m)) {
            Some(members) => members.iter().map(|&i| &self.points[i] - g).collect(),
            None => Vec::new(),
        };
        // translation keeps the real order, so the points stay sorted
        Patch {
            radius_exp: self.m,
            points,
        }
    }

    /// Patch at every point of the set, in point order.
    pub(crate) fn all_patches(&self) -> Vec<Patch> {
        self.points.iter().map(|g| self.patch_around(g)).collect()
    }
}

/// `(S - g) ∩ A_m` for an anchor `g ∈ S`.
pub fn patch_at(set: &FinitePointSet, g: &Dyadic, m: i64) -> Result<Patch> {
    if !set.contains(g) {
        return Err(Error::AnchorNotInSet(g.to_string()));
    }
    if let Some(a) = set.scale() {
        if m > i64::from(a) {
            return Err(Error::InvalidParameter(format!(
                "patch radius A_{m} exceeds the well-placed scale A_{a}"
            )));
        }
    }
    let points = set
        .iter()
        .map(|x| x - g)
        .filter(|y| in_ball(y, m))
        .collect();
    Ok(Patch {
        radius_exp: m,
        points,
    })
}

/// Distinct patches at radius `m` with their anchor counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchSet {
    pub radius_exp: i64,
    pub counts: BTreeMap<Patch, usize>,
}

impl PatchSet {
    /// Number of distinct patches, `|Pat_S(A_m)|`.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn patches(&self) -> impl Iterator<Item = &Patch> {
        self.counts.keys()
    }

    pub fn contains(&self, p: &Patch) -> bool {
        self.counts.contains_key(p)
    }

    /// Equality of the underlying sets of patches, ignoring multiplicities.
    pub fn same_patches(&self, other: &PatchSet) -> bool {
        self.radius_exp == other.radius_exp && self.counts.keys().eq(other.counts.keys())
    }
}

pub fn patch_set(set: &FinitePointSet, m: i64) -> PatchSet {
    let mut counts = BTreeMap::new();
    for p in CosetIndex::new(set, m).all_patches() {
        *counts.entry(p).or_insert(0) += 1;
    }
    PatchSet {
        radius_exp: m,
        counts,
    }
}

/// One row of the entropy series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub n: u32,
    pub count: usize,
    /// `θ(A_n) = 2^n`.
    pub theta: u64,
    pub ratio: f64,
    /// `|Pat_{ω_{n+1}}(A_n)| == |Pat_{ω_n}(A_n)|` when stage `n + 1` exists.
    pub stable: Option<bool>,
}

/// `|Pat_ω(A_n)| = |Pat_{ω_n}(A_n)|` and `ln|Pat| / 2^n` for each built stage.
/// Row 0 is taken from stage 1.
pub fn entropy_series(stages: &[StageSet]) -> Vec<EntropyRow> {
    let mut rows = Vec::new();
    let Some(first) = stages.first() else {
        return rows;
    };
    let mut push = |n: u32, count: usize, stable: Option<bool>| {
        let theta = 1u64 << n;
        rows.push(EntropyRow {
            n,
            count,
            theta,
            ratio: (count as f64).ln() / theta as f64,
            stable,
        });
    };
    push(0, patch_set(&first.omega, 0).len(), None);
    for (i, stage) in stages.iter().enumerate() {
        let n = stage.n as i64;
        let count = patch_set(&stage.omega, n).len();
        let stable = stages
            .get(i + 1)
            .map(|next| patch_set(&next.omega, n).len() == count);
        push(stage.n as u32, count, stable);
    }
    rows
}

fn check_patch(patch: &Patch, a: u32) -> Result<()> {
    if patch.is_empty() {
        return Err(Error::EmptyPatch);
    }
    if patch.radius_exp > i64::from(a) {
        return Err(Error::InvalidParameter(format!(
            "patch radius A_{} exceeds A_{a}",
            patch.radius_exp
        )));
    }
    Ok(())
}

/// Group elements `g` with `(S - g) ∩ A_m = P`, restricted by `keep`.
fn matching_translates(
    set: &FinitePointSet,
    patch: &Patch,
    keep: impl Fn(&Dyadic) -> bool,
) -> usize {
    let index = CosetIndex::new(set, patch.radius_exp);
    let first = &patch.points[0];
    // any match g has g + P[0] ∈ S
    let candidates: HashSet<Dyadic> = set.iter().map(|x| x - first).filter(|g| keep(g)).collect();
    candidates
        .iter()
        .filter(|g| index.patch_around(g) == *patch)
        .count()
}

/// `|{g ∈ A_a : (ω - g) ∩ A_m = P}| / θ(A_a)` for a stage set well placed in `A_a`.
pub fn frequency(omega: &FinitePointSet, a: u32, patch: &Patch) -> Result<BigRational> {
    check_patch(patch, a)?;
    let count = matching_translates(omega, patch, |g| in_ball(g, i64::from(a)));
    Ok(BigRational::from_integer(BigInt::from(count)) / haar(i64::from(a)))
}

/// Frequency of `P` over `C = ⋃_{h ∈ region} (A_{a_n} + h)` inside the stage
/// set `omega_m` (well placed in `A_{a_m}`). `region ⊆ ξ_{a_m}^{a_n}`.
pub fn frequency_sorted(
    omega_m: &FinitePointSet,
    a_m: u32,
    region: &[Dyadic],
    patch: &Patch,
    a_n: u32,
) -> Result<BigRational> {
    check_patch(patch, a_n)?;
    if a_n > a_m {
        return Err(Error::InvalidParameter(format!(
            "sorted frequency needs a_N <= a_M, got {a_n} > {a_m}"
        )));
    }
    if region.is_empty() {
        return Err(Error::InvalidParameter("empty region".into()));
    }
    let (big, small) = (i64::from(a_m), i64::from(a_n));
    let mut reps = HashSet::with_capacity(region.len());
    for h in region {
        if !in_ball(h, big) || coset_rep(h, small) != *h {
            return Err(Error::InvalidParameter(format!(
                "{h} is not in the transversal ξ_{a_m}^{a_n}"
            )));
        }
        if !reps.insert(h.clone()) {
            return Err(Error::InvalidParameter(format!(
                "duplicate region coset {h}"
            )));
        }
    }
    let count = matching_translates(omega_m, patch, |g| {
        in_ball(g, big) && reps.contains(&coset_rep(g, small))
    });
    let theta = haar(small) * BigRational::from_integer(BigInt::from(region.len()));
    Ok(BigRational::from_integer(BigInt::from(count)) / theta)
}
