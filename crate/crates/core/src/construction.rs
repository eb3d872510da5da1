//! The extension step and the stage driver.
//!
//! Given `F` well placed in `A_a` with `0 ∈ F` and `n + 2 <= a`, the extension
//! is
//!
//! ```text
//! E = ⋃_{g ∈ ξ_{a+d}^a} g + ((F ∩ A_n) ∪ ((F + v_g) ∩ (A_a \ A_n)))
//! ```
//!
//! with `v_{g_j} = 5 · 2^r · j` for the `j`-th element of `ξ_{a+d}^a` in
//! ascending order and `r >= n` minimal with `F` inside the real interval
//! `(-2^r, 2^r)`. Stage `n + 1` of a build is the extension of stage `n` with
//! parameters `(n, a_n, d_n)`.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ball::{coset_rep, in_ball, transversal};
use crate::dyadic::Dyadic;
use crate::patch::{patch_set, CosetIndex, Patch};
use crate::pointset::{delta_v, well_placed, FinitePointSet};
use crate::schedule::StageSchedule;
use crate::{Error, Result};

/// Smallest `r >= n` with `|f| < 2^r` (real absolute value) for every `f ∈ F`.
pub fn min_r(f: &FinitePointSet, n: i64) -> i64 {
    let Some(max) = f.iter().map(Dyadic::abs_real).max() else {
        return n;
    };
    if max.is_zero() {
        return n;
    }
    // num / 2^exp < 2^r  <=>  bits(num) <= r + exp
    let bits = max.num().bits() as i64;
    n.max(bits - i64::from(max.exp()))
}

/// The assignment `g_j ↦ 5 · 2^r · j` over `ξ_{a+d}^a` in ascending order.
pub fn v_assignment(a: u32, d: u32, r: i64) -> Result<Vec<(Dyadic, Dyadic)>> {
    if r < 0 {
        return Err(Error::InvalidParameter(format!("r must be >= 0, got {r}")));
    }
    let reps = transversal(i64::from(a + d), i64::from(a))?;
    let step = BigInt::from(5) << r as u64;
    Ok(reps
        .into_iter()
        .enumerate()
        .map(|(j, g)| (g, Dyadic::new(&step * BigInt::from(j), 0)))
        .collect())
}

/// Output of [`extend`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extension {
    pub set: FinitePointSet,
    pub r: i64,
    pub v: Vec<(Dyadic, Dyadic)>,
}

fn check_extend_preconditions(f: &FinitePointSet, n: u32, a: u32, d: u32) -> Result<()> {
    if n < 1 {
        return Err(Error::Precondition("n >= 1"));
    }
    if n + 2 > a {
        return Err(Error::Precondition("n+2 <= a"));
    }
    if d < 1 {
        return Err(Error::Precondition("d >= 1"));
    }
    if !well_placed(f, a) {
        return Err(Error::Precondition("well placed"));
    }
    if !f.contains(&Dyadic::zero()) {
        return Err(Error::Precondition("0 ∈ F"));
    }
    Ok(())
}

pub fn extend(f: &FinitePointSet, n: u32, a: u32, d: u32) -> Result<Extension> {
    check_extend_preconditions(f, n, a, d)?;
    let r = min_r(f, i64::from(n));
    let v = v_assignment(a, d, r)?;
    let n = i64::from(n);
    let mut points = Vec::with_capacity(f.len() << d);
    for (g, vg) in &v {
        for x in f {
            let y = g + x;
            points.push(if in_ball(x, n) { y } else { &y + vg });
        }
    }
    let set = FinitePointSet::new(points).with_scale(a + d)?;
    Ok(Extension { set, r, v })
}

/// One stage `ω_n` of a build, together with the parameters of the
/// extension that produces `ω_{n+1}` from it. `v` is left empty on the last
/// built stage; its size `2^{d_n}` can be far beyond the size cap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSet {
    pub n: u64,
    pub a: u64,
    pub d: u64,
    pub r: i64,
    pub v: Vec<(Dyadic, Dyadic)>,
    pub omega: FinitePointSet,
}

impl StageSet {
    pub fn a_u32(&self) -> u32 {
        u32::try_from(self.a).expect("stage scale fits u32")
    }

    /// The image of the recorded `v`-assignment.
    pub fn v_image(&self) -> impl Iterator<Item = &Dyadic> {
        self.v.iter().map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildResult {
    pub stages: Vec<StageSet>,
    pub requested: usize,
    /// Set when the next stage would exceed the size cap.
    pub truncated: bool,
}

fn to_u32(x: u64, what: &str) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::InvalidParameter(format!("{what} = {x} too large")))
}

fn stage_record(n: usize, sched: &StageSchedule, omega: FinitePointSet) -> StageSet {
    let (a, d) = (sched.a(n), sched.d(n));
    StageSet {
        n: n as u64,
        a,
        d,
        r: min_r(&omega, n as i64),
        v: Vec::new(),
        omega,
    }
}

fn within_cap(a: u64, size_cap: u64) -> bool {
    a < 64 && (1u64 << a) <= size_cap
}

/// `ω_1 = ξ_{a_1}`, `ω_{n+1} = extend(ω_n, n, a_n, d_n)`.
pub fn build(sched: &StageSchedule, stages: usize, size_cap: u64) -> Result<BuildResult> {
    if stages < 1 {
        return Err(Error::InvalidParameter(
            "at least one stage is required".into(),
        ));
    }
    if stages > sched.len() {
        return Err(Error::InvalidParameter(format!(
            "schedule has {} steps, {stages} stages requested",
            sched.len()
        )));
    }
    let mut out = BuildResult {
        stages: Vec::with_capacity(stages),
        requested: stages,
        truncated: false,
    };
    if !within_cap(sched.a(1), size_cap) {
        out.truncated = true;
        return Ok(out);
    }
    let first = FinitePointSet::xi(to_u32(sched.a(1), "a_1")?);
    out.stages.push(stage_record(1, sched, first));
    for n in 1..stages {
        if !within_cap(sched.a(n + 1), size_cap) {
            out.truncated = true;
            break;
        }
        let prev = &out.stages[n - 1];
        let ext = extend(
            &prev.omega,
            to_u32(n as u64, "n")?,
            to_u32(prev.a, "a_n")?,
            to_u32(prev.d, "d_n")?,
        )?;
        debug_assert_eq!(ext.r, prev.r);
        out.stages[n - 1].v = ext.v;
        out.stages.push(stage_record(n + 1, sched, ext.set));
    }
    Ok(out)
}

/// Outcome of one clause check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseReport {
    pub passed: bool,
    /// Number of elementary comparisons performed.
    pub checks: u64,
    /// `false` when the clause was checked on a uniform sample.
    pub exhaustive: bool,
    pub detail: String,
}

impl ClauseReport {
    fn exact(passed: bool, checks: u64, detail: String) -> Self {
        ClauseReport {
            passed,
            checks,
            exhaustive: true,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub n: u32,
    pub a: u32,
    pub d: u32,
    pub seed: u64,
    pub clause_a: ClauseReport,
    pub clause_b: ClauseReport,
    pub clause_c: ClauseReport,
    pub clause_d: ClauseReport,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.clauses().iter().all(|(_, c)| c.passed)
    }

    pub fn clauses(&self) -> [(&'static str, &ClauseReport); 4] {
        [
            ("a", &self.clause_a),
            ("b", &self.clause_b),
            ("c", &self.clause_c),
            ("d", &self.clause_d),
        ]
    }
}

fn verify_clause_a(f: &FinitePointSet, ext: &Extension, a: u32, d: u32) -> ClauseReport {
    let e = &ext.set;
    let mut failures = Vec::new();
    if !f.is_subset(e) {
        failures.push("F ⊄ E");
    }
    if !well_placed(e, a + d) {
        failures.push("E not well placed in A_{a+d}");
    }
    if e.restrict(i64::from(a)) != FinitePointSet::new(f.iter().cloned()) {
        failures.push("E ∩ A_a != F");
    }
    let images: HashSet<&Dyadic> = ext.v.iter().map(|(_, v)| v).collect();
    if images.len() != ext.v.len() {
        failures.push("v not injective");
    }
    if ext.v.first().map(|(g, v)| g.is_zero() && v.is_zero()) != Some(true) {
        failures.push("v_0 != 0");
    }
    let step = BigInt::from(5) << ext.r.max(0) as u64;
    let in_w = ext
        .v
        .iter()
        .enumerate()
        .all(|(j, (_, v))| *v.num() == &step * BigInt::from(j) && v.exp() == 0);
    if !in_w || ext.v.len() != 1usize << d {
        failures.push("v does not map onto W");
    }
    let checks = (f.len() + 2 * e.len() + ext.v.len()) as u64;
    ClauseReport::exact(
        failures.is_empty(),
        checks,
        if failures.is_empty() {
            format!("F ⊆ E, |E| = {}, E well placed in A_{}", e.len(), a + d)
        } else {
            failures.join("; ")
        },
    )
}

/// Per-coset patch counts: `(coset of A_k, patch id) -> count`.
fn coset_patch_counts(
    set: &FinitePointSet,
    ids: &[usize],
    k: i64,
) -> HashMap<(Dyadic, usize), u64> {
    let mut counts = HashMap::new();
    for (x, &id) in set.iter().zip(ids) {
        *counts.entry((coset_rep(x, k), id)).or_insert(0) += 1;
    }
    counts
}

fn verify_clause_b(
    f: &FinitePointSet,
    e: &FinitePointSet,
    n: u32,
    a: u32,
    d: u32,
    budget: u64,
    rng: &mut ChaCha8Rng,
) -> Result<ClauseReport> {
    let hs = transversal(i64::from(a), 0)?;
    let hps = transversal(i64::from(a + d), i64::from(a))?;
    // total number of (j, P, k, h, h') tuples
    let mut per_j = Vec::new();
    let mut total: u64 = 0;
    for j in 0..=i64::from(n) {
        let mut intern: HashMap<Patch, usize> = HashMap::new();
        let mut ids_of = |set: &FinitePointSet| -> Vec<usize> {
            CosetIndex::new(set, j)
                .all_patches()
                .into_iter()
                .map(|p| {
                    let next = intern.len();
                    *intern.entry(p).or_insert(next)
                })
                .collect()
        };
        let e_ids = ids_of(e);
        let f_ids = ids_of(f);
        let e_patches: Vec<usize> = {
            let mut v = e_ids.clone();
            v.sort_unstable();
            v.dedup();
            v
        };
        let f_patches: HashSet<usize> = f_ids.iter().copied().collect();
        let same_pat =
            e_patches.len() == f_patches.len() && e_patches.iter().all(|id| f_patches.contains(id));
        if !same_pat {
            return Ok(ClauseReport::exact(
                false,
                0,
                format!("Pat_F(A_{j}) != Pat_E(A_{j})"),
            ));
        }
        total = total.saturating_add(
            (e_patches.len() as u64)
                .saturating_mul(u64::from(a) + 1)
                .saturating_mul(hs.len() as u64)
                .saturating_mul(hps.len() as u64),
        );
        per_j.push((j, f_ids, e_ids, e_patches));
    }
    let exhaustive = total <= budget;
    let mut checks = 0u64;
    let mut failure: Option<String> = None;

    let mut check = |j: i64,
                     k: i64,
                     pid: usize,
                     h: &Dyadic,
                     hp: &Dyadic,
                     cf: &HashMap<(Dyadic, usize), u64>,
                     ce: &HashMap<(Dyadic, usize), u64>| {
        checks += 1;
        let lhs = cf.get(&(coset_rep(h, k), pid)).copied().unwrap_or(0);
        let rhs = ce
            .get(&(coset_rep(&(h + hp), k), pid))
            .copied()
            .unwrap_or(0);
        if lhs != rhs && failure.is_none() {
            failure = Some(format!(
                "A = A_{j}, k = {k}, h = {h}, h' = {hp}: {lhs} != {rhs}"
            ));
        }
    };

    if exhaustive {
        for (j, f_ids, e_ids, e_patches) in &per_j {
            for k in 0..=i64::from(a) {
                let cf = coset_patch_counts(f, f_ids, k);
                let ce = coset_patch_counts(e, e_ids, k);
                for &pid in e_patches {
                    for h in &hs {
                        for hp in &hps {
                            check(*j, k, pid, h, hp, &cf, &ce);
                        }
                    }
                }
            }
        }
    } else {
        // uniform over (j, k) blocks weighted by their tuple counts, then P, h, h'
        let mut tables = HashMap::new();
        let weights: Vec<u64> = per_j
            .iter()
            .map(|(_, _, _, p)| p.len() as u64 * (u64::from(a) + 1))
            .collect();
        let weight_total: u64 = weights.iter().sum();
        for _ in 0..budget {
            let mut pick = rng.gen_range(0..weight_total);
            let mut which = 0;
            while pick >= weights[which] {
                pick -= weights[which];
                which += 1;
            }
            let (j, f_ids, e_ids, e_patches) = &per_j[which];
            let k = (pick / e_patches.len() as u64) as i64;
            let pid = e_patches[(pick % e_patches.len() as u64) as usize];
            let (cf, ce) = tables.entry((which, k)).or_insert_with(|| {
                (
                    coset_patch_counts(f, f_ids, k),
                    coset_patch_counts(e, e_ids, k),
                )
            });
            let h = &hs[rng.gen_range(0..hs.len())];
            let hp = &hps[rng.gen_range(0..hps.len())];
            check(*j, k, pid, h, hp, cf, ce);
        }
    }
    let passed = failure.is_none();
    Ok(ClauseReport {
        passed,
        checks,
        exhaustive,
        detail: failure.unwrap_or_else(|| {
            format!(
                "coset counts agree for A_j (j <= {n}), k in 0..={a}; {} of {total} tuples",
                if exhaustive { "all" } else { "sampled" }
            )
        }),
    })
}

fn verify_clause_c(
    f: &FinitePointSet,
    e: &FinitePointSet,
    n: u32,
    a: u32,
    d: u32,
) -> Result<ClauseReport> {
    let hps = transversal(i64::from(a + d), i64::from(a))?;
    let shifted = FinitePointSet::new(hps.iter().flat_map(|h| f.iter().map(move |x| h + x)))
        .restrict(i64::from(a + d));
    let diff = delta_v(e, &shifted, i64::from(n));
    Ok(ClauseReport::exact(
        diff.is_empty(),
        (e.len() + shifted.len()) as u64,
        if diff.is_empty() {
            format!("E Δ_V_{n} (F + ξ_{}^{a}) = ∅", a + d)
        } else {
            format!("{} points in E Δ_V_{n} (F + ξ_{}^{a})", diff.len(), a + d)
        },
    ))
}

fn verify_clause_d(f: &FinitePointSet, e: &FinitePointSet, n: u32, d: u32) -> ClauseReport {
    let mut details = Vec::new();
    let mut passed = true;
    for m in [n + 1, n + 2] {
        let pe = patch_set(e, i64::from(m)).len() as u128;
        let pf = patch_set(f, i64::from(m)).len() as u128;
        let lower = 1u128 << d;
        let upper = pf + (1u128 << (d + m));
        let ok = lower <= pe && pe <= upper;
        passed &= ok;
        details.push(format!(
            "m = {m}: {lower} <= {pe} <= {upper}{}",
            if ok { "" } else { " FAILED" }
        ));
    }
    ClauseReport::exact(passed, 2, details.join("; "))
}

/// Checks clauses (a)-(d) of the extension step for `E = extend(F, n, a, d)`.
///
/// Clause (b) is checked for `A = A_j`, `0 <= j <= n`, every patch of `E`,
/// `0 <= k <= a`, `h ∈ ξ_a`, `h' ∈ ξ_{a+d}^a`; exhaustively when the number
/// of tuples is at most `sample_budget`, otherwise on `sample_budget`
/// uniformly drawn tuples.
pub fn verify_lemma(
    f: &FinitePointSet,
    ext: &Extension,
    n: u32,
    a: u32,
    d: u32,
    sample_budget: u64,
    seed: u64,
) -> Result<LemmaReport> {
    check_extend_preconditions(f, n, a, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = &ext.set;
    Ok(LemmaReport {
        n,
        a,
        d,
        seed,
        clause_a: verify_clause_a(f, ext, a, d),
        clause_b: verify_clause_b(f, e, n, a, d, sample_budget, &mut rng)?,
        clause_c: verify_clause_c(f, e, n, a, d)?,
        clause_d: verify_clause_d(f, e, n, d),
    })
}

/// A well-placed set in `A_a` containing 0: each unit ball `m/2^a + A_0`
/// gets the point `m/2^a + t` with `t` uniform in `[-spread, spread]`.
pub fn random_well_placed(a: u32, spread: i64, rng: &mut impl Rng) -> FinitePointSet {
    let pts = transversal(i64::from(a), 0)
        .expect("ξ_a is always defined")
        .into_iter()
        .map(|x| {
            if x.is_zero() {
                x
            } else {
                &x + &Dyadic::from_int(rng.gen_range(-spread..=spread))
            }
        });
    FinitePointSet::new(pts)
        .with_scale(a)
        .expect("one point per unit ball by construction")
}
