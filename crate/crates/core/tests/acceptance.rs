//! Acceptance suite. Runs without the libtest harness so that every criterion
//! prints exactly one PASS/FAIL line; the process exits non-zero if any fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use delone_q2::construction::random_well_placed;
use delone_q2::diffraction::control_set;
use delone_q2::representation::{model_set_companion, DEFAULT_EXACT_LIMIT};
use delone_q2::{
    almost_period_defect, build, entropy_series, extend, frequency, frequency_sorted, pat_series,
    patch_set, pp_mass, schedule, spectrum, transversal, verify_lemma, xi_plus, BuildResult,
    Dyadic, FinitePointSet, StageSet, Target,
};
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest `a_n` built for the sandwich and stability checks.
const MAX_SCALE_EXP: u64 = 18;
const SCHEDULE_STEPS: u32 = 10;
const CLAUSE_B_BUDGET: u64 = 10_000_000;
const SEED: u64 = 0x5eed_2024;

const ZERO_REL_TOL: f64 = 1e-6;
const PEAK_REL_TOL: f64 = 1e-9;
const PARSEVAL_REL_TOL: f64 = 1e-9;
const PARSEVAL_SETS: u64 = 100;

/// Resolution and seed counts for the concentration diagnostic.
const PP_RESOLUTION: u32 = 3;
const PP_SEEDS: u64 = 20;
const PP_REQUIRED: usize = 18;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn target(s: &str) -> Target {
    s.parse().expect("valid target")
}

fn build_for(r: &str, s: &str) -> BuildResult {
    let sched = schedule(target(r), target(s), SCHEDULE_STEPS, 1, 2).expect("schedule");
    build(&sched, SCHEDULE_STEPS as usize, 1 << MAX_SCALE_EXP).expect("build")
}

/// `2^lo_exp <= count <= 2^hi_exp` without overflow.
fn within_pow2(count: usize, lo_exp: u64, hi_exp: u64) -> bool {
    let c = count as u128;
    let lo_ok = lo_exp < 127 && c >= 1u128 << lo_exp;
    let hi_ok = hi_exp >= 127 || c <= 1u128 << hi_exp;
    lo_ok && hi_ok
}

fn clause_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut runs, mut failures, mut sampled) = (0, Vec::new(), 0);
    for n in 1..=2u32 {
        for a in n + 2..=n + 4 {
            let inputs = [
                ("xi", FinitePointSet::xi(a)),
                ("random", random_well_placed(a, 3, &mut rng)),
            ];
            for (label, f) in &inputs {
                for d in 1..=3u32 {
                    runs += 1;
                    let ext = extend(f, n, a, d).expect("extend");
                    let seed = rng.gen();
                    let report = verify_lemma(f, &ext, n, a, d, CLAUSE_B_BUDGET, seed)
                        .expect("verify_lemma");
                    if !report.clause_b.exhaustive {
                        sampled += 1;
                    }
                    for (name, clause) in report.clauses() {
                        if !clause.passed {
                            failures.push(format!(
                                "n={n} a={a} d={d} F={label} ({name}): {}",
                                clause.detail
                            ));
                        }
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty() && sampled == 0,
        format!(
            "{runs} runs, {} clause failures, {sampled} non-exhaustive (b) runs{}",
            failures.len(),
            failures
                .first()
                .map(|f| format!("; first: {f}"))
                .unwrap_or_default()
        ),
    )
}

fn sandwich(builds: &[(&str, &BuildResult)]) -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for (name, b) in builds {
        for pair in b.stages.windows(2) {
            let (cur, next) = (&pair[0], &pair[1]);
            let n = cur.n;
            let count = patch_set(&next.omega, (n + 1) as i64).len();
            checked += 1;
            if !within_pow2(count, cur.d, cur.d + n + 3) {
                failures.push(format!("{name} n={n}: |Pat|={count}, d_n={}", cur.d));
            }
        }
    }
    outcome(
        failures.is_empty() && checked > 0,
        format!("{checked} stage pairs; {}", summarize(&failures)),
    )
}

fn summarize(failures: &[String]) -> String {
    if failures.is_empty() {
        "no violations".into()
    } else {
        format!("{} violations, e.g. {}", failures.len(), failures[0])
    }
}

fn uniform_frequency(stages: &[StageSet]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let (mut checked, mut outside, mut out_of_scope) = (0, 0, 0);
    let mut failures = Vec::new();
    for big_n in 1..=3usize {
        let Some(stage) = stages.get(big_n - 1) else {
            continue;
        };
        let Some(fine) = stages.get(big_n + 1) else {
            continue;
        };
        let (a_n, a_m) = (stage.a_u32(), fine.a_u32());
        let cosets = transversal(i64::from(a_m), i64::from(a_n)).expect("transversal");
        let regions: Vec<Vec<Dyadic>> = (0..5)
            .map(|_| {
                let size = rng.gen_range(1..=cosets.len().min(16));
                cosets.choose_multiple(&mut rng, size).cloned().collect()
            })
            .collect();
        for m in 0..=2i64 {
            for patch in patch_set(&stage.omega, m).patches() {
                let expected = frequency(&stage.omega, a_n, patch).expect("frequency");
                for region in &regions {
                    let got = frequency_sorted(&fine.omega, a_m, region, patch, a_n)
                        .expect("frequency_sorted");
                    // frequencies along sorted regions are only claimed for A ⊆ A_N
                    if m > big_n as i64 {
                        outside += 1;
                        out_of_scope += usize::from(got != expected);
                        continue;
                    }
                    checked += 1;
                    if got != expected {
                        failures.push(format!(
                            "N={big_n} m={m} |region|={}: {got} != {expected}",
                            region.len()
                        ));
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty() && checked > 0,
        format!(
            "{checked} (patch, region) pairs with m <= N; {}; {out_of_scope} mismatches among {outside} pairs with m > N",
            summarize(&failures)
        ),
    )
}

fn stability(builds: &[(&str, &BuildResult)]) -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for (name, b) in builds {
        for pair in b.stages.windows(2) {
            let k = pair[0].n as i64;
            for m in 0..=k {
                checked += 1;
                let cur = patch_set(&pair[0].omega, m);
                let next = patch_set(&pair[1].omega, m);
                if !cur.same_patches(&next) {
                    failures.push(format!(
                        "{name} k={k} m={m}: {} vs {} patches",
                        cur.len(),
                        next.len()
                    ));
                }
            }
        }
    }
    outcome(
        failures.is_empty() && checked > 0,
        format!("{checked} (k, m) pairs; {}", summarize(&failures)),
    )
}

fn entropy_contrast(b: &BuildResult) -> Outcome {
    let stages = &b.stages;
    let mut failures = Vec::new();
    let mut windows = Vec::new();
    for k in 1..=3i64 {
        let rows: Vec<_> = pat_series(stages, k, DEFAULT_EXACT_LIMIT)
            .into_iter()
            .filter(|r| r.n >= 1)
            .collect();
        windows.push(format!(
            "k={k}: [{}]",
            rows.iter()
                .map(|r| format!("{}:{}", r.n, r.pat_count))
                .collect::<Vec<_>>()
                .join(" ")
        ));
        if rows.iter().any(|r| !r.exact) {
            failures.push(format!("k={k}: pat count not certified exact"));
        }
        for w in rows.windows(2) {
            if w[1].ratio >= w[0].ratio {
                failures.push(format!(
                    "k={k}: ratio not decreasing at n={} ({:.6} -> {:.6})",
                    w[1].n, w[0].ratio, w[1].ratio
                ));
            }
        }
        match model_set_companion(stages, k as usize) {
            Ok(companion) => {
                for r in &rows {
                    let bound = patch_set(&companion, i64::from(r.n)).len();
                    if r.pat_count > bound {
                        failures.push(format!(
                            "k={k} n={}: pat={} > companion {bound}",
                            r.n, r.pat_count
                        ));
                    }
                }
            }
            Err(e) => failures.push(format!("k={k}: {e}")),
        }
    }
    // entropy side: the same n must sit inside the integer sandwich
    let entropy = entropy_series(stages);
    for cur in stages {
        let n = cur.n;
        if let Some(row) = entropy.iter().find(|r| u64::from(r.n) == n + 1) {
            if !within_pow2(row.count, cur.d, cur.d + n + 3) {
                failures.push(format!("entropy row n={}: count {}", row.n, row.count));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{}; {}", windows.join(", "), summarize(&failures)),
    )
}

fn structural_zeros() -> Outcome {
    let mut worst = (0.0f64, 0u32, 0u32, 0usize);
    let mut peak_ok = true;
    for a in 0..=6u32 {
        for m in 0..=3u32 {
            let spec = spectrum(&FinitePointSet::xi(a), a, m).expect("spectrum");
            let i0 = spec.intensities[0];
            let exact = f64::from(1u32 << a);
            peak_ok &= (i0 - exact).abs() <= PEAK_REL_TOL * exact;
            for (k, i) in spec.intensities.iter().enumerate().skip(1) {
                let rel = i / i0;
                if rel > worst.0 {
                    worst = (rel, a, m, k);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    let mut parseval_ok = 0;
    for _ in 0..PARSEVAL_SETS {
        let a = rng.gen_range(0..=6u32);
        let m = rng.gen_range(0..=3u32);
        let set = random_well_placed(a, 7, &mut rng);
        let spec = spectrum(&set, a, m).expect("separated by construction");
        let expected = f64::from(1u32 << (a + m)) * set.len() as f64 / f64::from(1u32 << a);
        if (spec.total() - expected).abs() <= PARSEVAL_REL_TOL * expected {
            parseval_ok += 1;
        }
    }
    let zeros_ok = worst.0 <= ZERO_REL_TOL;
    outcome(
        zeros_ok && peak_ok && parseval_ok == PARSEVAL_SETS,
        format!(
            "max_(k!=0) I(k)/I(0) = {:.3e} at a={} M={} k={}; I(0)=2^a {}; Parseval {parseval_ok}/{PARSEVAL_SETS}",
            worst.0,
            worst.1,
            worst.2,
            worst.3,
            if peak_ok { "ok" } else { "violated" }
        ),
    )
}

fn concentration(stages: &[StageSet]) -> Outcome {
    let Some(stage3) = stages.get(2) else {
        return outcome(false, "stage 3 not built");
    };
    let a3 = stage3.a_u32();
    let half = xi_plus(&FinitePointSet::new(vec![Dyadic::zero()]), 1, a3).expect("xi_plus");
    let subjects = [("stage 3", &stage3.omega, a3), ("xi^1 + {0}", &half, a3)];
    let mut parts = Vec::new();
    let mut passed = true;
    for (name, set, a) in subjects {
        let j = 1usize << a;
        let mass =
            pp_mass(&spectrum(set, a, PP_RESOLUTION).expect("spectrum"), j).expect("pp_mass");
        let wins = (0..PP_SEEDS)
            .filter(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(SEED + seed);
                let control = control_set(set, PP_RESOLUTION, &mut rng);
                let c = pp_mass(&spectrum(&control, a, PP_RESOLUTION).expect("spectrum"), j)
                    .expect("pp_mass");
                mass > c
            })
            .count();
        passed &= wins >= PP_REQUIRED;
        parts.push(format!("{name}: mass {mass:.4}, wins {wins}/{PP_SEEDS}"));
    }
    outcome(passed, parts.join("; "))
}

fn almost_periods(builds: &[(&str, &BuildResult)]) -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for (name, b) in builds {
        for pair in b.stages.windows(2) {
            let (cur, next) = (&pair[0], &pair[1]);
            let a = next.a_u32();
            let image: Vec<&Dyadic> = cur.v_image().collect();
            let mut shifts: BTreeSet<Dyadic> = image.iter().map(|&g| g.clone()).collect();
            for g in &image {
                for h in &image {
                    shifts.insert(*g - *h);
                }
            }
            let n = cur.n as i64;
            for g in shifts
                .iter()
                .filter(|g| delone_q2::in_ball(g, i64::from(a)))
            {
                checked += 1;
                let defect = almost_period_defect(&next.omega, a, g, n).expect("defect");
                if !defect.is_zero() {
                    failures.push(format!("{name} n={n} g={g}: defect {defect}"));
                }
            }
        }
    }
    outcome(
        failures.is_empty() && checked > 0,
        format!("{checked} translations; {}", summarize(&failures)),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let half = build_for("ln2/2", "ln2/2");
    let one_half = build_for("1", "0.5");
    let inf_zero = build_for("inf", "0");
    let zero = build_for("0", "0");
    let sandwich_builds = [
        ("(ln2/2, ln2/2)", &half),
        ("(1, 1/2)", &one_half),
        ("(inf, 0)", &inf_zero),
    ];
    let all_builds = [
        ("(ln2/2, ln2/2)", &half),
        ("(1, 1/2)", &one_half),
        ("(inf, 0)", &inf_zero),
        ("(0, 0)", &zero),
    ];

    let criteria: Vec<Criterion> = vec![
        ("lemma clause suite", Box::new(clause_suite)),
        (
            "patch-count sandwich",
            Box::new(|| sandwich(&sandwich_builds)),
        ),
        (
            "uniform patch frequency",
            Box::new(|| uniform_frequency(&zero.stages)),
        ),
        ("patch-count stability", Box::new(|| stability(&all_builds))),
        ("entropy contrast", Box::new(|| entropy_contrast(&one_half))),
        ("spectrum structural zeros", Box::new(structural_zeros)),
        (
            "pure-point concentration",
            Box::new(|| concentration(&half.stages)),
        ),
        (
            "almost-period defects",
            Box::new(|| almost_periods(&all_builds)),
        ),
    ];

    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} ({:.1}s) {}",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "acceptance: {}/{} passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
