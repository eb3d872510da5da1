use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use delone_q2::construction::StageSet;
use delone_q2::representation::DEFAULT_EXACT_LIMIT;
use delone_q2::{
    build, entropy_series, extend, frequency, frequency_sorted, pat_series, schedule, spectrum,
    verify_lemma, Dyadic, FinitePointSet, LemmaReport, Patch, Target,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "delone-q2",
    version,
    about = "2-adic Delone sets with prescribed patch entropy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build stage sets and write stage_<n>.json plus manifest.json.
    Construct(ConstructArgs),
    /// Patch counts |Pat(A_n)| and ln|Pat| / 2^n as CSV.
    Entropy(EntropyArgs),
    /// Exact frequency of a patch in stage N, optionally along a sorted region.
    Freq(FreqArgs),
    /// Minimal V_k representation counts as CSV.
    Patchrep(PatchrepArgs),
    /// Diffraction intensities on A_a / V_M as CSV.
    Diffract(DiffractArgs),
    /// Check the extension clauses for a stage directory or a single step.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ConstructArgs {
    /// Upper target: decimal, "inf", or a multiple of ln2 such as "ln2/2".
    #[arg(long)]
    r: Target,
    /// Lower target, same syntax as --r.
    #[arg(long)]
    s: Target,
    #[arg(long)]
    stages: usize,
    /// Largest number of points a stage may hold.
    #[arg(long, default_value_t = 1 << 20)]
    size_cap: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EntropyArgs {
    stage_dir: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FreqArgs {
    stage_dir: PathBuf,
    /// Patch JSON {"m": m, "points": [...]}.
    #[arg(long)]
    patch: PathBuf,
    /// Stage index N.
    #[arg(long = "stages", alias = "stage")]
    stage: usize,
    /// Region JSON {"stage": M, "cosets": [...]} of coset representatives
    /// of A_{a_N} in A_{a_M}.
    #[arg(long)]
    region: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PatchrepArgs {
    stage_dir: PathBuf,
    #[arg(long)]
    scale_k: i64,
    /// Graphs with more distinct patches fall back to greedy with a lower bound.
    #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiffractArgs {
    /// Point set JSON or a stage file; the set must carry its scale.
    pointset: PathBuf,
    #[arg(long)]
    resolution_m: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Stage directory written by `construct`. Without it, --n/--a/--d check
    /// one extension of ξ_a.
    stage_dir: Option<PathBuf>,
    #[arg(long, requires_all = ["a", "d"], conflicts_with = "stage_dir")]
    n: Option<u32>,
    #[arg(long)]
    a: Option<u32>,
    #[arg(long)]
    d: Option<u32>,
    /// Tuple budget for the patch-count clause before it switches to sampling.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Sampling seed; defaults to the one recorded in the manifest.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Verification,
}

impl From<delone_q2::Error> for Failure {
    fn from(e: delone_q2::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    r: Target,
    s: Target,
    stages_requested: usize,
    stages_built: usize,
    d: Vec<u64>,
    a: Vec<u64>,
    spike_steps: Vec<u32>,
    truncated: bool,
    size_cap: u64,
    seed: u64,
    haar: String,
}

#[derive(Deserialize)]
struct RegionFile {
    stage: usize,
    cosets: Vec<Dyadic>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    fs::write(path, text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn stage_path(dir: &Path, n: u64) -> PathBuf {
    dir.join(format!("stage_{n}.json"))
}

fn read_manifest(dir: &Path) -> Result<Manifest, Failure> {
    read_json(&dir.join("manifest.json"))
}

/// Stages 1..=stages_built as listed in the manifest, validated for order.
fn read_stages(dir: &Path) -> Result<Vec<StageSet>, Failure> {
    let manifest = read_manifest(dir)?;
    let mut stages = Vec::with_capacity(manifest.stages_built);
    for n in 1..=manifest.stages_built as u64 {
        let stage: StageSet = read_json(&stage_path(dir, n))?;
        if stage.n != n {
            return Err(usage(format!("stage_{n}.json records n = {}", stage.n)));
        }
        let well_placed = stage.omega.clone().with_scale(stage.a_u32()).is_ok();
        if !well_placed {
            return Err(usage(format!(
                "stage {n} is not well placed in A_{}",
                stage.a
            )));
        }
        stages.push(stage);
    }
    if stages.is_empty() {
        return Err(usage("stage directory holds no stages"));
    }
    Ok(stages)
}

fn construct(args: ConstructArgs) -> CmdResult {
    if args.stages == 0 {
        return Err(usage("--stages must be at least 1"));
    }
    let steps = u32::try_from(args.stages).map_err(|_| usage("--stages too large"))?;
    let sched = schedule(args.r, args.s, steps, 1, 2)?;
    let built = build(&sched, args.stages, args.size_cap)?;
    fs::create_dir_all(&args.out).map_err(|e| usage(format!("{}: {e}", args.out.display())))?;
    for stage in &built.stages {
        write_json(&stage_path(&args.out, stage.n), stage)?;
    }
    let manifest = Manifest {
        r: args.r,
        s: args.s,
        stages_requested: args.stages,
        stages_built: built.stages.len(),
        d: sched.d.clone(),
        a: sched.a.clone(),
        spike_steps: sched.spike_steps.clone(),
        truncated: built.truncated,
        size_cap: args.size_cap,
        seed: args.seed,
        haar: "theta(A_n) = 2^n, theta(Z_2) = 1".into(),
    };
    write_json(&args.out.join("manifest.json"), &manifest)
}

fn entropy(args: EntropyArgs) -> CmdResult {
    let stages = read_stages(&args.stage_dir)?;
    let mut csv = String::from("n,count,theta,ratio_natural_log\n");
    for row in entropy_series(&stages) {
        writeln!(csv, "{},{},{},{}", row.n, row.count, row.theta, row.ratio).unwrap();
    }
    emit(args.out.as_deref(), &csv)
}

fn freq(args: FreqArgs) -> CmdResult {
    let stages = read_stages(&args.stage_dir)?;
    let patch: Patch = read_json(&args.patch)?;
    let pick = |n: usize| {
        stages
            .get(n.wrapping_sub(1))
            .ok_or_else(|| usage(format!("stage {n} not in {}", args.stage_dir.display())))
    };
    let stage = pick(args.stage)?;
    let (value, region) = match &args.region {
        None => (frequency(&stage.omega, stage.a_u32(), &patch)?, None),
        Some(path) => {
            let region: RegionFile = read_json(path)?;
            let fine = pick(region.stage)?;
            let f = frequency_sorted(
                &fine.omega,
                fine.a_u32(),
                &region.cosets,
                &patch,
                stage.a_u32(),
            )?;
            (f, Some(region.stage))
        }
    };
    let report = json!({
        "n": args.stage,
        "region_stage": region,
        "m": patch.radius_exp,
        "frequency": [value.numer().to_string(), value.denom().to_string()],
    });
    emit(
        args.out.as_deref(),
        &(serde_json::to_string(&report).unwrap() + "\n"),
    )
}

fn patchrep(args: PatchrepArgs) -> CmdResult {
    let stages = read_stages(&args.stage_dir)?;
    let mut csv = String::from("n,k,pat_count,exact_flag,lower_bound,ratio\n");
    for row in pat_series(&stages, args.scale_k, args.exact_limit) {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            row.n, row.k, row.pat_count, row.exact, row.lower_bound, row.ratio
        )
        .unwrap();
    }
    emit(args.out.as_deref(), &csv)
}

fn diffract(args: DiffractArgs) -> CmdResult {
    let value: serde_json::Value = read_json(&args.pointset)?;
    let (set, a) = if value.get("omega").is_some() {
        let stage: StageSet = serde_json::from_value(value).map_err(|e| usage(e.to_string()))?;
        let a = stage.a_u32();
        (stage.omega, a)
    } else {
        let set: FinitePointSet =
            serde_json::from_value(value).map_err(|e| usage(e.to_string()))?;
        let a = set
            .scale()
            .ok_or_else(|| usage("point set has no scale; diffraction needs S ⊆ A_a"))?;
        (set, a)
    };
    let spec = spectrum(&set, a, args.resolution_m)?;
    let mut csv = String::from("k,intensity\n");
    for (k, i) in spec.intensities.iter().enumerate() {
        writeln!(csv, "{k},{i}").unwrap();
    }
    emit(args.out.as_deref(), &csv)
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    passed: bool,
    /// Stage `n + 1` equals the extension of stage `n`.
    consistency: Vec<(u64, bool)>,
    lemma: Vec<LemmaReport>,
}

fn verify(args: VerifyArgs) -> CmdResult {
    let mut report = VerifyReport {
        seed: 0,
        passed: true,
        consistency: Vec::new(),
        lemma: Vec::new(),
    };
    match (&args.stage_dir, args.n) {
        (Some(dir), _) => {
            let stages = read_stages(dir)?;
            report.seed = args.seed.unwrap_or(read_manifest(dir)?.seed);
            for (i, pair) in stages.windows(2).enumerate() {
                let (cur, next) = (&pair[0], &pair[1]);
                let (n, a, d) = (cur.n as u32, cur.a_u32(), cur.d as u32);
                let ext = extend(&cur.omega, n, a, d)?;
                report.consistency.push((cur.n, ext.set == next.omega));
                let seed = report.seed.wrapping_add(i as u64);
                report
                    .lemma
                    .push(verify_lemma(&cur.omega, &ext, n, a, d, args.budget, seed)?);
            }
        }
        (None, Some(n)) => {
            let (a, d) = (args.a.unwrap(), args.d.unwrap());
            report.seed = args.seed.unwrap_or(0);
            let f = FinitePointSet::xi(a);
            let ext = extend(&f, n, a, d)?;
            report
                .lemma
                .push(verify_lemma(&f, &ext, n, a, d, args.budget, report.seed)?);
        }
        (None, None) => return Err(usage("verify needs a stage directory or --n/--a/--d")),
    }
    report.passed = report.consistency.iter().all(|(_, ok)| *ok)
        && report.lemma.iter().all(LemmaReport::all_passed);
    let text = serde_json::to_string_pretty(&report).unwrap() + "\n";
    emit(args.out.as_deref(), &text)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Construct(a) => construct(a),
        Command::Entropy(a) => entropy(a),
        Command::Freq(a) => freq(a),
        Command::Patchrep(a) => patchrep(a),
        Command::Diffract(a) => diffract(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
