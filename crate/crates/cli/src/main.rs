use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use skewlab_core::castle::FinitePointSystem;
use skewlab_core::ergodic::{gp_invariant, GpReport};
use skewlab_core::perm::{symmetric_elements, Perm, PermGroup};
use skewlab_core::speeduprel::{decide, verify_witness, VerdictReport};
use skewlab_core::symbolic::{full_shift, uniform, LabeledSystem};
use skewlab_core::synth::{build_stage, SpeedupStage, StageTrace, TargetCastleSpec};

const EXIT_INVALID: u8 = 1;
const EXIT_VERIFY: u8 = 2;

#[derive(Parser)]
#[command(
    name = "skewlab",
    version,
    about = "Skew products, local groups and relative speedups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Local group, gp class and ergodic components of a labeled system.
    Analyze {
        system: PathBuf,
        /// Compact single-line JSON.
        #[arg(long)]
        json: bool,
    },
    /// Decide whether the first system has a relative speedup isomorphic to the second.
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Build and verify finite speedup stages over a cyclic point system.
    Synth {
        source: PathBuf,
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        stages: usize,
        /// Write the trace here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild the S1/S2 example over S3 and check its conclusions.
    Gerber {
        #[arg(long)]
        json: bool,
    },
}

/// Failure that maps to a specific exit code.
struct Exit(u8);

fn render<T: Serialize>(value: &T, compact: bool) -> Result<String> {
    let mut s = if compact {
        serde_json::to_string(value)?
    } else {
        serde_json::to_string_pretty(value)?
    };
    s.push('\n');
    Ok(s)
}

fn read_system(path: &Path) -> Result<LabeledSystem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    LabeledSystem::from_json_str(&text).with_context(|| format!("loading {}", path.display()))
}

fn analyze(path: &Path, json: bool) -> Result<String> {
    let sys = read_system(path)?;
    let gp = gp_invariant(&sys)?;
    render(&GpReport::new(&sys, &gp), json)
}

fn compare(first: &Path, second: &Path, json: bool) -> Result<String> {
    let a = read_system(first)?;
    let b = read_system(second)?;
    let verdict = decide(&a, &b)?;
    render(&VerdictReport::new(&a, &b, &verdict), json)
}

#[derive(Deserialize)]
struct StagesFile {
    stages: Vec<TargetCastleSpec>,
}

#[derive(Serialize)]
struct SynthTrace<'a> {
    stages: Vec<StageTrace<'a>>,
    passed: bool,
}

fn synth(source: &Path, spec: &Path, count: usize, out: Option<&Path>) -> Result<(String, bool)> {
    let text =
        fs::read_to_string(source).with_context(|| format!("reading {}", source.display()))?;
    let sys: FinitePointSystem =
        serde_json::from_str(&text).with_context(|| format!("loading {}", source.display()))?;
    let text = fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let specs: StagesFile =
        serde_json::from_str(&text).with_context(|| format!("loading {}", spec.display()))?;
    if count == 0 || count > specs.stages.len() {
        bail!(
            "--stages {count} but {} has {} stage specs",
            spec.display(),
            specs.stages.len()
        );
    }

    let mut built: Vec<SpeedupStage> = Vec::with_capacity(count);
    for (k, target) in specs.stages.iter().take(count).enumerate() {
        let stage =
            build_stage(&sys, target, built.last()).with_context(|| format!("stage {}", k + 1))?;
        built.push(stage);
    }
    let passed = built.iter().all(|s| s.report.passed);
    let trace = SynthTrace {
        stages: built.iter().map(SpeedupStage::trace).collect(),
        passed,
    };
    let body = render(&trace, false)?;
    match out {
        Some(path) => {
            fs::write(path, &body).with_context(|| format!("writing {}", path.display()))?;
            Ok((String::new(), passed))
        }
        None => Ok((body, passed)),
    }
}

#[derive(Serialize)]
struct GerberReport {
    gp1: GpReport,
    gp2: GpReport,
    s2_to_s1: VerdictReport,
    s1_to_s2: VerdictReport,
    matches: bool,
}

fn gerber_systems() -> Result<(LabeledSystem, LabeledSystem)> {
    let a3 = PermGroup::generate(3, &[Perm::from_cycles(3, &[&[1, 2, 3]])?])?;
    let s3: Vec<Perm> = symmetric_elements(3).collect();
    Ok((
        full_shift(a3.elements(), &uniform(3))?,
        full_shift(&s3, &uniform(6))?,
    ))
}

fn gerber(json: bool) -> Result<(String, bool)> {
    let (s1, s2) = gerber_systems()?;
    let forward = decide(&s2, &s1)?;
    let backward = decide(&s1, &s2)?;
    let a3 = PermGroup::generate(3, &[Perm::from_cycles(3, &[&[1, 2, 3]])?])?;
    let s3 = PermGroup::symmetric(3);

    let witness_ok = forward
        .witness
        .as_ref()
        .is_some_and(|w| w.g1 == s3 && w.g2 == a3 && verify_witness(&forward).is_ok());
    let matches = forward.gp2.klass.members() == [a3.clone()]
        && forward.gp1.klass.members() == [s3.clone()]
        && forward.answer
        && witness_ok
        && !backward.answer;

    let report = GerberReport {
        gp1: GpReport::new(&s1, &backward.gp1),
        gp2: GpReport::new(&s2, &backward.gp2),
        s2_to_s1: VerdictReport::new(&s2, &s1, &forward),
        s1_to_s2: VerdictReport::new(&s1, &s2, &backward),
        matches,
    };
    Ok((render(&report, json)?, matches))
}

fn run(cli: Cli) -> Result<Result<String, (String, Exit)>> {
    Ok(match cli.command {
        Command::Analyze { system, json } => Ok(analyze(&system, json)?),
        Command::Compare {
            first,
            second,
            json,
        } => Ok(compare(&first, &second, json)?),
        Command::Synth {
            source,
            spec,
            stages,
            out,
        } => match synth(&source, &spec, stages, out.as_deref())? {
            (body, true) => Ok(body),
            (body, false) => Err((body, Exit(EXIT_VERIFY))),
        },
        Command::Gerber { json } => match gerber(json)? {
            (body, true) => Ok(body),
            (body, false) => Err((body, Exit(EXIT_VERIFY))),
        },
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation errors; 2 is reserved for failed checks
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(Ok(body)) => {
            print!("{body}");
            ExitCode::SUCCESS
        }
        Ok(Err((body, Exit(code)))) => {
            print!("{body}");
            eprintln!("skewlab: verification failed");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("skewlab: {e:#}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
