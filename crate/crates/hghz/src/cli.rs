//! Command-line front end. `main` in the binary only forwards to [`run`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::bits;
use crate::family::{self, io, DeltaEstimate, DomainPoint, FamilyError, Params, Plan};
use crate::protocol::attacks::{self, AlphaLeakReport, BlindCanReport, StateModel};
use crate::protocol::auth::hex;
use crate::protocol::games::{self, Adversary, GameKind, GameSetup, GameStats, Violation};
use crate::protocol::runs::{self, ApplicantOutput, RunOptions, RunOutcome, ServerOutput};
use crate::protocol::{
    ApplicantBehavior, ApplicantSpec, AuthPredicate, ProtocolError, Schedule, Transcript,
    TransparentNizk,
};
use crate::report::{self, Envelope, ReportRegime};
use crate::rng;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_ABORT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "hghz",
    version,
    about = "Hidden-GHZ trapdoor family and GHZ distribution workbench"
)]
pub struct Cli {
    /// Master seed; every random choice derives from it.
    #[arg(long, global = true, env = "HGHZ_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for trial-level parallelism (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Write the report here instead of stdout. Wall-clock timing goes to a
    /// sibling `.timing.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Feasibility of (N, ε, n) under the parameter conditions.
    Plan {
        #[arg(long = "N")]
        n_dim: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: u64,
    },
    /// Generate a toy key and trapdoor for a support string.
    Keygen {
        #[arg(long)]
        d0: String,
        #[command(flatten)]
        toy: ToyArgs,
        #[arg(long)]
        key_out: PathBuf,
        #[arg(long)]
        trapdoor_out: PathBuf,
    },
    /// Evaluate f_k on a domain point read from JSON or sampled inside the margin box.
    Eval {
        #[arg(long)]
        key: PathBuf,
        #[arg(long, conflicts_with = "sample")]
        x: Option<PathBuf>,
        #[arg(long)]
        sample: bool,
    },
    /// Recover both preimages of an image (a JSON array or an eval report).
    Invert {
        #[arg(long)]
        trapdoor: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
    /// Monte-Carlo estimate of δ for a trapdoor.
    EstimateDelta {
        #[arg(long)]
        trapdoor: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Run one protocol end to end.
    Run(RunArgs),
    /// Play a security game in batch.
    Games {
        #[arg(long)]
        name: String,
        #[arg(long, value_enum, default_value_t = AdversaryName::Random)]
        adversary: AdversaryName,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// 1-based corrupted applicants for the random adversary.
        #[arg(long, value_delimiter = ',')]
        corrupted: Vec<usize>,
    },
    /// Run one of the concrete attacks in batch.
    Attacks {
        #[arg(long, value_enum)]
        name: AttackName,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, value_enum, default_value_t = ModelName::Engine)]
        model: ModelName,
    },
    /// Validate a report file against its schema and print a one-line summary.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ToyArgs {
    #[arg(long = "n-dim", default_value_t = 2)]
    pub n_dim: usize,
    #[arg(long, default_value_t = 12)]
    pub k: u32,
    #[arg(long, default_value_t = 2.0)]
    pub alpha_q: f64,
}

impl ToyArgs {
    fn params(&self, n: usize) -> Result<Params, CliError> {
        Ok(Params::toy(self.n_dim, self.k, n, self.alpha_q)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolName {
    Blind,
    BlindSup,
    BlindZk,
    BlindCanSup,
    AuthDist,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub protocol: ProtocolName,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// 1-based supported applicants.
    #[arg(long, value_delimiter = ',')]
    pub supported: Vec<usize>,
    #[arg(long, default_value = "allow_all")]
    pub auth: String,
    #[arg(long, default_value = "")]
    pub witness: String,
    /// 1-based applicants submitting an injective key (auth-dist only).
    #[arg(long, value_delimiter = ',')]
    pub malicious: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ScheduleName::RoundRobin)]
    pub schedule: ScheduleName,
    /// Fresh executions tried while applicants abort locally; 1 disables retries.
    #[arg(long, default_value_t = 32)]
    pub max_attempts: u32,
    /// JSON-lines transcript of the final attempt.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[command(flatten)]
    pub toy: ToyArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleName {
    RoundRobin,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryName {
    Random,
    Oracle,
    Violating,
    Malformed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackName {
    BlindCan,
    AlphaLeak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Engine,
    Aligned,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Family(_) => EXIT_VALIDATION,
            CliError::Protocol(
                ProtocolError::Config(_) | ProtocolError::Malformed(_) | ProtocolError::Family(_),
            ) => EXIT_VALIDATION,
            CliError::Protocol(_) | CliError::Io { .. } => EXIT_FAILURE,
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Reduced parameter view used in reports.
#[derive(Debug, Clone, Serialize)]
pub struct ParamsView {
    #[serde(rename = "N")]
    pub n_dim: usize,
    pub k: u32,
    pub n: usize,
    pub q: u64,
    pub mu: u64,
    pub alpha_q: f64,
    pub r_max: f64,
}

impl From<&Params> for ParamsView {
    fn from(p: &Params) -> Self {
        Self {
            n_dim: p.n_dim,
            k: p.k(),
            n: p.n,
            q: p.q(),
            mu: p.mu,
            alpha_q: p.alpha_q,
            r_max: p.r_max,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct KeygenBody {
    pub params: ParamsView,
    pub d0: String,
    pub attempts: u32,
    pub key_sha256: String,
    pub trapdoor_sha256: String,
    pub check_trapdoor: bool,
}

#[derive(Debug, Serialize)]
pub struct EvalBody {
    pub key_sha256: String,
    pub x: DomainPoint,
    pub y: Vec<u64>,
}

#[derive(Debug, Serialize)]
pub struct InvertBody {
    pub twin: bool,
    pub preimages: Vec<DomainPoint>,
    pub h: Vec<String>,
    /// h(x) ⊕ h(x′) equals the trapdoor's d0.
    pub xor_matches_d0: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct DeltaBody {
    pub trials: u64,
    pub params: ParamsView,
    pub estimate: DeltaEstimate,
}

#[derive(Debug, Serialize)]
pub struct AttemptSummary {
    pub seed: u64,
    pub aborted: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RunBody {
    pub protocol: ProtocolName,
    pub n: usize,
    pub supported: String,
    pub attempts: Vec<AttemptSummary>,
    pub aborted: bool,
    pub abort_reason: Option<String>,
    pub twin: bool,
    pub canonical_ghz: Option<bool>,
    pub server: ServerOutput,
    pub applicants: Vec<ApplicantOutput>,
    pub rounds: u32,
    pub messages: usize,
    pub padding_holds: bool,
    pub free_of_local_aborts: bool,
}

#[derive(Debug, Serialize)]
pub struct GamesBody {
    pub adversary: AdversaryName,
    pub n: usize,
    pub corrupted: Vec<usize>,
    pub stats: GameStats,
    pub ci_contains_half: bool,
    pub within_3_sigma_of_half: bool,
}

#[derive(Debug, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum AttacksBody {
    BlindCan(BlindCanReport),
    AlphaLeak(AlphaLeakReport),
}

/// Report plus the exit code it implies.
struct Outcome {
    json: String,
    value: Value,
    code: i32,
}

impl Outcome {
    fn new<T: Serialize>(env: Envelope<T>, code: i32) -> Self {
        Self {
            json: env.to_json(),
            value: env.to_value(),
            code,
        }
    }
}

fn parse_support(n: usize, one_based: &[usize]) -> Result<Vec<bool>, CliError> {
    let mut d0 = vec![false; n];
    for &i in one_based {
        if i == 0 || i > n {
            return Err(CliError::Validation(format!(
                "applicant {i} outside 1..={n}"
            )));
        }
        d0[i - 1] = true;
    }
    Ok(d0)
}

fn plan(seed: u64, n_dim: u64, eps: f64, n: u64) -> Result<Outcome, CliError> {
    let p: Plan = family::plan_params(n_dim, eps, n)?;
    let code = if p.feasible { EXIT_OK } else { EXIT_INFEASIBLE };
    Ok(Outcome::new(
        Envelope::new("plan", seed, ReportRegime::Secure, p),
        code,
    ))
}

fn keygen(
    seed: u64,
    d0: &str,
    toy: &ToyArgs,
    key_out: &Path,
    trap_out: &Path,
) -> Result<Outcome, CliError> {
    let d0v = bits::parse(d0)
        .ok_or_else(|| CliError::Validation(format!("support {d0:?} is not a bit string")))?;
    if d0v.is_empty() {
        return Err(CliError::Validation("support must be non-empty".into()));
    }
    let p = toy.params(d0v.len())?;
    let (k, t, attempts) = family::gen_checked(&p, &d0v, &mut rng::labeled(seed, "keygen", 0))?;
    let (kb, tb) = (io::write_key(&k), io::write_trapdoor(&t));
    write_file(key_out, &kb)?;
    write_file(trap_out, &tb)?;
    let body = KeygenBody {
        params: (&p).into(),
        d0: bits::to_string(&d0v),
        attempts,
        key_sha256: sha256_hex(&kb),
        trapdoor_sha256: sha256_hex(&tb),
        check_trapdoor: family::check_trapdoor(&d0v, &t, &k),
    };
    Ok(Outcome::new(
        Envelope::new("keygen", seed, ReportRegime::Toy, body),
        EXIT_OK,
    ))
}

fn eval(seed: u64, key: &Path, x: Option<&Path>, sample: bool) -> Result<Outcome, CliError> {
    let kb = read_file(key)?;
    let k = io::read_key(&kb)?;
    let x = match (x, sample) {
        (Some(path), _) => serde_json::from_slice::<DomainPoint>(&read_file(path)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
        (None, true) => family::sample_box(
            &k.params,
            family::margin_radius(&k.params),
            &mut rng::labeled(seed, "eval", 0),
        ),
        (None, false) => return Err(CliError::Validation("pass --x or --sample".into())),
    };
    let y = family::eval(&k, &x)?;
    let body = EvalBody {
        key_sha256: sha256_hex(&kb),
        x,
        y,
    };
    Ok(Outcome::new(
        Envelope::new("eval", seed, ReportRegime::Toy, body),
        EXIT_OK,
    ))
}

fn read_image(path: &Path) -> Result<Vec<u64>, CliError> {
    let v: Value = serde_json::from_slice(&read_file(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let arr = v.pointer("/body/y").unwrap_or(&v);
    serde_json::from_value(arr.clone())
        .map_err(|e| CliError::Validation(format!("{}: image: {e}", path.display())))
}

fn invert(seed: u64, trapdoor: &Path, y: &Path) -> Result<Outcome, CliError> {
    let t = io::read_trapdoor(&read_file(trapdoor)?)?;
    let y = read_image(y)?;
    let len = t.params.m_rows() + t.params.n;
    if y.len() != len || y.iter().any(|&v| v >= t.params.q()) {
        return Err(CliError::Validation(format!(
            "image must be {len} residues below q"
        )));
    }
    let body = match family::invert(&t, &y) {
        Some((x0, x1)) => {
            let (h0, h1) = (family::h(&x0), family::h(&x1));
            InvertBody {
                twin: true,
                xor_matches_d0: Some(bits::xor(&h0, &h1) == t.d0),
                h: vec![bits::to_string(&h0), bits::to_string(&h1)],
                preimages: vec![x0, x1],
            }
        }
        None => InvertBody {
            twin: false,
            preimages: vec![],
            h: vec![],
            xor_matches_d0: None,
        },
    };
    Ok(Outcome::new(
        Envelope::new("invert", seed, ReportRegime::Toy, body),
        EXIT_OK,
    ))
}

fn estimate_delta(seed: u64, trapdoor: &Path, trials: u64) -> Result<Outcome, CliError> {
    if trials == 0 {
        return Err(CliError::Validation("trials must be positive".into()));
    }
    let t = io::read_trapdoor(&read_file(trapdoor)?)?;
    let body = DeltaBody {
        trials,
        params: (&t.params).into(),
        estimate: family::estimate_delta(&t, trials, seed),
    };
    Ok(Outcome::new(
        Envelope::new("estimate-delta", seed, ReportRegime::Toy, body),
        EXIT_OK,
    ))
}

fn run_protocol(seed: u64, a: &RunArgs) -> Result<Outcome, CliError> {
    if a.n == 0 {
        return Err(CliError::Validation("n must be positive".into()));
    }
    let d0 = parse_support(a.n, &a.supported)?;
    let auth: AuthPredicate = a.auth.parse().map_err(CliError::Validation)?;
    let malicious = parse_support(a.n, &a.malicious)?;
    let schedule = match a.schedule {
        ScheduleName::RoundRobin => Schedule::RoundRobin,
        ScheduleName::Random => Schedule::Random,
    };
    let nizk = TransparentNizk::new(seed);
    let mono = a.toy.params(a.n)?;
    let local = a.toy.params(1)?;
    let mut attempts = Vec::new();
    let mut last: Option<(Transcript, RunOutcome)> = None;
    for attempt in 0..a.max_attempts.max(1) {
        let run_seed = rng::stream_id("cli-run", seed ^ u64::from(attempt).rotate_left(32));
        let opts = RunOptions {
            seed: run_seed,
            schedule,
        };
        let (t, o) = match a.protocol {
            ProtocolName::Blind => runs::run_blind(&d0, &mono, opts)?,
            ProtocolName::BlindSup => runs::run_blind_sup(&d0, &mono, opts)?,
            ProtocolName::BlindZk => {
                runs::run_blind_zk(&d0, a.witness.as_bytes(), &auth, &nizk, &mono, opts, None)?
            }
            ProtocolName::BlindCanSup => {
                let (t, o, _) = runs::run_blind_can_sup(&d0, &local, opts)?;
                (t, o)
            }
            ProtocolName::AuthDist => {
                let specs: Vec<ApplicantSpec> = (0..a.n)
                    .map(|i| ApplicantSpec {
                        d0_bit: d0[i],
                        witness: a.witness.as_bytes().to_vec(),
                        auth: auth.clone(),
                        behavior: if malicious[i] {
                            ApplicantBehavior::InjectiveKey
                        } else {
                            ApplicantBehavior::Honest
                        },
                    })
                    .collect();
                runs::run_auth_blind_dist_can(&specs, &nizk, &local, opts)?
            }
        };
        attempts.push(AttemptSummary {
            seed: run_seed,
            aborted: o.aborted,
            reason: o.abort_reason.clone(),
        });
        // only local aborts are worth retrying; a rejection repeats deterministically
        let retry = o.abort_reason.as_deref() == Some("local_abort")
            || (!o.aborted && o.state.is_some() && !o.twin());
        last = Some((t, o));
        if !retry {
            break;
        }
    }
    let (t, o) = last.expect("at least one attempt");
    if let Some(path) = &a.transcript {
        write_file(path, t.to_jsonl().as_bytes())?;
    }
    let code = if o.aborted { EXIT_ABORT } else { EXIT_OK };
    let body = RunBody {
        protocol: a.protocol,
        n: a.n,
        supported: bits::to_string(&d0),
        attempts,
        aborted: o.aborted,
        abort_reason: o.abort_reason.clone(),
        twin: o.twin(),
        canonical_ghz: o.canonical_ghz(),
        server: o.server.clone(),
        applicants: o.applicants.clone(),
        rounds: t.rounds(),
        messages: t.messages.len(),
        padding_holds: t.padding_holds(),
        free_of_local_aborts: t.free_of_local_aborts(),
    };
    Ok(Outcome::new(
        Envelope::new("run", seed, ReportRegime::Toy, body),
        code,
    ))
}

fn games_cmd(
    seed: u64,
    name: &str,
    adv: AdversaryName,
    trials: u64,
    n: usize,
    corrupted: &[usize],
) -> Result<Outcome, CliError> {
    let kind = GameKind::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = GameKind::ALL.iter().map(|g| g.name()).collect();
        CliError::Validation(format!(
            "unknown game {name:?}; expected one of {}",
            names.join(", ")
        ))
    })?;
    if n < 2 || trials == 0 {
        return Err(CliError::Validation("need n >= 2 and trials > 0".into()));
    }
    let m: Vec<usize> = parse_support(n, corrupted)?
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i)
        .collect();
    let make = move || -> Box<dyn Adversary> {
        match adv {
            AdversaryName::Random => Box::new(games::RandomGuess {
                corrupted: m.clone(),
                uniform_y: false,
            }),
            AdversaryName::Oracle => Box::new(games::TrapdoorOracle::new()),
            AdversaryName::Violating => {
                Box::new(games::ConditionViolating::new(Violation::DifferOnCorrupted))
            }
            AdversaryName::Malformed => Box::new(games::Malformed { bad_choice: false }),
        }
    };
    let stats = games::run_game(kind, &GameSetup::toy(n), &make, trials, seed);
    let body = GamesBody {
        adversary: adv,
        n,
        corrupted: corrupted.to_vec(),
        ci_contains_half: stats.wins.ci_low <= 0.5 && 0.5 <= stats.wins.ci_high,
        within_3_sigma_of_half: (stats.wins.estimate - 0.5).abs() <= 3.0 * stats.sigma_at_half,
        stats,
    };
    Ok(Outcome::new(
        Envelope::new("games", seed, ReportRegime::Toy, body),
        EXIT_OK,
    ))
}

fn attacks_cmd(
    seed: u64,
    name: AttackName,
    trials: u64,
    n: usize,
    model: ModelName,
) -> Result<Outcome, CliError> {
    if trials == 0 {
        return Err(CliError::Validation("trials must be positive".into()));
    }
    let local = Params::toy_default(1);
    let body = match name {
        AttackName::BlindCan => {
            let model = match model {
                ModelName::Engine => StateModel::Engine,
                ModelName::Aligned => StateModel::Aligned,
            };
            AttacksBody::BlindCan(attacks::attack_blind_can(
                &attacks::blind_can_supports(n),
                &local,
                model,
                trials,
                seed,
            )?)
        }
        AttackName::AlphaLeak => {
            AttacksBody::AlphaLeak(attacks::attack_alpha_leak(&local, trials, seed)?)
        }
    };
    Ok(Outcome::new(
        Envelope::new("attacks", seed, ReportRegime::Toy, body),
        EXIT_OK,
    ))
}

fn report_cmd(input: &Path) -> Result<i32, CliError> {
    let v: Value = serde_json::from_slice(&read_file(input)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", input.display())))?;
    match report::validate_report(&v) {
        Ok(()) => {
            println!(
                "{}: valid {} report (seed {}, regime {})",
                input.display(),
                v["kind"].as_str().unwrap_or("?"),
                v["seed"],
                v["regime"].as_str().unwrap_or("?")
            );
            Ok(EXIT_OK)
        }
        Err(errs) => Err(CliError::Validation(format!(
            "{}: {}",
            input.display(),
            errs.join("; ")
        ))),
    }
}

fn dispatch(cli: &Cli) -> Result<Option<Outcome>, CliError> {
    let seed = cli.seed;
    Ok(Some(match &cli.command {
        Command::Plan { n_dim, eps, n } => plan(seed, *n_dim, *eps, *n)?,
        Command::Keygen {
            d0,
            toy,
            key_out,
            trapdoor_out,
        } => keygen(seed, d0, toy, key_out, trapdoor_out)?,
        Command::Eval { key, x, sample } => eval(seed, key, x.as_deref(), *sample)?,
        Command::Invert { trapdoor, y } => invert(seed, trapdoor, y)?,
        Command::EstimateDelta { trapdoor, trials } => estimate_delta(seed, trapdoor, *trials)?,
        Command::Run(a) => run_protocol(seed, a)?,
        Command::Games {
            name,
            adversary,
            trials,
            n,
            corrupted,
        } => games_cmd(seed, name, *adversary, *trials, *n, corrupted)?,
        Command::Attacks {
            name,
            trials,
            n,
            model,
        } => attacks_cmd(seed, *name, *trials, *n, *model)?,
        Command::Report { input } => {
            let code = report_cmd(input)?;
            return if code == EXIT_OK {
                Ok(None)
            } else {
                Err(CliError::Validation("invalid report".into()))
            };
        }
    }))
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    if cli.threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let started = Instant::now();
    match dispatch(&cli) {
        Ok(None) => EXIT_OK,
        Ok(Some(out)) => {
            debug_assert!(
                report::validate_report(&out.value).is_ok(),
                "{:?}",
                report::validate_report(&out.value)
            );
            let written = match &cli.out {
                Some(path) => report::write_report(path, &out.json, started.elapsed()),
                None => std::io::stdout().write_all(out.json.as_bytes()),
            };
            match written {
                Ok(()) => out.code,
                Err(e) => {
                    eprintln!("error: writing report: {e}");
                    EXIT_FAILURE
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
