//! Command-line front end. The binary only forwards to [`run`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::attack::{
    run_parallel_instances, run_plan_with_transcript, AttackOptions, AttackTranscript, CiphertextSample,
    ParallelReport, DEFAULT_BUDGET_EXPONENT, DEFAULT_RETAIN,
};
use crate::bits::{self, Bits, Sidecar};
use crate::boolfn::TruthTable;
use crate::cipher::{self, InstanceSpec, SecretKey};
use crate::classifier::{format_kprime, parse_kprime, partition_keys, plan_attack, spectrum_report, KeyClassReport};
use crate::error::Error;
use crate::plaintext::PlaintextModel;
use crate::randomness::{batch_pass_rates, fips_battery, FipsThresholds};

#[derive(Parser, Debug)]
#[command(name = "bsea2", version, about = "BSEA-2 stream cipher and its key-class correlation attack")]
pub struct Cli {
    /// Instance: `default`, `mini`, or a path to a JSON spec.
    #[arg(long, global = true, default_value = "default")]
    pub spec: String,
    /// Override the initial combiner truth table (e.g. 0x953F).
    #[arg(long, global = true)]
    pub f0: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Random key, optionally restricted to a key class or a fixed K'.
    Keygen(KeygenArgs),
    /// XOR a file with the keystream
    Encrypt(CryptArgs),
    /// Inverse of encrypt
    Decrypt(CryptArgs),
    /// Raw keystream bits for a key.
    Keystream(KeystreamArgs),
    /// Biased random plaintext for attack fixtures.
    Plaintext(PlaintextArgs),
    /// Masked table, Walsh spectra and attack plan for one K'.
    Spectrum(SpectrumArgs),
    /// Key class of one K'.
    Classify(ClassifyArgs),
    /// Classify all 256 K' values.
    Partition,
    /// Ciphertext-only attack on one K' or on all 256.
    Attack(AttackArgs),
    /// FIPS 140-2 battery on a 20,000-bit stream.
    Fips(FipsArgs),
    /// FIPS 140-2 pass rates over random keys, by key class.
    Passrates(PassratesArgs),
}

#[derive(Args, Debug)]
pub struct KeyArg {
    /// Key as hex, MSB first.
    #[arg(long, conflicts_with = "key_file")]
    pub key: Option<String>,
    /// File holding the key as one line of hex.
    #[arg(long)]
    pub key_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct KeygenArgs {
    /// Key class label from `partition` (C0, C1, ..., U).
    #[arg(long, conflicts_with = "kprime")]
    pub class: Option<String>,
    #[arg(long)]
    pub kprime: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the key file here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CryptArgs {
    #[command(flatten)]
    pub key: KeyArg,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct KeystreamArgs {
    #[command(flatten)]
    pub key: KeyArg,
    #[arg(long)]
    pub bits: usize,
    /// Packed output file; hex on stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlaintextArgs {
    #[arg(long)]
    pub bits: usize,
    #[arg(long)]
    pub p0: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long, default_value = "0x00")]
    pub kprime: String,
    #[arg(long)]
    pub p0: Option<f64>,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub kprime: String,
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    /// Ciphertext bits (a `.json` sidecar gives the exact length).
    #[arg(long)]
    pub ciphertext: PathBuf,
    /// Use only the first N bits of the ciphertext.
    #[arg(long)]
    pub bits: Option<usize>,
    /// Probability of a zero plaintext bit (default: the ASCII figure 0.55).
    #[arg(long)]
    pub p0: Option<f64>,
    /// Attack a single K'; all 256 instances otherwise.
    #[arg(long)]
    pub kprime: Option<String>,
    /// Recorded in the report for reproducibility.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest stage exponent to enumerate.
    #[arg(long, default_value_t = DEFAULT_BUDGET_EXPONENT)]
    pub budget: u32,
    /// Candidates kept per stage.
    #[arg(long, default_value_t = DEFAULT_RETAIN)]
    pub k: usize,
    /// Keep going after the first validated instance.
    #[arg(long)]
    pub exhaustive: bool,
    /// Write the transcript here as well as to stdout.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    /// No progress lines on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Args, Debug)]
pub struct FipsArgs {
    /// Stream file (exactly 20,000 bits).
    #[arg(long = "in", conflicts_with_all = ["key", "key_file"])]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub key: KeyArg,
}

#[derive(Args, Debug)]
pub struct PassratesArgs {
    #[arg(long, default_value_t = 1000)]
    pub keys: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 1 on a domain error, 2 on a usage error.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, out)),
            Err(e) => Err(Failure::Usage(format!("cannot start {n} threads: {e}"))),
        },
        None => dispatch(&cli, out),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(err, "error: {}: {e}", e.name());
            1
        }
    }
}

pub fn load_spec(selector: &str, f0: Option<&str>) -> crate::error::Result<InstanceSpec> {
    let spec = match selector {
        "default" | "bsea2" => InstanceSpec::bsea2(),
        "mini" => InstanceSpec::mini(),
        path => InstanceSpec::from_json(&fs::read_to_string(path)?)?,
    };
    match f0 {
        Some(hex) => spec.with_f0(TruthTable::parse_hex(hex)?),
        None => Ok(spec),
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Reads a packed bit file, honouring a `<file>.json` length sidecar.
pub fn read_bits(path: &Path) -> crate::error::Result<Bits> {
    let bytes = fs::read(path)?;
    let side = sidecar_path(path);
    let len = if side.exists() {
        let s: Sidecar = serde_json::from_str(&fs::read_to_string(&side)?).map_err(|e| Error::Config(e.to_string()))?;
        Some(s.bits)
    } else {
        None
    };
    bits::from_bytes(&bytes, len)
}

/// Writes a packed bit file; a sidecar records lengths that are not whole bytes.
pub fn write_bits(path: &Path, data: &Bits) -> crate::error::Result<()> {
    fs::write(path, bits::to_bytes(data))?;
    let side = sidecar_path(path);
    if !data.len().is_multiple_of(8) {
        let s = serde_json::to_string(&Sidecar { bits: data.len() }).expect("sidecar serializes");
        fs::write(side, s)?;
    } else if side.exists() {
        fs::remove_file(side)?;
    }
    Ok(())
}

fn load_key(spec: &InstanceSpec, key: &KeyArg) -> CliResult<SecretKey> {
    let hex = match (&key.key, &key.key_file) {
        (Some(h), _) => h.clone(),
        (None, Some(p)) => fs::read_to_string(p).map_err(Error::from)?,
        (None, None) => return Err(Failure::Usage("a key is required (--key or --key-file)".into())),
    };
    Ok(SecretKey::parse_hex(spec, hex.trim())?)
}

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn emit_json<T: Serialize>(out: &mut (dyn Write + Send), value: &T) -> CliResult<()> {
    let s = serde_json::to_string_pretty(value).expect("reports serialize");
    writeln!(out, "{s}").map_err(Error::from)?;
    Ok(())
}

fn no_csv(cmd: &str) -> Failure {
    Failure::Usage(format!("--format csv is not available for `{cmd}`"))
}

fn dispatch(cli: &Cli, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let spec = load_spec(&cli.spec, cli.f0.as_deref())?;
    let io = |e: std::io::Error| Failure::Domain(e.into());
    match &cli.command {
        Command::Keygen(a) => {
            let seed = seed_or_fresh(a.seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let report = partition_keys(&spec);
            let kprime = match (&a.class, &a.kprime) {
                (Some(class), _) => {
                    let row = report.row_by_class(class).ok_or_else(|| {
                        let known: Vec<&str> = report.rows.iter().map(|r| r.class.as_str()).collect();
                        Failure::Usage(format!("unknown class '{class}'; this instance has {}", known.join(", ")))
                    })?;
                    let ks = KeyClassReport::kprimes_of(row);
                    Some(ks[rng.random_range(0..ks.len())])
                }
                (None, Some(k)) => Some(parse_kprime(k)?),
                (None, None) => None,
            };
            let key = SecretKey::random(&spec, &mut rng, kprime);
            let k = key.kprime(&spec);
            if let Some(path) = &a.out {
                fs::write(path, format!("{}\n", key.to_hex())).map_err(io)?;
            }
            match cli.format {
                Format::Text => writeln!(out, "{}", key.to_hex()).map_err(io)?,
                Format::Csv => return Err(no_csv("keygen")),
                Format::Json => emit_json(
                    out,
                    &json!({
                        "spec_fingerprint": spec.fingerprint(),
                        "seed": seed,
                        "key": key.to_hex(),
                        "kprime": format_kprime(k),
                        "class": report.row_for(k).map(|r| r.class.clone()),
                    }),
                )?,
            }
        }
        Command::Encrypt(a) | Command::Decrypt(a) => {
            let key = load_key(&spec, &a.key)?;
            let input = read_bits(&a.input)?;
            let output = match &cli.command {
                Command::Encrypt(_) => cipher::encrypt(&spec, &key, &input)?,
                _ => cipher::decrypt(&spec, &key, &input)?,
            };
            write_bits(&a.out, &output)?;
            if cli.format == Format::Json {
                emit_json(
                    out,
                    &json!({
                        "spec_fingerprint": spec.fingerprint(),
                        "bits": output.len(),
                        "out": a.out.display().to_string(),
                    }),
                )?;
            }
        }
        Command::Keystream(a) => {
            let key = load_key(&spec, &a.key)?;
            let ks = cipher::keystream(&spec, &key, a.bits)?;
            if let Some(path) = &a.out {
                write_bits(path, &ks)?;
            }
            match cli.format {
                Format::Text => writeln!(out, "{}", bits::to_hex(&ks)).map_err(io)?,
                Format::Csv => return Err(no_csv("keystream")),
                Format::Json => emit_json(
                    out,
                    &json!({
                        "spec_fingerprint": spec.fingerprint(),
                        "bits": ks.len(),
                        "hex": bits::to_hex(&ks),
                    }),
                )?,
            }
        }
        Command::Plaintext(a) => {
            if !(0.0..=1.0).contains(&a.p0) {
                return Err(Failure::Usage(format!("--p0 {} is not a probability", a.p0)));
            }
            let seed = seed_or_fresh(a.seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let plain: Bits = (0..a.bits).map(|_| !rng.random_bool(a.p0)).collect();
            write_bits(&a.out, &plain)?;
            if cli.format == Format::Json {
                emit_json(
                    out,
                    &json!({ "seed": seed, "bits": a.bits, "p0": a.p0, "zeros": a.bits - plain.count_ones() }),
                )?;
            }
        }
        Command::Spectrum(a) => {
            let kprime = parse_kprime(&a.kprime)?;
            let model = match a.p0 {
                Some(p) => PlaintextModel::new(p, "flag")?,
                None => PlaintextModel::ascii_conservative(),
            };
            let r = spectrum_report(&spec, kprime, &model);
            match cli.format {
                Format::Json => emit_json(out, &r)?,
                Format::Csv => return Err(no_csv("spectrum")),
                Format::Text => {
                    let fmt = |v: &[i32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                    writeln!(out, "table {}", r.f.to_hex()).map_err(io)?;
                    writeln!(out, "spectrum ({})", fmt(r.spectrum_f.values())).map_err(io)?;
                    writeln!(out, "effective table {}", r.g.to_hex()).map_err(io)?;
                    writeln!(out, "effective spectrum ({})", fmt(r.spectrum_g.values())).map_err(io)?;
                    writeln!(out, "bent {}", r.bent).map_err(io)?;
                    match &r.plan {
                        Some(p) => writeln!(out, "plan 2^{} via masks {:?}", p.max_exponent, p.masks()).map_err(io)?,
                        None => writeln!(out, "unattackable, uncovered {:?}", r.uncovered).map_err(io)?,
                    }
                }
            }
        }
        Command::Classify(a) => {
            let kprime = parse_kprime(&a.kprime)?;
            let report = partition_keys(&spec);
            let row = report.row_for(kprime).expect("every K' has a class");
            let plan = plan_attack(&spec, kprime);
            match cli.format {
                Format::Text => writeln!(
                    out,
                    "{} {} {}",
                    format_kprime(kprime),
                    row.class,
                    row.exponent.map_or("unattackable".into(), |e| format!("2^{e}"))
                )
                .map_err(io)?,
                Format::Csv => return Err(no_csv("classify")),
                Format::Json => emit_json(
                    out,
                    &json!({
                        "spec_fingerprint": spec.fingerprint(),
                        "kprime": format_kprime(kprime),
                        "class": row.class,
                        "exponent": row.exponent,
                        "plan": plan.as_ref().ok(),
                        "uncovered": match &plan { Err(Error::Unattackable { uncovered }) => uncovered.clone(), _ => vec![] },
                    }),
                )?,
            }
        }
        Command::Partition => {
            let report = partition_keys(&spec);
            match cli.format {
                Format::Json => emit_json(out, &report)?,
                Format::Csv => write!(out, "{}", report.to_csv()?).map_err(io)?,
                Format::Text => {
                    writeln!(out, "f0 {}  spec {}", report.f0.to_hex(), report.spec_fingerprint).map_err(io)?;
                    for row in &report.rows {
                        writeln!(
                            out,
                            "{:<3} {:>14} {:>4} {:>7.2}%",
                            row.class,
                            row.exponent.map_or("unattackable".into(), |e| format!("2^{e}")),
                            row.count,
                            row.fraction * 100.0
                        )
                        .map_err(io)?;
                    }
                    for d in &report.published_diff {
                        writeln!(out, "comparison with {}:", d.table).map_err(io)?;
                        for c in &d.counts {
                            writeln!(
                                out,
                                "  {:>14} published {:>4} ours {:>4} delta {:+}",
                                c.exponent.map_or("unattackable".into(), |e| format!("2^{e}")),
                                c.published_count.map_or("-".into(), |n| n.to_string()),
                                c.ours,
                                c.delta
                            )
                            .map_err(io)?;
                        }
                        for n in &d.notes {
                            writeln!(out, "  note: {n}").map_err(io)?;
                        }
                    }
                }
            }
        }
        Command::Attack(a) => attack(cli, &spec, a, out)?,
        Command::Fips(a) => {
            let stream = match &a.input {
                Some(p) => read_bits(p)?,
                None => {
                    let key = load_key(&spec, &a.key)?;
                    cipher::keystream(&spec, &key, FipsThresholds::standard().stream_bits)?
                }
            };
            let r = fips_battery(&stream)?;
            match cli.format {
                Format::Json => emit_json(out, &r)?,
                Format::Csv => return Err(no_csv("fips")),
                Format::Text => {
                    let v = |p: bool| if p { "pass" } else { "FAIL" };
                    writeln!(out, "monobit  {:>10} {}", r.monobit.ones, v(r.monobit.pass)).map_err(io)?;
                    writeln!(out, "poker    {:>10.2} {}", r.poker.statistic, v(r.poker.pass)).map_err(io)?;
                    writeln!(out, "runs     {:?} {:?} {}", r.runs.zeros, r.runs.ones, v(r.runs.pass)).map_err(io)?;
                    writeln!(out, "long run {:>10} {}", r.long_run.max_run, v(r.long_run.pass)).map_err(io)?;
                    writeln!(out, "all      {}", v(r.all_pass)).map_err(io)?;
                }
            }
        }
        Command::Passrates(a) => {
            let seed = seed_or_fresh(a.seed);
            let r = batch_pass_rates(&spec, a.keys, seed)?;
            match cli.format {
                Format::Json => emit_json(out, &r)?,
                Format::Csv => write!(out, "{}", r.to_csv()?).map_err(io)?,
                Format::Text => {
                    writeln!(out, "{}", r.methodology).map_err(io)?;
                    for row in r.rows.iter().chain(std::iter::once(&r.overall)) {
                        writeln!(
                            out,
                            "{:<4} {:>5} keys  pass {:>6.2}%  [{:.2}%, {:.2}%]",
                            row.class,
                            row.keys,
                            row.rate * 100.0,
                            row.ci_low * 100.0,
                            row.ci_high * 100.0
                        )
                        .map_err(io)?;
                    }
                    for n in &r.notes {
                        writeln!(out, "note: {n}").map_err(io)?;
                    }
                    writeln!(
                        out,
                        "reference {:.0}%: difference {:+.1} pp{}",
                        r.comparison.reference_rate * 100.0,
                        r.comparison.difference_pp,
                        if r.comparison.flagged { " (flagged)" } else { "" }
                    )
                    .map_err(io)?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct AttackReport {
    spec_fingerprint: String,
    seed: u64,
    schedule: Option<ParallelReport>,
    transcript: Option<AttackTranscript>,
    outcome: String,
    recovered_key: Option<String>,
}

fn attack(cli: &Cli, spec: &InstanceSpec, a: &AttackArgs, out: &mut (dyn Write + Send)) -> CliResult<()> {
    let seed = seed_or_fresh(a.seed);
    let mut bits = read_bits(&a.ciphertext)?;
    if let Some(n) = a.bits {
        if n > bits.len() {
            return Err(Failure::Usage(format!("--bits {n} exceeds the {} bits on file", bits.len())));
        }
        bits.truncate(n);
    }
    let model = match a.p0 {
        Some(p) => PlaintextModel::new(p, "flag")?,
        None => PlaintextModel::ascii_conservative(),
    };
    let sample = CiphertextSample::new(bits, model, spec.clone())?;
    let opts = AttackOptions {
        retain: a.k,
        budget_exponent: a.budget,
        keep_all_scores: false,
        progress: !a.quiet,
    };

    let (schedule, transcript, failure) = match &a.kprime {
        Some(k) => {
            let k = parse_kprime(k)?;
            let plan = plan_attack(spec, k)?;
            let (t, res) = run_plan_with_transcript(&sample, &plan, k, &opts);
            (None, Some(t), res.err())
        }
        None => {
            let quiet = AttackOptions { progress: false, ..opts };
            let report = run_parallel_instances(&sample, &quiet, !a.exhaustive);
            let t = match &report.best {
                Some(best) => {
                    let k = parse_kprime(&best.kprime)?;
                    let plan = plan_attack(spec, k)?;
                    Some(run_plan_with_transcript(&sample, &plan, k, &quiet).0)
                }
                None => None,
            };
            let failure = report.best.is_none().then_some(Error::EmptyBeam);
            (Some(report), t, failure)
        }
    };
    let recovered_key = match (&schedule, &transcript) {
        (Some(s), _) => s.best.as_ref().map(|b| b.key.clone()),
        (None, Some(t)) => t.validated.first().map(|k| k.key.clone()),
        _ => None,
    };
    let outcome = match (&failure, &transcript) {
        (Some(e), _) => e.name().to_string(),
        (None, Some(t)) => t.outcome.clone(),
        (None, None) => "Recovered".to_string(),
    };
    let report = AttackReport {
        spec_fingerprint: spec.fingerprint(),
        seed,
        schedule,
        transcript,
        outcome,
        recovered_key,
    };
    if let Some(path) = &a.transcript {
        let s = serde_json::to_string_pretty(&report).expect("reports serialize");
        fs::write(path, s).map_err(Error::from)?;
    }
    match cli.format {
        Format::Json => emit_json(out, &report)?,
        Format::Csv => return Err(no_csv("attack")),
        Format::Text => {
            writeln!(out, "outcome {}", report.outcome).map_err(Error::from)?;
            if let Some(k) = &report.recovered_key {
                writeln!(out, "key {k}").map_err(Error::from)?;
            }
        }
    }
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}
