// SPDX-License-Identifier: Apache-2.0

//! The `hasc` command line.
//!
//! Exit codes: 0 success or pass, 1 gate block, 2 validation failure, 3 I/O
//! or usage error, 4 warnings (0 with `--allow-warn`), 5 attestation failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::assembly::{self, AssemblyError};
use crate::attest::{self, Attestation, VerifyReason};
use crate::card::{parse_card_unchecked, serialize, CardError, Format, SystemCard};
use crate::diff::{affected_components, classify_change, diff_cards, make_changelog_entry, CardDiff};
use crate::distribution::{self, FetchError, ServeConfig, DEFAULT_STALENESS_DAYS};
use crate::ids::{load_or_create_registry, parse_hazard_id, store_registry};
use crate::policy::{self, Outcome, PolicySet, Verdict};
use crate::render::{render_changelog, render_html, render_markdown, RenderOptions, Variant};
use crate::validation::{validate, Level, Severity, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Block = 1,
    Invalid = 2,
    Io = 3,
    Warn = 4,
    Attestation = 5,
}

struct Failure {
    exit: Exit,
    message: String,
}

impl Failure {
    fn io(message: impl ToString) -> Self {
        Self {
            exit: Exit::Io,
            message: message.to_string(),
        }
    }

    fn invalid(message: impl ToString) -> Self {
        Self {
            exit: Exit::Invalid,
            message: message.to_string(),
        }
    }
}

type CmdResult = Result<Exit, Failure>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "hasc", version, about = "Hazard-aware system card toolchain")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct FormatArg {
    /// Output format.
    #[arg(long, value_enum, default_value_t)]
    format: OutputFormat,
}

#[derive(Debug, Args)]
struct WarnArg {
    /// Exit 0 instead of 4 when the result is a warning.
    #[arg(long)]
    allow_warn: bool,
}

#[derive(Debug, Args)]
struct PolicyArgs {
    /// Policy file (.hascpolicy).
    #[arg(long, env = "HASC_POLICY", conflicts_with = "builtin")]
    policy: Option<PathBuf>,
    /// Use the built-in release gates. This is the default without --policy.
    #[arg(long)]
    builtin: bool,
    /// Predecessor card for rules that compare against `prev`.
    #[arg(long)]
    prev: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Allocate or parse hazard identifiers.
    #[command(subcommand)]
    Id(IdCommand),
    /// Merge pipeline fragments into a card through a template.
    Assemble {
        /// Fragment files, merged in the order given.
        #[arg(short = 'f', long = "fragment", required = true)]
        fragments: Vec<PathBuf>,
        #[arg(short = 't', long)]
        template: PathBuf,
        /// Output file; YAML when it ends in .yaml or .yml. Defaults to stdout as JSON.
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Validate a card.
    Validate {
        card: PathBuf,
        #[command(flatten)]
        format: FormatArg,
        #[command(flatten)]
        warn: WarnArg,
    },
    /// Evaluate release-gate policies against a card.
    Gate {
        card: PathBuf,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Evaluation date for `days_since` (defaults to today).
        #[arg(long)]
        today: Option<NaiveDate>,
        #[command(flatten)]
        format: FormatArg,
        #[command(flatten)]
        warn: WarnArg,
    },
    /// Structural diff of two versions of a card.
    Diff {
        old: PathBuf,
        new: PathBuf,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Draft the version-history entry for `new`.
    Changelog {
        old: PathBuf,
        new: PathBuf,
        /// Version of the new entry (defaults to the new card's version).
        #[arg(long)]
        version: Option<String>,
        /// Publication date (defaults to the new card's).
        #[arg(long)]
        date: Option<NaiveDate>,
        #[arg(long)]
        incident: Option<String>,
        /// Replace the drafted summary.
        #[arg(long)]
        summary: Option<String>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Render a card to Markdown and/or HTML.
    Render {
        card: PathBuf,
        #[arg(long)]
        html: Option<PathBuf>,
        #[arg(long)]
        md: Option<PathBuf>,
        /// Short variant for end users.
        #[arg(long)]
        summary: bool,
        /// Keep fields marked internal.
        #[arg(long)]
        internal: bool,
    },
    /// Sign a card's canonical digest.
    Sign {
        card: PathBuf,
        /// PKCS#8 PEM private key.
        #[arg(long)]
        key: PathBuf,
        /// Attestation output (defaults to the card path with .att.json).
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
        /// Sign the redacted public variant instead of the card as stored.
        #[arg(long)]
        public: bool,
    },
    /// Verify an attestation.
    Verify {
        card: PathBuf,
        attestation: PathBuf,
        /// SPKI PEM public key.
        #[arg(long = "pub")]
        pubkey: PathBuf,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Serve a card root over HTTP. SIGHUP reloads the cards.
    Serve {
        #[arg(long)]
        root: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Serve cards as stored instead of their public variants.
        #[arg(long)]
        include_internal: bool,
        #[arg(long, default_value_t = DEFAULT_STALENESS_DAYS)]
        stale_days: u32,
    },
    /// Download and validate a served card.
    Fetch {
        url: String,
        /// Write the card (and attestation, if any) here.
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Fetch a card, verify it, and gate it.
    Consume {
        url: String,
        #[command(flatten)]
        policy: PolicyArgs,
        /// Require an attestation verifiable with this key.
        #[arg(long = "pub")]
        pubkey: Option<PathBuf>,
        #[command(flatten)]
        format: FormatArg,
        #[command(flatten)]
        warn: WarnArg,
    },
    /// Audit a fleet of cards for staleness and missing references.
    Inventory {
        /// Card files, directories, or URLs.
        #[arg(required = true)]
        inputs: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_STALENESS_DAYS)]
        stale_days: u32,
        /// Evaluation date (defaults to today).
        #[arg(long)]
        today: Option<NaiveDate>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Export hazard exploitability statements.
    Hex {
        card: PathBuf,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Generate an ed25519 key pair.
    Keygen {
        #[arg(long = "priv")]
        private: PathBuf,
        #[arg(long = "pub")]
        public: PathBuf,
        /// Overwrite existing key files.
        #[arg(long)]
        force: bool,
    },
}

#[derive(Debug, Subcommand)]
enum IdCommand {
    /// Allocate the next ASH identifier for a year.
    New {
        #[arg(long)]
        year: i64,
        #[arg(long)]
        summary: String,
        #[arg(long, env = "HASC_REGISTRY", default_value = "ash-registry.json")]
        registry: PathBuf,
        /// Namespace for a registry created by this call.
        #[arg(long, default_value = "default")]
        namespace: String,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Parse and echo an identifier.
    Parse {
        id: String,
        #[command(flatten)]
        format: FormatArg,
    },
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Exit::Io as i32 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    match dispatch(cli.command) {
        Ok(exit) => exit as i32,
        Err(f) => {
            eprintln!("hasc: {}", f.message);
            f.exit as i32
        }
    }
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Id(IdCommand::New {
            year,
            summary,
            registry,
            namespace,
            format,
        }) => id_new(year, &summary, &registry, &namespace, format.format),
        Command::Id(IdCommand::Parse { id, format }) => id_parse(&id, format.format),
        Command::Assemble {
            fragments,
            template,
            out,
        } => assemble(&fragments, &template, out.as_deref()),
        Command::Validate { card, format, warn } => validate_cmd(&card, format.format, warn.allow_warn),
        Command::Gate {
            card,
            policy,
            today,
            format,
            warn,
        } => gate(&card, &policy, today, format.format, warn.allow_warn),
        Command::Diff { old, new, format } => diff(&old, &new, format.format),
        Command::Changelog {
            old,
            new,
            version,
            date,
            incident,
            summary,
            format,
        } => changelog(&old, &new, version, date, incident, summary, format.format),
        Command::Render {
            card,
            html,
            md,
            summary,
            internal,
        } => render(&card, html.as_deref(), md.as_deref(), summary, internal),
        Command::Sign { card, key, out, public } => sign(&card, &key, out, public),
        Command::Verify {
            card,
            attestation,
            pubkey,
            format,
        } => verify(&card, &attestation, &pubkey, format.format),
        Command::Serve {
            root,
            port,
            bind,
            include_internal,
            stale_days,
        } => serve(root, &bind, port, !include_internal, stale_days),
        Command::Fetch { url, out, format } => fetch(&url, out.as_deref(), format.format),
        Command::Consume {
            url,
            policy,
            pubkey,
            format,
            warn,
        } => consume(&url, &policy, pubkey.as_deref(), format.format, warn.allow_warn),
        Command::Inventory {
            inputs,
            stale_days,
            today,
            format,
        } => inventory(&inputs, stale_days, today, format.format),
        Command::Hex { card, format } => hex(&card, format.format),
        Command::Keygen { private, public, force } => keygen(&private, &public, force),
    }
}

fn print_json<T: Serialize + ?Sized>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn card_error(path: &Path, e: CardError) -> Failure {
    Failure::invalid(format!("{}: {e}", path.display()))
}

/// Loads a card without rejecting invariant violations; callers validate.
fn load_card(path: &Path) -> Result<SystemCard, Failure> {
    parse_card_unchecked(&read(path)?, Format::from_path(path)).map_err(|e| card_error(path, e))
}

fn warn_exit(allow_warn: bool) -> Exit {
    if allow_warn {
        Exit::Ok
    } else {
        Exit::Warn
    }
}

fn id_new(year: i64, summary: &str, registry: &Path, namespace: &str, format: OutputFormat) -> CmdResult {
    let reg = load_or_create_registry(registry, namespace).map_err(Failure::io)?;
    let (id, reg) = reg.allocate(year, summary).map_err(Failure::invalid)?;
    store_registry(&reg, registry).map_err(Failure::io)?;
    match format {
        OutputFormat::Json => print_json(&json!({
            "id": id,
            "year": id.year(),
            "number": id.number(),
            "registry": registry,
        })),
        OutputFormat::Text => println!("{id}"),
    }
    Ok(Exit::Ok)
}

fn id_parse(text: &str, format: OutputFormat) -> CmdResult {
    let id = parse_hazard_id(text).map_err(Failure::invalid)?;
    match format {
        OutputFormat::Json => print_json(&json!({
            "id": id,
            "scheme": id.scheme().prefix(),
            "year": id.year(),
            "number": id.number(),
        })),
        OutputFormat::Text => println!(
            "{id}\tscheme={} year={} number={}",
            id.scheme().prefix(),
            id.year(),
            id.number()
        ),
    }
    Ok(Exit::Ok)
}

fn assembly_failure(e: AssemblyError) -> Failure {
    match e {
        AssemblyError::Io { .. } | AssemblyError::EmptyInput => Failure::io(e),
        _ => Failure::invalid(e),
    }
}

fn assemble(fragments: &[PathBuf], template: &Path, out: Option<&Path>) -> CmdResult {
    let format = out.map_or(Format::Json, Format::from_path);
    let (card, bytes) = assembly::assemble(fragments, template, format).map_err(assembly_failure)?;
    let report = validate(&card);
    print_findings_stderr(&report);
    if report.level == Level::Fail {
        return Err(Failure::invalid(format!(
            "assembled card fails validation with {} error(s)",
            report.errors()
        )));
    }
    match out {
        Some(path) => {
            write(path, &bytes)?;
            eprintln!("wrote {} {} to {}", card.card_id, card.version, path.display());
        }
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    Ok(Exit::Ok)
}

fn severity_label(s: Severity) -> &'static str {
    match s {
        Severity::Error => "error",
        Severity::Warning => "warning",
    }
}

fn level_label(l: Level) -> &'static str {
    match l {
        Level::Pass => "pass",
        Level::Warn => "warn",
        Level::Fail => "fail",
    }
}

fn print_findings_stderr(report: &ValidationReport) {
    for f in &report.findings {
        eprintln!(
            "{}: {} at {}: {}",
            severity_label(f.severity),
            f.code,
            f.path,
            f.message
        );
    }
}

fn validate_cmd(path: &Path, format: OutputFormat, allow_warn: bool) -> CmdResult {
    let bytes = read(path)?;
    let (report, error) = match parse_card_unchecked(&bytes, Format::from_path(path)) {
        Ok(card) => (validate(&card), None),
        Err(e) => (ValidationReport::from_findings(Vec::new()), Some(e)),
    };
    let level = if error.is_some() { Level::Fail } else { report.level };
    match format {
        OutputFormat::Json => print_json(&json!({
            "source": path,
            "level": level,
            "error": error.as_ref().map(|e| json!({ "code": e.code(), "message": e.to_string() })),
            "findings": report.findings,
        })),
        OutputFormat::Text => {
            if let Some(e) = &error {
                println!("{}: {e}", path.display());
            }
            for f in &report.findings {
                println!(
                    "{}: {} at {}: {}",
                    severity_label(f.severity),
                    f.code,
                    f.path,
                    f.message
                );
            }
            println!(
                "{}: {} ({} error(s), {} warning(s))",
                path.display(),
                level_label(level),
                report.errors(),
                report.warnings()
            );
        }
    }
    Ok(match level {
        Level::Pass => Exit::Ok,
        Level::Warn => warn_exit(allow_warn),
        Level::Fail => Exit::Invalid,
    })
}

fn load_policies(args: &PolicyArgs) -> Result<PolicySet, Failure> {
    match (&args.policy, args.builtin) {
        (Some(path), false) => policy::load_policy(path).map_err(|e| match e {
            policy::PolicyError::Io { .. } => Failure::io(e),
            _ => Failure::invalid(e),
        }),
        _ => Ok(policy::builtin_policies()),
    }
}

fn load_prev(args: &PolicyArgs) -> Result<Option<SystemCard>, Failure> {
    args.prev.as_deref().map(load_card).transpose()
}

fn verdict_exit(v: &Verdict, allow_warn: bool) -> Exit {
    match v.outcome {
        Outcome::Pass => Exit::Ok,
        Outcome::Warn => warn_exit(allow_warn),
        Outcome::Block if distribution::attestation_failed(v) => Exit::Attestation,
        Outcome::Block => Exit::Block,
    }
}

fn print_verdict(v: &Verdict, subject: &str, format: OutputFormat) {
    match format {
        OutputFormat::Json => print_json(&json!({
            "subject": subject,
            "outcome": v.outcome,
            "fired": v.fired,
        })),
        OutputFormat::Text => {
            for f in &v.fired {
                let sev = serde_json::to_value(f.severity).expect("severity serializes");
                println!("{} {}: {}", sev.as_str().unwrap_or_default(), f.rule, f.message);
            }
            let outcome = serde_json::to_value(v.outcome).expect("outcome serializes");
            println!("{subject}: {}", outcome.as_str().unwrap_or_default());
        }
    }
}

fn gate(path: &Path, args: &PolicyArgs, today: Option<NaiveDate>, format: OutputFormat, allow_warn: bool) -> CmdResult {
    let policies = load_policies(args)?;
    let card = load_card(path)?;
    let prev = load_prev(args)?;
    let today = today.unwrap_or_else(|| chrono::Utc::now().date_naive());
    let verdict = policy::evaluate_at(&policies, &card, prev.as_ref(), today).map_err(Failure::io)?;
    print_verdict(&verdict, &path.display().to_string(), format);
    Ok(verdict_exit(&verdict, allow_warn))
}

fn describe_diff(d: &CardDiff) -> Vec<String> {
    let mut out = Vec::new();
    for h in &d.hazards_added {
        out.push(format!("hazard added: {h}"));
    }
    for h in &d.hazards_removed {
        out.push(format!("hazard removed: {h}"));
    }
    for (kind, changes) in [("guardrail", &d.guardrail_changes), ("model", &d.model_changes)] {
        for c in changes {
            let v = |o: &Option<String>| o.clone().unwrap_or_else(|| "(none)".into());
            out.push(format!(
                "{kind} \"{}\": {} -> {}",
                c.name,
                v(&c.old_version),
                v(&c.new_version)
            ));
        }
    }
    for a in &d.added {
        out.push(format!("+ {}", a.path));
    }
    for r in &d.removed {
        out.push(format!("- {}", r.path));
    }
    for c in &d.changed {
        out.push(format!("~ {}", c.path));
    }
    out
}

fn diff(old: &Path, new: &Path, format: OutputFormat) -> CmdResult {
    let (a, b) = (load_card(old)?, load_card(new)?);
    let d = diff_cards(&a, &b).map_err(Failure::invalid)?;
    let class = classify_change(&d);
    match format {
        OutputFormat::Json => print_json(&json!({
            "diff": d,
            "classification": class,
            "affected_components": affected_components(&d),
        })),
        OutputFormat::Text => {
            let from = d.old_version.map(|v| v.to_string()).unwrap_or_default();
            println!(
                "{} {from} -> {}: {} ({})",
                d.card_id,
                d.new_version,
                class.change_type.title(),
                class.label
            );
            for line in describe_diff(&d) {
                println!("{line}");
            }
        }
    }
    Ok(Exit::Ok)
}

fn changelog(
    old: &Path,
    new: &Path,
    version: Option<String>,
    date: Option<NaiveDate>,
    incident: Option<String>,
    summary: Option<String>,
    format: OutputFormat,
) -> CmdResult {
    let (a, b) = (load_card(old)?, load_card(new)?);
    let d = diff_cards(&a, &b).map_err(Failure::invalid)?;
    let version = match version {
        Some(v) => v.parse().map_err(Failure::invalid)?,
        None => b.version,
    };
    let mut entry = make_changelog_entry(&d, version, date.unwrap_or(b.published), incident);
    if let Some(s) = summary {
        entry.summary = s;
    }
    match format {
        OutputFormat::Json => print_json(&entry),
        OutputFormat::Text => print!("{}", render_changelog(std::slice::from_ref(&entry))),
    }
    Ok(Exit::Ok)
}

fn render(path: &Path, html: Option<&Path>, md: Option<&Path>, summary: bool, internal: bool) -> CmdResult {
    let card = load_card(path)?;
    let opts = RenderOptions {
        variant: if summary { Variant::Summary } else { Variant::Full },
        include_internal: internal,
    };
    if let Some(out) = html {
        write(out, render_html(&card, opts).map_err(Failure::invalid)?.as_bytes())?;
    }
    if let Some(out) = md {
        write(out, render_markdown(&card, opts).map_err(Failure::invalid)?.as_bytes())?;
    }
    if html.is_none() && md.is_none() {
        print!("{}", render_markdown(&card, opts).map_err(Failure::invalid)?);
    }
    Ok(Exit::Ok)
}

fn sign(path: &Path, key: &Path, out: Option<PathBuf>, public: bool) -> CmdResult {
    let key = attest::load_signing_key(key).map_err(Failure::io)?;
    let card = load_card(path)?;
    let report = validate(&card);
    if report.level == Level::Fail {
        print_findings_stderr(&report);
        return Err(Failure::invalid("refusing to sign a card that fails validation"));
    }
    let (subject, default_out) = if public {
        let redacted = crate::card::redact_public(&card).map_err(Failure::invalid)?;
        (redacted, path.with_file_name(distribution::PUBLIC_ATTESTATION_FILE))
    } else {
        (card, attest::attestation_path(path))
    };
    let att = attest::sign(&subject, &key).map_err(Failure::invalid)?;
    let out = out.unwrap_or(default_out);
    write(&out, &att.to_json())?;
    println!("{}", out.display());
    Ok(Exit::Ok)
}

fn verify(path: &Path, att_path: &Path, pubkey: &Path, format: OutputFormat) -> CmdResult {
    let key = attest::load_verifying_key(pubkey).map_err(Failure::io)?;
    let card = load_card(path)?;
    let att = Attestation::from_json(&read(att_path)?).map_err(|e| Failure {
        exit: Exit::Attestation,
        message: format!("{}: {e}", att_path.display()),
    })?;
    let v = attest::verify(&card, &att, &key);
    match format {
        OutputFormat::Json => print_json(&json!({
            "verified": v.verified,
            "reason": v.reason,
            "card_id": card.card_id,
            "version": card.version,
            "signer": att.signer,
        })),
        OutputFormat::Text => {
            let reason = serde_json::to_value(v.reason).expect("reason serializes");
            println!("{}: {}", path.display(), reason.as_str().unwrap_or_default());
        }
    }
    Ok(if v.reason == VerifyReason::Ok {
        Exit::Ok
    } else {
        Exit::Attestation
    })
}

fn serve(root: PathBuf, bind: &str, port: u16, public_only: bool, stale_days: u32) -> CmdResult {
    let mut cfg = ServeConfig::new(root).with_addr(format!("{bind}:{port}"));
    cfg.public_only = public_only;
    cfg.staleness_days = stale_days;
    let server = distribution::serve(cfg).map_err(Failure::io)?;
    eprintln!("serving on {}", server.base_url());
    reload_on_hangup(server);
    Ok(Exit::Ok)
}

#[cfg(unix)]
fn reload_on_hangup(server: distribution::Server) {
    use signal_hook::consts::SIGHUP;
    match signal_hook::iterator::Signals::new([SIGHUP]) {
        Ok(mut signals) => {
            for _ in signals.forever() {
                match server.reload() {
                    Ok(()) => log::info!("reloaded card root"),
                    Err(e) => log::error!("reload failed, keeping previous cards: {e}"),
                }
            }
        }
        Err(e) => {
            log::warn!("cannot install SIGHUP handler: {e}");
            server.wait();
        }
    }
}

#[cfg(not(unix))]
fn reload_on_hangup(server: distribution::Server) {
    server.wait();
}

fn fetch_failure(e: FetchError) -> Failure {
    if let FetchError::RemoteInvalid { report: Some(r), .. } = &e {
        print_findings_stderr(r);
    }
    match e {
        FetchError::Network { .. } => Failure::io(e),
        FetchError::RemoteInvalid { .. } => Failure::invalid(e),
    }
}

fn fetch(url: &str, out: Option<&Path>, format: OutputFormat) -> CmdResult {
    let got = distribution::fetch(url).map_err(fetch_failure)?;
    let bytes = serialize(&got.card, Format::Json);
    if let Some(path) = out {
        write(path, &bytes)?;
        if let Some(att) = &got.attestation {
            write(&attest::attestation_path(path), &att.to_json())?;
        }
    }
    match format {
        OutputFormat::Json => print_json(&json!({
            "card_id": got.card.card_id,
            "version": got.card.version,
            "digest": attest::digest(&got.card).map_err(Failure::invalid)?,
            "digest_header": got.digest_header,
            "attestation": got.attestation,
            "report": got.report,
            "card": out.is_none().then(|| crate::card::to_tree(&got.card)),
        })),
        OutputFormat::Text if out.is_none() => print!("{}", String::from_utf8_lossy(&bytes)),
        OutputFormat::Text => println!(
            "{} {} -> {}{}",
            got.card.card_id,
            got.card.version,
            out.map(Path::display).expect("checked above"),
            if got.attestation.is_some() { " (attested)" } else { "" }
        ),
    }
    Ok(Exit::Ok)
}

fn consume(url: &str, args: &PolicyArgs, pubkey: Option<&Path>, format: OutputFormat, allow_warn: bool) -> CmdResult {
    let policies = load_policies(args)?;
    let prev = load_prev(args)?;
    let key = pubkey
        .map(attest::load_verifying_key)
        .transpose()
        .map_err(Failure::io)?;
    let verdict = distribution::consume_and_gate(url, &policies, prev.as_ref(), key.as_ref());
    print_verdict(&verdict, url, format);
    Ok(verdict_exit(&verdict, allow_warn))
}

fn inventory(inputs: &[String], stale_days: u32, today: Option<NaiveDate>, format: OutputFormat) -> CmdResult {
    let today = today.unwrap_or_else(|| chrono::Utc::now().date_naive());
    let report = distribution::inventory_at(inputs, stale_days, today);
    match format {
        OutputFormat::Json => print_json(&report),
        OutputFormat::Text => println!("{report}"),
    }
    Ok(Exit::Ok)
}

fn hex(path: &Path, format: OutputFormat) -> CmdResult {
    let card = load_card(path)?;
    let statements = crate::card::export_hex(&card);
    match format {
        OutputFormat::Json => print_json(&statements),
        OutputFormat::Text => {
            for s in &statements {
                let status = serde_json::to_value(s.status).expect("status serializes");
                println!(
                    "{}\t{}\t{}\t{}",
                    s.hazard,
                    s.product,
                    status.as_str().unwrap_or_default(),
                    s.statement
                );
            }
        }
    }
    Ok(Exit::Ok)
}

fn keygen(private: &Path, public: &Path, force: bool) -> CmdResult {
    for p in [private, public] {
        if p.exists() && !force {
            return Err(Failure::io(format!(
                "{} exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    let key = attest::generate_key();
    write(private, attest::signing_key_to_pem(&key).as_bytes())?;
    write(public, attest::verifying_key_to_pem(&key.verifying_key()).as_bytes())?;
    println!("{}", attest::signer_id(&key.verifying_key()));
    Ok(Exit::Ok)
}
