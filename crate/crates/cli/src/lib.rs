//! Command-line front end. [`run`] parses an argument vector, executes one
//! command and returns the exit code, the rendered output and the report.
//!
//! Exit codes: 0 when the outcome matches what the demo is meant to show
//! (attacks included), 1 when it does not or a runtime step fails, 2 on
//! usage errors.

mod bls_cmd;
mod net_cmd;
mod report;
mod slash_cmd;

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::Value;
use thiserror::Error;

pub use report::{Outcome, RunReport, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub(crate) fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// A 32-byte seed written as up to 64 hex digits, left-padded with zeros.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Seed(pub [u8; 32]);

impl FromStr for Seed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let digits = s.trim().trim_start_matches("0x");
        if digits.is_empty() || digits.len() > 64 {
            return Err("seed must be 1 to 64 hex digits".into());
        }
        let padded = format!("{digits:0>64}");
        let bytes = hex::decode(&padded).map_err(|e| format!("seed: {e}"))?;
        Ok(Seed(bytes.try_into().expect("64 hex digits")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Toy,
    #[value(name = "bls12-381")]
    Bls12381,
}

impl SuiteArg {
    fn name(self) -> &'static str {
        match self {
            SuiteArg::Toy => "toy",
            SuiteArg::Bls12381 => "bls12-381",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "beaconlab",
    version,
    about = "Reproducible demos, attacks and measurements for beacon-chain cryptography",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Master seed (hex). Every random choice in a run derives from it.
    #[arg(long, global = true, env = "LAB_SEED")]
    pub seed: Option<Seed>,
    /// Print the JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Leave the timestamp out of the report.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Pairing backend for BLS commands.
    #[arg(long, global = true, value_enum, default_value_t = SuiteArg::Toy)]
    pub suite: SuiteArg,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// BLS key generation, signing and verification.
    #[command(subcommand)]
    Bls(BlsCmd),
    /// Attack demos, each run against a vulnerable and a mitigated target.
    #[command(subcommand)]
    Attack(AttackCmd),
    /// Noise XX handshake.
    #[command(subcommand)]
    Noise(NoiseCmd),
    /// discv5 handshake.
    #[command(subcommand)]
    Discv5(Discv5Cmd),
    /// Passive decryption of recorded sessions.
    #[command(subcommand)]
    Probe(ProbeCmd),
    /// Protocol measurements.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Slashing protection and evidence.
    #[command(subcommand)]
    Slash(SlashCmd),
}

#[derive(Debug, Subcommand)]
pub enum BlsCmd {
    Keygen {
        /// Input keying material (hex, at least 32 bytes). Drawn from the seed if absent.
        #[arg(long)]
        ikm: Option<String>,
        #[arg(long, default_value = "")]
        key_info: String,
    },
    Sign {
        #[arg(long)]
        sk: String,
        #[arg(long)]
        message: String,
    },
    Verify {
        #[arg(long)]
        pk: String,
        #[arg(long)]
        message: String,
        #[arg(long)]
        signature: String,
        #[arg(long, value_enum, default_value_t = Validity::Valid)]
        expect: Validity,
    },
    Aggregate {
        #[arg(long = "signature", required = true, num_args = 1..)]
        signatures: Vec<String>,
    },
    BatchVerify {
        /// Batch document (JSON). Without it a batch of honest items is generated.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        items: usize,
        #[arg(long, default_value_t = 128)]
        coeff_bits: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Validity {
    Valid,
    Invalid,
}

#[derive(Debug, Subcommand)]
pub enum AttackCmd {
    /// Rogue public key against same-message aggregation.
    RogueKey,
    /// Offsetting deviations against unrandomized batch verification.
    BatchDeviation {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 128)]
        coeff_bits: u32,
    },
    /// Small-subgroup deviations against batch verification without subgroup checks.
    BatchSubgroup {
        /// Defaults to 10000 on the toy suite and 500 on bls12-381.
        #[arg(long)]
        trials: Option<u64>,
        /// Defaults to 5 on the toy suite and the smallest available order on bls12-381.
        #[arg(long)]
        torsion_order: Option<u64>,
        #[arg(long, default_value_t = 128)]
        coeff_bits: u32,
    },
    /// Replay of a recorded static-key signature into a new Noise session.
    ReplayStaticSig {
        /// Write the attack transcript here.
        #[arg(long)]
        transcript_out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum NoiseCmd {
    Handshake {
        #[arg(long, default_value = "hardened")]
        mode: beaconlab_core::noise::BindingMode,
        #[command(flatten)]
        session: SessionArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum Discv5Cmd {
    Handshake {
        #[arg(long, default_value = "v5")]
        variant: beaconlab_core::discv5::Variant,
        #[arg(long)]
        transcript_binding: bool,
        /// Pad the ephemeral key in flight and compare unbound and bound sessions.
        #[arg(long)]
        tamper_size_field: bool,
        #[command(flatten)]
        session: SessionArgs,
    },
}

#[derive(Debug, Args)]
pub struct SessionArgs {
    /// Transport messages sent by each side after the handshake.
    #[arg(long, default_value_t = 1)]
    pub messages: usize,
    /// Adversary script (JSON).
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub transcript_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ProbeCmd {
    ForwardSecrecy {
        #[arg(long, default_value = "discv5-v5")]
        protocol: beaconlab_core::simnet::Protocol,
        /// Comma-separated keys (initiator-static, responder-static,
        /// initiator-ephemeral, responder-ephemeral), `all` or `none`.
        #[arg(long, default_value = "responder-static")]
        compromise: String,
        #[arg(long, default_value_t = 3)]
        messages: usize,
        /// First recorded packet index.
        #[arg(long, default_value_t = 0)]
        recorded_from: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum MeasureCmd {
    Amplification {
        #[arg(long, default_value = "noise-xx")]
        protocol: beaconlab_core::simnet::Protocol,
    },
}

#[derive(Debug, Subcommand)]
pub enum SlashCmd {
    /// Check a candidate against the database and record it if allowed.
    Check {
        #[command(flatten)]
        db: DbArgs,
        #[arg(long)]
        pubkey: String,
        #[arg(long, value_enum)]
        kind: CandidateKind,
        #[arg(long, required_if_eq("kind", "block"))]
        slot: Option<u64>,
        #[arg(long, required_if_eq("kind", "attestation"))]
        source: Option<u64>,
        #[arg(long, required_if_eq("kind", "attestation"))]
        target: Option<u64>,
        #[arg(long)]
        signing_root: String,
        #[arg(long, value_enum)]
        expect: Option<ExpectDecision>,
    },
    Import {
        #[command(flatten)]
        db: DbArgs,
        #[arg(long)]
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ImportModeArg::Reject)]
        mode: ImportModeArg,
    },
    Export {
        #[command(flatten)]
        db: DbArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate slashing evidence from a file, or a seeded proposer-slashing demo.
    ValidateEvidence {
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Validity::Valid)]
        expect: Validity,
        /// Write the demo's valid evidence to this path.
        #[arg(long, conflicts_with = "file")]
        emit: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct DbArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// Genesis validators root (hex, 32 bytes).
    #[arg(long)]
    pub genesis_root: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CandidateKind {
    Block,
    Attestation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExpectDecision {
    Allow,
    Deny,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ImportModeArg {
    Allow,
    Reject,
}

/// Settings shared by every command.
pub(crate) struct Ctx {
    pub seed: [u8; 32],
    pub suite: SuiteArg,
}

impl Ctx {
    pub fn rng(&self) -> ChaCha20Rng {
        ChaCha20Rng::from_seed(self.seed)
    }
}

/// What a command hands back to the dispatcher.
pub(crate) struct Finished {
    pub parameters: Value,
    pub metrics: Value,
    pub expected: bool,
    pub summary: String,
    pub finding: Option<&'static str>,
    /// Printed verbatim in text mode after the report.
    pub raw: Option<String>,
}

impl Finished {
    pub fn new(parameters: Value, metrics: Value, expected: bool, summary: impl Into<String>) -> Self {
        Finished {
            parameters,
            metrics,
            expected,
            summary: summary.into(),
            finding: None,
            raw: None,
        }
    }

    pub fn finding(mut self, tag: &'static str) -> Self {
        self.finding = Some(tag);
        self
    }
}

pub struct Invocation {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub report: Option<RunReport>,
}

fn command_name(c: &Command) -> String {
    let (group, sub) = match c {
        Command::Bls(b) => (
            "bls",
            match b {
                BlsCmd::Keygen { .. } => "keygen",
                BlsCmd::Sign { .. } => "sign",
                BlsCmd::Verify { .. } => "verify",
                BlsCmd::Aggregate { .. } => "aggregate",
                BlsCmd::BatchVerify { .. } => "batch-verify",
            },
        ),
        Command::Attack(a) => (
            "attack",
            match a {
                AttackCmd::RogueKey => "rogue-key",
                AttackCmd::BatchDeviation { .. } => "batch-deviation",
                AttackCmd::BatchSubgroup { .. } => "batch-subgroup",
                AttackCmd::ReplayStaticSig { .. } => "replay-static-sig",
            },
        ),
        Command::Noise(_) => ("noise", "handshake"),
        Command::Discv5(_) => ("discv5", "handshake"),
        Command::Probe(_) => ("probe", "forward-secrecy"),
        Command::Measure(_) => ("measure", "amplification"),
        Command::Slash(s) => (
            "slash",
            match s {
                SlashCmd::Check { .. } => "check",
                SlashCmd::Import { .. } => "import",
                SlashCmd::Export { .. } => "export",
                SlashCmd::ValidateEvidence { .. } => "validate-evidence",
            },
        ),
    };
    format!("{group} {sub}")
}

fn execute(ctx: &Ctx, command: &Command) -> Result<Finished, CliError> {
    match command {
        Command::Bls(c) => bls_cmd::bls(ctx, c),
        Command::Attack(AttackCmd::ReplayStaticSig { transcript_out }) => {
            net_cmd::replay_static_sig(ctx, transcript_out.as_deref())
        }
        Command::Attack(c) => bls_cmd::attack(ctx, c),
        Command::Noise(NoiseCmd::Handshake { mode, session }) => net_cmd::noise_handshake(ctx, *mode, session),
        Command::Discv5(Discv5Cmd::Handshake {
            variant,
            transcript_binding,
            tamper_size_field,
            session,
        }) => net_cmd::discv5_handshake(ctx, *variant, *transcript_binding, *tamper_size_field, session),
        Command::Probe(ProbeCmd::ForwardSecrecy {
            protocol,
            compromise,
            messages,
            recorded_from,
        }) => net_cmd::forward_secrecy(ctx, *protocol, compromise, *messages, *recorded_from),
        Command::Measure(MeasureCmd::Amplification { protocol }) => net_cmd::amplification(ctx, *protocol),
        Command::Slash(c) => slash_cmd::slash(ctx, c),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let (stdout, stderr) = if code == 0 { (text, String::new()) } else { (String::new(), text) };
            return Invocation {
                code,
                stdout,
                stderr,
                report: None,
            };
        }
    };
    let ctx = Ctx {
        seed: cli.seed.map(|s| s.0).unwrap_or([0; 32]),
        suite: cli.suite,
    };
    let command = command_name(&cli.command);
    match execute(&ctx, &cli.command) {
        Ok(done) => {
            let report = RunReport::new(&command, &ctx, done.parameters, done.metrics, done.expected, done.summary, done.finding, !cli.no_timestamp);
            let mut stdout = if cli.json {
                report.to_json()
            } else {
                report.render_text()
            };
            stdout.push('\n');
            if let (false, Some(raw)) = (cli.json, done.raw) {
                stdout.push_str(&raw);
                stdout.push('\n');
            }
            Invocation {
                code: if report.outcome.expected { 0 } else { 1 },
                stdout,
                stderr: String::new(),
                report: Some(report),
            }
        }
        Err(e) => Invocation {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            report: None,
        },
    }
}

pub(crate) fn parse_hex(s: &str, what: &str) -> Result<Vec<u8>, CliError> {
    hex::decode(s.trim().trim_start_matches("0x")).map_err(|e| CliError::Usage(format!("{what}: {e}")))
}

pub(crate) fn hex0x(bytes: &[u8]) -> String {
    format!("0x{}", hex::encode(bytes))
}
