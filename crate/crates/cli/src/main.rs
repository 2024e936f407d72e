use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use recruiter_core::audio::{read_wav, AudioError};
use recruiter_core::cues::{extract_cues, write_trace, CueError};
use recruiter_core::scenario::Scenario;
use recruiter_core::session::{
    replay, run_session, AudioSource, SessionConfig, SessionError, TraceSource, TurnSource,
};

#[derive(Parser)]
#[command(
    name = "recruiter",
    version,
    about = "Affective virtual-recruiter interview pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Session configuration (TOML); defaults apply when omitted.
    #[arg(long, env = "RECRUITER_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an interview and write its session log.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// JSON manifest listing the interviewee's audio per turn.
        #[arg(
            long,
            conflicts_with = "cue_trace",
            required_unless_present = "cue_trace"
        )]
        audio_manifest: Option<PathBuf>,
        /// JSONL cue trace with turn markers.
        #[arg(long)]
        cue_trace: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract the cue events of a WAV file as a JSONL trace.
    ExtractFeatures {
        #[arg(long)]
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Recompute a session log and report divergences.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Check a scenario file.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn load_config(arg: &ConfigArg) -> Result<SessionConfig, SessionError> {
    let config = match &arg.config {
        Some(path) => SessionConfig::load(path)?,
        None => SessionConfig::default(),
    };
    config.validate()?;
    Ok(config)
}

fn create(path: &Path) -> Result<BufWriter<File>, SessionError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| SessionError::io(path, e))
}

fn run(
    scenario: &Path,
    manifest: Option<&Path>,
    trace: Option<&Path>,
    config: &ConfigArg,
    out: &Path,
) -> anyhow::Result<()> {
    let config = load_config(config)?;
    let scenario = Scenario::load(scenario).map_err(SessionError::from)?;
    let mut source: Box<dyn TurnSource> = match (manifest, trace) {
        (Some(m), _) => Box::new(AudioSource::spawn(m, &config.features, &config.cues)?),
        (None, Some(t)) => Box::new(TraceSource::load(t)?),
        (None, None) => unreachable!("clap requires one input"),
    };
    let log = run_session(&config, &scenario, source.as_mut())?;
    log.write_to(create(out)?)
        .map_err(|e| SessionError::io(out, e))?;
    eprintln!("{} turns, ended by {:?}", log.end.turns, log.end.reason);
    Ok(())
}

fn extract(wav: &Path, out: &Path, config: &ConfigArg) -> anyhow::Result<()> {
    let config = load_config(config)?;
    let audio_error = |e: AudioError| match e {
        AudioError::Wav(message) => SessionError::Io {
            path: wav.to_path_buf(),
            message,
        },
        other => SessionError::Config(format!("{}: {other}", wav.display())),
    };
    let pcm = read_wav(wav).map_err(audio_error)?;
    let events = extract_cues(&pcm, &config.features, &config.cues).map_err(|e| match e {
        CueError::Audio(a) => audio_error(a),
        other => SessionError::Config(other.to_string()),
    })?;
    write_trace(create(out)?, &events).map_err(|e| SessionError::Io {
        path: out.to_path_buf(),
        message: e.to_string(),
    })?;
    eprintln!("{} events", events.len());
    Ok(())
}

/// Returns whether the log replayed without divergence.
fn replay_log(path: &Path) -> anyhow::Result<bool> {
    let file = File::open(path).map_err(|e| SessionError::io(path, e))?;
    let report = replay(BufReader::new(file))?;
    for d in &report.divergences {
        println!("{d}");
    }
    println!(
        "{} turns replayed, {} divergences",
        report.turns,
        report.divergences.len()
    );
    Ok(report.is_clean())
}

fn validate(path: &Path) -> anyhow::Result<()> {
    let scenario = Scenario::load(path)
        .map_err(SessionError::from)
        .with_context(|| format!("{} is not a valid scenario", path.display()))?;
    println!(
        "{}: {} nodes, {} topics",
        path.display(),
        scenario.nodes().len(),
        scenario.topics().len()
    );
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.downcast_ref::<SessionError>()
        .map_or(1, |e| e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            scenario,
            audio_manifest,
            cue_trace,
            config,
            out,
        } => run(
            scenario,
            audio_manifest.as_deref(),
            cue_trace.as_deref(),
            config,
            out,
        ),
        Command::ExtractFeatures { wav, out, config } => extract(wav, out, config),
        Command::Replay { log } => match replay_log(log) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
        Command::Validate { scenario } => validate(scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
