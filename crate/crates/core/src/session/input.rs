//! Where each turn's interviewee behaviour comes from.

use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::audio::{read_wav, AudioError, FeatureConfig, PcmAudio};
use crate::cues::{extract_cues, read_trace, CueConfig, CueError, CueEvent, TraceLine};

/// Cue events of one answer, with the end of the question on the same clock.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TurnInput {
    pub events: Vec<CueEvent>,
    pub question_end: f64,
}

impl TurnInput {
    pub fn silent() -> Self {
        TurnInput::default()
    }
}

/// Supplies turn inputs in order. A source that has run out yields silent
/// turns.
pub trait TurnSource {
    /// Input for turn `turn` (1-based); called once per turn, in order.
    fn next_turn(&mut self, turn: usize) -> Result<TurnInput, SessionError>;
}

/// Pre-loaded turns keyed by turn number.
#[derive(Debug, Clone, Default)]
pub struct TraceSource {
    turns: BTreeMap<usize, TurnInput>,
}

impl TraceSource {
    pub fn new(turns: BTreeMap<usize, TurnInput>) -> Self {
        TraceSource { turns }
    }

    pub fn from_vec(turns: Vec<TurnInput>) -> Self {
        TraceSource {
            turns: turns
                .into_iter()
                .enumerate()
                .map(|(i, t)| (i + 1, t))
                .collect(),
        }
    }

    /// Splits a parsed trace at its turn markers. A trace without markers
    /// is a single turn whose question ended at time 0.
    pub fn from_lines(lines: Vec<TraceLine>) -> Result<Self, SessionError> {
        let mut turns = BTreeMap::new();
        let mut current: Option<(usize, TurnInput)> = None;
        let has_markers = lines.iter().any(|l| matches!(l, TraceLine::Turn(_)));
        if !has_markers {
            let events = lines
                .into_iter()
                .filter_map(|l| match l {
                    TraceLine::Event(e) => Some(e),
                    TraceLine::Turn(_) => None,
                })
                .collect();
            turns.insert(
                1,
                TurnInput {
                    events,
                    question_end: 0.0,
                },
            );
            return Ok(TraceSource { turns });
        }
        for (i, line) in lines.into_iter().enumerate() {
            match line {
                TraceLine::Turn(m) => {
                    let last = current.as_ref().map_or(0, |c| c.0);
                    if m.turn <= last || !m.question_end.is_finite() {
                        return Err(SessionError::Trace(format!(
                            "entry {}: turn {} does not follow turn {last}",
                            i + 1,
                            m.turn
                        )));
                    }
                    if let Some((n, t)) = current.take() {
                        turns.insert(n, t);
                    }
                    current = Some((
                        m.turn,
                        TurnInput {
                            events: Vec::new(),
                            question_end: m.question_end,
                        },
                    ));
                }
                TraceLine::Event(e) => match current.as_mut() {
                    Some((_, t)) => t.events.push(e),
                    None => {
                        return Err(SessionError::Trace(format!(
                            "entry {}: event before the first turn marker",
                            i + 1
                        )))
                    }
                },
            }
        }
        if let Some((n, t)) = current {
            turns.insert(n, t);
        }
        Ok(TraceSource { turns })
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let file = std::fs::File::open(path).map_err(|e| SessionError::io(path, e))?;
        let lines = read_trace(BufReader::new(file)).map_err(|e| match e {
            CueError::Io(io) => SessionError::io(path, io),
            other => SessionError::Trace(format!("{}: {other}", path.display())),
        })?;
        Self::from_lines(lines)
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }
}

impl TurnSource for TraceSource {
    fn next_turn(&mut self, turn: usize) -> Result<TurnInput, SessionError> {
        Ok(self.turns.remove(&turn).unwrap_or_default())
    }
}

/// Audio manifest: either one WAV per turn,
///
/// ```json
/// {"turns": [{"wav": "turn1.wav", "question_end": 0.0}, ...]}
/// ```
///
/// or one WAV for the whole session cut into turns on the session clock,
///
/// ```json
/// {"wav": "session.wav", "turns": [{"start": 0.0, "end": 12.5, "question_end": 2.1}, ...]}
/// ```
///
/// Relative paths are resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AudioManifest {
    #[serde(default)]
    pub wav: Option<PathBuf>,
    pub turns: Vec<ManifestTurn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestTurn {
    #[serde(default)]
    pub wav: Option<PathBuf>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub end: Option<f64>,
    #[serde(default)]
    pub question_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum TurnAudio {
    File(PathBuf),
    Span { start: f64, end: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct ResolvedManifest {
    session_wav: Option<PathBuf>,
    turns: Vec<(TurnAudio, f64)>,
}

impl AudioManifest {
    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path).map_err(|e| SessionError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| SessionError::Manifest(format!("{}: {e}", path.display())))
    }

    fn resolve(&self, base: &Path) -> Result<ResolvedManifest, SessionError> {
        let bad = |i: usize, msg: &str| SessionError::Manifest(format!("turn {}: {msg}", i + 1));
        let mut turns = Vec::with_capacity(self.turns.len());
        for (i, t) in self.turns.iter().enumerate() {
            if !t.question_end.is_finite() {
                return Err(bad(i, "question_end must be finite"));
            }
            let audio = match (&self.wav, &t.wav, t.start, t.end) {
                (None, Some(w), None, None) => TurnAudio::File(base.join(w)),
                (Some(_), None, Some(start), Some(end)) => {
                    if !(start.is_finite() && end.is_finite() && 0.0 <= start && start < end) {
                        return Err(bad(i, "needs 0 <= start < end"));
                    }
                    TurnAudio::Span { start, end }
                }
                (None, _, _, _) => return Err(bad(i, "needs a wav file")),
                (Some(_), _, _, _) => {
                    return Err(bad(i, "needs start and end, and no wav of its own"))
                }
            };
            turns.push((audio, t.question_end));
        }
        Ok(ResolvedManifest {
            session_wav: self.wav.as_ref().map(|w| base.join(w)),
            turns,
        })
    }
}

fn audio_error(path: &Path, e: AudioError) -> SessionError {
    match e {
        AudioError::Wav(msg) => SessionError::Io {
            path: path.to_path_buf(),
            message: msg,
        },
        other => SessionError::Config(format!("{}: {other}", path.display())),
    }
}

fn cue_error(path: &Path, e: CueError) -> SessionError {
    match e {
        CueError::Audio(a) => audio_error(path, a),
        other => SessionError::Config(format!("{}: {other}", path.display())),
    }
}

fn load_optional(path: &Path) -> Result<Option<PcmAudio>, SessionError> {
    if !path.exists() {
        return Ok(None);
    }
    read_wav(path).map(Some).map_err(|e| audio_error(path, e))
}

fn slice(pcm: &PcmAudio, start: f64, end: f64) -> Option<PcmAudio> {
    let rate = pcm.sample_rate as f64;
    let a = (start * rate).round() as usize;
    let b = ((end * rate).round() as usize).min(pcm.samples.len());
    (a < b).then(|| PcmAudio::mono(pcm.samples[a..b].to_vec(), pcm.sample_rate))
}

fn extract_turns(
    manifest: ResolvedManifest,
    features: &FeatureConfig,
    cues: &CueConfig,
    mut send: impl FnMut(Result<TurnInput, SessionError>) -> bool,
) {
    let session = match &manifest.session_wav {
        Some(path) => match load_optional(path) {
            Ok(pcm) => pcm.map(|p| (path.clone(), p)),
            Err(e) => {
                send(Err(e));
                return;
            }
        },
        None => None,
    };
    for (audio, question_end) in manifest.turns {
        let turn = match audio {
            TurnAudio::File(path) => load_optional(&path).and_then(|pcm| match pcm {
                None => Ok(TurnInput::silent()),
                Some(pcm) => extract_cues(&pcm, features, cues)
                    .map(|events| TurnInput {
                        events,
                        question_end,
                    })
                    .map_err(|e| cue_error(&path, e)),
            }),
            TurnAudio::Span { start, end } => match &session {
                None => Ok(TurnInput::silent()),
                Some((path, pcm)) => match slice(pcm, start, end) {
                    None => Ok(TurnInput::silent()),
                    Some(part) => extract_cues(&part, features, cues)
                        .map(|events| TurnInput {
                            events,
                            question_end: question_end - start,
                        })
                        .map_err(|e| cue_error(path, e)),
                },
            },
        };
        let failed = turn.is_err();
        if !send(turn) || failed {
            return;
        }
    }
}

/// Turns extracted from audio on a worker thread, handed over through a
/// bounded queue so extraction runs ahead of the turn loop.
pub struct AudioSource {
    rx: Option<Receiver<Result<TurnInput, SessionError>>>,
    worker: Option<JoinHandle<()>>,
}

/// Turns the worker may extract ahead of the session loop.
const QUEUE_DEPTH: usize = 2;

impl AudioSource {
    pub fn spawn(
        manifest_path: &Path,
        features: &FeatureConfig,
        cues: &CueConfig,
    ) -> Result<Self, SessionError> {
        let manifest = AudioManifest::load(manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let resolved = manifest.resolve(base)?;
        let (features, cues) = (features.clone(), cues.clone());
        let (tx, rx) = sync_channel(QUEUE_DEPTH);
        let worker = std::thread::Builder::new()
            .name("cue-extraction".into())
            .spawn(move || extract_turns(resolved, &features, &cues, |t| tx.send(t).is_ok()))
            .map_err(|e| SessionError::io(manifest_path, e))?;
        Ok(AudioSource {
            rx: Some(rx),
            worker: Some(worker),
        })
    }
}

impl TurnSource for AudioSource {
    fn next_turn(&mut self, _turn: usize) -> Result<TurnInput, SessionError> {
        match self.rx.as_ref().map(Receiver::recv) {
            Some(Ok(turn)) => turn,
            _ => Ok(TurnInput::silent()),
        }
    }
}

impl Drop for AudioSource {
    fn drop(&mut self) {
        // Closing the queue stops the worker at its next send.
        self.rx.take();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

/// Extracts every turn of a manifest on the calling thread.
pub fn extract_manifest(
    manifest_path: &Path,
    features: &FeatureConfig,
    cues: &CueConfig,
) -> Result<Vec<TurnInput>, SessionError> {
    let manifest = AudioManifest::load(manifest_path)?;
    let resolved = manifest.resolve(manifest_path.parent().unwrap_or(Path::new(".")))?;
    let mut out = Vec::new();
    let mut err = None;
    extract_turns(resolved, features, cues, |t| match t {
        Ok(t) => {
            out.push(t);
            true
        }
        Err(e) => {
            err = Some(e);
            false
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}
