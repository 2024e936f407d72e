//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{answer, bits, looping_scenario, scripted_answers, voice, MindOracle, SR};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use recruiter_core::affect::{
    update_mood, AffectCore, Attitude, AttitudeVector, Emotion, EmotionState, MoodLabel, MoodState,
    Personality, Polarity,
};
use recruiter_core::audio::{analyze_pcm, read_wav, write_wav, FeatureConfig, PcmAudio};
use recruiter_core::cues::{extract_cues, CueConfig, CueKind, EventKind};
use recruiter_core::scenario::Scenario;
use recruiter_core::session::{run_session, AudioSource, SessionConfig, SessionError, TraceSource};
use recruiter_core::tom::DesireScope;
use recruiter_core::user_model::{
    calibrate, compute_performance, Baseline, Component, DurationRule, ExpectedCueProfile,
    RelativeBand, Statistic, TargetBand, TurnSummary, UserModelError, Weights,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

// 1
fn five_cycle_mood() -> Outcome {
    let start = Instant::now();
    let mut mood = MoodState::default();
    let mut labels = Vec::new();
    for _ in 0..6 {
        mood = update_mood(&mood, &EmotionState::only(Emotion::Anger, 1.0));
        labels.push(mood.label);
    }
    ensure(labels[..4] == [MoodLabel::Neutral; 4], || {
        format!("active before turn 5: {labels:?}")
    })?;
    ensure(labels[4] == MoodLabel::Hostile, || {
        format!("turn 5 label {:?}", labels[4])
    })?;

    // The same through the full affect core: failing a question expected to go well.
    let mut core = AffectCore::new(Personality::default()).map_err(|e| e.to_string())?;
    let mut labels = Vec::new();
    for _ in 0..5 {
        let s = core.step(-1.0, 1.0).map_err(|e| e.to_string())?;
        ensure(s.emotions.anger == 1.0, || {
            format!("anger {}", s.emotions.anger)
        })?;
        labels.push(s.mood.label);
    }
    ensure(
        labels[3] == MoodLabel::Neutral && labels[4] == MoodLabel::Hostile,
        || format!("affect core labels {labels:?}"),
    )?;
    within(Duration::from_secs(1), start)?;
    Ok(format!(
        "Hostile at turn 5, intensity {:.3} at turn 4",
        1.0 - 0.85f64.powi(4)
    ))
}

fn random_band(rng: &mut StdRng, scale: f64) -> TargetBand {
    let min = rng.random_range(0.0..scale);
    let lo = min + rng.random_range(0.01..scale);
    let hi = lo + rng.random_range(0.0..scale);
    let max = hi + rng.random_range(0.01..scale);
    TargetBand::new(lo, hi, min, max)
}

fn random_profile(rng: &mut StdRng) -> ExpectedCueProfile {
    let b = rng.random_range(0.2..2.0);
    let breaks_lo = rng.random_range(0..3) as f64;
    let breaks_hi = breaks_lo + rng.random_range(0..4) as f64;
    let mut weights = [0.0; 6];
    while weights.iter().all(|&w| w == 0.0) {
        for w in &mut weights {
            *w = if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(0.0..1.0)
            };
        }
    }
    ExpectedCueProfile {
        latency: random_band(rng, 2.0),
        speech_rate: random_band(rng, 4.0),
        loudness: RelativeBand {
            band_sigmas: b,
            limit_sigmas: b + rng.random_range(0.5..3.0),
        },
        pitch_variability: random_band(rng, 60.0),
        duration: DurationRule {
            lo_base: rng.random_range(0.5..4.0),
            lo_slope: rng.random_range(0.0..10.0),
            hi_base: rng.random_range(5.0..20.0),
            hi_slope: rng.random_range(10.0..40.0),
        },
        jitter: random_band(rng, 0.02),
        shimmer: random_band(rng, 0.1),
        voice_breaks: TargetBand::new(
            breaks_lo,
            breaks_hi,
            0.0,
            breaks_hi + rng.random_range(1..6) as f64,
        ),
        weights: Weights {
            duration: weights[0],
            latency: weights[1],
            loudness: weights[2],
            speech_rate: weights[3],
            pitch_variability: weights[4],
            voice_quality: weights[5],
        },
    }
}

fn maybe(rng: &mut StdRng, lo: f64, hi: f64) -> Option<f64> {
    rng.random_bool(0.85).then(|| rng.random_range(lo..hi))
}

fn random_summary(rng: &mut StdRng) -> TurnSummary {
    TurnSummary {
        turn_index: 4,
        response_latency: maybe(rng, -2.0, 10.0),
        speech_duration: rng.random_range(0.0..150.0),
        speech_rate: maybe(rng, 0.0, 15.0),
        mean_loudness: maybe(rng, -90.0, 0.0),
        pitch_mean: maybe(rng, 60.0, 500.0),
        pitch_stdev: maybe(rng, 0.0, 250.0),
        jitter_mean: maybe(rng, 0.0, 0.1),
        shimmer_mean: maybe(rng, 0.0, 0.4),
        hnr_mean: maybe(rng, 0.0, 40.0),
        voice_breaks: rng.random_range(0..20),
        interrupted: rng.random_bool(0.1),
    }
}

fn speaker_baseline() -> Baseline {
    let turns: Vec<TurnSummary> = [-21.0, -23.0, -25.0]
        .iter()
        .enumerate()
        .map(|(i, &db)| TurnSummary {
            mean_loudness: Some(db),
            pitch_mean: Some(140.0 + i as f64),
            speech_duration: 6.0,
            ..TurnSummary::silent(i + 1)
        })
        .collect();
    calibrate(&turns).unwrap()
}

fn centred(p: &ExpectedCueProfile, b: &Baseline, d: f64) -> TurnSummary {
    let mid = |t: &TargetBand| (t.lo + t.hi) / 2.0;
    let dur = (p.duration.lo_base
        + p.duration.lo_slope * d
        + p.duration.hi_base
        + p.duration.hi_slope * d)
        / 2.0;
    TurnSummary {
        turn_index: 4,
        response_latency: Some(mid(&p.latency)),
        speech_duration: dur,
        speech_rate: Some(mid(&p.speech_rate)),
        mean_loudness: Some(b.get(Statistic::MeanLoudness).unwrap().mean),
        pitch_mean: Some(140.0),
        pitch_stdev: Some(mid(&p.pitch_variability)),
        jitter_mean: Some(mid(&p.jitter)),
        shimmer_mean: Some(mid(&p.shimmer)),
        hnr_mean: Some(20.0),
        voice_breaks: p.voice_breaks.lo as u32,
        interrupted: false,
    }
}

fn at_limits(p: &ExpectedCueProfile, b: &Baseline, d: f64) -> TurnSummary {
    let loud = b.get(Statistic::MeanLoudness).unwrap();
    let hi = p.duration.hi_base + p.duration.hi_slope * d;
    TurnSummary {
        response_latency: Some(p.latency.max),
        speech_duration: 2.0 * hi,
        speech_rate: Some(p.speech_rate.max),
        mean_loudness: Some(loud.mean - p.loudness.limit_sigmas * loud.stdev),
        pitch_stdev: Some(p.pitch_variability.max),
        jitter_mean: Some(p.jitter.max),
        shimmer_mean: Some(p.shimmer.max),
        voice_breaks: p.voice_breaks.max as u32,
        ..centred(p, b, d)
    }
}

// 2
fn performance_bounds() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(2);
    let b = speaker_baseline();
    let (mut lowest, mut highest) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..10_000 {
        let p = random_profile(&mut rng);
        let d = rng.random_range(0.0..=1.0);
        let v = compute_performance(&random_summary(&mut rng), &p, Some(&b), d, 2.0).value;
        ensure((-1.0..=1.0).contains(&v), || format!("case {i}: P_d = {v}"))?;
        lowest = lowest.min(v);
        highest = highest.max(v);

        let c = compute_performance(&centred(&p, &b, d), &p, Some(&b), d, 2.0).value;
        ensure(c == 1.0, || format!("case {i}: band centres give {c}"))?;
        let l = compute_performance(&at_limits(&p, &b, d), &p, Some(&b), d, 2.0).value;
        ensure(l == -1.0, || format!("case {i}: hard limits give {l}"))?;
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!("10000 cases, P_d in [{lowest:.3}, {highest:.3}]"))
}

// 3
fn short_answer_to_hard_question() -> Outcome {
    let scenario = Scenario::parse(
        r#"{"topics": ["general"], "entry": "a", "nodes": [
            {"id": "a", "text": "Hello.", "topics": ["general"], "difficulty": 0.1, "next": ["b"]},
            {"id": "b", "text": "Your studies?", "topics": ["general"], "difficulty": 0.2, "next": ["c"]},
            {"id": "c", "text": "Your hobbies?", "topics": ["general"], "difficulty": 0.2, "next": ["hard"]},
            {"id": "hard", "text": "Walk me through your hardest project.", "topics": ["general"], "difficulty": 0.9, "next": []}
        ]}"#,
    )
    .map_err(|e| e.to_string())?;
    let inputs = vec![
        answer(0.7, 8.0, -22.0, 35.0),
        answer(0.8, 10.0, -24.0, 30.0),
        answer(0.6, 9.0, -23.0, 40.0),
        answer(0.7, 0.8, -23.0, 35.0),
    ];
    let log = run_session(
        &SessionConfig::default(),
        &scenario,
        &mut TraceSource::from_vec(inputs),
    )
    .map_err(|e| e.to_string())?;
    let r = &log.records[3];
    ensure(r.node == "hard" && r.summary.speech_duration == 0.8, || {
        format!("turn 4 was {} with {} s", r.node, r.summary.speech_duration)
    })?;
    let dur = r.performance.scores[&Component::Duration];
    // Band for difficulty 0.9 starts at 2 + 8 * 0.9 s, hard limit 0 s.
    let expected = -1.0 + 2.0 * 0.8 / (2.0 + 8.0 * 0.9);
    ensure((dur - expected).abs() < 1e-12, || {
        format!("duration score {dur}, expected {expected}")
    })?;
    ensure(dur <= -0.8, || format!("duration score {dur}"))?;
    ensure(r.performance.value < 0.0, || {
        format!("P_d = {}", r.performance.value)
    })?;
    Ok(format!(
        "duration score {dur:.3}, P_d {:.3}",
        r.performance.value
    ))
}

// 4
fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let scenario = looping_scenario();
    let mut flips = 0;
    for scope in [DesireScope::CurrentTopics, DesireScope::AllTopics] {
        let config = SessionConfig {
            desire_scope: scope,
            ..SessionConfig::default()
        };
        let log = run_session(
            &config,
            &scenario,
            &mut TraceSource::from_vec(scripted_answers(50)),
        )
        .map_err(|e| e.to_string())?;
        ensure(log.records.len() == 50, || {
            format!("{} turns", log.records.len())
        })?;
        let mut oracle = MindOracle::new(scenario.topics().len());
        for r in &log.records {
            let topics: Vec<usize> = scenario
                .node(&r.node)
                .unwrap()
                .topics
                .iter()
                .map(|t| t.0)
                .collect();
            let negative = r.affect.attitudes.polarity == Polarity::Negative;
            flips += negative as usize;
            oracle.turn(
                &topics,
                negative,
                r.performance.value,
                config.personality.alpha,
                scope == DesireScope::AllTopics,
            );
            ensure(
                bits(r.beliefs.0.as_slice()) == bits(&oracle.beliefs),
                || {
                    format!(
                        "{scope:?} turn {}: beliefs {:?} vs {:?}",
                        r.turn,
                        r.beliefs.0.as_slice(),
                        oracle.beliefs
                    )
                },
            )?;
            ensure(
                bits(r.desires.0.as_slice()) == bits(&oracle.desires),
                || {
                    format!(
                        "{scope:?} turn {}: desires {:?} vs {:?}",
                        r.turn,
                        r.desires.0.as_slice(),
                        oracle.desires
                    )
                },
            )?;
        }
    }
    ensure(flips > 0 && flips < 100, || {
        format!("{flips} negative-attitude turns; both branches must run")
    })?;
    within(Duration::from_secs(1), start)?;
    Ok(format!(
        "2 x 50 turns bit-identical, {flips} negative-attitude turns"
    ))
}

fn tone(f0: f64, seconds: f64) -> Vec<f32> {
    (0..(seconds * SR as f64) as usize)
        .map(|i| (0.5 * (2.0 * std::f64::consts::PI * f0 * i as f64 / SR as f64).sin()) as f32)
        .collect()
}

fn voiced_f0(samples: Vec<f32>) -> Result<Vec<f64>, String> {
    let a = analyze_pcm(&PcmAudio::mono(samples, SR), &FeatureConfig::default())
        .map_err(|e| e.to_string())?;
    Ok(a.features
        .iter()
        .filter(|f| f.voiced)
        .filter_map(|f| f.f0_hz)
        .collect())
}

// 5
fn pitch_accuracy() -> Outcome {
    let start = Instant::now();
    let mut worst = 1.0f64;
    for f0 in [80.0, 120.0, 180.0, 250.0, 350.0] {
        let est = voiced_f0(tone(f0, 2.0))?;
        ensure(!est.is_empty(), || format!("{f0} Hz: no voiced frames"))?;
        let good =
            est.iter().filter(|&&f| (f - f0).abs() <= 0.02 * f0).count() as f64 / est.len() as f64;
        ensure(good >= 0.95, || {
            format!("{f0} Hz: {:.1}% within 2%", 100.0 * good)
        })?;
        worst = worst.min(good);
    }
    let period = (SR / 100) as usize;
    let pulses: Vec<f32> = (0..2 * SR as usize)
        .map(|i| if i % period == 0 { 0.8 } else { 0.0 })
        .collect();
    let est = voiced_f0(pulses)?;
    let good = est.iter().filter(|&&f| (f - 100.0).abs() <= 2.0).count();
    ensure(
        !est.is_empty() && good as f64 >= 0.95 * est.len() as f64,
        || format!("pulse train: {good}/{} frames at 100 Hz", est.len()),
    )?;
    within(Duration::from_secs(5), start)?;
    Ok(format!(
        "worst tone {:.1}% within 2%, pulse train {good}/{} at 100 Hz",
        100.0 * worst,
        est.len()
    ))
}

fn sixty_second_wav(dir: &tempfile::TempDir) -> Result<std::path::PathBuf, String> {
    let path = dir.path().join("sixty.wav");
    write_wav(&path, &voice(60.0), SR).map_err(|e| e.to_string())?;
    Ok(path)
}

// 6
fn packet_cadence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pcm = read_wav(&sixty_second_wav(&dir)?).map_err(|e| e.to_string())?;
    let events = extract_cues(&pcm, &FeatureConfig::default(), &CueConfig::default())
        .map_err(|e| e.to_string())?;
    let mut counts = Vec::new();
    for cue in CueKind::CONTINUOUS {
        let n = events
            .iter()
            .filter(|e| e.cue == cue && e.kind == EventKind::Continuous)
            .count();
        ensure((59..=61).contains(&n), || format!("{cue}: {n} packets"))?;
        counts.push(n);
    }
    Ok(format!("packets per cue {:?}", counts))
}

// 7
fn calibration_gate() -> Outcome {
    let scenario = looping_scenario();
    let two = SessionConfig {
        calibration_turns: 2,
        ..SessionConfig::default()
    };
    match run_session(
        &two,
        &scenario,
        &mut TraceSource::from_vec(scripted_answers(10)),
    ) {
        Err(SessionError::Calibration(UserModelError::CalibrationIncomplete(2))) => {}
        other => return Err(format!("k = 2 gave {:?}", other.map(|l| l.records.len()))),
    }
    let log = run_session(
        &SessionConfig::default(),
        &scenario,
        &mut TraceSource::from_vec(scripted_answers(10)),
    )
    .map_err(|e| format!("k = 3 failed: {e}"))?;
    ensure(
        log.records.iter().filter(|r| r.calibration).count() == 3,
        || "wrong calibration count".into(),
    )?;
    Ok("k = 2 rejected, k = 3 runs".into())
}

// 8
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scenario = looping_scenario();
    let config = SessionConfig {
        max_turns: 8,
        ..SessionConfig::default()
    };
    let mut turns = Vec::new();
    for i in 0..6 {
        let mut s = vec![0.0f32; SR as usize];
        s.extend(voice(3.0 + i as f64));
        let name = format!("t{i}.wav");
        write_wav(&dir.path().join(&name), &s, SR).map_err(|e| e.to_string())?;
        turns.push(format!(r#"{{"wav": "{name}", "question_end": 0.7}}"#));
    }
    let manifest = dir.path().join("manifest.json");
    fs::write(&manifest, format!(r#"{{"turns": [{}]}}"#, turns.join(",")))
        .map_err(|e| e.to_string())?;
    let mut logs = Vec::new();
    for i in 0..2 {
        let mut source = AudioSource::spawn(&manifest, &config.features, &config.cues)
            .map_err(|e| e.to_string())?;
        let log = run_session(&config, &scenario, &mut source).map_err(|e| e.to_string())?;
        let out = dir.path().join(format!("run{i}.jsonl"));
        log.write_to(fs::File::create(&out).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        logs.push(fs::read(&out).map_err(|e| e.to_string())?);
    }
    ensure(logs[0] == logs[1], || "logs differ".into())?;
    let a = run_session(
        &SessionConfig::default(),
        &scenario,
        &mut TraceSource::from_vec(scripted_answers(50)),
    );
    let b = run_session(
        &SessionConfig::default(),
        &scenario,
        &mut TraceSource::from_vec(scripted_answers(50)),
    );
    let (a, b) = (a.map_err(|e| e.to_string())?, b.map_err(|e| e.to_string())?);
    ensure(a.to_jsonl() == b.to_jsonl(), || {
        "trace-mode logs differ".into()
    })?;
    Ok(format!(
        "WAV-mode logs identical ({} bytes), trace-mode logs identical",
        logs[0].len()
    ))
}

// 9
fn affect_fuzz() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let in_unit = |x: f64| (0.0..=1.0).contains(&x);
    let mut steps = 0;
    for seq in 0..10_000 {
        let mut traits = AttitudeVector::default();
        for a in Attitude::ALL {
            traits.set(
                a,
                if rng.random_bool(0.5) {
                    0.0
                } else {
                    rng.random_range(0.0..=1.0)
                },
            );
        }
        let personality = Personality {
            traits,
            alpha: rng.random_range(0.0..=1.0),
        };
        let mut core = AffectCore::new(personality).map_err(|e| e.to_string())?;
        for _ in 0..rng.random_range(1..40) {
            let (p_d, p_e) = (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
            let s = core.step(p_d, p_e).map_err(|e| e.to_string())?;
            steps += 1;
            let bad_emotion = s.emotions.iter().find(|(_, v)| !in_unit(*v));
            ensure(bad_emotion.is_none(), || {
                format!("sequence {seq}: {bad_emotion:?}")
            })?;
            ensure(in_unit(s.mood.intensity), || {
                format!("sequence {seq}: mood {}", s.mood.intensity)
            })?;
            ensure(s.mood.pad.dominance >= 0.0, || {
                format!("sequence {seq}: dominance {}", s.mood.pad.dominance)
            })?;
            for a in Attitude::ALL {
                let v = s.attitudes.intensities.get(a);
                ensure(in_unit(v), || format!("sequence {seq}: {a:?} = {v}"))?;
            }
        }
    }
    Ok(format!("10000 sequences, {steps} turns"))
}

// 10
fn throughput() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = sixty_second_wav(&dir)?;
    let start = Instant::now();
    let pcm = read_wav(&path).map_err(|e| e.to_string())?;
    extract_cues(&pcm, &FeatureConfig::default(), &CueConfig::default())
        .map_err(|e| e.to_string())?;
    let speed = 60.0 / start.elapsed().as_secs_f64();
    ensure(speed >= 5.0, || format!("{speed:.1}x real time"))?;
    Ok(format!("{speed:.0}x real time"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("five-cycle mood calibration", five_cycle_mood),
        ("performance index bounds", performance_bounds),
        (
            "short answer to a hard question",
            short_answer_to_hard_question,
        ),
        ("belief/desire oracle equivalence", oracle_equivalence),
        ("pitch accuracy", pitch_accuracy),
        ("continuous cue cadence", packet_cadence),
        ("calibration gate", calibration_gate),
        ("byte-identical session logs", determinism),
        ("affect range fuzz", affect_fuzz),
        ("extraction throughput", throughput),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({took:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({took:.2?}): {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
