//! Real-time affective job-interview pipeline.
//!
//! Audio social cues are extracted from the interviewee's speech
//! ([`audio`], [`cues`]), condensed into a per-turn communicative
//! performance index ([`user_model`]) and fed to a virtual recruiter whose
//! emotions, mood and attitudes ([`affect`]) and beliefs and desires about
//! the interviewee ([`tom`]) drive the choice of the next question in an
//! interview [`scenario`]. [`session`] runs the whole loop and writes
//! replayable logs.

pub mod affect;
pub mod audio;
pub mod cues;
pub mod scenario;
pub mod session;
pub mod tom;
pub mod user_model;
