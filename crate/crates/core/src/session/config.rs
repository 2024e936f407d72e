use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::affect::Personality;
use crate::audio::FeatureConfig;
use crate::cues::{CueConfig, DiscreteEmitter};
use crate::tom::DesireScope;
use crate::user_model::{
    ExpectedCueProfile, ProfileOverrides, UserModelError, DEFAULT_PEAK_Z, MIN_CALIBRATION_TURNS,
};

/// Session parameters, read from TOML. Every key is optional.
///
/// ```toml
/// calibration_turns = 3
/// max_turns = 50
/// desire_scope = "current_topics"
///
/// [personality]
/// alpha = 0.5
/// traits = { friendly = 0.4 }
///
/// [cues.thresholds]
/// loudness = 0.6
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// Turns used to build the speaker baseline before scoring starts.
    pub calibration_turns: usize,
    pub max_turns: usize,
    /// Reserved; the pipeline has no random choices.
    pub seed: u64,
    pub peak_z: f64,
    pub desire_scope: DesireScope,
    pub features: FeatureConfig,
    pub cues: CueConfig,
    pub profile: ProfileOverrides,
    pub personality: Personality,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            calibration_turns: MIN_CALIBRATION_TURNS,
            max_turns: 50,
            seed: 0,
            peak_z: DEFAULT_PEAK_Z,
            desire_scope: DesireScope::default(),
            features: FeatureConfig::default(),
            cues: CueConfig::default(),
            profile: ProfileOverrides::default(),
            personality: Personality::default(),
        }
    }
}

impl SessionConfig {
    pub fn from_toml(text: &str) -> Result<Self, SessionError> {
        toml::from_str(text).map_err(|e| SessionError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path).map_err(|e| SessionError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn base_profile(&self) -> ExpectedCueProfile {
        ExpectedCueProfile::default().with(&self.profile)
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if self.calibration_turns < MIN_CALIBRATION_TURNS {
            return Err(SessionError::Calibration(
                UserModelError::CalibrationIncomplete(self.calibration_turns),
            ));
        }
        if self.max_turns == 0 {
            return Err(SessionError::Config("max_turns must be at least 1".into()));
        }
        if !(self.peak_z.is_finite() && self.peak_z > 0.0) {
            return Err(SessionError::Config(format!(
                "peak_z must be positive, got {}",
                self.peak_z
            )));
        }
        self.features
            .validate()
            .map_err(|e| SessionError::Config(e.to_string()))?;
        DiscreteEmitter::new(&self.features, &self.cues)
            .map_err(|e| SessionError::Config(e.to_string()))?;
        self.base_profile()
            .validate()
            .map_err(|e| SessionError::Config(e.to_string()))?;
        self.personality
            .validate()
            .map_err(|e| SessionError::Config(e.to_string()))
    }
}
