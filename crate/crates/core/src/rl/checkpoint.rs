use super::{PolicyParams, PpoConfig, RlError};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_FORMAT: &str = "restpilot-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub num_actions: usize,
    pub hidden: usize,
    pub config: PpoConfig,
    /// All weights, policy network first, as produced by [`PolicyParams::to_flat`].
    pub weights: Vec<f64>,
}

impl Checkpoint {
    pub fn capture(params: &PolicyParams, config: &PpoConfig) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            num_actions: params.num_actions(),
            hidden: params.hidden(),
            config: config.clone(),
            weights: params.to_flat(),
        }
    }

    /// Rebuilds parameters, rejecting a header or weight count that does not
    /// match the expected action count.
    pub fn restore(&self, num_actions: usize) -> Result<PolicyParams, RlError> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(RlError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        if self.num_actions != num_actions {
            return Err(RlError::ShapeMismatch {
                expected: num_actions,
                found: self.num_actions,
            });
        }
        let mut params = template(num_actions, self.hidden);
        params.set_flat(&self.weights)?;
        params.check_shapes(num_actions)?;
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<(), RlError> {
        let text = serde_json::to_string(self).map_err(|e| RlError::Checkpoint(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| RlError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RlError> {
        let text = std::fs::read(path).map_err(|e| RlError::Checkpoint(e.to_string()))?;
        serde_json::from_slice(&text).map_err(|e| RlError::Checkpoint(e.to_string()))
    }
}

fn template(num_actions: usize, hidden: usize) -> PolicyParams {
    use super::network::{Dense, Mlp};
    let net = |out: usize| Mlp {
        layers: vec![
            Dense::zeros(num_actions, hidden),
            Dense::zeros(hidden, hidden),
            Dense::zeros(hidden, out),
        ],
    };
    PolicyParams {
        policy: net(num_actions),
        value: net(1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_and_rejection() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = PolicyParams::new(3, 16, &mut rng);
        let ck = Checkpoint::capture(&params, &PpoConfig::default());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        ck.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded.restore(3).unwrap(), params);
        assert!(matches!(loaded.restore(4), Err(RlError::ShapeMismatch { .. })));

        let mut truncated = loaded.clone();
        truncated.weights.pop();
        assert!(truncated.restore(3).is_err());
        let mut wrong = loaded;
        wrong.version = 99;
        assert!(matches!(wrong.restore(3), Err(RlError::Checkpoint(_))));
    }
}
