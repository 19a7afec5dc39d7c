use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::dqn::QNetwork;
use super::nn::Mlp;
use super::policy::{Policy, PolicyNetwork};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "onramp-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ppo,
    Dqn,
}

/// Finished-episode summary kept for the rolling training reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStat {
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub length: u64,
    pub crashed: bool,
}

/// Everything needed to evaluate a policy or resume training. Serialised as
/// JSON with shortest round-trip float formatting, so reload is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub timestep: u64,
    pub updates: u64,
    pub n_actions: usize,
    /// `(outputs, inputs)` per layer; weights are row-major `outputs × inputs`.
    pub layer_shapes: Vec<[usize; 2]>,
    pub network: Mlp,
    pub optimizer: Option<Adam>,
    /// DQN target network.
    pub target: Option<Mlp>,
    pub recent_episodes: Vec<EpisodeStat>,
    /// Trainer configuration as written at save time.
    pub config: serde_json::Value,
}

impl Checkpoint {
    pub fn new(algorithm: Algorithm, network: Mlp, n_actions: usize) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            algorithm,
            seed: 0,
            timestep: 0,
            updates: 0,
            n_actions,
            layer_shapes: network.shapes(),
            network,
            optimizer: None,
            target: None,
            recent_episodes: Vec::new(),
            config: serde_json::Value::Null,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let format = raw
            .get("format")
            .and_then(|v| v.as_str())
            .unwrap_or("<missing>");
        let version = raw.get("version").and_then(|v| v.as_u64());
        if format != CHECKPOINT_FORMAT || version != Some(CHECKPOINT_VERSION as u64) {
            return Err(Error::CheckpointFormat {
                expected: format!("{CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}"),
                found: match version {
                    Some(v) => format!("{format} v{v}"),
                    None => format!("{format} v<missing>"),
                },
            });
        }
        let ckpt: Checkpoint = serde_json::from_value(raw)?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("corrupt checkpoint: {m}")));
        if self.network.shapes() != self.layer_shapes {
            return bad("layer shapes disagree with weights".into());
        }
        for (l, layer) in self.network.layers.iter().enumerate() {
            if layer.weights.len() != layer.inputs * layer.outputs
                || layer.biases.len() != layer.outputs
            {
                return bad(format!("layer {l} has the wrong number of parameters"));
            }
            if l > 0 && self.network.layers[l - 1].outputs != layer.inputs {
                return bad(format!(
                    "layer {l} input width does not match layer {}",
                    l - 1
                ));
            }
        }
        let expected_out = match self.algorithm {
            Algorithm::Ppo => self.n_actions + 1,
            Algorithm::Dqn => self.n_actions,
        };
        if self.network.output_size() != expected_out {
            return bad(format!(
                "output width {} does not fit {} actions",
                self.network.output_size(),
                self.n_actions
            ));
        }
        if !self.network.is_finite() {
            return bad("non-finite weights".into());
        }
        Ok(())
    }

    /// The greedy policy stored in this checkpoint.
    pub fn policy(&self) -> Box<dyn Policy + Send> {
        match self.algorithm {
            Algorithm::Ppo => Box::new(PolicyNetwork {
                mlp: self.network.clone(),
                n_actions: self.n_actions,
            }),
            Algorithm::Dqn => Box::new(QNetwork {
                mlp: self.network.clone(),
            }),
        }
    }

    pub fn observation_dim(&self) -> usize {
        self.network.input_size()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(seed in any::<u64>(), scale in 1e-300f64..1e300) {
            let mut net = PolicyNetwork::new(5, 3, &mut ChaCha8Rng::seed_from_u64(seed));
            net.mlp.layers[0].weights[0] *= scale;
            net.mlp.layers[1].biases[0] = 1.0 / 3.0;
            let mut ckpt = Checkpoint::new(Algorithm::Ppo, net.mlp.clone(), 3);
            ckpt.optimizer = Some(Adam::new(&net.mlp, 3e-4));
            let back = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
            for (a, b) in ckpt.network.params().zip(back.network.params()) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            prop_assert_eq!(back, ckpt);
        }
    }

    #[test]
    fn version_mismatch_is_reported() {
        let ckpt = Checkpoint::new(Algorithm::Ppo, Mlp::zeros(&[2, 3]), 2);
        let text = ckpt
            .to_json()
            .unwrap()
            .replace("\"version\":1", "\"version\":7");
        match Checkpoint::from_json(&text) {
            Err(Error::CheckpointFormat { expected, found }) => {
                assert_eq!(expected, "onramp-checkpoint v1");
                assert_eq!(found, "onramp-checkpoint v7");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut ckpt = Checkpoint::new(Algorithm::Ppo, Mlp::zeros(&[2, 3]), 2);
        ckpt.layer_shapes = vec![[4, 2]];
        assert!(Checkpoint::from_json(&ckpt.to_json().unwrap()).is_err());
    }
}
