use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

use super::optim::{AdamW, OptimizerState};
use super::{init_params, ArchConfig, Discriminator, Generator, ParamSet};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Both networks with their optimizer states and the number of completed
/// epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub arch: ArchConfig,
    pub epoch: usize,
    pub generator: Generator,
    pub discriminator: Discriminator,
    pub gen_opt: OptimizerState,
    pub dis_opt: OptimizerState,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoredTensor {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Stored {
    version: u32,
    arch: ArchConfig,
    epoch: usize,
    generator: Vec<StoredTensor>,
    discriminator: Vec<StoredTensor>,
    gen_opt: OptimizerState,
    dis_opt: OptimizerState,
}

fn store(p: &ParamSet) -> Vec<StoredTensor> {
    p.names
        .iter()
        .zip(&p.tensors)
        .map(|(name, t)| StoredTensor {
            name: name.clone(),
            rows: t.rows(),
            cols: t.cols(),
            data: t.data().to_vec(),
        })
        .collect()
}

fn restore(stored: Vec<StoredTensor>) -> Result<ParamSet> {
    let mut p = ParamSet::new();
    for s in stored {
        let t = Tensor::new(s.rows, s.cols, s.data).map_err(|e| Error::Parse(format!("tensor {}: {e}", s.name)))?;
        p.push(s.name, t);
    }
    if !p.is_finite() {
        return Err(Error::Validation("checkpoint holds non-finite parameters".into()));
    }
    Ok(p)
}

fn check_opt(opt: &OptimizerState, params: &ParamSet, which: &str) -> Result<()> {
    let shapes_ok = opt.m.len() == params.len()
        && opt.v.len() == params.len()
        && params
            .tensors
            .iter()
            .zip(opt.m.iter().zip(&opt.v))
            .all(|(t, (m, v))| m.len() == t.data().len() && v.len() == t.data().len());
    if !shapes_ok {
        return Err(Error::Validation(format!("{which} optimizer state does not match its parameters")));
    }
    if !opt.is_finite() {
        return Err(Error::Validation(format!("{which} optimizer state is not finite")));
    }
    opt.hyper.validate()
}

impl ModelState {
    /// Freshly initialized networks and optimizers.
    pub fn new(arch: ArchConfig, opt: AdamW, seed: u64) -> Result<Self> {
        opt.validate()?;
        let (generator, discriminator) = init_params(&arch, seed)?;
        Ok(ModelState {
            arch,
            epoch: 0,
            gen_opt: opt.state_for(&generator.params),
            dis_opt: opt.state_for(&discriminator.params),
            generator,
            discriminator,
        })
    }

    pub fn to_json(&self) -> String {
        let stored = Stored {
            version: CHECKPOINT_VERSION,
            arch: self.arch,
            epoch: self.epoch,
            generator: store(&self.generator.params),
            discriminator: store(&self.discriminator.params),
            gen_opt: self.gen_opt.clone(),
            dis_opt: self.dis_opt.clone(),
        };
        let mut text = serde_json::to_string(&stored).expect("checkpoint serializes");
        text.push('\n');
        text
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let stored: Stored = serde_json::from_str(text).map_err(|e| Error::Parse(format!("checkpoint: {e}")))?;
        if stored.version != CHECKPOINT_VERSION {
            return Err(Error::Validation(format!("unsupported checkpoint version {}", stored.version)));
        }
        stored.arch.validate()?;
        let generator = Generator::from_params(&stored.arch, restore(stored.generator)?)?;
        let discriminator = Discriminator::from_params(&stored.arch, restore(stored.discriminator)?)?;
        check_opt(&stored.gen_opt, &generator.params, "generator")?;
        check_opt(&stored.dis_opt, &discriminator.params, "discriminator")?;
        Ok(ModelState {
            arch: stored.arch,
            epoch: stored.epoch,
            generator,
            discriminator,
            gen_opt: stored.gen_opt,
            dis_opt: stored.dis_opt,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_byte_stable() {
        let mut s = ModelState::new(ArchConfig::desk(), AdamW::default(), 5).unwrap();
        s.epoch = 7;
        s.gen_opt.m[0][0] = 1.0 / 3.0;
        s.gen_opt.step = 3;
        s.gen_opt.decay_lr();
        let text = s.to_json();
        let back = ModelState::parse_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn rejects_mismatched_architecture() {
        let s = ModelState::new(ArchConfig::desk(), AdamW::default(), 5).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        v["arch"]["gen_layers"] = 5.into();
        assert!(matches!(ModelState::parse_json(&v.to_string()), Err(Error::Validation(_))));
        v["arch"]["gen_layers"] = 6.into();
        v["version"] = 99.into();
        assert!(ModelState::parse_json(&v.to_string()).is_err());
        assert!(matches!(ModelState::parse_json("{"), Err(Error::Parse(_))));
    }
}
