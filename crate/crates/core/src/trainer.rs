//! Relativistic adversarial losses and the self-challenging training loop.

use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::autodiff::{softplus, Tape, Tensor, Var};
use crate::collection::LayoutCollection;
use crate::criteria::{evaluate, CriterionId, CriterionSpec, CriterionValue};
use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::geometry::{canonicalize, Layout};
use crate::neural::{
    discriminator_apply, generate, generator_apply, AdamW, ArchConfig, ModelState, ParamSet, DEFAULT_LR,
    DEFAULT_LR_DECAY, DEFAULT_WEIGHT_DECAY,
};
use crate::rng;

/// Discriminator loss `-ln sigmoid(score_r - score_f)`.
pub fn rgan_d_loss(score_r: f64, score_f: f64) -> f64 {
    softplus(score_f - score_r)
}

/// Generator loss `-ln sigmoid(score_f - score_r)`.
pub fn rgan_g_loss(score_r: f64, score_f: f64) -> f64 {
    rgan_d_loss(score_f, score_r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bootstrap {
    /// Start from a prepared collection.
    Collection,
    /// Start from the untrained generator's own layouts.
    #[serde(rename = "self")]
    SelfGenerated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Replacement {
    StrictImprove,
}

/// Training settings. The JSON form also carries the architecture fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub minibatch_size: usize,
    /// Minibatches per phase; `None` means one pass over the dataset.
    pub d_steps_per_epoch: Option<usize>,
    pub lr: f64,
    pub lr_decay: f64,
    pub weight_decay: f64,
    pub seed: u64,
    pub criterion: CriterionSpec,
    pub bootstrap: Bootstrap,
    pub replacement: Replacement,
    pub self_challenge: bool,
    /// Write a checkpoint every this many epochs (0 disables intermediate
    /// checkpoints; the final one is always written).
    pub checkpoint_every: usize,
    pub gen_layers: usize,
    pub gen_dim: usize,
    pub dis_layers: usize,
    pub dis_dim: usize,
    pub leaky_slope: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let arch = ArchConfig::desk();
        TrainConfig {
            epochs: 200,
            minibatch_size: 16,
            d_steps_per_epoch: None,
            lr: DEFAULT_LR,
            lr_decay: DEFAULT_LR_DECAY,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            seed: 0,
            criterion: CriterionSpec::single(CriterionId::Stress),
            bootstrap: Bootstrap::Collection,
            replacement: Replacement::StrictImprove,
            self_challenge: true,
            checkpoint_every: 10,
            gen_layers: arch.gen_layers,
            gen_dim: arch.gen_dim,
            dis_layers: arch.dis_layers,
            dis_dim: arch.dis_dim,
            leaky_slope: arch.leaky_slope,
        }
    }
}

impl TrainConfig {
    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            gen_layers: self.gen_layers,
            gen_dim: self.gen_dim,
            dis_layers: self.dis_layers,
            dis_dim: self.dis_dim,
            leaky_slope: self.leaky_slope,
        }
    }

    pub fn set_arch(&mut self, arch: ArchConfig) {
        self.gen_layers = arch.gen_layers;
        self.gen_dim = arch.gen_dim;
        self.dis_layers = arch.dis_layers;
        self.dis_dim = arch.dis_dim;
        self.leaky_slope = arch.leaky_slope;
    }

    pub fn optimizer(&self) -> AdamW {
        AdamW {
            lr: self.lr,
            lr_decay: self.lr_decay,
            weight_decay: self.weight_decay,
            ..AdamW::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.minibatch_size == 0 {
            return Err(Error::Validation("minibatch_size must be positive".into()));
        }
        self.arch().validate()?;
        self.optimizer().validate()
    }

    /// Minibatches per phase for a dataset of `n` graphs.
    pub fn steps_per_phase(&self, n: usize) -> usize {
        self.d_steps_per_epoch.unwrap_or_else(|| n.div_ceil(self.minibatch_size))
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text).map_err(|e| Error::Parse(format!("train config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// One row of the training history. Epoch 0 describes the state before
/// any update and has no losses.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub d_loss: Option<f64>,
    pub g_loss: Option<f64>,
    pub d_minibatch_losses: Vec<f64>,
    pub g_minibatch_losses: Vec<f64>,
    pub mean_collection_value: f64,
    pub mean_generated_value: f64,
    pub mean_generated_stress: f64,
    pub replacements: usize,
    pub lr: f64,
    /// Stored value per graph, in dataset order.
    pub collection_values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub records: Vec<EpochRecord>,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,d_loss,g_loss,mean_collection_value,mean_generated_value,replacements,lr\n");
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.epoch,
                opt(r.d_loss),
                opt(r.g_loss),
                r.mean_collection_value,
                r.mean_generated_value,
                r.replacements,
                r.lr
            ));
        }
        out
    }
}

/// Generated layouts of one self-challenging pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ChallengeOutcome {
    pub replacements: usize,
    pub mean_generated_value: f64,
    pub mean_generated_stress: f64,
    /// Graphs whose generation or evaluation failed, with the reason.
    pub failures: Vec<(String, String)>,
}

fn losses_mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn add_into(acc: &mut [Tensor], grads: &crate::autodiff::Gradients, vars: &[Var]) {
    for (a, &v) in acc.iter_mut().zip(vars) {
        if let Some(g) = grads.get(v) {
            for (x, y) in a.data_mut().iter_mut().zip(g.data()) {
                *x += y;
            }
        }
    }
}

fn zeros_like(p: &ParamSet) -> Vec<Tensor> {
    p.tensors.iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect()
}

fn scale_all(acc: &mut [Tensor], f: f64) {
    for t in acc {
        t.data_mut().iter_mut().for_each(|v| *v *= f);
    }
}

fn layout_constant(tape: &mut Tape, x: &Layout) -> Result<Var> {
    Ok(tape.constant(Tensor::new(x.len(), 2, x.to_flat())?))
}

/// One discriminator minibatch: generator frozen, fresh fakes.
fn d_minibatch(state: &mut ModelState, collection: &LayoutCollection, batch: &[&Sample], epoch: usize) -> Result<f64> {
    let mut acc = zeros_like(&state.discriminator.params);
    let mut total = 0.0;
    for s in batch {
        let real = &collection.entries[&s.id].layout;
        let mut tape = Tape::new();
        let gvars = state.generator.params.bind(&mut tape, false);
        let fake = generator_apply(&state.generator, &gvars, &s.graph, &s.init, &mut tape)?;
        let dvars = state.discriminator.params.bind(&mut tape, true);
        let xr = layout_constant(&mut tape, real)?;
        let sr = discriminator_apply(&state.discriminator, &dvars, &s.graph, &s.distances, xr, &mut tape)?;
        let sf = discriminator_apply(&state.discriminator, &dvars, &s.graph, &s.distances, fake, &mut tape)?;
        let diff = tape.sub(sf, sr)?;
        let loss = tape.softplus(diff);
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                what: format!("discriminator loss on graph {}", s.id),
            });
        }
        total += value;
        add_into(&mut acc, &tape.backward(loss)?, &dvars);
    }
    scale_all(&mut acc, 1.0 / batch.len() as f64);
    state.dis_opt.step(&mut state.discriminator.params, &acc)?;
    Ok(total / batch.len() as f64)
}

/// One generator minibatch: discriminator frozen.
fn g_minibatch(state: &mut ModelState, collection: &LayoutCollection, batch: &[&Sample], epoch: usize) -> Result<f64> {
    let mut acc = zeros_like(&state.generator.params);
    let mut total = 0.0;
    for s in batch {
        let real = &collection.entries[&s.id].layout;
        let mut tape = Tape::new();
        let gvars = state.generator.params.bind(&mut tape, true);
        let fake = generator_apply(&state.generator, &gvars, &s.graph, &s.init, &mut tape)?;
        let dvars = state.discriminator.params.bind(&mut tape, false);
        let xr = layout_constant(&mut tape, real)?;
        let sr = discriminator_apply(&state.discriminator, &dvars, &s.graph, &s.distances, xr, &mut tape)?;
        let sf = discriminator_apply(&state.discriminator, &dvars, &s.graph, &s.distances, fake, &mut tape)?;
        let diff = tape.sub(sr, sf)?;
        let loss = tape.softplus(diff);
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                what: format!("generator loss on graph {}", s.id),
            });
        }
        total += value;
        add_into(&mut acc, &tape.backward(loss)?, &gvars);
    }
    scale_all(&mut acc, 1.0 / batch.len() as f64);
    state.gen_opt.step(&mut state.generator.params, &acc)?;
    Ok(total / batch.len() as f64)
}

fn minibatches<'a>(samples: &'a [Sample], k: usize, m: usize, seed: u64, tag: &str, epoch: usize) -> Vec<Vec<&'a Sample>> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng::rng_for(seed, tag, epoch as u64));
    let size = m.min(samples.len());
    (0..k)
        .map(|j| (0..size).map(|i| &samples[order[(j * size + i) % samples.len()]]).collect())
        .collect()
}

/// Per-minibatch losses of one epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochLosses {
    pub d: Vec<f64>,
    pub g: Vec<f64>,
}

/// Discriminator phase, then generator phase, then one learning-rate decay.
/// `state.epoch` is the number of completed epochs and selects the
/// minibatch shuffle. On error the state is left as it was.
pub fn train_epoch(
    state: &mut ModelState,
    collection: &LayoutCollection,
    cfg: &TrainConfig,
    samples: &[Sample],
) -> Result<EpochLosses> {
    if samples.is_empty() {
        return Err(Error::Validation("empty training set".into()));
    }
    collection.covers(samples)?;
    let epoch = state.epoch + 1;
    let k = cfg.steps_per_phase(samples.len());
    let mut next = state.clone();
    let mut losses = EpochLosses::default();
    for batch in minibatches(samples, k, cfg.minibatch_size, cfg.seed, "minibatch-d", epoch) {
        losses.d.push(d_minibatch(&mut next, collection, &batch, epoch)?);
    }
    for batch in minibatches(samples, k, cfg.minibatch_size, cfg.seed, "minibatch-g", epoch) {
        losses.g.push(g_minibatch(&mut next, collection, &batch, epoch)?);
    }
    next.gen_opt.decay_lr();
    next.dis_opt.decay_lr();
    next.epoch = epoch;
    *state = next;
    Ok(losses)
}

fn generated(state: &ModelState, s: &Sample, spec: &CriterionSpec) -> Result<(Layout, CriterionValue)> {
    let x = generate(&state.generator, &s.graph, &s.distances, &s.init)?;
    let v = evaluate(spec, &x, &s.graph, &s.distances, Some(&s.init))?;
    Ok((x, v))
}

fn mean_of(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Generates a layout per graph and, when `replace` is set, swaps it in
/// wherever it strictly beats the stored one.
pub fn self_challenge_update(
    collection: &mut LayoutCollection,
    state: &ModelState,
    samples: &[Sample],
    replace: bool,
) -> Result<ChallengeOutcome> {
    let spec = collection.criterion.clone();
    let mut values = Vec::with_capacity(samples.len());
    let mut stresses = Vec::with_capacity(samples.len());
    let mut failures = Vec::new();
    let mut replacements = 0;
    for s in samples {
        match generated(state, s, &spec) {
            Ok((x, v)) => {
                values.push(v.value);
                stresses.push(v.stress);
                if replace && collection.offer(&s.id, x, v, format!("generator@epoch {}", state.epoch)) {
                    replacements += 1;
                }
            }
            Err(e) => failures.push((s.id.clone(), e.to_string())),
        }
    }
    Ok(ChallengeOutcome {
        replacements,
        mean_generated_value: mean_of(&values),
        mean_generated_stress: mean_of(&stresses),
        failures,
    })
}

/// Collection made of the generator's own canonical layouts.
pub fn bootstrap_collection(state: &ModelState, samples: &[Sample], spec: &CriterionSpec) -> Result<LayoutCollection> {
    let mut collection = LayoutCollection::new(spec.clone(), Default::default());
    for s in samples {
        let (x, v) = match generated(state, s, spec) {
            Ok(r) => r,
            // a collapsed generator output falls back to the initial layout
            Err(Error::DegenerateLayout(_)) => {
                let x = canonicalize(&s.init, &s.distances)?;
                let v = evaluate(spec, &x, &s.graph, &s.distances, Some(&s.init))?;
                (x, v)
            }
            Err(e) => return Err(e),
        };
        collection.offer(&s.id, x, v, format!("generator@epoch {}", state.epoch));
    }
    Ok(collection)
}

pub struct TrainOutcome {
    pub state: ModelState,
    pub history: History,
    pub collection: LayoutCollection,
}

/// File names inside a training output directory.
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const COLLECTION_FILE: &str = "collection.json";

fn record(
    epoch: usize,
    losses: Option<&EpochLosses>,
    collection: &LayoutCollection,
    samples: &[Sample],
    outcome: &ChallengeOutcome,
    lr: f64,
) -> EpochRecord {
    EpochRecord {
        epoch,
        d_loss: losses.and_then(|l| losses_mean(&l.d)),
        g_loss: losses.and_then(|l| losses_mean(&l.g)),
        d_minibatch_losses: losses.map(|l| l.d.clone()).unwrap_or_default(),
        g_minibatch_losses: losses.map(|l| l.g.clone()).unwrap_or_default(),
        mean_collection_value: collection.mean_value(),
        mean_generated_value: outcome.mean_generated_value,
        mean_generated_stress: outcome.mean_generated_stress,
        replacements: outcome.replacements,
        lr,
        collection_values: samples.iter().map(|s| collection.entries[&s.id].value.value).collect(),
    }
}

fn write_outputs(out: &Path, state: &ModelState, history: &History, collection: &LayoutCollection) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    state.save(out.join(CHECKPOINT_FILE))?;
    write_atomic(out.join(HISTORY_FILE), history.to_csv())?;
    collection.save(out.join(COLLECTION_FILE))
}

/// Full training run. With `bootstrap = collection` an initial collection
/// is required; its values are recomputed under `cfg.criterion`. When
/// `out` is given, checkpoint, history and collection are written there at
/// the configured cadence and at the end, including after a failed epoch.
pub fn train(
    cfg: &TrainConfig,
    samples: &[Sample],
    initial: Option<LayoutCollection>,
    out: Option<&Path>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::Validation("empty training set".into()));
    }
    let mut state = ModelState::new(cfg.arch(), cfg.optimizer(), cfg.seed)?;
    let mut collection = match cfg.bootstrap {
        Bootstrap::Collection => {
            let c = initial.ok_or(Error::MissingInitialLayout)?;
            c.covers(samples)?;
            c.reevaluated(&cfg.criterion, samples)?
        }
        Bootstrap::SelfGenerated => bootstrap_collection(&state, samples, &cfg.criterion)?,
    };
    let mut history = History::default();
    let start = self_challenge_update(&mut collection, &state, samples, false)?;
    history.records.push(record(0, None, &collection, samples, &start, state.gen_opt.lr));

    for epoch in 1..=cfg.epochs {
        let losses = match train_epoch(&mut state, &collection, cfg, samples) {
            Ok(l) => l,
            Err(e) => {
                if let Some(dir) = out {
                    write_outputs(dir, &state, &history, &collection)?;
                }
                return Err(e);
            }
        };
        let outcome = self_challenge_update(&mut collection, &state, samples, cfg.self_challenge)?;
        history.records.push(record(epoch, Some(&losses), &collection, samples, &outcome, state.gen_opt.lr));
        if let Some(dir) = out {
            if cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 && epoch != cfg.epochs {
                write_outputs(dir, &state, &history, &collection)?;
            }
        }
    }
    if let Some(dir) = out {
        write_outputs(dir, &state, &history, &collection)?;
    }
    Ok(TrainOutcome {
        state,
        history,
        collection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::random_layout;
    use crate::graph::random_graph;

    fn dataset(count: usize, seed: u64) -> Vec<Sample> {
        (0..count)
            .map(|i| {
                let g = random_graph(8, 12, 0.3, seed + i as u64).unwrap();
                Sample::new(format!("g{i}"), g).unwrap()
            })
            .collect()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            minibatch_size: 3,
            seed: 11,
            bootstrap: Bootstrap::SelfGenerated,
            gen_layers: 2,
            dis_layers: 2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn losses_at_equal_scores_are_ln2() {
        for a in [-3.0, 0.0, 2.5, 1e3] {
            assert!((rgan_d_loss(a, a) - std::f64::consts::LN_2).abs() < 1e-12);
            assert!((rgan_g_loss(a, a) - std::f64::consts::LN_2).abs() < 1e-12);
        }
        assert!((rgan_d_loss(20.0, 0.0) - 2.061_153_620_314_380_7e-9).abs() < 1e-20);
    }

    #[test]
    fn losses_match_direct_formula_and_are_symmetric() {
        let mut r = rng::rng_from_seed(4);
        use rand::Rng as _;
        for _ in 0..1000 {
            let a: f64 = r.gen_range(-15.0..15.0);
            let b: f64 = r.gen_range(-15.0..15.0);
            let direct = -(1.0 / (1.0 + (-(a - b)).exp())).ln();
            assert!((rgan_d_loss(a, b) - direct).abs() < 1e-12);
            assert_eq!(rgan_g_loss(a, b), rgan_d_loss(b, a));
        }
        for gap in [1e4, -1e4] {
            assert!(rgan_d_loss(gap, 0.0).is_finite() && rgan_g_loss(gap, 0.0).is_finite());
        }
    }

    #[test]
    fn generator_loss_gradient_wrt_fake_score() {
        let (r, f) = (0.7, -0.4);
        let h = 1e-6;
        let fd = (rgan_g_loss(r, f + h) - rgan_g_loss(r, f - h)) / (2.0 * h);
        let expected = -crate::autodiff::sigmoid(r - f);
        assert!((fd - expected).abs() < 1e-8);
    }

    #[test]
    fn zero_steps_leave_parameters_unchanged() {
        let samples = dataset(4, 1);
        let cfg = TrainConfig {
            d_steps_per_epoch: Some(0),
            ..small_cfg()
        };
        let mut state = ModelState::new(cfg.arch(), cfg.optimizer(), cfg.seed).unwrap();
        let collection = bootstrap_collection(&state, &samples, &cfg.criterion).unwrap();
        let before = state.clone();
        train_epoch(&mut state, &collection, &cfg, &samples).unwrap();
        assert_eq!(state.generator.params.bits(), before.generator.params.bits());
        assert_eq!(state.discriminator.params.bits(), before.discriminator.params.bits());
    }

    #[test]
    fn phases_freeze_the_other_network() {
        let samples = dataset(4, 2);
        let cfg = small_cfg();
        let state = ModelState::new(cfg.arch(), cfg.optimizer(), cfg.seed).unwrap();
        let collection = bootstrap_collection(&state, &samples, &cfg.criterion).unwrap();
        let batch: Vec<&Sample> = samples.iter().collect();

        let mut s = state.clone();
        d_minibatch(&mut s, &collection, &batch, 1).unwrap();
        assert_eq!(s.generator.params.bits(), state.generator.params.bits());
        assert_ne!(s.discriminator.params.bits(), state.discriminator.params.bits());

        let mut s = state.clone();
        g_minibatch(&mut s, &collection, &batch, 1).unwrap();
        assert_eq!(s.discriminator.params.bits(), state.discriminator.params.bits());
        assert_ne!(s.generator.params.bits(), state.generator.params.bits());
    }

    #[test]
    fn epoch_is_deterministic() {
        let samples = dataset(5, 3);
        let cfg = small_cfg();
        let state = ModelState::new(cfg.arch(), cfg.optimizer(), cfg.seed).unwrap();
        let collection = bootstrap_collection(&state, &samples, &cfg.criterion).unwrap();
        let mut a = state.clone();
        let mut b = state.clone();
        let la = train_epoch(&mut a, &collection, &cfg, &samples).unwrap();
        let lb = train_epoch(&mut b, &collection, &cfg, &samples).unwrap();
        assert_eq!(a, b);
        assert_eq!(la, lb);
        assert_eq!(a.epoch, 1);
        assert!((a.gen_opt.lr - cfg.lr * cfg.lr_decay).abs() < 1e-18);
    }

    #[test]
    fn worse_generated_layouts_are_not_stored() {
        let samples = dataset(4, 4);
        let cfg = small_cfg();
        let state = ModelState::new(cfg.arch(), cfg.optimizer(), cfg.seed).unwrap();
        // a collection of perfect-stress layouts cannot be beaten
        let mut layouts = std::collections::BTreeMap::new();
        for s in &samples {
            layouts.insert(s.id.clone(), random_layout(s.node_count(), 0));
        }
        let mut collection = LayoutCollection::from_layouts(cfg.criterion.clone(), &samples, layouts, "seed").unwrap();
        for e in collection.entries.values_mut() {
            e.value.value = 0.0;
            e.value.stress = 0.0;
        }
        let before = collection.clone();
        let out = self_challenge_update(&mut collection, &state, &samples, true).unwrap();
        assert_eq!(out.replacements, 0);
        assert_eq!(collection, before);
    }

    #[test]
    fn equal_generated_layouts_keep_the_incumbent() {
        let samples = dataset(4, 5);
        let cfg = small_cfg();
        let state = ModelState::new(cfg.arch(), cfg.optimizer(), cfg.seed).unwrap();
        let mut collection = bootstrap_collection(&state, &samples, &cfg.criterion).unwrap();
        for e in collection.entries.values_mut() {
            e.provenance = "incumbent".into();
        }
        let before = collection.clone();
        let out = self_challenge_update(&mut collection, &state, &samples, true).unwrap();
        assert_eq!(out.replacements, 0);
        assert_eq!(collection, before);
    }

    #[test]
    fn better_generated_layouts_replace() {
        let samples = dataset(4, 6);
        let cfg = small_cfg();
        let state = ModelState::new(cfg.arch(), cfg.optimizer(), cfg.seed).unwrap();
        let good = bootstrap_collection(&state, &samples, &cfg.criterion).unwrap();
        // stored layouts are the generated ones perturbed away from optimum
        let mut layouts = std::collections::BTreeMap::new();
        for (i, s) in samples.iter().enumerate() {
            let x = &good.entries[&s.id].layout;
            let noise = random_layout(s.node_count(), 100 + i as u64);
            let pos = x.positions.iter().zip(&noise.positions).map(|(p, q)| [p[0] + q[0], p[1] + q[1]]).collect();
            layouts.insert(s.id.clone(), Layout::new(pos).unwrap());
        }
        let mut collection = LayoutCollection::from_layouts(cfg.criterion.clone(), &samples, layouts, "noisy").unwrap();
        let worse: Vec<usize> = samples
            .iter()
            .enumerate()
            .filter(|(_, s)| good.entries[&s.id].value.value < collection.entries[&s.id].value.value)
            .map(|(i, _)| i)
            .collect();
        assert!(!worse.is_empty());
        let before = collection.mean_value();
        let out = self_challenge_update(&mut collection, &state, &samples, true).unwrap();
        assert_eq!(out.replacements, worse.len());
        assert!(collection.mean_value() < before);
    }

    #[test]
    fn zero_epochs_return_the_initial_model() {
        let samples = dataset(3, 7);
        let cfg = TrainConfig { epochs: 0, ..small_cfg() };
        let out = train(&cfg, &samples, None, None).unwrap();
        assert_eq!(out.state, ModelState::new(cfg.arch(), cfg.optimizer(), cfg.seed).unwrap());
        assert_eq!(out.history.records.len(), 1);
    }

    #[test]
    fn collection_bootstrap_requires_collection() {
        let samples = dataset(3, 8);
        let cfg = TrainConfig {
            bootstrap: Bootstrap::Collection,
            ..small_cfg()
        };
        assert!(matches!(train(&cfg, &samples, None, None), Err(Error::MissingInitialLayout)));
    }

    #[test]
    fn training_is_deterministic_and_monotone() {
        let samples = dataset(5, 9);
        let cfg = TrainConfig { epochs: 4, ..small_cfg() };
        let a = train(&cfg, &samples, None, None).unwrap();
        let b = train(&cfg, &samples, None, None).unwrap();
        assert_eq!(a.state, b.state);
        assert_eq!(a.history, b.history);
        for w in a.history.records.windows(2) {
            for (x, y) in w[0].collection_values.iter().zip(&w[1].collection_values) {
                assert!(y <= x);
            }
        }
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = small_cfg();
        assert_eq!(TrainConfig::parse_json(&cfg.to_json()).unwrap(), cfg);
        let partial = TrainConfig::parse_json(r#"{"epochs": 3, "bootstrap": "self"}"#).unwrap();
        assert_eq!(partial.epochs, 3);
        assert_eq!(partial.bootstrap, Bootstrap::SelfGenerated);
        assert!(matches!(TrainConfig::parse_json(r#"{"epoch": 3}"#), Err(Error::Parse(_))));
        assert!(matches!(
            TrainConfig::parse_json(r#"{"minibatch_size": 0}"#),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn writes_loadable_outputs() {
        let samples = dataset(3, 10);
        let cfg = TrainConfig {
            checkpoint_every: 1,
            ..small_cfg()
        };
        let dir = std::env::temp_dir().join(format!("smartgd-train-{}", std::process::id()));
        let out = train(&cfg, &samples, None, Some(&dir)).unwrap();
        let loaded = ModelState::load(dir.join(CHECKPOINT_FILE)).unwrap();
        assert_eq!(loaded, out.state);
        let c = LayoutCollection::load(dir.join(COLLECTION_FILE), &samples).unwrap();
        assert_eq!(c.len(), samples.len());
        let csv = std::fs::read_to_string(dir.join(HISTORY_FILE)).unwrap();
        assert_eq!(csv.lines().count(), cfg.epochs + 2);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
