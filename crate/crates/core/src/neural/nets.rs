use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::geometry::{canonicalize, optimal_scale, principal_rotation, Layout};
use crate::graph::{DistanceMatrix, Graph};
use crate::rng;

use super::gnn::{glorot, gnn_layer_forward, EdgeIndex, GnnLayer};
use super::{ArchConfig, ParamSet};

/// Stacked GNN layers over the initial positions, then a dense projection
/// to 2D.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub params: ParamSet,
    layers: Vec<GnnLayer>,
    proj_w: usize,
    proj_b: usize,
    slope: f64,
}

/// Canonicalization, stacked GNN layers, mean pooling and a dense score
/// head.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub params: ParamSet,
    layers: Vec<GnnLayer>,
    score_w: usize,
    score_b: usize,
    slope: f64,
}

impl Generator {
    fn build(cfg: &ArchConfig, rng: &mut rng::Rng) -> Self {
        let mut params = ParamSet::new();
        let mut layers = Vec::with_capacity(cfg.gen_layers);
        let mut in_dim = 2;
        for l in 0..cfg.gen_layers {
            layers.push(GnnLayer::init(&mut params, &format!("gen.layer{l}"), in_dim, cfg.gen_dim, rng));
            in_dim = cfg.gen_dim;
        }
        let proj_w = params.push("gen.proj_w".into(), glorot(cfg.gen_dim, 2, rng));
        let proj_b = params.push("gen.proj_b".into(), Tensor::zeros(1, 2));
        Generator {
            params,
            layers,
            proj_w,
            proj_b,
            slope: cfg.leaky_slope,
        }
    }

    /// Zeroes the output projection (every node lands on the origin).
    pub fn zero_projection(&mut self) {
        for idx in [self.proj_w, self.proj_b] {
            self.params.tensors[idx].data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

impl Discriminator {
    fn build(cfg: &ArchConfig, rng: &mut rng::Rng) -> Self {
        let mut params = ParamSet::new();
        let mut layers = Vec::with_capacity(cfg.dis_layers);
        let mut in_dim = 2;
        for l in 0..cfg.dis_layers {
            layers.push(GnnLayer::init(&mut params, &format!("dis.layer{l}"), in_dim, cfg.dis_dim, rng));
            in_dim = cfg.dis_dim;
        }
        let score_w = params.push("dis.score_w".into(), glorot(cfg.dis_dim, 1, rng));
        let score_b = params.push("dis.score_b".into(), Tensor::zeros(1, 1));
        Discriminator {
            params,
            layers,
            score_w,
            score_b,
            slope: cfg.leaky_slope,
        }
    }
}

/// Glorot-uniform weights, zero biases, unit normalization scale; fully
/// determined by `seed`.
pub fn init_params(cfg: &ArchConfig, seed: u64) -> Result<(Generator, Discriminator)> {
    cfg.validate()?;
    let g = Generator::build(cfg, &mut rng::rng_for(seed, "init-generator", 0));
    let d = Discriminator::build(cfg, &mut rng::rng_for(seed, "init-discriminator", 0));
    Ok((g, d))
}

fn replace_params(target: &mut ParamSet, source: ParamSet) -> Result<()> {
    if target.names != source.names {
        return Err(Error::Validation("parameter names do not match the architecture".into()));
    }
    for (t, s) in target.tensors.iter().zip(&source.tensors) {
        if t.shape() != s.shape() {
            return Err(Error::Validation(format!("parameter shape {:?} != {:?}", s.shape(), t.shape())));
        }
    }
    *target = source;
    Ok(())
}

impl Generator {
    /// Rebuilds a generator for `cfg` holding the given parameters.
    pub fn from_params(cfg: &ArchConfig, params: ParamSet) -> Result<Self> {
        let mut g = Generator::build(cfg, &mut rng::rng_from_seed(0));
        replace_params(&mut g.params, params)?;
        Ok(g)
    }
}

impl Discriminator {
    pub fn from_params(cfg: &ArchConfig, params: ParamSet) -> Result<Self> {
        let mut d = Discriminator::build(cfg, &mut rng::rng_from_seed(0));
        replace_params(&mut d.params, params)?;
        Ok(d)
    }
}

/// Generator output positions on `tape`. Node features are the initial
/// positions; the edge feature of `(u, v)` is its length under `init`.
pub fn generator_forward(net: &Generator, g: &Graph, init: &Layout, tape: &mut Tape, trainable: bool) -> Result<Var> {
    let vars = net.params.bind(tape, trainable);
    generator_apply(net, &vars, g, init, tape)
}

/// `generator_forward` with parameters already bound to `vars`.
pub(crate) fn generator_apply(net: &Generator, vars: &[Var], g: &Graph, init: &Layout, tape: &mut Tape) -> Result<Var> {
    init.check_for(g)?;
    let edges = EdgeIndex::new(g);
    let h0 = tape.constant(Tensor::new(init.len(), 2, init.to_flat())?);
    let lengths: Vec<f64> = edges.src.iter().zip(&edges.dst).map(|(&u, &v)| init.distance(u, v)).collect();
    let e = tape.constant(Tensor::new(edges.len(), 1, lengths)?);
    let mut h = h0;
    for layer in &net.layers {
        h = gnn_layer_forward(layer, vars, h, e, &edges, net.slope, tape)?;
    }
    let out = tape.matmul(h, vars[net.proj_w])?;
    tape.add(out, vars[net.proj_b])
}

/// Runs the generator without keeping the tape and returns the canonical
/// form of its output.
pub fn generate(net: &Generator, g: &Graph, d: &DistanceMatrix, init: &Layout) -> Result<Layout> {
    let mut tape = Tape::new();
    let out = generator_forward(net, g, init, &mut tape, false)?;
    let raw = Layout::from_flat(tape.value(out).data())
        .map_err(|_| Error::DegenerateLayout("generator produced non-finite positions".into()))?;
    canonicalize(&raw, d)
}

/// Goodness score of layout `x` (an `N x 2` node on `tape`).
///
/// The input is canonicalized first: centroid subtraction stays on the
/// tape, while the principal-axis rotation and the optimal scale are
/// computed from the current values and enter as constants.
pub fn discriminator_forward(
    net: &Discriminator,
    g: &Graph,
    d: &DistanceMatrix,
    x: Var,
    tape: &mut Tape,
    trainable: bool,
) -> Result<Var> {
    let vars = net.params.bind(tape, trainable);
    discriminator_apply(net, &vars, g, d, x, tape)
}

/// `discriminator_forward` with parameters already bound to `vars`.
pub(crate) fn discriminator_apply(
    net: &Discriminator,
    vars: &[Var],
    g: &Graph,
    d: &DistanceMatrix,
    x: Var,
    tape: &mut Tape,
) -> Result<Var> {
    if tape.shape(x) != (g.node_count(), 2) {
        return Err(Error::ShapeMismatch(format!(
            "layout node {:?} for a graph with {} nodes",
            tape.shape(x),
            g.node_count()
        )));
    }
    let mean = tape.mean_rows(x);
    let centered = tape.sub(x, mean)?;
    let centered_layout = Layout::from_flat(tape.value(centered).data())?;
    let r = principal_rotation(&centered_layout);
    let rot = tape.constant(Tensor::new(2, 2, vec![r[0][0], r[0][1], r[1][0], r[1][1]])?);
    let rotated = tape.matmul(centered, rot)?;
    let scale = optimal_scale(&Layout::from_flat(tape.value(rotated).data())?, d)?;
    let canon = tape.scalar_mul(rotated, scale);
    score_canonical(net, vars, g, canon, tape)
}

fn score_canonical(net: &Discriminator, vars: &[Var], g: &Graph, canon: Var, tape: &mut Tape) -> Result<Var> {
    let edges = EdgeIndex::new(g);
    let a = tape.gather_rows(canon, &edges.src)?;
    let b = tape.gather_rows(canon, &edges.dst)?;
    let delta = tape.sub(a, b)?;
    let e = tape.l2_norm_rows(delta);

    let mut h = canon;
    for layer in &net.layers {
        h = gnn_layer_forward(layer, vars, h, e, &edges, net.slope, tape)?;
    }
    let pooled = tape.mean_rows(h);
    let score = tape.matmul(pooled, vars[net.score_w])?;
    tape.add(score, vars[net.score_b])
}

/// Score of a fixed layout.
pub fn discriminator_score(net: &Discriminator, g: &Graph, d: &DistanceMatrix, x: &Layout) -> Result<f64> {
    let mut tape = Tape::new();
    let xv = tape.constant(Tensor::new(x.len(), 2, x.to_flat())?);
    let s = discriminator_forward(net, g, d, xv, &mut tape, false)?;
    Ok(tape.value(s).item())
}
