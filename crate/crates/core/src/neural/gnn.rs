use rand::Rng as _;

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::Rng;

use super::ParamSet;

/// Both directions of every undirected edge.
#[derive(Debug, Clone)]
pub struct EdgeIndex {
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    pub node_count: usize,
}

impl EdgeIndex {
    pub fn new(g: &Graph) -> Self {
        let (src, dst) = g.directed_edges();
        EdgeIndex {
            src,
            dst,
            node_count: g.node_count(),
        }
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }
}

/// Parameter slots of one message-passing layer inside a [`ParamSet`].
///
/// The edge filter maps the scalar edge feature `e` to an `in x out` matrix
/// `W(e) = reshape(e * filter_w + filter_b)`; a node receives the mean of
/// `h_src W(e)` over incoming edges plus the root term `h W_root + b`.
/// The result goes through a dense layer, per-graph feature normalization
/// with learned scale and shift, and a leaky ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GnnLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    filter_w: usize,
    filter_b: usize,
    root_w: usize,
    conv_b: usize,
    dense_w: usize,
    dense_b: usize,
    norm_scale: usize,
    norm_shift: usize,
}

pub(crate) fn glorot(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect();
    Tensor::new(rows, cols, data).expect("shape matches data")
}

impl GnnLayer {
    pub(crate) fn init(params: &mut ParamSet, prefix: &str, in_dim: usize, out_dim: usize, rng: &mut Rng) -> Self {
        let wide = in_dim * out_dim;
        let mut add = |name: &str, t: Tensor| params.push(format!("{prefix}.{name}"), t);
        GnnLayer {
            in_dim,
            out_dim,
            filter_w: add("filter_w", glorot(1, wide, rng)),
            filter_b: add("filter_b", Tensor::zeros(1, wide)),
            root_w: add("root_w", glorot(in_dim, out_dim, rng)),
            conv_b: add("conv_b", Tensor::zeros(1, out_dim)),
            dense_w: add("dense_w", glorot(out_dim, out_dim, rng)),
            dense_b: add("dense_b", Tensor::zeros(1, out_dim)),
            norm_scale: add("norm_scale", Tensor::filled(1, out_dim, 1.0)),
            norm_shift: add("norm_shift", Tensor::zeros(1, out_dim)),
        }
    }

    /// Constant matrices that turn the per-edge bilinear product into two
    /// matmuls: `expand` repeats each input feature `out` times and `collapse`
    /// sums over the input index.
    fn selectors(&self) -> (Tensor, Tensor) {
        let (fi, fo) = (self.in_dim, self.out_dim);
        let mut expand = Tensor::zeros(fi, fi * fo);
        let mut collapse = Tensor::zeros(fi * fo, fo);
        for f in 0..fi {
            for o in 0..fo {
                expand.data_mut()[f * fi * fo + f * fo + o] = 1.0;
                collapse.data_mut()[(f * fo + o) * fo + o] = 1.0;
            }
        }
        (expand, collapse)
    }
}

pub fn gnn_layer_forward(
    layer: &GnnLayer,
    vars: &[Var],
    node_feats: Var,
    edge_feats: Var,
    edges: &EdgeIndex,
    slope: f64,
    tape: &mut Tape,
) -> Result<Var> {
    let (n, f) = tape.shape(node_feats);
    if f != layer.in_dim || n != edges.node_count {
        return Err(Error::ShapeMismatch(format!(
            "layer expects {} x {}, got {n} x {f}",
            edges.node_count, layer.in_dim
        )));
    }
    if tape.shape(edge_feats) != (edges.len(), 1) {
        return Err(Error::ShapeMismatch(format!(
            "edge features {:?} for {} directed edges",
            tape.shape(edge_feats),
            edges.len()
        )));
    }
    let (expand, collapse) = layer.selectors();
    let expand = tape.constant(expand);
    let collapse = tape.constant(collapse);

    let filt = tape.matmul(edge_feats, vars[layer.filter_w])?;
    let filt = tape.add(filt, vars[layer.filter_b])?;
    let src = tape.gather_rows(node_feats, &edges.src)?;
    let src = tape.matmul(src, expand)?;
    let weighted = tape.mul(src, filt)?;
    let messages = tape.matmul(weighted, collapse)?;
    let aggregated = tape.scatter_mean(messages, &edges.dst, edges.node_count)?;

    let root = tape.matmul(node_feats, vars[layer.root_w])?;
    let conv = tape.add(aggregated, root)?;
    let conv = tape.add(conv, vars[layer.conv_b])?;

    let dense = tape.matmul(conv, vars[layer.dense_w])?;
    let dense = tape.add(dense, vars[layer.dense_b])?;

    let normed = tape.feature_norm(dense);
    let normed = tape.mul(normed, vars[layer.norm_scale])?;
    let normed = tape.add(normed, vars[layer.norm_shift])?;
    tape.leaky_relu(normed, slope)
}
