//! Pivot MDS.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::geometry::{optimal_rescale, Layout};
use crate::graph::{DistanceMatrix, Graph};
use crate::rng;

pub const PMDS_PIVOTS: usize = 50;
pub const PMDS_ITERATIONS: usize = 200;
const POWER_TOLERANCE: f64 = 1e-9;

/// Max-min pivot selection starting from a seeded random node.
fn select_pivots(d: &DistanceMatrix, k: usize, rng: &mut rng::Rng) -> Vec<usize> {
    let n = d.node_count();
    let mut pivots = vec![rng.gen_range(0..n)];
    let mut nearest: Vec<u32> = (0..n).map(|v| d.get(pivots[0], v)).collect();
    while pivots.len() < k {
        // first index of the maximum keeps selection deterministic
        let (next, _) = nearest
            .iter()
            .enumerate()
            .fold((0, 0), |best, (v, &dist)| if dist > best.1 { (v, dist) } else { best });
        pivots.push(next);
        for (v, slot) in nearest.iter_mut().enumerate() {
            *slot = (*slot).min(d.get(next, v));
        }
    }
    pivots
}

/// Dominant unit eigenvector of the symmetric `k x k` matrix `m`, orthogonal
/// to every vector in `deflate`.
fn power_iteration(m: &[f64], k: usize, deflate: &[Vec<f64>], iters: usize, rng: &mut rng::Rng) -> (Vec<f64>, f64) {
    let orthogonalize = |v: &mut Vec<f64>| {
        for u in deflate {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
    };
    let normalize = |v: &mut Vec<f64>| -> f64 {
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|a| *a /= norm);
        }
        norm
    };
    let mut v: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    orthogonalize(&mut v);
    normalize(&mut v);
    let mut eigenvalue = 0.0;
    for _ in 0..iters {
        let mut next: Vec<f64> = (0..k)
            .map(|i| (0..k).map(|j| m[i * k + j] * v[j]).sum())
            .collect();
        orthogonalize(&mut next);
        eigenvalue = normalize(&mut next);
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        v = next;
        if eigenvalue == 0.0 || delta < POWER_TOLERANCE {
            break;
        }
    }
    (v, eigenvalue)
}

/// Pivot MDS: double-centre the `N x k` squared pivot-distance matrix `C`,
/// take the two leading eigenvectors `v` of `C^T C` by power iteration and
/// place nodes at `C v / lambda^(1/4)`, which reproduces classical MDS when
/// every node is a pivot. The result is rescaled to the stress-optimal size.
pub fn pivot_mds(g: &Graph, d: &DistanceMatrix, pivots: usize, iters: usize, seed: u64) -> Result<Layout> {
    if pivots < 2 {
        return Err(Error::Argument(format!("pivot MDS needs at least 2 pivots, got {pivots}")));
    }
    let n = g.node_count();
    let k = pivots.min(n);
    let mut rng = rng::rng_for(seed, "pmds", 0);
    let pivot_ids = select_pivots(d, k, &mut rng);

    let mut c = vec![0.0; n * k];
    for i in 0..n {
        for (j, &p) in pivot_ids.iter().enumerate() {
            let dist = f64::from(d.get(i, p));
            c[i * k + j] = dist * dist;
        }
    }
    let row_mean: Vec<f64> = (0..n).map(|i| c[i * k..(i + 1) * k].iter().sum::<f64>() / k as f64).collect();
    let col_mean: Vec<f64> = (0..k).map(|j| (0..n).map(|i| c[i * k + j]).sum::<f64>() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    for i in 0..n {
        for j in 0..k {
            c[i * k + j] = -0.5 * (c[i * k + j] - row_mean[i] - col_mean[j] + grand);
        }
    }

    let mut ctc = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let s: f64 = (0..n).map(|i| c[i * k + a] * c[i * k + b]).sum();
            ctc[a * k + b] = s;
            ctc[b * k + a] = s;
        }
    }

    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(2);
    let mut coords = vec![[0.0; 2]; n];
    for axis in 0..2 {
        let (v, lambda) = power_iteration(&ctc, k, &axes, iters, &mut rng);
        let scale = if lambda > 0.0 { lambda.powf(-0.25) } else { 0.0 };
        for (i, p) in coords.iter_mut().enumerate() {
            p[axis] = scale * (0..k).map(|j| c[i * k + j] * v[j]).sum::<f64>();
        }
        axes.push(v);
    }
    let layout = Layout::new(coords)?;
    optimal_rescale(&layout, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::stress;
    use crate::graph::{complete_graph, grid_graph, path_graph, shortest_paths};

    #[test]
    fn path_is_laid_out_in_order() {
        let g = path_graph(10).unwrap();
        let d = shortest_paths(&g);
        let x = pivot_mds(&g, &d, PMDS_PIVOTS, PMDS_ITERATIONS, 3).unwrap();
        let xs: Vec<f64> = x.positions.iter().map(|p| p[0]).collect();
        let increasing = xs.windows(2).all(|w| w[0] < w[1]);
        let decreasing = xs.windows(2).all(|w| w[0] > w[1]);
        assert!(increasing || decreasing, "{xs:?}");
    }

    #[test]
    fn triangle_is_exact() {
        let g = complete_graph(3).unwrap();
        let d = shortest_paths(&g);
        let x = pivot_mds(&g, &d, PMDS_PIVOTS, PMDS_ITERATIONS, 1).unwrap();
        assert!(stress(&x, &d) < 1e-6);
    }

    #[test]
    fn grid_is_recovered() {
        let g = grid_graph(6, 6).unwrap();
        let d = shortest_paths(&g);
        let x = pivot_mds(&g, &d, PMDS_PIVOTS, PMDS_ITERATIONS, 1).unwrap();
        assert!(stress(&x, &d) < 0.5 * stress(&crate::baselines::random_layout(36, 1), &d));
    }

    #[test]
    fn deterministic_and_validated() {
        let g = grid_graph(4, 5).unwrap();
        let d = shortest_paths(&g);
        assert_eq!(pivot_mds(&g, &d, 6, 200, 9).unwrap(), pivot_mds(&g, &d, 6, 200, 9).unwrap());
        assert!(pivot_mds(&g, &d, 1, 200, 9).is_err());
    }
}
