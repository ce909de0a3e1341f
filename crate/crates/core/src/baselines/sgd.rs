//! Stress minimisation by stochastic pairwise updates.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::geometry::Layout;
use crate::graph::{DistanceMatrix, Graph};
use crate::rng;

pub const SGD_EPOCHS: usize = 50;
pub const SGD_ETA_MIN: f64 = 0.01;

/// Each epoch visits every unordered pair once in shuffled order and moves
/// both endpoints toward `||X_i - X_j|| = d_ij` with step
/// `min(1, eta_t / d_ij^2)`, where `eta_t` decays exponentially from
/// `max d_ij^2` to [`SGD_ETA_MIN`] over the run.
pub fn stress_sgd(g: &Graph, d: &DistanceMatrix, init: &Layout, epochs: usize, seed: u64) -> Result<Layout> {
    if epochs == 0 {
        return Err(Error::Argument("stress SGD needs at least one epoch".into()));
    }
    init.check_for(g)?;
    let n = g.node_count();
    let mut rng = rng::rng_for(seed, "stress-sgd", 0);
    let mut pos = init.positions.clone();
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();

    let dmax = f64::from(d.max());
    let eta_max = dmax * dmax;
    let decay = (eta_max / SGD_ETA_MIN).ln() / epochs as f64;

    for t in 0..epochs {
        let eta = eta_max * (-(t as f64) * decay).exp();
        pairs.shuffle(&mut rng);
        for &(i, j) in &pairs {
            let dij = f64::from(d.get(i, j));
            let mu = (eta / (dij * dij)).min(1.0);
            let mut dx = pos[i][0] - pos[j][0];
            let mut dy = pos[i][1] - pos[j][1];
            let mut dist = dx.hypot(dy);
            if dist == 0.0 {
                // coincident nodes: separate along a random direction
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (dx, dy) = (a.cos() * 1e-6, a.sin() * 1e-6);
                dist = 1e-6;
            }
            let r = mu * (dist - dij) / (2.0 * dist);
            pos[i][0] -= r * dx;
            pos[i][1] -= r * dy;
            pos[j][0] += r * dx;
            pos[j][1] += r * dy;
        }
    }
    Layout::new(pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::random_layout;
    use crate::criteria::stress;
    use crate::graph::{complete_graph, path_graph, random_graph, shortest_paths};

    #[test]
    fn bent_path_straightens() {
        let g = path_graph(3).unwrap();
        let d = shortest_paths(&g);
        let init = Layout::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
        let x = stress_sgd(&g, &d, &init, 60, 1).unwrap();
        assert!(stress(&x, &d) < 1e-3);
    }

    #[test]
    fn optimal_triangle_is_fixed() {
        let g = complete_graph(3).unwrap();
        let d = shortest_paths(&g);
        let init = Layout::new(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]).unwrap();
        let x = stress_sgd(&g, &d, &init, 10, 1).unwrap();
        assert!((stress(&x, &d) - stress(&init, &d)).abs() < 1e-6);
    }

    #[test]
    fn reduces_stress_on_random_graphs() {
        let mut reductions: Vec<f64> = (0..30)
            .map(|seed| {
                let g = random_graph(10, 20, 0.3, seed).unwrap();
                let d = shortest_paths(&g);
                let init = random_layout(g.node_count(), seed);
                let x = stress_sgd(&g, &d, &init, SGD_EPOCHS, seed).unwrap();
                let (before, after) = (stress(&init, &d), stress(&x, &d));
                assert!(after <= before);
                1.0 - after / before
            })
            .collect();
        reductions.sort_by(f64::total_cmp);
        assert!(reductions[15] > 0.5);
    }

    #[test]
    fn deterministic() {
        let g = random_graph(12, 12, 0.2, 4).unwrap();
        let d = shortest_paths(&g);
        let init = random_layout(12, 2);
        assert_eq!(stress_sgd(&g, &d, &init, 5, 3).unwrap(), stress_sgd(&g, &d, &init, 5, 3).unwrap());
        assert!(stress_sgd(&g, &d, &init, 0, 3).is_err());
    }
}
