//! Fruchterman-Reingold spring embedder.

use rand::Rng as _;

use crate::error::Result;
use crate::geometry::Layout;
use crate::graph::Graph;
use crate::rng;

pub const FR_ITERATIONS: usize = 300;
/// Ideal edge length.
pub const FR_OPTIMAL_DISTANCE: f64 = 1.0;
/// Net force is scaled by this before the temperature cap; a unit step
/// makes the explicit update unstable near equilibrium.
const FR_STEP: f64 = 0.1;

/// Attractive force `dist^2 / k` along edges, repulsive `k^2 / dist`
/// between all pairs; displacement capped by a temperature that cools
/// linearly from `0.1 * sqrt(N) * k` to zero. Nodes move by
/// `FR_STEP * force`, capped at the temperature.
pub fn fruchterman_reingold(g: &Graph, init: &Layout, iters: usize, seed: u64) -> Result<Layout> {
    init.check_for(g)?;
    let n = g.node_count();
    let k = FR_OPTIMAL_DISTANCE;
    let mut rng = rng::rng_for(seed, "fr", 0);
    let mut pos = init.positions.clone();
    let t0 = 0.1 * (n as f64).sqrt() * k;
    let mut disp = vec![[0.0f64; 2]; n];

    for it in 0..iters {
        let temperature = t0 * (1.0 - it as f64 / iters as f64);
        disp.iter_mut().for_each(|v| *v = [0.0, 0.0]);
        for i in 0..n {
            for j in i + 1..n {
                let (mut dx, mut dy) = (pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]);
                let mut dist = dx.hypot(dy);
                if dist < 1e-9 {
                    let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    (dx, dy, dist) = (a.cos() * 1e-9, a.sin() * 1e-9, 1e-9);
                }
                let f = k * k / dist;
                let (fx, fy) = (dx / dist * f, dy / dist * f);
                disp[i][0] += fx;
                disp[i][1] += fy;
                disp[j][0] -= fx;
                disp[j][1] -= fy;
            }
        }
        for &(u, v) in g.edges() {
            let (dx, dy) = (pos[u][0] - pos[v][0], pos[u][1] - pos[v][1]);
            let dist = dx.hypot(dy);
            if dist == 0.0 {
                continue;
            }
            let f = dist * dist / k;
            let (fx, fy) = (dx / dist * f, dy / dist * f);
            disp[u][0] -= fx;
            disp[u][1] -= fy;
            disp[v][0] += fx;
            disp[v][1] += fy;
        }
        for (p, dv) in pos.iter_mut().zip(&disp) {
            let len = FR_STEP * dv[0].hypot(dv[1]);
            if len > 0.0 {
                let step = FR_STEP * len.min(temperature) / len;
                p[0] += dv[0] * step;
                p[1] += dv[1] * step;
            }
        }
    }
    Layout::new(pos)
}
