//! The restarted random-walk iteration shared by lens smoothing and
//! error estimation: `X(i+1) = (1 - alpha) X(0) + alpha D^-1 A X(i)`.

use rayon::prelude::*;

use crate::graph::{degrees, Graph};

/// Runs `steps` iterations on a row-major `n x m` matrix. Rows of
/// zero-degree vertices use the identity in place of `D^-1 A`, which makes
/// them fixed points.
pub(crate) fn diffuse(g: &Graph, initial: &[f64], m: usize, steps: usize, alpha: f64) -> Vec<f64> {
    let n = g.n();
    debug_assert_eq!(initial.len(), n * m);
    if m == 0 {
        return Vec::new();
    }
    let deg = degrees(g);
    let mut cur = initial.to_vec();
    let mut next = vec![0.0; n * m];
    for _ in 0..steps {
        next.par_chunks_mut(m).enumerate().for_each(|(u, row)| {
            let seed = &initial[u * m..(u + 1) * m];
            if deg[u] <= 0.0 {
                let own = &cur[u * m..(u + 1) * m];
                for c in 0..m {
                    row[c] = (1.0 - alpha) * seed[c] + alpha * own[c];
                }
                return;
            }
            row.fill(0.0);
            for (v, w) in g.weighted_neighbors(u) {
                let src = &cur[v * m..(v + 1) * m];
                for c in 0..m {
                    row[c] += w * src[c];
                }
            }
            let scale = alpha / deg[u];
            for c in 0..m {
                row[c] = (1.0 - alpha) * seed[c] + scale * row[c];
            }
        });
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}
