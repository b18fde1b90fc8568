//! Classic mapper: a tensor-product cover of overlapping bins over the
//! lens range, clustered by graph connected components.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ComponentFinder, Graph, VertexSet};
use crate::lens::LensMatrix;
use crate::reeb::{build_reeb_net, ReebNet};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapperParams {
    pub bins_per_lens: usize,
    pub overlap_fraction: f64,
}

impl MapperParams {
    pub fn validate(&self) -> Result<()> {
        if self.bins_per_lens == 0 {
            return Err(Error::InvalidParameter("bins_per_lens must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::InvalidParameter(format!(
                "overlap_fraction {} outside [0, 1)",
                self.overlap_fraction
            )));
        }
        Ok(())
    }
}

/// One cell of the cover: a bin index per lens and the datapoints inside.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub bins: Vec<usize>,
    pub members: VertexSet,
}

/// Bins of `[0, 1]` containing `x`. Bin `j` spans
/// `[(j - o) / b, (j + 1 + o) / b)`, the last one closed at its right end.
pub fn bins_of(x: f64, params: &MapperParams) -> Vec<usize> {
    let b = params.bins_per_lens;
    let o = params.overlap_fraction;
    let x = x.clamp(0.0, 1.0);
    (0..b)
        .filter(|&j| {
            let lo = (j as f64 - o) / b as f64;
            let hi = (j as f64 + 1.0 + o) / b as f64;
            x >= lo && (x < hi || j + 1 == b)
        })
        .collect()
}

/// Nonempty cells of the cover, ordered by bin tuple.
pub fn mapper_cover(p: &LensMatrix, params: &MapperParams) -> Result<Vec<Cell>> {
    params.validate()?;
    let mut cells: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for i in 0..p.n() {
        let per_lens: Vec<Vec<usize>> = p.row(i).iter().map(|&x| bins_of(x, params)).collect();
        let mut keys: Vec<Vec<usize>> = vec![Vec::new()];
        for options in &per_lens {
            keys = keys
                .into_iter()
                .flat_map(|k| {
                    options.iter().map(move |&b| {
                        let mut next = k.clone();
                        next.push(b);
                        next
                    })
                })
                .collect();
        }
        for k in keys {
            cells.entry(k).or_default().push(i);
        }
    }
    Ok(cells
        .into_iter()
        .map(|(bins, members)| Cell {
            bins,
            members: VertexSet::new(members),
        })
        .collect())
}

/// One Reeb node per connected component of each cell; overlap edges only.
pub fn mapper_reeb(g: &Graph, cells: &[Cell]) -> Result<ReebNet> {
    for c in cells {
        c.members.check(g.n())?;
    }
    let nodes: Vec<Vec<VertexSet>> = cells
        .par_iter()
        .map_init(
            || ComponentFinder::new(g.n()),
            |finder, c| finder.components(g, c.members.as_slice()),
        )
        .collect();
    Ok(build_reeb_net(&nodes.concat()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(b: usize, o: f64) -> MapperParams {
        MapperParams {
            bins_per_lens: b,
            overlap_fraction: o,
        }
    }

    #[test]
    fn two_bins_without_overlap() {
        let p = LensMatrix::from_rows(&[vec![0.2], vec![0.8]]).unwrap();
        let cells = mapper_cover(&p, &params(2, 0.0)).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].members.as_slice(), [0]);
        assert_eq!(cells[1].members.as_slice(), [1]);
    }

    #[test]
    fn overlap_puts_midpoint_in_both_bins() {
        assert_eq!(bins_of(0.5, &params(2, 0.2)), vec![0, 1]);
        assert_eq!(bins_of(0.59, &params(2, 0.2)), vec![0, 1]);
        assert_eq!(bins_of(0.61, &params(2, 0.2)), vec![1]);
        assert_eq!(bins_of(0.39, &params(2, 0.2)), vec![0]);
    }

    #[test]
    fn zero_overlap_partitions_the_range() {
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            assert_eq!(bins_of(x, &params(7, 0.0)).len(), 1, "x = {x}");
        }
        assert_eq!(bins_of(1.0, &params(4, 0.0)), vec![3]);
    }

    #[test]
    fn cover_matches_interval_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..400).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let p = LensMatrix::from_rows(&rows).unwrap();
        let prm = params(10, 0.1);
        let cells = mapper_cover(&p, &prm).unwrap();
        assert!(cells.len() <= 100);
        let w = 0.1;
        let inside = |x: f64, j: usize| {
            let (lo, hi) = (j as f64 * w - 0.1 * w, (j + 1) as f64 * w + 0.1 * w);
            lo - 1e-12 <= x && (x < hi - 1e-12 || (j == 9 && x <= 1.0))
        };
        for (i, r) in rows.iter().enumerate() {
            for a in 0..10 {
                for b in 0..10 {
                    let want = inside(r[0], a) && inside(r[1], b);
                    let got = cells
                        .iter()
                        .any(|c| c.bins == [a, b] && c.members.contains(i));
                    assert_eq!(want, got, "point {i} cell ({a},{b}) {r:?}");
                }
            }
            assert!(cells.iter().any(|c| c.members.contains(i)));
        }
    }

    #[test]
    fn reeb_from_cells() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let whole = [Cell {
            bins: vec![0],
            members: VertexSet::full(4),
        }];
        let net = mapper_reeb(&g, &whole).unwrap();
        assert_eq!(net.num_nodes(), 1);
        assert!(net.overlap_edges.is_empty());

        let cells = [
            Cell {
                bins: vec![0],
                members: VertexSet::new(vec![0, 1, 2]),
            },
            Cell {
                bins: vec![1],
                members: VertexSet::new(vec![0, 2, 3]),
            },
        ];
        let net = mapper_reeb(&g, &cells).unwrap();
        // The second cell splits into {0} and {2,3}.
        assert_eq!(net.num_nodes(), 3);
        assert_eq!(net.overlap_edges, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn rejects_bad_params() {
        let p = LensMatrix::from_rows(&[vec![0.5]]).unwrap();
        assert!(mapper_cover(&p, &params(0, 0.1)).is_err());
        assert!(mapper_cover(&p, &params(3, 1.0)).is_err());
    }
}
