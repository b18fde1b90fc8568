//! Prediction lenses: an `n x m` matrix whose column `c` holds the model's
//! score for class `c` on every datapoint.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::diffusion::diffuse;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexSet};

/// Dense row-major lens matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LensMatrix {
    n: usize,
    m: usize,
    values: Vec<f64>,
    column_names: Vec<String>,
}

impl LensMatrix {
    pub fn new(n: usize, m: usize, values: Vec<f64>, column_names: Vec<String>) -> Result<Self> {
        if values.len() != n * m {
            return Err(Error::DimensionMismatch(format!(
                "lens matrix {n}x{m} needs {} values, got {}",
                n * m,
                values.len()
            )));
        }
        if column_names.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "{} column names for {m} lenses",
                column_names.len()
            )));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: i / m,
                col: i % m,
            });
        }
        Ok(LensMatrix {
            n,
            m,
            values,
            column_names,
        })
    }

    /// Builds from rows with default column names `lens0, lens1, ...`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} entries, expected {m}",
                rows[bad].len()
            )));
        }
        let names = (0..m).map(|c| format!("lens{c}")).collect();
        Self::new(rows.len(), m, rows.concat(), names)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.values[i * self.m + c]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, c)).collect()
    }

    /// Row-wise argmax (ties to the smaller column) and the maximum value.
    pub fn argmax_rows(&self) -> (Vec<usize>, Vec<f64>) {
        (0..self.n)
            .map(|i| {
                let row = self.row(i);
                let mut best = 0;
                for c in 1..self.m {
                    if row[c] > row[best] {
                        best = c;
                    }
                }
                (best, row.get(best).copied().unwrap_or(0.0))
            })
            .unzip()
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        LensMatrix {
            n: self.n,
            m: self.m,
            values,
            column_names: self.column_names.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub alpha: f64,
    pub steps: usize,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            alpha: 0.5,
            steps: 5,
        }
    }
}

impl SmoothingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// `steps` rounds of `P(i+1) = (1 - alpha) P + alpha D^-1 A P(i)` with `P(0) = P`.
pub fn smooth(p: &LensMatrix, g: &Graph, sp: SmoothingParams) -> Result<LensMatrix> {
    sp.validate()?;
    if p.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "lens has {} rows but graph has {} vertices",
            p.n(),
            g.n()
        )));
    }
    let out = diffuse(g, &p.values, p.m, sp.steps, sp.alpha);
    if let Some(i) = out.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            row: i / p.m,
            col: i % p.m,
        });
    }
    Ok(p.with_values(out))
}

/// Affinely rescales every column onto `[0, 1]`; constant columns become 0.
pub fn minmax_normalize(p: &LensMatrix) -> LensMatrix {
    let (n, m) = (p.n, p.m);
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for i in 0..n {
        for (c, &x) in p.row(i).iter().enumerate() {
            lo[c] = lo[c].min(x);
            hi[c] = hi[c].max(x);
        }
    }
    let mut values = p.values.clone();
    for i in 0..n {
        for c in 0..m {
            let span = hi[c] - lo[c];
            let x = &mut values[i * m + c];
            *x = if span > 0.0 {
                ((*x - lo[c]) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
    p.with_values(values)
}

/// Per-column `max - min` over the members of `s`.
pub fn spreads(p: &LensMatrix, s: &[usize]) -> Vec<f64> {
    let m = p.m;
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for &v in s {
        for (c, &x) in p.row(v).iter().enumerate() {
            lo[c] = lo[c].min(x);
            hi[c] = hi[c].max(x);
        }
    }
    if s.is_empty() {
        return vec![0.0; m];
    }
    lo.iter().zip(&hi).map(|(l, h)| h - l).collect()
}

/// Largest per-column spread over `s` (0 for an empty set or no lenses).
pub fn max_spread(p: &LensMatrix, s: &[usize]) -> f64 {
    spreads(p, s).into_iter().fold(0.0, f64::max)
}

/// Column with the largest spread over `s`; ties go to the smaller index.
pub fn max_diff_lens(p: &LensMatrix, s: &VertexSet) -> usize {
    let sp = spreads(p, s.as_slice());
    let mut best = 0;
    for c in 1..sp.len() {
        if sp[c] > sp[best] {
            best = c;
        }
    }
    best
}

/// l-infinity distance between rows `u` and `v`.
pub fn lens_distance(p: &LensMatrix, u: usize, v: usize) -> f64 {
    p.row(u)
        .iter()
        .zip(p.row(v))
        .fold(0.0, |acc, (a, b)| f64::max(acc, (a - b).abs()))
}

/// Reads a lens CSV: a header row of column names, then one row per datapoint.
pub fn parse_lens_csv(text: &str) -> Result<LensMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    let m = headers.len();
    let mut values = Vec::new();
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != m {
            return Err(Error::parse(
                line,
                format!("expected {m} fields, found {}", rec.len()),
            ));
        }
        for field in rec.iter() {
            let x: f64 = field
                .parse()
                .map_err(|e| Error::parse(line, format!("bad number {field:?}: {e}")))?;
            if !x.is_finite() {
                return Err(Error::parse(line, format!("non-finite value {field:?}")));
            }
            values.push(x);
        }
        n += 1;
    }
    LensMatrix::new(n, m, values, headers)
}

pub fn write_lens_csv(p: &LensMatrix) -> String {
    let mut out = p.column_names.join(",");
    out.push('\n');
    for i in 0..p.n {
        let row: Vec<String> = p.row(i).iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(xs: &[f64]) -> LensMatrix {
        LensMatrix::from_rows(&xs.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn zero_steps_is_identity() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let p = LensMatrix::from_rows(&[vec![0.3, 0.1], vec![0.9, 0.0], vec![0.2, 0.5]]).unwrap();
        let sp = SmoothingParams {
            alpha: 0.7,
            steps: 0,
        };
        assert_eq!(smooth(&p, &g, sp).unwrap(), p);
    }

    #[test]
    fn two_vertex_single_step() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let s = smooth(
            &col(&[1.0, 0.0]),
            &g,
            SmoothingParams {
                alpha: 0.5,
                steps: 1,
            },
        )
        .unwrap();
        assert_eq!(s.column(0), vec![0.5, 0.5]);
    }

    #[test]
    fn isolated_vertex_is_a_fixed_point() {
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let s = smooth(&col(&[1.0, 0.0, 0.7]), &g, SmoothingParams::default()).unwrap();
        assert_eq!(s.get(2, 0), 0.7);
    }

    #[test]
    fn smoothing_rejects_bad_input() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(smooth(&col(&[1.0, 0.0, 1.0]), &g, SmoothingParams::default()).is_err());
        let bad = SmoothingParams {
            alpha: 1.0,
            steps: 2,
        };
        assert!(smooth(&col(&[1.0, 0.0]), &g, bad).is_err());
        assert!(LensMatrix::from_rows(&[vec![f64::NAN]]).is_err());
    }

    #[test]
    fn defaults_match_the_reference_table() {
        let d = SmoothingParams::default();
        assert_eq!((d.alpha, d.steps), (0.5, 5));
    }

    #[test]
    fn normalization_cases() {
        assert_eq!(minmax_normalize(&col(&[2.0, 4.0, 6.0])).column(0), vec![0.0, 0.5, 1.0]);
        assert_eq!(minmax_normalize(&col(&[7.0, 7.0, 7.0])).column(0), vec![0.0; 3]);
        let unit = col(&[0.0, 0.25, 1.0]);
        assert_eq!(minmax_normalize(&unit), unit);
    }

    #[test]
    fn widest_lens_selection() {
        let one = col(&[0.1, 0.9]);
        assert_eq!(max_diff_lens(&one, &VertexSet::full(2)), 0);
        let tie = LensMatrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert_eq!(max_diff_lens(&tie, &VertexSet::full(2)), 0);
    }

    #[test]
    fn widest_lens_matches_column_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..4).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let p = LensMatrix::from_rows(&rows).unwrap();
        let s = VertexSet::new(vec![0, 2, 3, 7, 9]);
        let mut best = (0, f64::NEG_INFINITY);
        for c in 0..4 {
            let vals: Vec<f64> = s.iter().map(|i| rows[i][c]).collect();
            let d = vals.iter().cloned().fold(f64::MIN, f64::max)
                - vals.iter().cloned().fold(f64::MAX, f64::min);
            if d > best.1 {
                best = (c, d);
            }
        }
        assert_eq!(max_diff_lens(&p, &s), best.0);
    }

    #[test]
    fn linf_distance() {
        let p = LensMatrix::from_rows(&[vec![0.2, 0.9], vec![0.5, 0.8]]).unwrap();
        assert!((lens_distance(&p, 0, 1) - 0.3).abs() < 1e-15);
        assert_eq!(lens_distance(&p, 1, 1), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let text = "a, b\n0.5,1\n-2,3e-2\n";
        let p = parse_lens_csv(text).unwrap();
        assert_eq!(p.column_names(), ["a", "b"]);
        assert_eq!(p.row(1), [-2.0, 0.03]);
        assert_eq!(parse_lens_csv(&write_lens_csv(&p)).unwrap(), p);
        assert!(parse_lens_csv("a,b\n1\n").is_err());
        assert!(parse_lens_csv("a\nNaN\n").is_err());
        assert!(parse_lens_csv("a\nx\n").is_err());
    }

    fn arb_instance() -> impl Strategy<Value = (Graph, LensMatrix)> {
        (2usize..25, 1usize..4, any::<u64>()).prop_map(|(n, m, seed)| {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut e = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(0.2) {
                        e.push((u, v));
                    }
                }
            }
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..m).map(|_| rng.gen::<f64>() * 3.0).collect())
                .collect();
            (Graph::from_edges(n, &e).unwrap(), LensMatrix::from_rows(&rows).unwrap())
        })
    }

    proptest! {
        #[test]
        fn smoothing_is_a_convex_combination((g, p) in arb_instance(), alpha in 0.01f64..0.99, steps in 1usize..6) {
            let prev = smooth(&p, &g, SmoothingParams { alpha, steps: steps - 1 }).unwrap();
            let next = smooth(&p, &g, SmoothingParams { alpha, steps }).unwrap();
            for c in 0..p.m() {
                let bound = p.column(c).into_iter().chain(prev.column(c)).fold(f64::MIN, f64::max);
                for i in 0..p.n() {
                    prop_assert!(next.get(i, c) >= 0.0);
                    prop_assert!(next.get(i, c) <= bound + 1e-12);
                }
            }
        }

        #[test]
        fn small_alpha_moves_little((g, p) in arb_instance(), alpha in 1e-6f64..1e-3) {
            let s = smooth(&p, &g, SmoothingParams { alpha, steps: 1 }).unwrap();
            for c in 0..p.m() {
                let col = p.column(c);
                let range = col.iter().cloned().fold(f64::MIN, f64::max)
                    - col.iter().cloned().fold(f64::MAX, f64::min);
                for i in 0..p.n() {
                    prop_assert!((s.get(i, c) - p.get(i, c)).abs() <= alpha * range + 1e-12);
                }
            }
        }

        #[test]
        fn normalization_is_idempotent((_g, p) in arb_instance()) {
            let once = minmax_normalize(&p);
            prop_assert_eq!(minmax_normalize(&once), once);
        }

        #[test]
        fn widest_lens_is_shift_and_scale_invariant((_g, p) in arb_instance(), shift in -5.0f64..5.0, scale in 0.1f64..10.0, col in 0usize..4) {
            let s = VertexSet::full(p.n());
            let base = max_diff_lens(&p, &s);
            let c = col % p.m();
            let shifted: Vec<Vec<f64>> = (0..p.n())
                .map(|i| p.row(i).iter().enumerate().map(|(j, &x)| if j == c { x + shift } else { x }).collect())
                .collect();
            let scaled: Vec<Vec<f64>> = (0..p.n()).map(|i| p.row(i).iter().map(|x| x * scale).collect()).collect();
            // Rounding can only perturb near-exact ties.
            let sp = spreads(&p, s.as_slice());
            for other in [shifted, scaled] {
                let choice = max_diff_lens(&LensMatrix::from_rows(&other).unwrap(), &s);
                prop_assert!(choice == base || (sp[choice] - sp[base]).abs() < 1e-12);
            }
        }

        #[test]
        fn linf_triangle_inequality((_g, p) in arb_instance(), a in 0usize..25, b in 0usize..25, c in 0usize..25) {
            let (a, b, c) = (a % p.n(), b % p.n(), c % p.n());
            prop_assert!(lens_distance(&p, a, c) <= lens_distance(&p, a, b) + lens_distance(&p, b, c) + 1e-12);
            prop_assert_eq!(lens_distance(&p, a, b), lens_distance(&p, b, a));
        }
    }
}
