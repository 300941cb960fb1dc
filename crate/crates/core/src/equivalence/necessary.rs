use serde::Serialize;

use crate::jet::{ConcreteOperator, Problem};

use super::fast::FastSignature;
use super::signature::{invariant_signature, CloudPoint, InvariantSignature, SignatureConfig, SignatureMap};
use super::EquivalenceError;

#[derive(Clone, Debug)]
pub struct NecessaryConfig {
    pub signature: SignatureConfig,
    /// Componentwise tolerance relative to `max(1, |value|)`.
    pub tolerance: f64,
    /// Starting points tried per unmatched tuple.
    pub starts: usize,
    pub max_iterations: usize,
    /// Half-width of the `x` range scanned when no nearby start converges.
    pub scan_x: f64,
    pub scan_steps: usize,
    /// `u` is scanned over `+-2^k` for `|k| <= scan_octaves`.
    pub scan_octaves: i32,
    /// Local minima of the scan refined per unmatched tuple.
    pub scan_keep: usize,
}

impl Default for NecessaryConfig {
    fn default() -> Self {
        NecessaryConfig {
            signature: SignatureConfig::default(),
            tolerance: 1e-6,
            starts: 3,
            max_iterations: 100,
            scan_x: 64.0,
            scan_steps: 256,
            scan_octaves: 8,
            scan_keep: 16,
        }
    }
}

/// A tuple of one cloud that no point of the other operator's signature
/// reproduces within tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    /// `1` if the tuple comes from the first operator, `2` otherwise.
    pub side: u8,
    pub point: [String; 5],
    pub tuple: Vec<f64>,
    pub best_residual: f64,
    pub best_point: [f64; 5],
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Compatible,
    Incompatible(Witness),
}

impl Verdict {
    pub fn is_compatible(&self) -> bool {
        matches!(self, Verdict::Compatible)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NecessaryReport {
    pub mode: Problem,
    pub grid: String,
    pub tolerance: f64,
    pub components: Vec<String>,
    pub cloud_sizes: [usize; 2],
    /// Tuples matched by an existing sample, and by a preimage search.
    pub matched_by_sample: usize,
    pub matched_by_search: usize,
    #[serde(flatten)]
    pub verdict: Verdict,
}

fn within(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * x.abs().max(1.0))
}

fn scaled_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y) / x.abs().max(1.0);
            d * d
        })
        .sum()
}

fn to_f64(cp: &CloudPoint) -> [f64; 5] {
    use num_traits::ToPrimitive;
    cp.jet.coords().map(|c| c.to_f64().unwrap_or(f64::NAN))
}

enum Match {
    Sample,
    Search([f64; 5]),
    Missing(Witness),
}

/// Looks for the tuple `t` in the signature of the other operator: first
/// among its samples, then by a preimage search started from the previous
/// preimage, from the samples nearest in tuple space, and finally from the
/// best points of a coarse `(x, u)` scan.
fn find(
    t: &CloudPoint,
    side: u8,
    other: &InvariantSignature,
    fast: &FastSignature,
    previous: Option<[f64; 5]>,
    cfg: &NecessaryConfig,
) -> Match {
    let mut ranked: Vec<(f64, &CloudPoint)> =
        other.cloud.iter().map(|c| (scaled_distance(&t.tuple, &c.tuple), c)).collect();
    if ranked.iter().any(|(_, c)| within(&t.tuple, &c.tuple, cfg.tolerance)) {
        return Match::Sample;
    }
    let k = cfg.starts.min(ranked.len());
    if k > 0 {
        ranked.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0));
        ranked.truncate(k);
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let mut best = (f64::INFINITY, [f64::NAN; 5]);
    let mut attempt = |start: [f64; 5]| {
        let (z, res) = fast.solve(&t.tuple, fast.warm_start(start, &t.tuple), cfg.max_iterations, cfg.tolerance * 1e-3);
        if res < best.0 {
            best = (res, z);
        }
        res <= cfg.tolerance
    };
    let near = previous.into_iter().chain(ranked.iter().map(|(_, c)| to_f64(c)));
    for start in near {
        if attempt(start) {
            return Match::Search(best.1);
        }
    }
    for start in fast.scan(&t.tuple, cfg.scan_x, cfg.scan_steps, cfg.scan_octaves, cfg.scan_keep) {
        if attempt(fast.refine(&t.tuple, start, cfg.max_iterations)) {
            return Match::Search(best.1);
        }
    }
    Match::Missing(Witness {
        side,
        point: t.point.clone(),
        tuple: t.tuple.clone(),
        best_residual: best.0,
        best_point: best.1,
    })
}

/// Symmetric inclusion test of the two sampled signature clouds. Each tuple
/// of either cloud must be reproduced by the other operator's signature map
/// within tolerance, either at a sample or at a point found by a
/// Levenberg–Marquardt search started from the previous match, the nearest
/// samples and refined minima of a coarse scan of the base. A single failure
/// yields `Incompatible` with the offending tuple as witness.
pub fn check_necessary(
    op1: &ConcreteOperator,
    op2: &ConcreteOperator,
    mode: Problem,
    cfg: &NecessaryConfig,
) -> Result<NecessaryReport, EquivalenceError> {
    let map = SignatureMap::new(mode, cfg.signature.include_operator_invariant)?;
    let s1 = invariant_signature(op1, mode, &cfg.signature)?;
    let s2 = invariant_signature(op2, mode, &cfg.signature)?;
    let fast1 = FastSignature::new(&map, op1);
    let fast2 = FastSignature::new(&map, op2);
    let mut by_sample = 0;
    let mut by_search = 0;
    let mut verdict = Verdict::Compatible;
    'outer: for (side, from, to, fast) in [(1u8, &s1, &s2, &fast2), (2u8, &s2, &s1, &fast1)] {
        let mut previous = None;
        for t in &from.cloud {
            match find(t, side, to, fast, previous, cfg) {
                Match::Sample => by_sample += 1,
                Match::Search(z) => {
                    by_search += 1;
                    previous = Some(z);
                }
                Match::Missing(w) => {
                    verdict = Verdict::Incompatible(w);
                    break 'outer;
                }
            }
        }
    }
    Ok(NecessaryReport {
        mode,
        grid: cfg.signature.grid.to_string(),
        tolerance: cfg.tolerance,
        components: map.names,
        cloud_sizes: [s1.cloud.len(), s2.cloud.len()],
        matched_by_sample: by_sample,
        matched_by_search: by_search,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_recovers_a_known_point() {
        let op = ConcreteOperator::from_polys([&[1], &[0, 1], &[], &[2, 0, 1]]).unwrap();
        let map = SignatureMap::new(Problem::Direct, false).unwrap();
        let fast = FastSignature::new(&map, &op);
        let z = [0.3, 1.4, -0.2, 0.5, 0.1];
        let target = fast.eval(&z);
        let (_, res) = fast.solve(&target, [0.25, 1.5, 0.0, 0.5, 0.0], 100, 1e-12);
        assert!(res < 1e-9, "residual {res}");
    }

    #[test]
    fn scaled_comparison() {
        assert!(within(&[1000.0, 0.0], &[1000.0005, 1e-7], 1e-6));
        assert!(!within(&[1000.0, 0.0], &[1000.01, 0.0], 1e-6));
    }
}
