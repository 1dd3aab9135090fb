//! Node-pair orbit experiment on small vertex-transitive graphs.

use std::fmt::Write as _;

use llwlc_core::Graph;

use crate::error::Result;
use crate::signature::neumann_pair_values;

/// Representative pairs of the three pair orbits of C6: adjacent, distance 2, antipodal.
pub fn c6_pair_orbits() -> Vec<Vec<(usize, usize)>> {
    vec![vec![(0, 1), (2, 3)], vec![(0, 2), (1, 3)], vec![(0, 3), (1, 4)]]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSpectrum {
    pub orbit: usize,
    pub pair: (usize, usize),
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitReport {
    pub spectra: Vec<PairSpectrum>,
    /// Largest difference between two pairs of the same orbit.
    pub max_within: f64,
    /// Smallest difference between pairs of different orbits.
    pub min_between: f64,
}

/// Max elementwise difference; `∞` when the lengths differ.
pub fn spectrum_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Neumann-constrained spectra of each pair's enclosing subgraph, unrounded.
/// `kappa = None` keeps every Ritz value.
pub fn orbit_pair_experiment(g: &Graph, orbits: &[Vec<(usize, usize)>], kappa: Option<usize>) -> Result<OrbitReport> {
    let kappa = kappa.unwrap_or(g.node_count());
    let mut spectra = Vec::new();
    for (orbit, pairs) in orbits.iter().enumerate() {
        for &(u, v) in pairs {
            spectra.push(PairSpectrum {
                orbit,
                pair: (u, v),
                values: neumann_pair_values(g, u, v, kappa)?,
            });
        }
    }
    let mut max_within: f64 = 0.0;
    let mut min_between = f64::INFINITY;
    for (i, a) in spectra.iter().enumerate() {
        for b in &spectra[i + 1..] {
            let d = spectrum_distance(&a.values, &b.values);
            if a.orbit == b.orbit {
                max_within = max_within.max(d);
            } else {
                min_between = min_between.min(d);
            }
        }
    }
    Ok(OrbitReport {
        spectra,
        max_within,
        min_between,
    })
}

impl OrbitReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.spectra {
            let vals: Vec<String> = s.values.iter().map(|v| format!("{v:.12}")).collect();
            let _ = writeln!(
                out,
                "orbit {} pair {}-{}: {}",
                s.orbit,
                s.pair.0,
                s.pair.1,
                vals.join(" ")
            );
        }
        let _ = writeln!(out, "max_within={:e}", self.max_within);
        let _ = writeln!(out, "min_between={:e}", self.min_between);
        out
    }
}
