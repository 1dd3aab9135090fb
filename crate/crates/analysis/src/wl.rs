//! 1-dimensional Weisfeiler-Leman color refinement.

use std::collections::BTreeMap;

use llwlc_core::generators::disjoint_union;
use llwlc_core::Graph;

/// Stable coloring with canonical ids: ids are assigned in lexicographic
/// order of the refinement signatures, so equal partitions of relabeled
/// graphs produce equal id histograms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorPartition {
    pub colors: Vec<usize>,
    /// Refinement rounds run, including the final one that changed nothing.
    pub rounds: usize,
}

impl ColorPartition {
    pub fn class_count(&self) -> usize {
        self.colors.iter().max().map_or(0, |m| m + 1)
    }

    /// Sorted class sizes.
    pub fn histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for &c in &self.colors {
            counts[c] += 1;
        }
        counts
    }
}

fn refine_round(g: &Graph, colors: &[usize]) -> Vec<usize> {
    let signatures: Vec<(usize, Vec<usize>)> = (0..g.node_count())
        .map(|v| {
            let mut nb: Vec<usize> = g.neighbors(v).iter().map(|&w| colors[w]).collect();
            nb.sort_unstable();
            (colors[v], nb)
        })
        .collect();
    let mut ids = BTreeMap::new();
    for s in &signatures {
        ids.insert(s.clone(), 0);
    }
    for (i, id) in ids.values_mut().enumerate() {
        *id = i;
    }
    signatures.iter().map(|s| ids[s]).collect()
}

pub fn wl1_refine(g: &Graph) -> ColorPartition {
    let mut colors = vec![0; g.node_count()];
    let mut classes = usize::from(g.node_count() > 0);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let next = refine_round(g, &colors);
        let next_classes = next.iter().max().map_or(0, |m| m + 1);
        colors = next;
        // refinement only splits classes, so an unchanged count means a stable partition
        if next_classes == classes {
            break;
        }
        classes = next_classes;
    }
    ColorPartition { colors, rounds }
}

/// True iff the stable color histograms of `g1` and `g2` differ. Refinement
/// runs on the disjoint union so color ids are shared between the two graphs.
pub fn wl1_distinguish(g1: &Graph, g2: &Graph) -> bool {
    let joint = wl1_refine(&disjoint_union(g1, g2));
    let (a, b) = joint.colors.split_at(g1.node_count());
    let hist = |part: &[usize]| {
        let mut h = BTreeMap::new();
        for &c in part {
            *h.entry(c).or_insert(0usize) += 1;
        }
        h
    };
    hist(a) != hist(b)
}
