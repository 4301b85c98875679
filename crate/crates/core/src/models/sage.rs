//! Neighbor sampling and mini-batch computation sets for GraphSAGE.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::GraphInput;
use crate::numerics::{derive_seed, SparseMatrix, SparsePattern};
use crate::scalar::Scalar;

/// One layer's wiring: rows are the layer's output nodes, columns index the
/// previous layer's node set. Output nodes are a prefix of the previous set.
#[derive(Debug, Clone)]
pub struct SageBlock<T: Scalar> {
    pub self_rows: Arc<Vec<usize>>,
    pub mean: Arc<SparseMatrix<T>>,
}

/// Node sets from input (index 0) to output (last), plus one block per layer.
#[derive(Debug, Clone)]
pub struct SagePlan<T: Scalar> {
    pub input_nodes: Vec<usize>,
    pub blocks: Vec<SageBlock<T>>,
}

/// Sorted neighbor sample; `None` keeps every neighbor.
pub fn sample_neighbors(nbrs: &[usize], k: Option<usize>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match k {
        Some(k) if k < nbrs.len() => {
            let mut picked: Vec<usize> = sample(rng, nbrs.len(), k).into_iter().map(|i| nbrs[i]).collect();
            picked.sort_unstable();
            picked
        }
        _ => nbrs.to_vec(),
    }
}

/// Builds the computation sets for `batch` going down through `samples.len()` layers.
///
/// `seed = None` is eval mode: every neighbor is used.
pub fn plan<T: Scalar>(graph: &GraphInput<T>, batch: &[usize], samples: &[usize], seed: Option<u64>) -> SagePlan<T> {
    let layers = samples.len();
    let mut sets: Vec<Vec<usize>> = vec![batch.to_vec()];
    let mut picks: Vec<Vec<Vec<usize>>> = Vec::with_capacity(layers);
    for depth in 0..layers {
        // layer index counted from the input side
        let layer = layers - 1 - depth;
        let top = sets.last().expect("non-empty").clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed.unwrap_or(0), layer as u64));
        let k = seed.map(|_| samples[layer]);
        let chosen: Vec<Vec<usize>> = top
            .iter()
            .map(|&u| sample_neighbors(&graph.neighbors[u], k, &mut rng))
            .collect();
        let present: BTreeSet<usize> = top.iter().copied().collect();
        let fresh: BTreeSet<usize> = chosen
            .iter()
            .flatten()
            .copied()
            .filter(|v| !present.contains(v))
            .collect();
        let mut below = top;
        below.extend(fresh);
        sets.push(below);
        picks.push(chosen);
    }
    sets.reverse();
    picks.reverse();

    let blocks = (0..layers)
        .map(|l| {
            let below = &sets[l];
            let above = &sets[l + 1];
            let pos: HashMap<usize, usize> = below.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let rows: Vec<Vec<usize>> = picks[l].iter().map(|c| c.iter().map(|v| pos[v]).collect()).collect();
            let pattern = SparsePattern::from_rows(below.len(), rows).expect("positions in range");
            let values = (0..pattern.rows())
                .flat_map(|r| {
                    let k = pattern.row_range(r).len();
                    std::iter::repeat(T::one() / T::from_count(k.max(1))).take(k)
                })
                .collect();
            let mean = SparseMatrix::new(Arc::new(pattern), values).expect("values match pattern");
            SageBlock {
                self_rows: Arc::new((0..above.len()).collect()),
                mean: Arc::new(mean),
            }
        })
        .collect();
    SagePlan {
        input_nodes: sets.swap_remove(0),
        blocks,
    }
}
