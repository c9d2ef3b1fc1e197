//! Odd-even transposition swap network on a line of wires.

use crate::error::{Error, Result};

/// `n` parallel layers; layer `l` acts on wire pairs `(i, i + 1)` with
/// `i = l (mod 2)`. Every layer swaps the two wires it touches, so after all
/// layers each pair of logical qubits has been adjacent exactly once and the
/// line is reversed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapNetwork {
    n: usize,
    layers: Vec<Vec<(usize, usize)>>,
}

impl SwapNetwork {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!(
                "swap network needs at least 2 wires, got {n}"
            )));
        }
        let layers = (0..n)
            .map(|l| {
                (l % 2..n - 1)
                    .step_by(2)
                    .map(|i| (i, i + 1))
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(Self { n, layers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Vec<(usize, usize)>] {
        &self.layers
    }

    pub fn nonempty_layers(&self) -> usize {
        self.layers.iter().filter(|l| !l.is_empty()).count()
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Logical pairs met, in execution order, when the wires start out
    /// holding `layout[w]`; `layout` is left holding the final assignment.
    pub fn run(&self, layout: &mut [usize]) -> Vec<(usize, usize)> {
        assert_eq!(layout.len(), self.n, "layout length must equal wire count");
        let mut met = Vec::with_capacity(self.gate_count());
        for layer in &self.layers {
            for &(w, v) in layer {
                met.push((layout[w], layout[v]));
                layout.swap(w, v);
            }
        }
        met
    }

    /// Wire permutation after the whole network: entry `w` is the wire whose
    /// initial content ends up on wire `w`.
    pub fn final_permutation(&self) -> Vec<usize> {
        let mut layout: Vec<usize> = (0..self.n).collect();
        self.run(&mut layout);
        layout
    }
}

pub fn build_swap_network(n: usize) -> Result<SwapNetwork> {
    SwapNetwork::new(n)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn four_wire_layers() {
        let net = SwapNetwork::new(4).unwrap();
        assert_eq!(
            net.layers(),
            &[
                vec![(0, 1), (2, 3)],
                vec![(1, 2)],
                vec![(0, 1), (2, 3)],
                vec![(1, 2)],
            ]
        );
        assert_eq!(net.final_permutation(), vec![3, 2, 1, 0]);
    }

    #[test]
    fn two_wire_network_covers_single_pair() {
        let net = SwapNetwork::new(2).unwrap();
        assert_eq!(net.layers().len(), 2);
        assert_eq!(net.nonempty_layers(), 1);
        let mut layout = vec![0, 1];
        assert_eq!(net.run(&mut layout), vec![(0, 1)]);
        assert!(SwapNetwork::new(1).is_err());
    }

    #[test]
    fn every_pair_once_and_reversal() {
        for n in 2..=13 {
            let net = SwapNetwork::new(n).unwrap();
            let mut layout: Vec<usize> = (0..n).collect();
            let met = net.run(&mut layout);
            assert_eq!(met.len(), n * (n - 1) / 2);
            let unique: HashSet<(usize, usize)> =
                met.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
            assert_eq!(unique.len(), met.len(), "n = {n}");
            assert_eq!(layout, (0..n).rev().collect::<Vec<_>>());
            if n > 2 {
                assert_eq!(net.nonempty_layers(), n);
            }
        }
    }

    #[test]
    fn layers_are_disjoint() {
        let net = SwapNetwork::new(9).unwrap();
        for layer in net.layers() {
            let mut used = HashSet::new();
            for &(a, b) in layer {
                assert!(used.insert(a) && used.insert(b));
                assert_eq!(b, a + 1);
            }
        }
    }
}
