//! Exact statevector simulation restricted to the fixed-Hamming-weight
//! subspace.
//!
//! Gate conventions:
//!
//! * `U_ZZ(gamma) = exp(i gamma J Z_a Z_b)`
//! * `U_XY(beta)  = exp(i beta (X_a X_b + Y_a Y_b))`
//! * `U_MP(gamma, beta) = U_XY(beta) U_ZZ(gamma)` (phase first, then mix)
//! * field layer `exp(i gamma sum_a h_a Z_a)`
//!
//! Amplitudes are stored in the lexicographic order of [`FeasibleBasis`].
//! For every qubit pair a partner table lists the basis index pairs whose
//! bits at `(a, b)` are `01` / `10` and differ only by exchanging them.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{bit, format_bits, pair_index, spin, EnergyTable, FeasibleBasis};

/// Basis plus the per-pair partner tables used by the mixing gates.
#[derive(Debug)]
pub struct Subspace {
    basis: FeasibleBasis,
    partners: Vec<Vec<(u32, u32)>>,
}

impl Subspace {
    pub fn new(basis: FeasibleBasis) -> Arc<Self> {
        let n = basis.n();
        let mut partners = vec![Vec::new(); n * n.saturating_sub(1) / 2];
        for a in 0..n {
            for b in a + 1..n {
                let mask = (1u64 << (n - 1 - a)) | (1u64 << (n - 1 - b));
                let table = &mut partners[pair_index(n, a, b)];
                for (i, &s) in basis.states().iter().enumerate() {
                    // Record each exchanging pair once, from its `01` member.
                    if bit(s, n, a) == 0 && bit(s, n, b) == 1 {
                        let j = basis
                            .index_of(s ^ mask)
                            .expect("exchange preserves Hamming weight");
                        table.push((i as u32, j as u32));
                    }
                }
            }
        }
        Arc::new(Self { basis, partners })
    }

    pub fn basis(&self) -> &FeasibleBasis {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn partners(&self, a: usize, b: usize) -> Result<&[(u32, u32)]> {
        let n = self.n();
        if a == b {
            return Err(Error::invalid(format!("gate on repeated qubit {a}")));
        }
        if a >= n || b >= n {
            return Err(Error::invalid(format!(
                "qubit pair ({a}, {b}) out of range for n = {n}"
            )));
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        Ok(&self.partners[pair_index(n, lo, hi)])
    }
}

#[derive(Debug, Clone)]
pub struct SubspaceState {
    space: Arc<Subspace>,
    amplitudes: Vec<Complex64>,
}

/// Uniform superposition over the feasible set.
pub fn dicke_state(space: &Arc<Subspace>) -> Result<SubspaceState> {
    let dim = space.dim();
    if dim == 0 {
        return Err(Error::invalid("empty feasible basis"));
    }
    let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    Ok(SubspaceState {
        space: Arc::clone(space),
        amplitudes: vec![amp; dim],
    })
}

impl SubspaceState {
    pub fn from_amplitudes(space: &Arc<Subspace>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::invalid(format!(
                "expected {} amplitudes, got {}",
                space.dim(),
                amplitudes.len()
            )));
        }
        Ok(Self {
            space: Arc::clone(space),
            amplitudes,
        })
    }

    pub fn basis_state(space: &Arc<Subspace>, index: usize) -> Result<Self> {
        if index >= space.dim() {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); space.dim()];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            space: Arc::clone(space),
            amplitudes,
        })
    }

    pub fn space(&self) -> &Arc<Subspace> {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn apply_zz(&mut self, a: usize, b: usize, gamma: f64, coupling: f64) -> Result<()> {
        let n = self.space.n();
        self.space.partners(a, b)?;
        let theta = gamma * coupling;
        let same = Complex64::from_polar(1.0, theta);
        let differ = Complex64::from_polar(1.0, -theta);
        for (amp, &s) in self.amplitudes.iter_mut().zip(self.space.basis.states()) {
            *amp *= if bit(s, n, a) == bit(s, n, b) { same } else { differ };
        }
        Ok(())
    }

    pub fn apply_field_phases(&mut self, gamma: f64, fields: &[f64]) -> Result<()> {
        let n = self.space.n();
        if fields.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} field coefficients, got {}",
                fields.len()
            )));
        }
        if fields.iter().all(|&h| h == 0.0) {
            return Ok(());
        }
        for (amp, &s) in self.amplitudes.iter_mut().zip(self.space.basis.states()) {
            let z: f64 = fields
                .iter()
                .enumerate()
                .map(|(q, h)| h * spin(s, n, q))
                .sum();
            *amp *= Complex64::from_polar(1.0, gamma * z);
        }
        Ok(())
    }

    pub fn apply_xy(&mut self, a: usize, b: usize, beta: f64) -> Result<()> {
        let space = Arc::clone(&self.space);
        let table = space.partners(a, b)?;
        let (s, c) = (2.0 * beta).sin_cos();
        let isin = Complex64::new(0.0, s);
        for &(i, j) in table {
            let (i, j) = (i as usize, j as usize);
            let (x, y) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = x * c + isin * y;
            self.amplitudes[j] = y * c + isin * x;
        }
        Ok(())
    }

    /// Mixer-phaser gate: `U_XY(beta) U_ZZ(gamma)` on one pair.
    pub fn apply_mp(
        &mut self,
        a: usize,
        b: usize,
        gamma: f64,
        beta: f64,
        coupling: f64,
    ) -> Result<()> {
        self.apply_zz(a, b, gamma, coupling)?;
        self.apply_xy(a, b, beta)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn expectation_epsilon(&self, table: &EnergyTable) -> Result<f64> {
        if table.len() != self.amplitudes.len() {
            return Err(Error::invalid("energy table does not match state dimension"));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(table.normalized())
            .map(|(a, e)| a.norm_sqr() * e)
            .sum())
    }

    /// Overlap modulus `|<self|other>|`.
    pub fn fidelity(&self, other: &SubspaceState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm()
    }

    pub fn dump(&self) -> String {
        #[derive(Serialize)]
        struct Entry {
            state: String,
            re: f64,
            im: f64,
        }
        let n = self.space.n();
        let entries: Vec<Entry> = self
            .space
            .basis
            .states()
            .iter()
            .zip(&self.amplitudes)
            .map(|(&s, a)| Entry {
                state: format_bits(s, n),
                re: a.re,
                im: a.im,
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("serializable amplitudes")
    }
}
