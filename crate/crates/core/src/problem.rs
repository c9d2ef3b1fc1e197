//! Cardinality-constrained quadratic binary problems (weighted MaxCut with
//! fixed partition sizes).
//!
//! Bitstrings are packed into a `u64` with qubit 0 in the most significant of
//! the `n` used bits, so the numeric order of the packed values is the
//! lexicographic order of the printed strings `b_0 b_1 ... b_{n-1}`. Spins
//! follow the Z-eigenvalue convention `s = 1 - 2 * bit`.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

pub const INSTANCE_SCHEMA_VERSION: u32 = 1;

/// Largest register the packed representation supports.
pub const MAX_QUBITS: usize = 63;

/// Coefficient set used by the benchmark ensemble.
pub const BENCHMARK_COEFFICIENTS: [f64; 4] = [-1.0, -0.5, 0.5, 1.0];

/// Index of the unordered pair `a < b` in the row-major upper triangle.
pub fn pair_index(n: usize, a: usize, b: usize) -> usize {
    debug_assert!(a < b && b < n);
    a * (2 * n - a - 1) / 2 + (b - a - 1)
}

pub fn num_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[inline]
pub fn bit(state: u64, n: usize, qubit: usize) -> u64 {
    (state >> (n - 1 - qubit)) & 1
}

#[inline]
pub fn spin(state: u64, n: usize, qubit: usize) -> f64 {
    1.0 - 2.0 * bit(state, n, qubit) as f64
}

pub fn parse_bits(bits: &str) -> Result<u64> {
    if bits.len() > MAX_QUBITS {
        return Err(Error::invalid(format!(
            "bitstring longer than {MAX_QUBITS} bits"
        )));
    }
    bits.chars().try_fold(0u64, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        other => Err(Error::invalid(format!("invalid bit character {other:?}"))),
    })
}

pub fn format_bits(state: u64, n: usize) -> String {
    (0..n)
        .map(|q| if bit(state, n, q) == 1 { '1' } else { '0' })
        .collect()
}

/// One optimization instance: `H = sum_{a<b} J_ab s_a s_b + sum_a h_a s_a`
/// restricted to Hamming weight `kappa`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    id: String,
    n: usize,
    kappa: usize,
    seed: u64,
    /// Upper triangle, row-major, indexed by [`pair_index`].
    couplings: Vec<f64>,
    fields: Vec<f64>,
}

impl ProblemInstance {
    pub fn new(
        id: impl Into<String>,
        n: usize,
        kappa: usize,
        seed: u64,
        couplings: Vec<f64>,
        fields: Vec<f64>,
    ) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "qubit count must lie in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        if kappa > n {
            return Err(Error::invalid(format!("kappa {kappa} exceeds n {n}")));
        }
        if couplings.len() != num_pairs(n) {
            return Err(Error::invalid(format!(
                "expected {} couplings for n = {n}, got {}",
                num_pairs(n),
                couplings.len()
            )));
        }
        if fields.len() != n {
            return Err(Error::invalid(format!(
                "expected {n} fields, got {}",
                fields.len()
            )));
        }
        if couplings.iter().chain(&fields).any(|c| !c.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        Ok(Self {
            id: id.into(),
            n,
            kappa,
            seed,
            couplings,
            fields,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn has_fields(&self) -> bool {
        self.fields.iter().any(|&h| h != 0.0)
    }

    /// `J_ab` for any `a != b`, symmetric.
    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.couplings[pair_index(self.n, lo, hi)]
    }

    /// Iterates `(a, b, J_ab)` over unordered pairs `a < b`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |a| (a + 1..n).map(move |b| (a, b)))
            .zip(self.couplings.iter())
            .map(|((a, b), &j)| (a, b, j))
    }

    pub fn energy(&self, state: u64) -> f64 {
        let n = self.n;
        let spins: Vec<f64> = (0..n).map(|q| spin(state, n, q)).collect();
        let quadratic: f64 = self
            .pairs()
            .map(|(a, b, j)| j * spins[a] * spins[b])
            .sum();
        let linear: f64 = self.fields.iter().zip(&spins).map(|(h, s)| h * s).sum();
        quadratic + linear
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorOptions {
    pub coefficient_set: Vec<f64>,
    /// Per-qubit fields; all zero when `None`.
    pub fields: Option<Vec<f64>>,
    pub id: Option<String>,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            coefficient_set: BENCHMARK_COEFFICIENTS.to_vec(),
            fields: None,
            id: None,
        }
    }
}

pub fn default_instance_id(n: usize, kappa: usize, seed: u64) -> String {
    format!("wmc-n{n}-k{kappa}-s{seed:016x}")
}

/// Draws every coupling i.i.d. uniformly from `coeff_set`.
pub fn generate_instance(
    n: usize,
    kappa: usize,
    coeff_set: &[f64],
    seed: u64,
) -> Result<ProblemInstance> {
    generate_instance_with(
        n,
        kappa,
        seed,
        &GeneratorOptions {
            coefficient_set: coeff_set.to_vec(),
            ..GeneratorOptions::default()
        },
    )
}

pub fn generate_instance_with(
    n: usize,
    kappa: usize,
    seed: u64,
    options: &GeneratorOptions,
) -> Result<ProblemInstance> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid(format!(
            "qubit count must be a positive even integer >= 2, got {n}"
        )));
    }
    if options.coefficient_set.is_empty() {
        return Err(Error::invalid("coefficient set is empty"));
    }
    let mut rng = seeding::rng(seed);
    let couplings = (0..num_pairs(n))
        .map(|_| {
            *options
                .coefficient_set
                .choose(&mut rng)
                .expect("non-empty coefficient set")
        })
        .collect();
    let fields = options.fields.clone().unwrap_or_else(|| vec![0.0; n]);
    let id = options
        .id
        .clone()
        .unwrap_or_else(|| default_instance_id(n, kappa, seed));
    ProblemInstance::new(id, n, kappa, seed, couplings, fields)
}

/// Energy of a printed bitstring such as `"0110"`.
pub fn evaluate_cost(instance: &ProblemInstance, bits: &str) -> Result<f64> {
    if bits.len() != instance.n() {
        return Err(Error::invalid(format!(
            "bitstring has length {}, instance has n = {}",
            bits.len(),
            instance.n()
        )));
    }
    Ok(instance.energy(parse_bits(bits)?))
}

/// All weight-`kappa` bitstrings of length `n`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleBasis {
    n: usize,
    kappa: usize,
    states: Vec<u64>,
}

impl FeasibleBasis {
    pub fn new(n: usize, kappa: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "qubit count must lie in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        if kappa > n {
            return Err(Error::invalid(format!("kappa {kappa} exceeds n {n}")));
        }
        let mut states = Vec::with_capacity(binomial(n, kappa) as usize);
        if kappa == 0 {
            states.push(0);
        } else {
            // Gosper's hack walks same-popcount integers in increasing order.
            let limit = 1u64 << n;
            let mut v: u64 = (1u64 << kappa) - 1;
            while v < limit {
                states.push(v);
                let t = v | (v - 1);
                let next = (t + 1) | (((!t & (t + 1)) - 1) >> (v.trailing_zeros() + 1));
                if next <= v {
                    break;
                }
                v = next;
            }
        }
        Ok(Self { n, kappa, states })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, index: usize) -> u64 {
        self.states[index]
    }

    pub fn index_of(&self, state: u64) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }

    pub fn bitstrings(&self) -> impl Iterator<Item = String> + '_ {
        self.states.iter().map(|&s| format_bits(s, self.n))
    }
}

pub fn feasible_basis(n: usize, kappa: usize) -> Result<FeasibleBasis> {
    FeasibleBasis::new(n, kappa)
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

/// Raw and normalized energies over the feasible set.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable {
    raw: Vec<f64>,
    normalized: Vec<f64>,
    min: f64,
    max: f64,
}

impl EnergyTable {
    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    /// `(E_k - E_min) / (E_max - E_min)`, indexed like the basis.
    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn min_energy(&self) -> f64 {
        self.min
    }

    pub fn max_energy(&self) -> f64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// First basis index attaining the minimum energy.
    pub fn argmin(&self) -> usize {
        self.raw
            .iter()
            .position(|&e| e == self.min)
            .expect("non-empty table")
    }

    pub fn argmax(&self) -> usize {
        self.raw
            .iter()
            .position(|&e| e == self.max)
            .expect("non-empty table")
    }
}

pub fn energy_table(instance: &ProblemInstance, basis: &FeasibleBasis) -> Result<EnergyTable> {
    if basis.n() != instance.n() || basis.kappa() != instance.kappa() {
        return Err(Error::invalid(format!(
            "basis (n = {}, kappa = {}) does not match instance (n = {}, kappa = {})",
            basis.n(),
            basis.kappa(),
            instance.n(),
            instance.kappa()
        )));
    }
    let raw: Vec<f64> = basis.states().iter().map(|&s| instance.energy(s)).collect();
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if raw.is_empty() || max == min {
        return Err(Error::DegenerateSpectrum(min));
    }
    let span = max - min;
    let normalized = raw.iter().map(|&e| (e - min) / span).collect();
    Ok(EnergyTable {
        raw,
        normalized,
        min,
        max,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    #[serde(default = "default_schema_version")]
    schema_version: u32,
    id: String,
    n: usize,
    kappa: usize,
    seed: u64,
    couplings: Vec<(usize, usize, f64)>,
    fields: Vec<f64>,
}

fn default_schema_version() -> u32 {
    INSTANCE_SCHEMA_VERSION
}

impl From<&ProblemInstance> for InstanceFile {
    fn from(instance: &ProblemInstance) -> Self {
        Self {
            schema_version: INSTANCE_SCHEMA_VERSION,
            id: instance.id.clone(),
            n: instance.n,
            kappa: instance.kappa,
            seed: instance.seed,
            couplings: instance.pairs().collect(),
            fields: instance.fields.clone(),
        }
    }
}

pub fn instance_to_json(instance: &ProblemInstance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from(instance)).expect("serializable instance")
}

/// Parses instance JSON; `origin` only labels errors.
pub fn instance_from_json(text: &str, origin: &Path) -> Result<ProblemInstance> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| Error::parse_json(origin, &e))?;
    let schema_error = |message: String| Error::Parse {
        path: origin.to_path_buf(),
        line: 0,
        column: 0,
        message,
    };
    if file.schema_version > INSTANCE_SCHEMA_VERSION {
        return Err(schema_error(format!(
            "unsupported schema_version {}",
            file.schema_version
        )));
    }
    let n = file.n;
    if n == 0 || n > MAX_QUBITS {
        return Err(schema_error(format!("invalid n = {n}")));
    }
    if file.couplings.len() != num_pairs(n) {
        return Err(schema_error(format!(
            "couplings list has {} entries, expected n(n-1)/2 = {}",
            file.couplings.len(),
            num_pairs(n)
        )));
    }
    let mut couplings = vec![f64::NAN; num_pairs(n)];
    for &(a, b, j) in &file.couplings {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if lo == hi || hi >= n {
            return Err(schema_error(format!("invalid coupling pair ({a}, {b})")));
        }
        let slot = &mut couplings[pair_index(n, lo, hi)];
        if !slot.is_nan() {
            return Err(schema_error(format!("duplicate coupling pair ({a}, {b})")));
        }
        *slot = j;
    }
    ProblemInstance::new(file.id, n, file.kappa, file.seed, couplings, file.fields)
        .map_err(|e| schema_error(e.to_string()))
}

pub fn save_instance(instance: &ProblemInstance, path: &Path) -> Result<()> {
    fs::write(path, instance_to_json(instance) + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    instance_from_json(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_qubit() -> ProblemInstance {
        // pairs (0,1), (0,2), (1,2)
        ProblemInstance::new("t3", 3, 1, 0, vec![0.5, -1.0, 1.0], vec![0.0; 3]).unwrap()
    }

    #[test]
    fn pair_index_is_dense_row_major() {
        let n = 5;
        let mut expected = 0;
        for a in 0..n {
            for b in a + 1..n {
                assert_eq!(pair_index(n, a, b), expected);
                expected += 1;
            }
        }
        assert_eq!(expected, num_pairs(n));
    }

    #[test]
    fn generated_instance_draws_from_set() {
        let inst = generate_instance(4, 2, &BENCHMARK_COEFFICIENTS, 7).unwrap();
        assert_eq!(inst.couplings().len(), 6);
        assert!(inst
            .couplings()
            .iter()
            .all(|j| BENCHMARK_COEFFICIENTS.contains(j)));
        assert!(inst.fields().iter().all(|&h| h == 0.0));
    }

    #[test]
    fn singleton_set_gives_that_coupling() {
        for seed in 0..5 {
            let inst = generate_instance(2, 1, &[1.0], seed).unwrap();
            assert_eq!(inst.couplings(), &[1.0]);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance(8, 4, &BENCHMARK_COEFFICIENTS, 99).unwrap();
        let b = generate_instance(8, 4, &BENCHMARK_COEFFICIENTS, 99).unwrap();
        assert_eq!(instance_to_json(&a), instance_to_json(&b));
    }

    #[test]
    fn generation_rejects_bad_arguments() {
        assert!(generate_instance(3, 1, &[1.0], 0).is_err());
        assert!(generate_instance(0, 0, &[1.0], 0).is_err());
        assert!(generate_instance(4, 2, &[], 0).is_err());
    }

    #[test]
    fn cost_examples() {
        let two = ProblemInstance::new("t2", 2, 1, 0, vec![1.0], vec![0.0; 2]).unwrap();
        assert_eq!(evaluate_cost(&two, "01").unwrap(), -1.0);
        assert_eq!(evaluate_cost(&two, "00").unwrap(), 1.0);
        // s = (+1, -1, +1): 0.5(-1) - 1(+1) + 1(-1)
        assert_eq!(evaluate_cost(&three_qubit(), "010").unwrap(), -2.5);
        assert!(evaluate_cost(&two, "011").is_err());
    }

    #[test]
    fn field_term_uses_z_sign() {
        let inst = ProblemInstance::new("f", 2, 1, 0, vec![0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(evaluate_cost(&inst, "10").unwrap(), -1.0);
        assert_eq!(evaluate_cost(&inst, "01").unwrap(), 1.0);
    }

    #[test]
    fn basis_sizes_and_order() {
        let b = feasible_basis(4, 2).unwrap();
        let strings: Vec<String> = b.bitstrings().collect();
        assert_eq!(strings, ["0011", "0101", "0110", "1001", "1010", "1100"]);
        assert_eq!(feasible_basis(16, 8).unwrap().len(), 12870);
        let zero: Vec<String> = feasible_basis(2, 0).unwrap().bitstrings().collect();
        assert_eq!(zero, ["00"]);
        assert!(feasible_basis(3, 4).is_err());
    }

    #[test]
    fn basis_index_is_bijective() {
        let b = feasible_basis(10, 3).unwrap();
        for (i, &s) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i));
            assert_eq!(s.count_ones(), 3);
        }
        assert_eq!(b.index_of(0b111_1000_000), None);
        assert_eq!(b.len() as u64, binomial(10, 3));
    }

    #[test]
    fn energy_table_normalization() {
        let inst = generate_instance(6, 3, &BENCHMARK_COEFFICIENTS, 3).unwrap();
        let basis = feasible_basis(6, 3).unwrap();
        let table = energy_table(&inst, &basis).unwrap();
        assert_eq!(table.normalized()[table.argmin()], 0.0);
        assert_eq!(table.normalized()[table.argmax()], 1.0);
        assert!(table.normalized().iter().all(|e| (0.0..=1.0).contains(e)));
    }

    #[test]
    fn constant_spectrum_is_an_error() {
        let inst = ProblemInstance::new("z", 4, 2, 0, vec![0.0; 6], vec![0.0; 4]).unwrap();
        let basis = feasible_basis(4, 2).unwrap();
        assert!(matches!(
            energy_table(&inst, &basis),
            Err(Error::DegenerateSpectrum(_))
        ));
    }

    #[test]
    fn mismatched_basis_is_rejected() {
        let inst = generate_instance(4, 2, &BENCHMARK_COEFFICIENTS, 1).unwrap();
        assert!(energy_table(&inst, &feasible_basis(4, 1).unwrap()).is_err());
    }

    #[test]
    fn json_round_trip_and_schema_errors() {
        let inst = generate_instance(6, 3, &BENCHMARK_COEFFICIENTS, 11).unwrap();
        let text = instance_to_json(&inst);
        let back = instance_from_json(&text, Path::new("mem")).unwrap();
        assert_eq!(back, inst);

        let short = r#"{"id":"x","n":3,"kappa":1,"seed":0,
            "couplings":[[0,1,1.0],[0,2,1.0]],"fields":[0,0,0]}"#;
        assert!(matches!(
            instance_from_json(short, Path::new("short.json")),
            Err(Error::Parse { .. })
        ));

        let extra = r#"{"id":"x","n":2,"kappa":1,"seed":0,"comment":"hi",
            "couplings":[[0,1,1.0]],"fields":[0,0]}"#;
        assert!(instance_from_json(extra, Path::new("extra.json")).is_ok());

        let broken = "{\"id\": \"x\",\n \"n\": }";
        match instance_from_json(broken, Path::new("broken.json")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.json");
        let inst = generate_instance(4, 2, &BENCHMARK_COEFFICIENTS, 5).unwrap();
        save_instance(&inst, &path).unwrap();
        assert_eq!(load_instance(&path).unwrap(), inst);
    }
}
