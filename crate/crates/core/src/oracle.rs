//! Brute-force references: full-register simulation, exhaustive spectra,
//! sampled and exhaustive best-of-R estimates, and a p = 1 grid search.
//!
//! Gates here are assembled from Pauli tensor products with closed-form
//! exponentials; nothing is shared with the subspace simulator.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::ansatz::{self, angle_domains, AngleSchedule, AnsatzKind, CircuitPlan, GateFamily, Step};
use crate::dense::{self, c, Mat2, Mat4, I};
use crate::error::{Error, Result};
use crate::metrics::{Scorer, DEFAULT_TIE_TOLERANCE};
use crate::problem::{energy_table, feasible_basis, FeasibleBasis, ProblemInstance};
use crate::seeding;
use crate::subspace_sim::{dicke_state, Subspace};

pub const MAX_DENSE_QUBITS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl DenseState {
    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_size(n)?;
        if amplitudes.len() != 1 << n {
            return Err(Error::invalid(format!(
                "expected {} amplitudes, got {}",
                1usize << n,
                amplitudes.len()
            )));
        }
        Ok(Self { n, amplitudes })
    }

    /// Uniform superposition over all weight-`kappa` strings.
    pub fn dicke(n: usize, kappa: usize) -> Result<Self> {
        check_size(n)?;
        if kappa > n {
            return Err(Error::invalid(format!("kappa {kappa} exceeds n = {n}")));
        }
        let count = (0..1u32 << n).filter(|x| x.count_ones() as usize == kappa).count();
        let amp = c(1.0 / (count as f64).sqrt(), 0.0);
        let amplitudes = (0..1u32 << n)
            .map(|x| {
                if x.count_ones() as usize == kappa {
                    amp
                } else {
                    c(0.0, 0.0)
                }
            })
            .collect();
        Ok(Self { n, amplitudes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest amplitude magnitude on strings whose weight is not `kappa`.
    pub fn leakage(&self, kappa: usize) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(x, _)| x.count_ones() as usize != kappa)
            .map(|(_, a)| a.norm())
            .fold(0.0, f64::max)
    }

    /// Amplitudes on the basis states, in basis order.
    pub fn restrict(&self, basis: &FeasibleBasis) -> Vec<Complex64> {
        basis
            .states()
            .iter()
            .map(|&s| self.amplitudes[s as usize])
            .collect()
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DENSE_QUBITS {
        return Err(Error::invalid(format!(
            "dense simulation supports 1..={MAX_DENSE_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

fn zz_generator() -> Mat4 {
    dense::kron(&dense::pauli_z(), &dense::pauli_z())
}

fn xy_generator() -> Mat4 {
    dense::kron(&dense::pauli_x(), &dense::pauli_x()) + dense::kron(&dense::pauli_y(), &dense::pauli_y())
}

/// `exp(i theta ZZ) = cos(theta) I + i sin(theta) ZZ`, since `ZZ^2 = I`.
pub fn zz_exponential(theta: f64) -> Mat4 {
    Mat4::identity() * c(theta.cos(), 0.0) + zz_generator() * (I * theta.sin())
}

/// `exp(i theta G)` for `G = XX + YY`. `G` has eigenvalues `{0, 0, 2, -2}`,
/// so `exp(i theta G) = I + i sin(2 theta)/2 G + (cos(2 theta) - 1)/4 G^2`.
pub fn xy_exponential(theta: f64) -> Mat4 {
    let g = xy_generator();
    Mat4::identity()
        + g * (I * ((2.0 * theta).sin() / 2.0))
        + g * g * c(((2.0 * theta).cos() - 1.0) / 4.0, 0.0)
}

/// `exp(i theta Z)`.
fn z_exponential(theta: f64) -> Mat2 {
    Mat2::identity() * c(theta.cos(), 0.0) + dense::pauli_z() * (I * theta.sin())
}

pub fn dense_execute(plan: &CircuitPlan, schedule: &AngleSchedule) -> Result<DenseState> {
    let start = DenseState::dicke(plan.n(), plan.instance().kappa())?;
    dense_execute_from(plan, schedule, start)
}

pub fn dense_execute_from(
    plan: &CircuitPlan,
    schedule: &AngleSchedule,
    state: DenseState,
) -> Result<DenseState> {
    let n = plan.n();
    check_size(n)?;
    if state.n != n {
        return Err(Error::invalid("state register size does not match plan"));
    }
    if schedule.p() != plan.p() {
        return Err(Error::invalid("schedule length does not match plan"));
    }
    let mut amps = state.amplitudes;
    for (round, (gamma, beta)) in plan.rounds().iter().zip(schedule.pairs()) {
        for step in &round.steps {
            match step {
                Step::Pass { gates, .. } => {
                    for g in gates {
                        let m = match g.family {
                            GateFamily::Zz => zz_exponential(gamma * g.coefficient),
                            GateFamily::Xy => xy_exponential(beta * g.coefficient),
                            GateFamily::Mp => {
                                xy_exponential(beta) * zz_exponential(gamma * g.coefficient)
                            }
                        };
                        dense::apply_2q(&mut amps, n, g.pair.0, g.pair.1, &m);
                    }
                }
                Step::FieldPhases => {
                    for (q, &h) in plan.instance().fields().iter().enumerate() {
                        if h != 0.0 {
                            dense::apply_1q(&mut amps, n, q, &z_exponential(gamma * h));
                        }
                    }
                }
            }
        }
    }
    Ok(DenseState { n, amplitudes: amps })
}

/// Every feasible string with its energy, by direct enumeration of all `2^n`
/// strings.
pub fn brute_force_spectrum(instance: &ProblemInstance) -> Result<Vec<(u64, f64)>> {
    let n = instance.n();
    if n > 24 {
        return Err(Error::invalid("brute-force spectrum limited to n <= 24"));
    }
    Ok((0..1u64 << n)
        .filter(|x| x.count_ones() as usize == instance.kappa())
        .map(|x| (x, instance.energy(x)))
        .collect())
}

fn check_distribution(probabilities: &[f64], epsilons: &[f64], r: u32) -> Result<()> {
    if r < 1 {
        return Err(Error::invalid("R must be at least 1"));
    }
    if probabilities.len() != epsilons.len() || probabilities.is_empty() {
        return Err(Error::InvalidDistribution("length mismatch".into()));
    }
    if probabilities.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::InvalidDistribution("negative probability".into()));
    }
    Ok(())
}

/// Monte-Carlo estimate of the mean minimum of `R` draws, with its standard
/// error.
pub fn mc_best_r(
    probabilities: &[f64],
    epsilons: &[f64],
    r: u32,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_distribution(probabilities, epsilons, r)?;
    if samples < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let mut cumulative = Vec::with_capacity(probabilities.len());
    let mut acc = 0.0;
    for p in probabilities {
        acc += p;
        cumulative.push(acc);
    }
    let total = acc;
    let mut rng = seeding::rng(seed);
    // Sums are taken relative to the first draw so a point mass comes out exact.
    let mut shift = None;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let mut best = f64::INFINITY;
        for _ in 0..r {
            let u: f64 = rng.gen::<f64>() * total;
            let k = cumulative
                .partition_point(|&cdf| cdf <= u)
                .min(cumulative.len() - 1);
            best = best.min(epsilons[k]);
        }
        let d = best - *shift.get_or_insert(best);
        sum += d;
        sum_sq += d * d;
    }
    let m = samples as f64;
    let mean_d = sum / m;
    let var = ((sum_sq / m - mean_d * mean_d) * m / (m - 1.0)).max(0.0);
    Ok((shift.unwrap_or(0.0) + mean_d, (var / m).sqrt()))
}

/// `E[min of R draws]` by summing over every ordered `R`-tuple of outcomes.
pub fn exhaustive_best_r(probabilities: &[f64], epsilons: &[f64], r: u32) -> Result<f64> {
    check_distribution(probabilities, epsilons, r)?;
    let k = probabilities.len();
    let tuples = (k as u64)
        .checked_pow(r)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| Error::invalid("too many tuples for exhaustive evaluation"))?;
    let mut total = 0.0;
    for mut code in 0..tuples {
        let mut prob = 1.0;
        let mut best = f64::INFINITY;
        for _ in 0..r {
            let i = (code % k as u64) as usize;
            code /= k as u64;
            prob *= probabilities[i];
            best = best.min(epsilons[i]);
        }
        total += prob * best;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub gamma: f64,
    pub beta: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Scans `gamma = i gamma_max / res`, `beta = j beta_max / res` for
/// `i, j in 0..res` and returns the grid point with the lowest `<BEST_R>`.
pub fn grid_search_p1(
    instance: &ProblemInstance,
    kind: AnsatzKind,
    resolution: usize,
    ordering_seed: u64,
    r: u32,
) -> Result<GridOptimum> {
    if resolution == 0 {
        return Err(Error::invalid("resolution must be positive"));
    }
    let plan = ansatz::build(kind, instance, 1, ordering_seed)?;
    let basis = feasible_basis(instance.n(), instance.kappa())?;
    let table = energy_table(instance, &basis)?;
    let scorer = Scorer::from_table(&table, DEFAULT_TIE_TOLERANCE)?;
    let space: Arc<Subspace> = Subspace::new(basis);
    let start = dicke_state(&space)?;
    let (gmax, bmax) = angle_domains(instance)?;

    let mut best = GridOptimum {
        gamma: 0.0,
        beta: 0.0,
        value: f64::INFINITY,
        evaluations: 0,
    };
    for i in 0..resolution {
        for j in 0..resolution {
            let gamma = i as f64 * gmax / resolution as f64;
            let beta = j as f64 * bmax / resolution as f64;
            let sched = AngleSchedule::from_pairs(&[(gamma, beta)]);
            let out = ansatz::execute(&plan, &sched, start.clone())?;
            let value = scorer.best_r(&out.probabilities(), r)?;
            best.evaluations += 1;
            if value < best.value {
                best = GridOptimum {
                    gamma,
                    beta,
                    value,
                    evaluations: best.evaluations,
                };
            }
        }
    }
    Ok(best)
}
