//! Logical circuits for the alternating-operator (QAOA) and mixer-phaser
//! (QAMPA) ansätze and their variants.
//!
//! Every round is made of one or more passes over all qubit pairs. A pass
//! visits pairs in the order a linear odd-even swap network meets them, with
//! the network's wire layout carried from one pass to the next. The initial
//! layout is a seeded random permutation of the qubits, so the same
//! `ordering_seed` always yields the same gate order and the compiler can
//! replay it on a line of physical wires.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::compiler::SwapNetwork;
use crate::error::{Error, Result};
use crate::problem::ProblemInstance;
use crate::seeding;
use crate::subspace_sim::SubspaceState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AnsatzKind {
    #[serde(rename = "QAOA")]
    Qaoa,
    #[serde(rename = "QAMPA")]
    Qampa,
    #[serde(rename = "QAOA_NOJ")]
    QaoaNoJ,
    #[serde(rename = "QAMPA_NOJ")]
    QampaNoJ,
    #[serde(rename = "XY_WEIGHTED")]
    XyWeighted,
    #[serde(rename = "XY_NOJ")]
    XyNoJ,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 6] = [
        AnsatzKind::Qaoa,
        AnsatzKind::Qampa,
        AnsatzKind::QaoaNoJ,
        AnsatzKind::QampaNoJ,
        AnsatzKind::XyWeighted,
        AnsatzKind::XyNoJ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AnsatzKind::Qaoa => "QAOA",
            AnsatzKind::Qampa => "QAMPA",
            AnsatzKind::QaoaNoJ => "QAOA_NOJ",
            AnsatzKind::QampaNoJ => "QAMPA_NOJ",
            AnsatzKind::XyWeighted => "XY_WEIGHTED",
            AnsatzKind::XyNoJ => "XY_NOJ",
        }
    }

    /// Whether the circuit carries the instance couplings.
    pub fn uses_couplings(self) -> bool {
        matches!(
            self,
            AnsatzKind::Qaoa | AnsatzKind::Qampa | AnsatzKind::XyWeighted
        )
    }

    pub fn passes_per_round(self) -> usize {
        match self {
            AnsatzKind::Qaoa | AnsatzKind::QaoaNoJ => 2,
            _ => 1,
        }
    }

    fn has_phase_layer(self) -> bool {
        !matches!(self, AnsatzKind::XyWeighted | AnsatzKind::XyNoJ)
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnsatzKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase().replace('-', "_");
        AnsatzKind::ALL
            .into_iter()
            .find(|k| k.name() == wanted)
            .ok_or_else(|| Error::invalid(format!("unknown ansatz kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateFamily {
    /// `exp(i gamma c Z Z)`
    #[serde(rename = "ZZ")]
    Zz,
    /// `exp(i beta c (X X + Y Y))`
    #[serde(rename = "XY")]
    Xy,
    /// `XY(beta) * ZZ(gamma)` with the coefficient on the ZZ part.
    #[serde(rename = "MP")]
    Mp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub family: GateFamily,
    /// Logical qubits, in the wire order of the network slot.
    pub pair: (usize, usize),
    pub coefficient: f64,
}

impl GateRecord {
    /// `(zz, xy)` interaction angles: the gate is `exp(i(xy (XX+YY) + zz ZZ))`.
    pub fn interaction(&self, gamma: f64, beta: f64) -> (f64, f64) {
        match self.family {
            GateFamily::Zz => (gamma * self.coefficient, 0.0),
            GateFamily::Xy => (0.0, beta * self.coefficient),
            GateFamily::Mp => (gamma * self.coefficient, beta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    /// One swap-network pass; `gates` are in network slot order.
    Pass {
        family: GateFamily,
        gates: Vec<GateRecord>,
    },
    /// `exp(i gamma sum_a h_a Z_a)` with the instance fields.
    FieldPhases,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub steps: Vec<Step>,
}

impl Round {
    pub fn passes(&self) -> impl Iterator<Item = (GateFamily, &[GateRecord])> {
        self.steps.iter().filter_map(|s| match s {
            Step::Pass { family, gates } => Some((*family, gates.as_slice())),
            Step::FieldPhases => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitPlan {
    kind: AnsatzKind,
    instance: ProblemInstance,
    rounds: Vec<Round>,
    ordering_seed: u64,
    initial_layout: Vec<usize>,
}

impl CircuitPlan {
    pub fn kind(&self) -> AnsatzKind {
        self.kind
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }

    pub fn p(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn ordering_seed(&self) -> u64 {
        self.ordering_seed
    }

    /// Logical qubit placed on each wire before the first pass.
    pub fn initial_layout(&self) -> &[usize] {
        &self.initial_layout
    }

    pub fn gate_count(&self) -> usize {
        self.rounds
            .iter()
            .flat_map(|r| r.passes())
            .map(|(_, g)| g.len())
            .sum()
    }

    pub fn count_family(&self, family: GateFamily) -> usize {
        self.rounds
            .iter()
            .flat_map(|r| r.passes())
            .filter(|(f, _)| *f == family)
            .map(|(_, g)| g.len())
            .sum()
    }

    /// Structured text dump of the ordered gate list.
    pub fn dump(&self) -> String {
        #[derive(Serialize)]
        struct PlanDump<'a> {
            kind: AnsatzKind,
            instance_id: &'a str,
            n: usize,
            kappa: usize,
            ordering_seed: u64,
            initial_layout: &'a [usize],
            rounds: &'a [Round],
        }
        serde_json::to_string_pretty(&PlanDump {
            kind: self.kind,
            instance_id: self.instance.id(),
            n: self.instance.n(),
            kappa: self.instance.kappa(),
            ordering_seed: self.ordering_seed,
            initial_layout: &self.initial_layout,
            rounds: &self.rounds,
        })
        .expect("serializable plan")
    }
}

/// Per-round `(gamma, beta)` angles in radians, stored unwrapped as a flat
/// `[gamma_1, beta_1, gamma_2, beta_2, ...]` vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngleSchedule(Vec<f64>);

impl AngleSchedule {
    pub fn from_flat(values: Vec<f64>) -> Result<Self> {
        if values.len() % 2 != 0 {
            return Err(Error::invalid(format!(
                "schedule needs an even number of angles, got {}",
                values.len()
            )));
        }
        Ok(Self(values))
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        Self(pairs.iter().flat_map(|&(g, b)| [g, b]).collect())
    }

    pub fn zeros(p: usize) -> Self {
        Self(vec![0.0; 2 * p])
    }

    pub fn p(&self) -> usize {
        self.0.len() / 2
    }

    pub fn gamma(&self, round: usize) -> f64 {
        self.0[2 * round]
    }

    pub fn beta(&self, round: usize) -> f64 {
        self.0[2 * round + 1]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.0
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.0
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.0.chunks_exact(2).map(|c| (c[0], c[1]))
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|a| -a).collect())
    }

    /// Angles wrapped into `[0, gamma_max)` and `[0, beta_max)` for reporting.
    pub fn reduced(&self, gamma_max: f64, beta_max: f64) -> Self {
        Self(
            self.0
                .iter()
                .enumerate()
                .map(|(i, &a)| {
                    let period = if i % 2 == 0 { gamma_max } else { beta_max };
                    a.rem_euclid(period)
                })
                .collect(),
        )
    }
}

fn initial_layout(n: usize, ordering_seed: u64) -> Vec<usize> {
    let mut layout: Vec<usize> = (0..n).collect();
    layout.shuffle(&mut seeding::rng(ordering_seed));
    layout
}

/// Pair order of one network pass starting from the seeded random layout.
pub fn gate_order(n: usize, ordering_seed: u64) -> Result<Vec<(usize, usize)>> {
    let network = SwapNetwork::new(n)?;
    let mut layout = initial_layout(n, ordering_seed);
    Ok(network.run(&mut layout))
}

pub fn build(
    kind: AnsatzKind,
    instance: &ProblemInstance,
    p: usize,
    ordering_seed: u64,
) -> Result<CircuitPlan> {
    if p == 0 {
        return Err(Error::invalid("number of rounds must be at least 1"));
    }
    let n = instance.n();
    let network = SwapNetwork::new(n)?;
    let start = initial_layout(n, ordering_seed);
    let mut layout = start.clone();
    let weight = |a: usize, b: usize| {
        if kind.uses_couplings() {
            instance.coupling(a, b)
        } else {
            1.0
        }
    };
    let mut pass = |family: GateFamily| {
        let gates = network
            .run(&mut layout)
            .into_iter()
            .map(|(a, b)| GateRecord {
                family,
                pair: (a, b),
                coefficient: match family {
                    // QAOA mixers never carry couplings.
                    GateFamily::Xy if kind != AnsatzKind::XyWeighted => 1.0,
                    _ => weight(a, b),
                },
            })
            .collect();
        Step::Pass { family, gates }
    };
    let fields = instance.has_fields() && kind.has_phase_layer();

    let rounds = (0..p)
        .map(|_| {
            let mut steps = Vec::with_capacity(3);
            match kind {
                AnsatzKind::Qaoa | AnsatzKind::QaoaNoJ => {
                    steps.push(pass(GateFamily::Zz));
                    if fields {
                        steps.push(Step::FieldPhases);
                    }
                    steps.push(pass(GateFamily::Xy));
                }
                AnsatzKind::Qampa | AnsatzKind::QampaNoJ => {
                    steps.push(pass(GateFamily::Mp));
                    if fields {
                        steps.push(Step::FieldPhases);
                    }
                }
                AnsatzKind::XyWeighted | AnsatzKind::XyNoJ => {
                    steps.push(pass(GateFamily::Xy));
                }
            }
            Round { steps }
        })
        .collect();

    Ok(CircuitPlan {
        kind,
        instance: instance.clone(),
        rounds,
        ordering_seed,
        initial_layout: start,
    })
}

/// Applies the plan's rounds to `state` in order.
pub fn execute(
    plan: &CircuitPlan,
    schedule: &AngleSchedule,
    initial_state: SubspaceState,
) -> Result<SubspaceState> {
    if schedule.p() != plan.p() {
        return Err(Error::invalid(format!(
            "schedule has {} rounds, plan has {}",
            schedule.p(),
            plan.p()
        )));
    }
    if initial_state.space().n() != plan.n() {
        return Err(Error::invalid("state register size does not match plan"));
    }
    let mut state = initial_state;
    for (round, (gamma, beta)) in plan.rounds.iter().zip(schedule.pairs()) {
        for step in &round.steps {
            match step {
                Step::Pass { gates, .. } => {
                    for g in gates {
                        let (a, b) = g.pair;
                        match g.family {
                            GateFamily::Zz => state.apply_zz(a, b, gamma, g.coefficient)?,
                            GateFamily::Xy => state.apply_xy(a, b, beta * g.coefficient)?,
                            GateFamily::Mp => state.apply_mp(a, b, gamma, beta, g.coefficient)?,
                        }
                    }
                }
                Step::FieldPhases => state.apply_field_phases(gamma, plan.instance.fields())?,
            }
        }
    }
    Ok(state)
}

/// `(2 pi / min nonzero |coefficient|, pi)`.
pub fn angle_domains(instance: &ProblemInstance) -> Result<(f64, f64)> {
    let min = instance
        .couplings()
        .iter()
        .chain(instance.fields())
        .map(|c| c.abs())
        .filter(|&c| c > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::invalid("all coefficients are zero"));
    }
    Ok((2.0 * PI / min, PI))
}
