//! Linear-connectivity compilation of ansatz plans.
//!
//! Each network slot becomes one fused `SWAP * gate` on adjacent wires, which
//! is then synthesized for the chosen gate set. The logical-to-wire layout is
//! tracked through every pass so field phases land on the right wire and the
//! final permutation is known.

mod network;
mod qasm;
mod synthesis;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use network::{build_swap_network, SwapNetwork};
pub use qasm::{export_qasm, to_qasm};
pub use synthesis::{
    canonical_decompose, canonical_gate, interaction_ops, local_unitary, merge_rotations,
    native_offsets, synthesize_fused, zyz_angles, CanonicalDecomposition, FusedGate, GateSet,
    NativeOffsets, NativeOp, Synthesis, OFFSET_CANDIDATE, SYNTHESIS_TOLERANCE,
};

use crate::ansatz::{AngleSchedule, AnsatzKind, CircuitPlan, GateFamily, Step};
use crate::error::{Error, Result};
use crate::oracle;
use crate::oracle::MAX_DENSE_QUBITS;
use crate::problem::bit;

/// A fused gate placed on wires `(w, w + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacedFusedGate {
    pub wire: usize,
    pub logical: (usize, usize),
    pub family: GateFamily,
    pub gate: FusedGate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalCircuit {
    pub kind: AnsatzKind,
    pub gate_set: GateSet,
    pub n: usize,
    pub p: usize,
    /// ASAP layers of native operations.
    pub layers: Vec<Vec<NativeOp>>,
    /// `initial_layout[w]` is the logical qubit on wire `w` at the start.
    pub initial_layout: Vec<usize>,
    pub final_layout: Vec<usize>,
    /// `logical unitary = exp(i global_phase) * circuit`, up to the wire
    /// relabelling.
    pub global_phase: f64,
    pub fused: Vec<PlacedFusedGate>,
    /// Parallel layers of fused two-qubit gates.
    pub fused_layers: usize,
}

impl PhysicalCircuit {
    pub fn ops(&self) -> impl Iterator<Item = &NativeOp> {
        self.layers.iter().flatten()
    }

    pub fn op_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn count(&self, name: &str) -> usize {
        self.ops().filter(|o| o.name() == name).count()
    }

    pub fn two_qubit_ops(&self) -> usize {
        self.ops().filter(|o| o.is_two_qubit()).count()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Depth counting two-qubit operations only.
    pub fn two_qubit_depth(&self) -> usize {
        let ops: Vec<NativeOp> = self.ops().filter(|o| o.is_two_qubit()).copied().collect();
        asap_layers(ops, self.n).len()
    }
}

pub fn compile(
    plan: &CircuitPlan,
    schedule: &AngleSchedule,
    gate_set: GateSet,
) -> Result<PhysicalCircuit> {
    if schedule.p() != plan.p() {
        return Err(Error::invalid(format!(
            "schedule has {} rounds, plan has {}",
            schedule.p(),
            plan.p()
        )));
    }
    let n = plan.n();
    let network = SwapNetwork::new(n)?;
    let fields = plan.instance().fields();
    let mut layout = plan.initial_layout().to_vec();
    let mut ops = Vec::new();
    let mut fused = Vec::new();
    let mut fused_layers = 0;
    let mut global_phase = 0.0;

    for (round, (gamma, beta)) in plan.rounds().iter().zip(schedule.pairs()) {
        for step in &round.steps {
            match step {
                Step::Pass { gates, .. } => {
                    let mut records = gates.iter();
                    for layer in network.layers() {
                        for &(w, v) in layer {
                            let record = records
                                .next()
                                .ok_or_else(|| Error::invalid("pass has fewer gates than slots"))?;
                            let here = (layout[w], layout[v]);
                            let (a, b) = record.pair;
                            if here != (a, b) && here != (b, a) {
                                return Err(Error::invalid(format!(
                                    "gate on ({a}, {b}) does not match network slot holding {here:?}"
                                )));
                            }
                            let (zz, xy) = record.interaction(gamma, beta);
                            let gate = FusedGate { zz, xy };
                            let synth = synthesize_fused(&gate, gate_set)?;
                            global_phase += synth.global_phase;
                            ops.extend(synth.ops.iter().map(|op| op.remap(|l| w + l)));
                            fused.push(PlacedFusedGate {
                                wire: w,
                                logical: here,
                                family: record.family,
                                gate,
                            });
                            layout.swap(w, v);
                        }
                    }
                    if records.next().is_some() {
                        return Err(Error::invalid("pass has more gates than slots"));
                    }
                    fused_layers += network.nonempty_layers();
                }
                Step::FieldPhases => {
                    for (w, &logical) in layout.iter().enumerate() {
                        let h = fields[logical];
                        if h != 0.0 {
                            ops.push(NativeOp::Rz {
                                wire: w,
                                theta: -2.0 * gamma * h,
                            });
                        }
                    }
                }
            }
        }
    }
    global_phase += merge_rotations(&mut ops);

    Ok(PhysicalCircuit {
        kind: plan.kind(),
        gate_set,
        n,
        p: plan.p(),
        layers: asap_layers(ops, n),
        initial_layout: plan.initial_layout().to_vec(),
        final_layout: layout,
        global_phase,
        fused,
        fused_layers,
    })
}

fn asap_layers(ops: Vec<NativeOp>, n: usize) -> Vec<Vec<NativeOp>> {
    let mut free = vec![0usize; n];
    let mut layers: Vec<Vec<NativeOp>> = Vec::new();
    for op in ops {
        let wires = op.wires();
        let at = wires.iter().map(|&w| free[w]).max().unwrap_or(0);
        if layers.len() <= at {
            layers.resize_with(at + 1, Vec::new);
        }
        layers[at].push(op);
        for w in wires {
            free[w] = at + 1;
        }
    }
    layers
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub kind: AnsatzKind,
    pub gate_set: GateSet,
    pub n: usize,
    pub p: usize,
    /// Fused `SWAP * gate` blocks; one per network slot.
    pub fused_two_qubit_gates: usize,
    /// Parallel layers of fused blocks.
    pub fused_two_qubit_depth: usize,
    pub native_two_qubit_gates: usize,
    pub native_two_qubit_depth: usize,
    pub cnot_count: usize,
    pub single_qubit_gates: usize,
    pub total_depth: usize,
    /// `p (N - 1)^2`, the usual estimate of extra swaps for a p-round
    /// all-to-all circuit.
    pub approx_swap_overhead: usize,
    /// `2 p (N - 1)`, the matching depth estimate.
    pub approx_depth_increase: usize,
}

pub fn depth_report(circuit: &PhysicalCircuit) -> DepthReport {
    let n1 = circuit.n.saturating_sub(1);
    let two = circuit.two_qubit_ops();
    DepthReport {
        kind: circuit.kind,
        gate_set: circuit.gate_set,
        n: circuit.n,
        p: circuit.p,
        fused_two_qubit_gates: circuit.fused.len(),
        fused_two_qubit_depth: circuit.fused_layers,
        native_two_qubit_gates: two,
        native_two_qubit_depth: circuit.two_qubit_depth(),
        cnot_count: circuit.count("cx"),
        single_qubit_gates: circuit.op_count() - two,
        total_depth: circuit.depth(),
        approx_swap_overhead: circuit.p * n1 * n1,
        approx_depth_increase: 2 * circuit.p * n1,
    }
}

/// Simulates the compiled circuit on the full register and returns
/// `|<logical|physical>|` after undoing the final wire permutation. The
/// logical reference is the dense execution of the plan.
pub fn verify_compilation(
    plan: &CircuitPlan,
    schedule: &AngleSchedule,
    circuit: &PhysicalCircuit,
) -> Result<f64> {
    let n = plan.n();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::invalid(format!(
            "dense verification supports at most {MAX_DENSE_QUBITS} qubits"
        )));
    }
    let logical = oracle::dense_execute(plan, schedule)?;
    // The Dicke input is permutation invariant, so the initial layout does
    // not change the physical starting state.
    let mut physical = oracle::DenseState::dicke(n, plan.instance().kappa())?.into_amplitudes();
    for op in circuit.ops() {
        op.apply(&mut physical, n);
    }
    let overlap: Complex64 = (0..1u64 << n)
        .map(|x| {
            let y = (0..n).fold(0usize, |acc, w| {
                let b = bit(x, n, circuit.final_layout[w]) as usize;
                acc | (b << (n - 1 - w))
            });
            logical.amplitudes()[x as usize].conj() * physical[y]
        })
        .sum();
    Ok(overlap.norm())
}
