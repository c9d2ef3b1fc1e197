//! Synthesis of swap-fused two-qubit gates into native operations.
//!
//! A fused gate is `SWAP * exp(i (xy (XX + YY) + zz ZZ))`. Two gate sets are
//! supported:
//!
//! * `CNOT_SET`: canonical (KAK) decomposition through the magic basis, then
//!   a three-CNOT template for the interaction part and ZYZ Euler angles for
//!   the local factors. Adjacent same-axis rotations are merged, which leaves
//!   at most 15 rotations per gate.
//! * `NATIVE_XY_ZZ`: one `ZZ` and one `XY` operation whose angles absorb the
//!   SWAP. The angle offsets and global phase are solved once by Gauss-Newton
//!   least squares on the dense 4x4 match.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{self, c, Mat2, Mat4, I, ZERO};
use crate::error::{Error, Result};

pub const SYNTHESIS_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateSet {
    #[serde(rename = "CNOT_SET")]
    CnotSet,
    #[serde(rename = "NATIVE_XY_ZZ")]
    NativeXyZz,
}

impl GateSet {
    pub const ALL: [GateSet; 2] = [GateSet::CnotSet, GateSet::NativeXyZz];

    pub fn name(self) -> &'static str {
        match self {
            GateSet::CnotSet => "CNOT_SET",
            GateSet::NativeXyZz => "NATIVE_XY_ZZ",
        }
    }
}

impl std::str::FromStr for GateSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase().replace('-', "_");
        GateSet::ALL
            .into_iter()
            .find(|g| g.name() == wanted)
            .ok_or_else(|| Error::invalid(format!("unsupported gate set {s:?}")))
    }
}

/// Native operation on physical wires. Rotations follow the
/// `exp(-i theta P / 2)` convention; `Zz` is `exp(i theta ZZ)` and `Xy` is
/// `exp(i theta (XX + YY))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum NativeOp {
    Cx { control: usize, target: usize },
    Rx { wire: usize, theta: f64 },
    Ry { wire: usize, theta: f64 },
    Rz { wire: usize, theta: f64 },
    Zz { a: usize, b: usize, theta: f64 },
    Xy { a: usize, b: usize, theta: f64 },
}

impl NativeOp {
    pub fn wires(&self) -> Vec<usize> {
        match *self {
            NativeOp::Cx { control, target } => vec![control, target],
            NativeOp::Rx { wire, .. } | NativeOp::Ry { wire, .. } | NativeOp::Rz { wire, .. } => {
                vec![wire]
            }
            NativeOp::Zz { a, b, .. } | NativeOp::Xy { a, b, .. } => vec![a, b],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(
            self,
            NativeOp::Cx { .. } | NativeOp::Zz { .. } | NativeOp::Xy { .. }
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            NativeOp::Cx { .. } => "cx",
            NativeOp::Rx { .. } => "rx",
            NativeOp::Ry { .. } => "ry",
            NativeOp::Rz { .. } => "rz",
            NativeOp::Zz { .. } => "zz",
            NativeOp::Xy { .. } => "xy",
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            NativeOp::Cx { .. } => None,
            NativeOp::Rx { theta, .. }
            | NativeOp::Ry { theta, .. }
            | NativeOp::Rz { theta, .. }
            | NativeOp::Zz { theta, .. }
            | NativeOp::Xy { theta, .. } => Some(theta),
        }
    }

    pub(crate) fn remap(self, map: impl Fn(usize) -> usize) -> Self {
        match self {
            NativeOp::Cx { control, target } => NativeOp::Cx {
                control: map(control),
                target: map(target),
            },
            NativeOp::Rx { wire, theta } => NativeOp::Rx {
                wire: map(wire),
                theta,
            },
            NativeOp::Ry { wire, theta } => NativeOp::Ry {
                wire: map(wire),
                theta,
            },
            NativeOp::Rz { wire, theta } => NativeOp::Rz {
                wire: map(wire),
                theta,
            },
            NativeOp::Zz { a, b, theta } => NativeOp::Zz {
                a: map(a),
                b: map(b),
                theta,
            },
            NativeOp::Xy { a, b, theta } => NativeOp::Xy {
                a: map(a),
                b: map(b),
                theta,
            },
        }
    }

    /// Applies the operation to a full-register state vector.
    pub fn apply(&self, state: &mut [Complex64], n: usize) {
        match *self {
            NativeOp::Cx { control, target } => {
                dense::apply_2q(state, n, control, target, &dense::cnot())
            }
            NativeOp::Rx { wire, theta } => dense::apply_1q(state, n, wire, &dense::rx(theta)),
            NativeOp::Ry { wire, theta } => dense::apply_1q(state, n, wire, &dense::ry(theta)),
            NativeOp::Rz { wire, theta } => dense::apply_1q(state, n, wire, &dense::rz(theta)),
            NativeOp::Zz { a, b, theta } => dense::apply_2q(state, n, a, b, &dense::zz_phase(theta)),
            NativeOp::Xy { a, b, theta } => dense::apply_2q(state, n, a, b, &dense::xy_mix(theta)),
        }
    }
}

/// Dense 4x4 product of operations on local wires 0 and 1.
pub fn local_unitary(ops: &[NativeOp]) -> Mat4 {
    let mut total = Mat4::identity();
    for op in ops {
        let m = match *op {
            NativeOp::Cx { control: 0, .. } => dense::cnot(),
            NativeOp::Cx { .. } => dense::swap() * dense::cnot() * dense::swap(),
            NativeOp::Rx { wire, theta } => on_wire(wire, &dense::rx(theta)),
            NativeOp::Ry { wire, theta } => on_wire(wire, &dense::ry(theta)),
            NativeOp::Rz { wire, theta } => on_wire(wire, &dense::rz(theta)),
            NativeOp::Zz { theta, .. } => dense::zz_phase(theta),
            NativeOp::Xy { theta, .. } => dense::xy_mix(theta),
        };
        total = m * total;
    }
    total
}

fn on_wire(wire: usize, m: &Mat2) -> Mat4 {
    if wire == 0 {
        dense::kron(m, &Mat2::identity())
    } else {
        dense::kron(&Mat2::identity(), m)
    }
}

/// `SWAP * exp(i (xy (XX + YY) + zz ZZ))` on one adjacent wire pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusedGate {
    pub zz: f64,
    pub xy: f64,
}

impl FusedGate {
    pub fn target(&self) -> Mat4 {
        dense::swap() * dense::xy_mix(self.xy) * dense::zz_phase(self.zz)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    /// Operations on local wires 0 and 1, in time order.
    pub ops: Vec<NativeOp>,
    /// `target = exp(i global_phase) * product(ops)`.
    pub global_phase: f64,
    pub residual: f64,
}

impl Synthesis {
    pub fn cnot_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|o| matches!(o, NativeOp::Cx { .. }))
            .count()
    }

    pub fn rotation_count(&self) -> usize {
        self.ops.iter().filter(|o| !o.is_two_qubit()).count()
    }
}

pub fn synthesize_fused(gate: &FusedGate, gate_set: GateSet) -> Result<Synthesis> {
    let target = gate.target();
    let (ops, phase) = match gate_set {
        GateSet::CnotSet => {
            let kak = canonical_decompose(&target)?;
            let mut ops = kak.to_cnot_ops();
            merge_rotations(&mut ops);
            let phase = (local_unitary(&ops).adjoint() * target).trace().arg();
            (ops, phase)
        }
        GateSet::NativeXyZz => {
            let offsets = native_offsets()?;
            let ops = vec![
                NativeOp::Zz {
                    a: 0,
                    b: 1,
                    theta: gate.zz + offsets.zz_shift,
                },
                NativeOp::Xy {
                    a: 0,
                    b: 1,
                    theta: gate.xy + offsets.xy_shift,
                },
            ];
            (ops, offsets.phase)
        }
    };
    let built = local_unitary(&ops) * Complex64::from_polar(1.0, phase);
    let residual = (target - built).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if residual > SYNTHESIS_TOLERANCE {
        return Err(Error::SynthesisFailure {
            residual,
            tolerance: SYNTHESIS_TOLERANCE,
        });
    }
    Ok(Synthesis {
        ops,
        global_phase: phase,
        residual,
    })
}

/// `U = exp(i global_phase) (A1 x B1) exp(i(a XX + b YY + c ZZ)) (A2 x B2)`.
#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    pub global_phase: f64,
    pub before: (Mat2, Mat2),
    pub interaction: [f64; 3],
    pub after: (Mat2, Mat2),
}

fn magic_basis() -> Mat4 {
    let s = 1.0 / 2f64.sqrt();
    Mat4::new(
        c(s, 0.0), c(0.0, s), ZERO, ZERO,
        ZERO, ZERO, c(0.0, s), c(s, 0.0),
        ZERO, ZERO, c(0.0, s), c(-s, 0.0),
        c(s, 0.0), c(0.0, -s), ZERO, ZERO,
    )
}

/// `exp(i (a XX + b YY + c ZZ))`.
pub fn canonical_gate(a: f64, b: f64, cc: f64) -> Mat4 {
    // XX, YY and ZZ are simultaneously diagonal in the magic basis.
    let m = magic_basis();
    let signs = interaction_signs();
    let diag = nalgebra::Vector4::from_fn(|k, _| {
        Complex64::from_polar(1.0, a * signs[k][0] + b * signs[k][1] + cc * signs[k][2])
    });
    m * Mat4::from_diagonal(&diag) * m.adjoint()
}

/// Eigenvalues of (XX, YY, ZZ) on each magic basis vector.
fn interaction_signs() -> [[f64; 3]; 4] {
    static SIGNS: OnceLock<[[f64; 3]; 4]> = OnceLock::new();
    *SIGNS.get_or_init(|| {
        let m = magic_basis();
        let gens = [
            dense::kron(&dense::pauli_x(), &dense::pauli_x()),
            dense::kron(&dense::pauli_y(), &dense::pauli_y()),
            dense::kron(&dense::pauli_z(), &dense::pauli_z()),
        ];
        let mut out = [[0.0; 3]; 4];
        for (g, generator) in gens.iter().enumerate() {
            let d = m.adjoint() * generator * m;
            for (k, row) in out.iter_mut().enumerate() {
                row[g] = d[(k, k)].re;
            }
        }
        out
    })
}

pub fn canonical_decompose(u: &Mat4) -> Result<CanonicalDecomposition> {
    let det = u.determinant();
    if (det.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::invalid("matrix is not unitary"));
    }
    let phase0 = det.arg() / 4.0;
    let v = u * Complex64::from_polar(1.0, -phase0);
    let m = magic_basis();
    let vp = m.adjoint() * v * m;
    let sym = vp.transpose() * vp;
    let re = sym.map(|z| z.re);
    let im = sym.map(|z| z.im);

    let mut p = None;
    for t in [0.0, 1.0, 0.618_033_988_7, 2.718_281_828, -1.414_213_562, 5.123_456] {
        let eig = SymmetricEigen::new(re + im * t);
        let q = eig.eigenvectors;
        let qc = q.map(|x| c(x, 0.0));
        let diag = qc.transpose() * sym * qc;
        let off: f64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| diag[(i, j)].norm())
            .fold(0.0, f64::max);
        if off < 1e-9 {
            p = Some(q);
            break;
        }
    }
    let mut p = p.ok_or(Error::SynthesisFailure {
        residual: f64::NAN,
        tolerance: SYNTHESIS_TOLERANCE,
    })?;
    if p.determinant() < 0.0 {
        p.column_mut(0).neg_mut();
    }
    let pc = p.map(|x| c(x, 0.0));
    let eigen = pc.transpose() * sym * pc;
    let mut theta: Vec<f64> = (0..4).map(|k| eigen[(k, k)].arg() / 2.0).collect();
    let det_d: f64 = theta.iter().sum::<f64>();
    // det(D) must be +1 for the left factor to land in SO(4).
    if Complex64::from_polar(1.0, det_d).re < 0.0 {
        theta[0] += PI;
    }
    let d_inv = Mat4::from_diagonal(&nalgebra::Vector4::from_fn(|k, _| {
        Complex64::from_polar(1.0, -theta[k])
    }));
    let q1 = vp * pc * d_inv;
    let k1 = m * q1 * m.adjoint();
    let k2 = m * pc.transpose() * m.adjoint();

    let shift = theta.iter().sum::<f64>() / 4.0;
    let signs = interaction_signs();
    let mut interaction = [0.0; 3];
    for (g, slot) in interaction.iter_mut().enumerate() {
        *slot = (0..4).map(|k| (theta[k] - shift) * signs[k][g]).sum::<f64>() / 4.0;
    }

    let before = split_local(&k2)?;
    let after = split_local(&k1)?;
    let core = canonical_gate(interaction[0], interaction[1], interaction[2]);
    let built = dense::kron(&after.0, &after.1) * core * dense::kron(&before.0, &before.1);
    let overlap = (built.adjoint() * u).trace();
    Ok(CanonicalDecomposition {
        global_phase: overlap.arg(),
        before,
        interaction,
        after,
    })
}

/// Factors `k = A x B` with `A`, `B` in SU(2) (up to a shared sign).
fn split_local(k: &Mat4) -> Result<(Mat2, Mat2)> {
    let block = |i: usize, j: usize| {
        Mat2::new(
            k[(2 * i, 2 * j)],
            k[(2 * i, 2 * j + 1)],
            k[(2 * i + 1, 2 * j)],
            k[(2 * i + 1, 2 * j + 1)],
        )
    };
    let (bi, bj) = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .max_by(|&(a, b), &(x, y)| block(a, b).norm().total_cmp(&block(x, y).norm()))
        .expect("four blocks");
    let big = block(bi, bj);
    let scale = big.determinant().sqrt();
    if scale.norm() < 1e-12 {
        return Err(Error::invalid("local factor is not a tensor product"));
    }
    let b = big / scale;
    let a = Mat2::from_fn(|i, j| (b.adjoint() * block(i, j)).trace() / 2.0);
    let residual = (dense::kron(&a, &b) - k).norm();
    if residual > 1e-8 {
        return Err(Error::SynthesisFailure {
            residual,
            tolerance: SYNTHESIS_TOLERANCE,
        });
    }
    Ok((a, b))
}

/// `u = exp(i phase) Rz(phi) Ry(theta) Rz(lambda)`; returns
/// `(phi, theta, lambda, phase)`.
pub fn zyz_angles(u: &Mat2) -> (f64, f64, f64, f64) {
    let det = u.determinant();
    let phase = det.arg() / 2.0;
    let su = u * Complex64::from_polar(1.0, -phase);
    let (a, b) = (su[(0, 0)], su[(1, 0)]);
    let theta = 2.0 * b.norm().atan2(a.norm());
    let sum = -2.0 * a.arg();
    let diff = 2.0 * b.arg();
    let (phi, lambda) = if b.norm() < 1e-14 {
        (sum, 0.0)
    } else if a.norm() < 1e-14 {
        (diff, 0.0)
    } else {
        ((sum + diff) / 2.0, (sum - diff) / 2.0)
    };
    let rebuilt = dense::rz(phi) * dense::ry(theta) * dense::rz(lambda);
    let overlap = (rebuilt.adjoint() * u).trace();
    (phi, theta, lambda, overlap.arg())
}

fn euler_ops(u: &Mat2, wire: usize) -> (Vec<NativeOp>, f64) {
    let (phi, theta, lambda, phase) = zyz_angles(u);
    let ops = vec![
        NativeOp::Rz {
            wire,
            theta: lambda,
        },
        NativeOp::Ry { wire, theta },
        NativeOp::Rz { wire, theta: phi },
    ];
    (ops, phase)
}

/// Three-CNOT circuit for `exp(i (a XX + b YY + c ZZ))`, exact up to a
/// global phase.
pub fn interaction_ops(a: f64, b: f64, cc: f64) -> Vec<NativeOp> {
    vec![
        NativeOp::Rz {
            wire: 1,
            theta: FRAC_PI_2,
        },
        NativeOp::Cx {
            control: 1,
            target: 0,
        },
        NativeOp::Rz {
            wire: 0,
            theta: FRAC_PI_2 - 2.0 * cc,
        },
        NativeOp::Ry {
            wire: 1,
            theta: FRAC_PI_2 - 2.0 * a,
        },
        NativeOp::Cx {
            control: 0,
            target: 1,
        },
        NativeOp::Ry {
            wire: 1,
            theta: 2.0 * b - FRAC_PI_2,
        },
        NativeOp::Cx {
            control: 1,
            target: 0,
        },
        NativeOp::Rz {
            wire: 0,
            theta: -FRAC_PI_2,
        },
    ]
}

impl CanonicalDecomposition {
    /// Unmerged op sequence, equal to the decomposed matrix up to a global
    /// phase.
    fn to_cnot_ops(&self) -> Vec<NativeOp> {
        let mut ops = Vec::with_capacity(20);
        ops.extend(euler_ops(&self.before.0, 0).0);
        ops.extend(euler_ops(&self.before.1, 1).0);
        let [a, b, cc] = self.interaction;
        ops.extend(interaction_ops(a, b, cc));
        ops.extend(euler_ops(&self.after.0, 0).0);
        ops.extend(euler_ops(&self.after.1, 1).0);
        ops
    }
}

/// Merges same-axis rotations that are adjacent on their wire and drops
/// rotations equivalent to the identity. Returns the global phase picked up
/// by wrapping angles into `(-pi, pi]`.
pub fn merge_rotations(ops: &mut Vec<NativeOp>) -> f64 {
    let mut out: Vec<NativeOp> = Vec::with_capacity(ops.len());
    let mut last: Vec<Option<usize>> = Vec::new();
    let touch = |last: &mut Vec<Option<usize>>, w: usize, idx: Option<usize>| {
        if last.len() <= w {
            last.resize(w + 1, None);
        }
        last[w] = idx;
    };
    for op in ops.drain(..) {
        let merged = match op {
            NativeOp::Rx { wire, theta } | NativeOp::Ry { wire, theta } | NativeOp::Rz { wire, theta } => {
                match last.get(wire).copied().flatten() {
                    Some(idx) if std::mem::discriminant(&out[idx]) == std::mem::discriminant(&op) => {
                        match &mut out[idx] {
                            NativeOp::Rx { theta: t, .. }
                            | NativeOp::Ry { theta: t, .. }
                            | NativeOp::Rz { theta: t, .. } => *t += theta,
                            _ => unreachable!(),
                        }
                        true
                    }
                    _ => false,
                }
            }
            _ => false,
        };
        if !merged {
            out.push(op);
            let idx = out.len() - 1;
            for w in op.wires() {
                touch(&mut last, w, Some(idx));
            }
        }
    }
    let mut phase = 0.0;
    out.retain_mut(|op| match op {
        NativeOp::Rx { theta, .. } | NativeOp::Ry { theta, .. } | NativeOp::Rz { theta, .. } => {
            let wrapped = wrap_pi(*theta);
            // R(theta + 2 pi) = -R(theta)
            let turns = ((*theta - wrapped) / (2.0 * PI)).round();
            phase += PI * turns;
            *theta = wrapped;
            wrapped.abs() > 1e-13
        }
        _ => true,
    });
    *ops = out;
    phase
}

fn wrap_pi(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Angle offsets realising `SWAP * XY(xy) ZZ(zz)` as
/// `exp(i phase) ZZ(zz + zz_shift) XY(xy + xy_shift)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NativeOffsets {
    pub zz_shift: f64,
    pub xy_shift: f64,
    pub phase: f64,
    pub residual: f64,
    /// Residual of the first candidate tried, `(pi/2, pi)` with phase
    /// `pi/4`, under this crate's gate conventions.
    pub candidate_residual: f64,
}

pub const OFFSET_CANDIDATE: (f64, f64, f64) = (FRAC_PI_2, PI, PI / 4.0);

pub fn native_offsets() -> Result<NativeOffsets> {
    static OFFSETS: OnceLock<Option<NativeOffsets>> = OnceLock::new();
    OFFSETS
        .get_or_init(solve_native_offsets)
        .ok_or(Error::SynthesisFailure {
            residual: f64::INFINITY,
            tolerance: SYNTHESIS_TOLERANCE,
        })
}

fn native_residual(target: &Mat4, zz: f64, xy: f64, v: &Vector3<f64>) -> Mat4 {
    target
        - dense::zz_phase(zz + v[0]) * dense::xy_mix(xy + v[1]) * Complex64::from_polar(1.0, v[2])
}

fn max_entry(m: &Mat4) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn solve_native_offsets() -> Option<NativeOffsets> {
    let (zz, xy) = (0.3, 0.7);
    let target = FusedGate { zz, xy }.target();
    let zz_gen = dense::kron(&dense::pauli_z(), &dense::pauli_z());
    let xy_gen = dense::kron(&dense::pauli_x(), &dense::pauli_x())
        + dense::kron(&dense::pauli_y(), &dense::pauli_y());

    let gauss_newton = |mut v: Vector3<f64>| -> (Vector3<f64>, f64) {
        for _ in 0..50 {
            let r = native_residual(&target, zz, xy, &v);
            let model = dense::zz_phase(zz + v[0])
                * dense::xy_mix(xy + v[1])
                * Complex64::from_polar(1.0, v[2]);
            // d(model)/dv for each unknown; the residual derivative is minus this.
            let derivs = [
                zz_gen * model * I,
                dense::zz_phase(zz + v[0])
                    * xy_gen
                    * dense::xy_mix(xy + v[1])
                    * Complex64::from_polar(1.0, v[2])
                    * I,
                model * I,
            ];
            let mut jtj = Matrix3::<f64>::zeros();
            let mut jtr = Vector3::<f64>::zeros();
            for (i, di) in derivs.iter().enumerate() {
                for (j, dj) in derivs.iter().enumerate() {
                    jtj[(i, j)] = di.iter().zip(dj.iter()).map(|(x, y)| (x.conj() * y).re).sum();
                }
                jtr[i] = di.iter().zip(r.iter()).map(|(x, y)| (x.conj() * y).re).sum();
            }
            let Some(step) = jtj.lu().solve(&jtr) else {
                break;
            };
            v += step;
            if step.norm() < 1e-15 {
                break;
            }
        }
        let res = max_entry(&native_residual(&target, zz, xy, &v));
        (v, res)
    };

    let (cz, cx, cphase) = OFFSET_CANDIDATE;
    let candidate = Vector3::new(cz, cx, cphase);
    let candidate_residual = max_entry(&native_residual(&target, zz, xy, &candidate));

    let mut starts = vec![candidate];
    for i in 0..4 {
        for j in 0..4 {
            let (dz, dx) = (i as f64 * PI / 4.0, j as f64 * PI / 4.0);
            let model = dense::zz_phase(zz + dz) * dense::xy_mix(xy + dx);
            let phase = (model.adjoint() * target).trace().arg();
            starts.push(Vector3::new(dz, dx, phase));
        }
    }
    starts
        .into_iter()
        .map(gauss_newton)
        .find(|(_, res)| *res < 1e-12)
        .map(|(v, residual)| NativeOffsets {
            zz_shift: v[0].rem_euclid(PI),
            xy_shift: v[1].rem_euclid(PI),
            phase: v[2],
            residual,
            candidate_residual,
        })
        .map(|mut o| {
            // Reducing the shifts modulo pi can flip the sign of the ZZ factor;
            // re-align the phase against the target.
            let model = dense::zz_phase(zz + o.zz_shift) * dense::xy_mix(xy + o.xy_shift);
            o.phase = (model.adjoint() * target).trace().arg();
            o.residual = max_entry(&native_residual(
                &target,
                zz,
                xy,
                &Vector3::new(o.zz_shift, o.xy_shift, o.phase),
            ));
            o
        })
}
