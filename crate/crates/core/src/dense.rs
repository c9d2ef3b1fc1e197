//! Small dense-matrix helpers for full-register state vectors.
//!
//! Full-register indices use the same packing as [`crate::problem`]: qubit
//! `q` is bit `n - 1 - q`. Two-qubit matrices act on `|q0 q1>` with `q0` as
//! the high local bit.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

pub type Mat2 = Matrix2<Complex64>;
pub type Mat4 = Matrix4<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

pub fn swap() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    m
}

/// Control on the high local bit.
pub fn cnot() -> Mat4 {
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    m
}

/// `exp(-i theta X / 2)`
pub fn rx(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat2::new(c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0))
}

/// `exp(-i theta Y / 2)`
pub fn ry(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    Mat2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

/// `exp(-i theta Z / 2)`
pub fn rz(theta: f64) -> Mat2 {
    Mat2::new(
        Complex64::from_polar(1.0, -theta / 2.0),
        ZERO,
        ZERO,
        Complex64::from_polar(1.0, theta / 2.0),
    )
}

/// `exp(i theta Z Z)`
pub fn zz_phase(theta: f64) -> Mat4 {
    let plus = Complex64::from_polar(1.0, theta);
    let minus = Complex64::from_polar(1.0, -theta);
    Mat4::from_diagonal(&nalgebra::Vector4::new(plus, minus, minus, plus))
}

/// `exp(i theta (X X + Y Y))`
pub fn xy_mix(theta: f64) -> Mat4 {
    let (s, co) = (2.0 * theta).sin_cos();
    let mut m = Mat4::zeros();
    m[(0, 0)] = ONE;
    m[(3, 3)] = ONE;
    m[(1, 1)] = c(co, 0.0);
    m[(2, 2)] = c(co, 0.0);
    m[(1, 2)] = c(0.0, s);
    m[(2, 1)] = c(0.0, s);
    m
}

/// Phase-insensitive distance: max entry of `|a - e^{i phi} b|` with the
/// phase chosen to align the traces.
pub fn phase_distance4(a: &Mat4, b: &Mat4) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    (a - b * phase).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn phase_distance2(a: &Mat2, b: &Mat2) -> f64 {
    let overlap = (b.adjoint() * a).trace();
    let phase = if overlap.norm() > 1e-300 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    (a - b * phase).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn apply_1q(state: &mut [Complex64], n: usize, qubit: usize, m: &Mat2) {
    debug_assert_eq!(state.len(), 1 << n);
    let stride = 1usize << (n - 1 - qubit);
    for base in 0..state.len() {
        if base & stride != 0 {
            continue;
        }
        let (x0, x1) = (state[base], state[base | stride]);
        state[base] = m[(0, 0)] * x0 + m[(0, 1)] * x1;
        state[base | stride] = m[(1, 0)] * x0 + m[(1, 1)] * x1;
    }
}

pub fn apply_2q(state: &mut [Complex64], n: usize, q0: usize, q1: usize, m: &Mat4) {
    debug_assert_eq!(state.len(), 1 << n);
    assert_ne!(q0, q1, "two-qubit gate on repeated qubit");
    let s0 = 1usize << (n - 1 - q0);
    let s1 = 1usize << (n - 1 - q1);
    for base in 0..state.len() {
        if base & (s0 | s1) != 0 {
            continue;
        }
        let idx = [base, base | s1, base | s0, base | s0 | s1];
        let x = idx.map(|i| state[i]);
        for (r, &target) in idx.iter().enumerate() {
            state[target] = (0..4).map(|k| m[(r, k)] * x[k]).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_gates_are_unitary() {
        for m in [zz_phase(0.3), xy_mix(-1.1), swap(), cnot(), kron(&rx(0.2), &ry(1.3))] {
            let id = m.adjoint() * m;
            assert!((id - Mat4::identity()).norm() < 1e-14);
        }
    }

    #[test]
    fn apply_2q_matches_kron_on_two_qubits() {
        let m = kron(&rx(0.4), &rz(-0.9)) * xy_mix(0.3);
        let mut state = vec![c(0.1, 0.2), c(-0.3, 0.4), c(0.5, 0.0), c(0.0, -0.6)];
        let v = nalgebra::Vector4::from_column_slice(&state);
        apply_2q(&mut state, 2, 0, 1, &m);
        let expected = m * v;
        for (a, b) in state.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn reversed_qubit_order_equals_swap_conjugation() {
        let m = kron(&rx(0.4), &ry(-0.9)) * zz_phase(0.3);
        let mut a = vec![c(0.1, 0.2), c(-0.3, 0.4), c(0.5, 0.0), c(0.0, -0.6)];
        let mut b = a.clone();
        apply_2q(&mut a, 2, 1, 0, &m);
        apply_2q(&mut b, 2, 0, 1, &(swap() * m * swap()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let m = xy_mix(0.7) * zz_phase(0.2);
        let shifted = m * Complex64::from_polar(1.0, 1.234);
        assert!(phase_distance4(&m, &shifted) < 1e-14);
        assert!(phase_distance4(&m, &swap()) > 0.1);
    }
}
