//! OpenQASM 2.0 text output.

use std::fmt::Write as _;
use std::path::Path;

use super::{GateSet, NativeOp, PhysicalCircuit};
use crate::error::{Error, Result};

// exp(i t ZZ) = CX . Rz(-2t) on the target . CX
const ZZ_DEF: &str = "gate zz(theta) a,b { cx a,b; rz(-2*theta) b; cx a,b; }";
// exp(i t (XX+YY)) = exp(i t XX) exp(i t YY); Y = S X S^dagger.
const XY_DEF: &str = "gate xy(theta) a,b { h a; h b; cx a,b; rz(-2*theta) b; cx a,b; h a; h b; \
sdg a; sdg b; h a; h b; cx a,b; rz(-2*theta) b; cx a,b; h a; h b; s a; s b; }";

pub fn to_qasm(circuit: &PhysicalCircuit) -> String {
    let mut out = String::new();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    if circuit.gate_set == GateSet::NativeXyZz {
        out.push_str(ZZ_DEF);
        out.push('\n');
        out.push_str(XY_DEF);
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "// {} p={} gate_set={}",
        circuit.kind,
        circuit.p,
        circuit.gate_set.name()
    );
    let _ = writeln!(out, "// initial_layout {:?}", circuit.initial_layout);
    let _ = writeln!(out, "// final_layout {:?}", circuit.final_layout);
    let _ = writeln!(out, "qreg q[{}];", circuit.n);
    for op in circuit.ops() {
        let line = match *op {
            NativeOp::Cx { control, target } => format!("cx q[{control}],q[{target}];"),
            NativeOp::Rx { wire, theta } => format!("rx({theta:e}) q[{wire}];"),
            NativeOp::Ry { wire, theta } => format!("ry({theta:e}) q[{wire}];"),
            NativeOp::Rz { wire, theta } => format!("rz({theta:e}) q[{wire}];"),
            NativeOp::Zz { a, b, theta } => format!("zz({theta:e}) q[{a}],q[{b}];"),
            NativeOp::Xy { a, b, theta } => format!("xy({theta:e}) q[{a}],q[{b}];"),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn export_qasm(circuit: &PhysicalCircuit, path: &Path) -> Result<()> {
    std::fs::write(path, to_qasm(circuit)).map_err(|e| Error::io(path, e))
}
