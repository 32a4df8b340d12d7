//! Plain-text dump in the CPLEX LP interchange format, for cross-checking
//! against external solvers.

use std::fmt::Write;

use super::ParametricLp;

/// Render the program at parameter `a`. Variables are named `x1..xn`,
/// rows `c1..cm`.
pub fn write_lp_format(lp: &ParametricLp, a: f64) -> String {
    let mut s = String::new();
    s.push_str("\\ parametric program instantiated at a = ");
    let _ = writeln!(s, "{a:e}");
    s.push_str("Minimize\n obj:");
    push_terms(&mut s, lp.cost());
    s.push_str("\nSubject To\n");
    let rhs = lp.rhs(a);
    for (i, r) in rhs.iter().enumerate() {
        let _ = write!(s, " c{}:", i + 1);
        push_terms(&mut s, lp.matrix().row(i));
        let _ = writeln!(s, " <= {r:e}");
    }
    s.push_str("Bounds\n");
    for j in 0..lp.num_vars() {
        let _ = writeln!(s, " x{} >= 0", j + 1);
    }
    s.push_str("End\n");
    s
}

fn push_terms(s: &mut String, coefs: &[f64]) {
    let mut any = false;
    for (j, &c) in coefs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(s, " {sign} {:e} x{}", c.abs(), j + 1);
        any = true;
    }
    if !any {
        s.push_str(" 0 x1");
    }
}
