use std::fmt::Write;

use super::{Affine, ConicProblem};

fn affine(p: &ConicProblem, a: &Affine) -> String {
    let mut s = format!("{:+.17e}", a.constant_term());
    for (v, c) in a.merged() {
        let _ = write!(s, " {c:+.17e}*{}", p.var_name(v));
    }
    s
}

pub(super) fn render(p: &ConicProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# conic problem: {} variables, {} cone blocks",
        p.num_vars(),
        p.constraints().len()
    );
    for (i, name) in p.var_names().iter().enumerate() {
        let _ = writeln!(out, "var {i} {name}");
    }
    let _ = writeln!(out, "maximize {}", affine(p, p.objective()));
    for (i, c) in p.constraints().iter().enumerate() {
        let _ = writeln!(out, "cone {i} {} {} {}", c.kind, c.rows.len(), c.label);
        for r in &c.rows {
            let _ = writeln!(out, "  {}", affine(p, r));
        }
    }
    out
}
