//! CPLEX LP text export, for cross-checking models with external solvers.

use std::fmt::Write as _;

use super::{FlowModel, Mode, VarId};

const TERMS_PER_LINE: usize = 8;

fn var_name(model: &FlowModel, var: VarId) -> String {
    let d = model.directed();
    let arcs = d.arc_count();
    let (prefix, arc) = if var < arcs {
        ("y".to_string(), var)
    } else {
        let k = (var - arcs) / arcs;
        (format!("x{}", d.commodities()[k] + 1), (var - arcs) % arcs)
    };
    let a = d.arcs()[arc];
    format!("{prefix}_{}_{}", a.tail + 1, a.head + 1)
}

fn write_terms(out: &mut String, model: &FlowModel, terms: &[(VarId, f64)]) {
    for (i, &(var, coef)) in terms.iter().enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if coef < 0.0 { '-' } else { '+' };
        let mag = coef.abs();
        if mag == 1.0 {
            let _ = write!(out, " {sign} {}", var_name(model, var));
        } else {
            let _ = write!(out, " {sign} {mag} {}", var_name(model, var));
        }
    }
    if terms.is_empty() {
        out.push_str(" 0");
    }
}

/// Renders the model in CPLEX LP format. Variables are named `y_i_j` and
/// `x<k>_i_j` with 1-based node ids (`k` is the commodity's sink node).
pub fn write_lp(model: &FlowModel) -> String {
    let lp = model.to_program();
    let mut out = String::new();
    out.push_str("\\ Steiner tree multicommodity-flow model\nMinimize\n obj:");
    let objective: Vec<(VarId, f64)> = lp
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.cost != 0.0)
        .map(|(i, v)| (i, v.cost))
        .collect();
    write_terms(&mut out, model, &objective);
    out.push_str("\nSubject To\n");
    for (r, c) in lp.constraints.iter().enumerate() {
        let _ = write!(out, " c{}:", r + 1);
        write_terms(&mut out, model, &c.terms);
        if c.lower == c.upper {
            let _ = writeln!(out, " = {}", c.upper);
        } else if c.lower.is_finite() {
            let _ = writeln!(out, " >= {}", c.lower);
        } else {
            let _ = writeln!(out, " <= {}", c.upper);
        }
    }
    out.push_str("Bounds\n");
    for (i, v) in lp.variables.iter().enumerate() {
        let name = var_name(model, i);
        if v.upper.is_finite() {
            let _ = writeln!(out, " {} <= {name} <= {}", v.lower, v.upper);
        } else {
            let _ = writeln!(out, " {name} >= {}", v.lower);
        }
    }
    if model.mode() == Mode::Integral {
        out.push_str("Generals\n");
        for (i, v) in lp.variables.iter().enumerate() {
            if v.integer {
                let _ = writeln!(out, " {}", var_name(model, i));
            }
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::g3;
    use crate::graph::to_directed;
    use crate::milp::build_model;

    #[test]
    fn g3_lp_text() {
        let m = build_model(&to_directed(&g3(), 0).unwrap(), Mode::Integral).unwrap();
        let text = write_lp(&m);
        assert!(text.contains(" obj: + 5 y_1_2 + 5 y_2_1\n"));
        assert!(text.contains(" c1: + x2_1_2 - x2_2_1 = 1\n"));
        assert!(text.contains(" c3: + x2_1_2 - y_1_2 <= 0\n"));
        assert!(text.contains(" 0 <= y_2_1 <= 1\n"));
        assert!(text.contains("Generals\n y_1_2\n y_2_1\nEnd\n"));
    }
}
