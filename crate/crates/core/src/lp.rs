//! Generic sparse mixed-integer linear program and its text LP-file export.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// (variable index, coefficient); indices unique within a row.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let ax = self.activity(x);
        match self.relation {
            Relation::Le => (ax - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - ax).max(0.0),
            Relation::Eq => (ax - self.rhs).abs(),
        }
    }
}

/// Minimisation problem `min c'x + offset` over rows and variable bounds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LpProblem {
    pub names: Vec<String>,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Variables restricted to {0, 1}, ascending.
    pub integers: Vec<usize>,
}

impl LpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        self.names.push(name.into());
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.names.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        let j = self.add_var(name, cost, 0.0, 1.0);
        self.integers.push(j);
        j
    }

    /// Adds a row; zero coefficients are dropped and duplicates merged.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (j, a) in coeffs {
            match row.iter_mut().find(|(k, _)| *k == j) {
                Some(entry) => entry.1 += a,
                None => row.push((j, a)),
            }
        }
        row.retain(|(_, a)| *a != 0.0);
        row.sort_by_key(|(j, _)| *j);
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs: row,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn fix_var(&mut self, j: usize, value: f64) {
        self.lower[j] = value;
        self.upper[j] = value;
    }

    pub fn is_integer(&self, j: usize) -> bool {
        self.integers.binary_search(&j).is_ok()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Per-row violation of `x`.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        self.constraints.iter().map(|r| r.violation(x)).collect()
    }

    pub fn max_bound_violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Checks structural invariants.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Config("per-variable vectors differ in length".into()));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j]
                || self.lower[j] == f64::INFINITY
                || self.upper[j] == f64::NEG_INFINITY
                || self.lower[j].is_nan()
                || self.upper[j].is_nan()
            {
                return Err(LpError::InvertedBounds {
                    index: j,
                    lower: self.lower[j],
                    upper: self.upper[j],
                });
            }
            if !self.objective[j].is_finite() {
                return Err(LpError::Config(format!("objective coefficient {j} is not finite")));
            }
        }
        for (r, row) in self.constraints.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite { row: r });
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::VariableOutOfRange { index: j, count: n });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite { row: r });
                }
            }
        }
        for &j in &self.integers {
            if j >= n {
                return Err(LpError::VariableOutOfRange { index: j, count: n });
            }
            if self.lower[j] < 0.0 || self.upper[j] > 1.0 {
                return Err(LpError::NonBinaryInteger(j));
            }
        }
        if self.integers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LpError::Config("integer index list must be strictly ascending".into()));
        }
        Ok(())
    }

    /// Writes the problem in the CPLEX-style LP text layout.
    pub fn to_lp_string(&self) -> String {
        let names: Vec<String> = self.names.iter().map(|n| lp_name(n)).collect();
        let mut out = String::new();
        out.push_str("\\ written by powertrain-opt\n");
        if self.objective_offset != 0.0 {
            let _ = writeln!(out, "\\ objective offset {}", fmt_num(self.objective_offset));
        }
        out.push_str("Minimize\n");
        let terms: Vec<(usize, f64)> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (j, *c))
            .collect();
        write_expr(&mut out, " obj:", &terms, &names);
        out.push('\n');

        out.push_str("Subject To\n");
        for row in &self.constraints {
            let label = format!(" {}:", lp_name(&row.name));
            write_expr(&mut out, &label, &row.coeffs, &names);
            let _ = writeln!(out, " {} {}", row.relation.symbol(), fmt_num(row.rhs));
        }

        out.push_str("Bounds\n");
        for (j, name) in names.iter().enumerate() {
            if self.is_integer(j) {
                continue;
            }
            let (l, u) = (self.lower[j], self.upper[j]);
            let line = if l == u {
                format!(" {name} = {}", fmt_num(l))
            } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
                format!(" {name} free")
            } else if u == f64::INFINITY {
                if l == 0.0 {
                    continue;
                }
                format!(" {name} >= {}", fmt_num(l))
            } else if l == f64::NEG_INFINITY {
                format!(" -inf <= {name} <= {}", fmt_num(u))
            } else {
                format!(" {} <= {name} <= {}", fmt_num(l), fmt_num(u))
            };
            out.push_str(&line);
            out.push('\n');
        }
        if !self.integers.is_empty() {
            out.push_str("Binaries\n");
            for chunk in self.integers.chunks(8) {
                let line: Vec<&str> = chunk.iter().map(|j| names[*j].as_str()).collect();
                let _ = writeln!(out, " {}", line.join(" "));
            }
        }
        out.push_str("End\n");
        out
    }
}

/// LP-file identifiers may not contain brackets or whitespace.
pub fn lp_name(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| match c {
            '[' | ']' | ' ' | ':' | '+' | '-' | '*' | '<' | '>' | '=' | '^' => '_',
            c => c,
        })
        .collect();
    while s.ends_with('_') {
        s.pop();
    }
    if s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        s.insert(0, 'x');
    }
    s
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

// keeps lines below the 255-character limit of common readers
fn write_expr(out: &mut String, label: &str, terms: &[(usize, f64)], names: &[String]) {
    let mut line = String::from(label);
    if terms.is_empty() {
        line.push_str(" 0");
    }
    for (i, &(j, a)) in terms.iter().enumerate() {
        let sign = if a < 0.0 { " -" } else if i == 0 { "" } else { " +" };
        let mag = a.abs();
        let term = if mag == 1.0 {
            format!("{sign} {}", names[j])
        } else {
            format!("{sign} {} {}", fmt_num(mag), names[j])
        };
        if line.len() + term.len() > 200 {
            out.push_str(&line);
            out.push('\n');
            line = String::from("  ");
        }
        line.push_str(&term);
    }
    out.push_str(&line);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LpProblem {
        let mut p = LpProblem::new();
        let x = p.add_var("p_fc[0]", 1.0, 0.0, f64::INFINITY);
        let y = p.add_var("p_li[0]", -2.5, f64::NEG_INFINITY, f64::INFINITY);
        let z = p.add_binary("z[0]", 0.0);
        p.add_constraint("B:balance[0]", [(x, 1.0), (y, 1.0)], Relation::Eq, 5.0);
        p.add_constraint("Z:al_on[0]", [(x, 1.0), (z, -10.0), (x, 0.0)], Relation::Le, 0.0);
        p
    }

    #[test]
    fn merges_and_drops_coefficients() {
        let mut p = small();
        let r = p.add_constraint("r", [(0, 1.0), (1, 0.0), (0, 2.0)], Relation::Ge, 1.0);
        assert_eq!(p.constraints[r].coeffs, vec![(0, 3.0)]);
    }

    #[test]
    fn residuals_and_validation() {
        let p = small();
        p.validate().unwrap();
        let res = p.residuals(&[3.0, 1.0, 0.0]);
        assert_eq!(res, vec![1.0, 3.0]);

        let mut bad = small();
        bad.constraints[0].coeffs.push((9, 1.0));
        assert!(matches!(bad.validate(), Err(LpError::VariableOutOfRange { .. })));
        let mut bad = small();
        bad.lower[0] = 2.0;
        bad.upper[0] = 1.0;
        assert!(matches!(bad.validate(), Err(LpError::InvertedBounds { .. })));
        let mut bad = small();
        bad.constraints[0].rhs = f64::NAN;
        assert!(matches!(bad.validate(), Err(LpError::NonFinite { row: 0 })));
    }

    #[test]
    fn lp_file_layout() {
        let text = small().to_lp_string();
        let sections: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with(' ') && !l.starts_with('\\'))
            .collect();
        assert_eq!(sections, vec!["Minimize", "Subject To", "Bounds", "Binaries", "End"]);
        assert!(text.contains(" obj: p_fc_0 - 2.5 p_li_0"));
        assert!(text.contains(" B_balance_0: p_fc_0 + p_li_0 = 5"));
        assert!(text.contains(" Z_al_on_0: p_fc_0 - 10 z_0 <= 0"));
        assert!(text.contains(" p_li_0 free"));
        assert!(!text.contains('['));
    }
}
