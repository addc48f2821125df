use std::collections::HashSet;
use std::fmt;

use crate::ModelError;

/// Index of a variable inside a [`ModelInstance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimisation problem `min c'x` subject to linear rows and column bounds,
/// with an optional integrality flag per column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelInstance {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Dense objective, one coefficient per variable.
    pub objective: Vec<f64>,
}

impl ModelInstance {
    pub fn new(name: impl Into<String>) -> Self {
        ModelInstance {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, integer: bool) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            integer,
        });
        self.objective.push(0.0);
        VarId(self.variables.len() - 1)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, false)
    }

    pub fn add_integer(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, true)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, 1.0, true)
    }

    /// Adds `coef` to the objective coefficient of `var`.
    pub fn add_cost(&mut self, var: VarId, coef: f64) {
        self.objective[var.0] += coef;
    }

    /// Adds a row, merging repeated variables and dropping exact zeros.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, c) in terms {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += c,
                None => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            terms: merged,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_integer(&self) -> usize {
        self.variables.iter().filter(|v| v.integer).count()
    }

    pub fn is_mip(&self) -> bool {
        self.variables.iter().any(|v| v.integer)
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn set_integer(&mut self, id: VarId, integer: bool) {
        self.variables[id.0].integer = integer;
    }

    /// Copy of the model with every integrality restriction removed.
    pub fn relaxed(&self) -> ModelInstance {
        let mut m = self.clone();
        for v in &mut m.variables {
            v.integer = false;
        }
        m
    }

    /// Objective value of an assignment.
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest bound, row or integrality violation of an assignment.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
            if v.integer {
                worst = worst.max((x - x.round()).abs());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, a)| a * values[v.0]).sum();
            let viol = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Structural checks: finite data, consistent bounds, valid and unique names.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.objective.len() != self.variables.len() {
            return Err(ModelError::Invalid(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.variables.len()
            )));
        }
        let mut names = HashSet::new();
        for v in &self.variables {
            if !is_valid_name(&v.name) {
                return Err(ModelError::Invalid(format!("bad variable name {:?}", v.name)));
            }
            if !names.insert(v.name.as_str()) {
                return Err(ModelError::Invalid(format!("duplicate variable name {}", v.name)));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::Invalid(format!(
                    "variable {} has bounds [{}, {}]",
                    v.name, v.lower, v.upper
                )));
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(ModelError::Invalid(format!("variable {} has an empty domain", v.name)));
            }
        }
        if let Some(c) = self.objective.iter().find(|c| !c.is_finite()) {
            return Err(ModelError::Invalid(format!("objective coefficient {c}")));
        }
        let mut row_names = HashSet::new();
        for c in &self.constraints {
            if !is_valid_name(&c.name) {
                return Err(ModelError::Invalid(format!("bad constraint name {:?}", c.name)));
            }
            if !row_names.insert(c.name.as_str()) {
                return Err(ModelError::Invalid(format!("duplicate constraint name {}", c.name)));
            }
            if !c.rhs.is_finite() {
                return Err(ModelError::Invalid(format!("constraint {} has rhs {}", c.name, c.rhs)));
            }
            for &(v, a) in &c.terms {
                if v.0 >= self.variables.len() {
                    return Err(ModelError::Invalid(format!(
                        "constraint {} references variable {}",
                        c.name, v.0
                    )));
                }
                if !a.is_finite() {
                    return Err(ModelError::Invalid(format!("constraint {} has coefficient {a}", c.name)));
                }
            }
        }
        Ok(())
    }
}

/// Names are restricted to ASCII letters, digits and `_ . ( ) ,`, and must not
/// start with a digit, a period or the letter `e`/`E` followed by a digit, so
/// that they never parse as a number in the LP file format.
pub fn is_valid_name(name: &str) -> bool {
    let bytes = name.as_bytes();
    let Some(&first) = bytes.first() else {
        return false;
    };
    if name.len() > 255 || first.is_ascii_digit() || first == b'.' {
        return false;
    }
    if (first == b'e' || first == b'E') && bytes.get(1).is_some_and(|b| b.is_ascii_digit()) {
        return false;
    }
    bytes
        .iter()
        .all(|&b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'(' | b')' | b','))
}
