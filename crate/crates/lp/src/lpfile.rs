//! Reader and writer for the CPLEX-style LP text format.
//!
//! The writer emits a fixed dialect (see `docs/lp-format.md` at the repository
//! root) whose numbers use the shortest round-trip decimal form, so that
//! `read_lp(&write_lp(m))` reproduces `m` exactly. The reader accepts that
//! dialect plus the usual whitespace and keyword variations.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::model::{Constraint, ModelInstance, Sense, VarId, Variable};
use crate::ModelError;

const TERMS_PER_LINE: usize = 8;

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:?}")
    }
}

fn write_terms(out: &mut String, model: &ModelInstance, terms: &[(VarId, f64)]) {
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c.is_sign_negative() { '-' } else { '+' };
        if k == 0 && sign == '+' {
            let _ = write!(out, " {} {}", format_number(c.abs()), model.variables[v.0].name);
        } else {
            let _ = write!(out, " {sign} {} {}", format_number(c.abs()), model.variables[v.0].name);
        }
    }
}

/// Serialises a model. The model is validated first.
pub fn write_lp(model: &ModelInstance) -> Result<String, ModelError> {
    model.validate()?;
    let mut out = String::new();
    let _ = writeln!(out, "\\ Model: {}", model.name);
    out.push_str("Minimize\n obj:");
    let obj: Vec<(VarId, f64)> = model
        .objective
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(j, &c)| (VarId(j), c))
        .collect();
    write_terms(&mut out, model, &obj);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        write_terms(&mut out, model, &c.terms);
        let _ = writeln!(out, " {} {}", c.sense, format_number(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else if v.lower.to_bits() == v.upper.to_bits() {
            let _ = writeln!(out, " {} = {}", v.name, format_number(v.lower));
        } else {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                format_number(v.lower),
                v.name,
                format_number(v.upper)
            );
        }
    }
    let ints: Vec<&str> = model
        .variables
        .iter()
        .filter(|v| v.integer)
        .map(|v| v.name.as_str())
        .collect();
    if !ints.is_empty() {
        out.push_str("Generals\n");
        for chunk in ints.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Rows,
    Bounds,
    Generals,
    Binaries,
    Done,
}

fn section_keyword(line: &str) -> Option<(Section, bool)> {
    let lower = line.trim().to_ascii_lowercase();
    let squashed: String = lower.split_whitespace().collect::<Vec<_>>().join(" ");
    match squashed.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => Some((Section::Objective, false)),
        "maximize" | "maximise" | "maximum" | "max" => Some((Section::Objective, true)),
        "subject to" | "such that" | "st" | "s.t." | "st." => Some((Section::Rows, false)),
        "bounds" | "bound" => Some((Section::Bounds, false)),
        "generals" | "general" | "gen" | "integers" | "integer" => Some((Section::Generals, false)),
        "binaries" | "binary" | "bin" => Some((Section::Binaries, false)),
        "end" => Some((Section::Done, false)),
        _ => None,
    }
}

fn parse_number(tok: &str) -> Option<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => {
            let first = tok.chars().next()?;
            if first.is_ascii_digit() || matches!(first, '+' | '-' | '.') {
                tok.parse::<f64>().ok()
            } else {
                None
            }
        }
    }
}

fn parse_sense(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// Splits a statement into tokens, separating signs and relational operators
/// that are glued to neighbouring tokens.
fn tokenize(text: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut cur = String::new();
    let flush = |cur: &mut String, toks: &mut Vec<String>| {
        if !cur.is_empty() {
            toks.push(std::mem::take(cur));
        }
    };
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            flush(&mut cur, &mut toks);
        } else if matches!(ch, '<' | '>' | '=') {
            flush(&mut cur, &mut toks);
            let mut op = ch.to_string();
            if i + 1 < chars.len() && matches!(chars[i + 1], '<' | '>' | '=') {
                op.push(chars[i + 1]);
                i += 1;
            }
            toks.push(op);
        } else if matches!(ch, '+' | '-') {
            let mantissa = cur
                .strip_suffix(['e', 'E'])
                .map(|m| m.strip_prefix(['+', '-']).unwrap_or(m));
            let exponent = mantissa.is_some_and(|m| {
                !m.is_empty() && m.chars().all(|c| c.is_ascii_digit() || c == '.')
            });
            if exponent {
                cur.push(ch);
            } else {
                flush(&mut cur, &mut toks);
                cur.push(ch);
                // a bare sign becomes its own token unless a number follows directly
                let next = chars.get(i + 1).copied();
                if !next.is_some_and(|c| c.is_ascii_digit() || c == '.' || c == 'i' || c == 'I') {
                    flush(&mut cur, &mut toks);
                }
            }
        } else {
            cur.push(ch);
        }
        i += 1;
    }
    flush(&mut cur, &mut toks);
    toks
}

struct Builder {
    variables: Vec<Variable>,
    index: HashMap<String, usize>,
    bounds_order: Vec<usize>,
    explicit_lower: Vec<bool>,
}

impl Builder {
    fn var(&mut self, name: &str) -> Result<usize, ModelError> {
        if let Some(&j) = self.index.get(name) {
            return Ok(j);
        }
        if !crate::model::is_valid_name(name) {
            return Err(ModelError::Parse(format!("invalid name {name:?}")));
        }
        self.variables.push(Variable {
            name: name.to_string(),
            lower: 0.0,
            upper: f64::INFINITY,
            integer: false,
        });
        self.explicit_lower.push(false);
        self.index.insert(name.to_string(), self.variables.len() - 1);
        Ok(self.variables.len() - 1)
    }
}

/// Parses a linear expression `[+|-] [coef] name ...`.
fn parse_terms(b: &mut Builder, toks: &[String]) -> Result<Vec<(usize, f64)>, ModelError> {
    let mut terms = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let mut sign = 1.0;
        let mut saw_sign = false;
        while i < toks.len() && (toks[i] == "+" || toks[i] == "-") {
            if toks[i] == "-" {
                sign = -sign;
            }
            saw_sign = true;
            i += 1;
        }
        if i >= toks.len() {
            return Err(ModelError::Parse("dangling sign in expression".into()));
        }
        if !saw_sign && !terms.is_empty() {
            return Err(ModelError::Parse(format!("missing operator before {}", toks[i])));
        }
        let mut coef = 1.0;
        if let Some(x) = parse_number(&toks[i]) {
            coef = x;
            i += 1;
            if i >= toks.len() {
                return Err(ModelError::Parse("constant terms are not supported".into()));
            }
        }
        if parse_number(&toks[i]).is_some() || parse_sense(&toks[i]).is_some() {
            return Err(ModelError::Parse(format!("expected a variable name, found {}", toks[i])));
        }
        let v = b.var(&toks[i])?;
        terms.push((v, sign * coef));
        i += 1;
    }
    Ok(terms)
}

fn strip_label(toks: &mut Vec<String>) -> Option<String> {
    if let Some(pos) = toks.iter().position(|t| t.ends_with(':') || t == ":") {
        if pos <= 1 {
            let mut label: String = toks[..=pos].concat();
            label.pop();
            toks.drain(..=pos);
            return Some(label);
        }
    }
    if let Some(t) = toks.first() {
        if let Some((head, tail)) = t.split_once(':') {
            let head = head.to_string();
            let tail = tail.to_string();
            if tail.is_empty() {
                toks.remove(0);
            } else {
                toks[0] = tail;
            }
            return Some(head);
        }
    }
    None
}

/// Parses LP text into a model.
///
/// Variable order follows the `Bounds` section; variables that never appear
/// there are appended in order of first appearance.
pub fn read_lp(text: &str) -> Result<ModelInstance, ModelError> {
    let mut name = String::new();
    let mut section = Section::Preamble;
    let mut maximize = false;
    let mut obj_text = String::new();
    let mut row_text = String::new();
    let mut bound_lines: Vec<String> = Vec::new();
    let mut general_text = String::new();
    let mut binary_text = String::new();
    for raw in text.lines() {
        if let Some(rest) = raw.trim_start().strip_prefix('\\') {
            if let Some(n) = rest.trim().strip_prefix("Model:") {
                if name.is_empty() {
                    name = n.trim().to_string();
                }
            }
            continue;
        }
        let line = match raw.find('\\') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        if let Some((s, max)) = section_keyword(line) {
            if s == Section::Objective {
                maximize = max;
            }
            section = s;
            continue;
        }
        match section {
            Section::Preamble => {
                return Err(ModelError::Parse(format!("text before objective section: {}", line.trim())))
            }
            Section::Objective => {
                obj_text.push(' ');
                obj_text.push_str(line);
            }
            Section::Rows => {
                row_text.push(' ');
                row_text.push_str(line);
                row_text.push('\n');
            }
            Section::Bounds => bound_lines.push(line.to_string()),
            Section::Generals => {
                general_text.push(' ');
                general_text.push_str(line);
            }
            Section::Binaries => {
                binary_text.push(' ');
                binary_text.push_str(line);
            }
            Section::Done => {
                return Err(ModelError::Parse(format!("text after End: {}", line.trim())));
            }
        }
    }
    if section != Section::Done {
        return Err(ModelError::Parse("missing End".into()));
    }

    let mut b = Builder {
        variables: Vec::new(),
        index: HashMap::new(),
        bounds_order: Vec::new(),
        explicit_lower: Vec::new(),
    };

    let mut obj_toks = tokenize(&obj_text);
    strip_label(&mut obj_toks);
    let obj_terms = parse_terms(&mut b, &obj_toks)?;

    // rows: a statement ends right after the number following its sense token
    let mut rows = Vec::new();
    let toks = tokenize(&row_text);
    let mut start = 0;
    let mut i = 0;
    while i < toks.len() {
        if let Some(sense) = parse_sense(&toks[i]) {
            let rhs_tok = toks
                .get(i + 1)
                .ok_or_else(|| ModelError::Parse("row without right-hand side".into()))?;
            let rhs = parse_number(rhs_tok)
                .filter(|x| x.is_finite())
                .ok_or_else(|| ModelError::Parse(format!("bad right-hand side {rhs_tok}")))?;
            let mut stmt: Vec<String> = toks[start..i].to_vec();
            let label = strip_label(&mut stmt).unwrap_or_else(|| format!("R{}", rows.len()));
            let terms = parse_terms(&mut b, &stmt)?;
            rows.push((label, terms, sense, rhs));
            i += 2;
            start = i;
        } else {
            i += 1;
        }
    }
    if start != toks.len() {
        return Err(ModelError::Parse("incomplete constraint at end of section".into()));
    }

    for line in &bound_lines {
        parse_bound(&mut b, line)?;
    }
    for tok in tokenize(&general_text) {
        let j = b.var(&tok)?;
        b.variables[j].integer = true;
    }
    for tok in tokenize(&binary_text) {
        let j = b.var(&tok)?;
        b.variables[j].integer = true;
        b.variables[j].lower = 0.0;
        b.variables[j].upper = 1.0;
    }

    // final order: Bounds order first, then the rest by first appearance
    let n = b.variables.len();
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    for &j in &b.bounds_order {
        if !placed[j] {
            placed[j] = true;
            order.push(j);
        }
    }
    for j in 0..n {
        if !placed[j] {
            order.push(j);
        }
    }
    let mut new_id = vec![0usize; n];
    for (k, &j) in order.iter().enumerate() {
        new_id[j] = k;
    }

    let mut model = ModelInstance::new(name);
    model.variables = order.iter().map(|&j| b.variables[j].clone()).collect();
    model.objective = vec![0.0; n];
    let obj_sign = if maximize { -1.0 } else { 1.0 };
    for (j, c) in obj_terms {
        model.objective[new_id[j]] += obj_sign * c;
    }
    model.constraints = rows
        .into_iter()
        .map(|(label, terms, sense, rhs)| Constraint {
            name: label,
            terms: terms.into_iter().map(|(j, c)| (VarId(new_id[j]), c)).collect(),
            sense,
            rhs,
        })
        .collect();
    model.validate()?;
    Ok(model)
}

fn parse_bound(b: &mut Builder, line: &str) -> Result<(), ModelError> {
    let toks = tokenize(line);
    let bad = || ModelError::Parse(format!("cannot parse bound: {}", line.trim()));
    match toks.as_slice() {
        [v, free] if free.eq_ignore_ascii_case("free") => {
            let j = b.var(v)?;
            b.bounds_order.push(j);
            b.variables[j].lower = f64::NEG_INFINITY;
            b.variables[j].upper = f64::INFINITY;
        }
        [lo, s1, v, s2, hi] => {
            let (lo, hi) = (parse_number(lo).ok_or_else(bad)?, parse_number(hi).ok_or_else(bad)?);
            if parse_sense(s1) != Some(Sense::Le) || parse_sense(s2) != Some(Sense::Le) {
                return Err(bad());
            }
            let j = b.var(v)?;
            b.bounds_order.push(j);
            b.variables[j].lower = lo;
            b.variables[j].upper = hi;
            b.explicit_lower[j] = true;
        }
        [a, s, c] => {
            let sense = parse_sense(s).ok_or_else(bad)?;
            let (v, x, var_left) = match (parse_number(a), parse_number(c)) {
                (None, Some(x)) => (a, x, true),
                (Some(x), None) => (c, x, false),
                _ => return Err(bad()),
            };
            let j = b.var(v)?;
            b.bounds_order.push(j);
            let var = &mut b.variables[j];
            match (sense, var_left) {
                (Sense::Eq, _) => {
                    var.lower = x;
                    var.upper = x;
                    b.explicit_lower[j] = true;
                }
                (Sense::Le, true) | (Sense::Ge, false) => {
                    var.upper = x;
                    // a negative upper bound on a default-bounded column frees it below
                    if x < 0.0 && !b.explicit_lower[j] {
                        var.lower = f64::NEG_INFINITY;
                    }
                }
                (Sense::Ge, true) | (Sense::Le, false) => {
                    var.lower = x;
                    b.explicit_lower[j] = true;
                }
            }
        }
        _ => return Err(bad()),
    }
    Ok(())
}
