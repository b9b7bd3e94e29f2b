//! CPLEX-style LP text format, limited to what [`write_lp`] emits: one
//! objective (with an optional constant), named linear rows, explicit bounds
//! for every column, and a `Generals` section for integer columns.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{LinearModel, ObjectiveSense, Sense};
use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum LpFormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown variable `{0}` in bounds or integer section")]
    UnknownVariable(String),
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.!\"#$%&()/,;?@`'{}|~".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn render<S: Scalar>(v: S) -> String {
    if v == S::infinity() {
        "+inf".into()
    } else if v == S::neg_infinity() {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

fn push_terms<S: Scalar>(out: &mut String, terms: impl Iterator<Item = (S, String)>) {
    let mut any = false;
    for (a, name) in terms {
        let sign = if a < S::zero() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {name}", render(a.abs()));
        any = true;
    }
    if !any {
        out.push_str(" 0");
    }
}

/// Render `model` as LP text. Column and row names are sanitized to the
/// format's identifier alphabet; callers should keep them unique.
pub fn write_lp<S: Scalar>(model: &LinearModel<S>) -> String {
    let names: Vec<String> = model.columns.iter().map(|c| sanitize(&c.name)).collect();
    let mut out = String::new();
    out.push_str(match model.sense {
        ObjectiveSense::Minimize => "Minimize\n",
        ObjectiveSense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    push_terms(
        &mut out,
        model
            .columns
            .iter()
            .zip(&names)
            .filter(|(c, _)| c.cost != S::zero())
            .map(|(c, n)| (c.cost, n.clone())),
    );
    if model.objective_offset != S::zero() {
        let sign = if model.objective_offset < S::zero() { '-' } else { '+' };
        let _ = write!(out, " {sign} {}", render(model.objective_offset.abs()));
    }
    out.push_str("\nSubject To\n");
    for (i, row) in model.rows.iter().enumerate() {
        let label = if row.name.is_empty() {
            format!("r{i}")
        } else {
            sanitize(&row.name)
        };
        let _ = write!(out, " {label}:");
        push_terms(&mut out, row.coeffs.iter().map(|&(j, a)| (a, names[j].clone())));
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", render(row.rhs));
    }
    out.push_str("Bounds\n");
    for (c, n) in model.columns.iter().zip(&names) {
        if c.lower == c.upper {
            let _ = writeln!(out, " {n} = {}", render(c.lower));
        } else if c.lower == S::neg_infinity() && c.upper == S::infinity() {
            let _ = writeln!(out, " {n} free");
        } else {
            let _ = writeln!(out, " {} <= {n} <= {}", render(c.lower), render(c.upper));
        }
    }
    let ints: Vec<&String> = model
        .columns
        .iter()
        .zip(&names)
        .filter(|(c, _)| c.integer)
        .map(|(_, n)| n)
        .collect();
    if !ints.is_empty() {
        out.push_str("Generals\n");
        for n in ints {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Generals,
    End,
}

fn parse_num<S: Scalar>(tok: &str, line: usize) -> Result<S, LpFormatError> {
    match tok {
        "+inf" | "inf" | "+infinity" | "infinity" => Ok(S::infinity()),
        "-inf" | "-infinity" => Ok(S::neg_infinity()),
        _ => tok.parse::<S>().map_err(|_| LpFormatError::Syntax {
            line,
            message: format!("expected a number, found `{tok}`"),
        }),
    }
}

fn is_number(tok: &str) -> bool {
    tok.parse::<f64>().is_ok() || matches!(tok, "+inf" | "-inf" | "inf")
}

struct Builder<S> {
    model: LinearModel<S>,
    index: std::collections::HashMap<String, usize>,
    explicit_bounds: Vec<bool>,
}

impl<S: Scalar> Builder<S> {
    fn column(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.model.add_column(name, S::zero(), S::infinity(), S::zero());
        self.index.insert(name.to_string(), j);
        self.explicit_bounds.push(false);
        j
    }
}

/// Parse a linear expression `[+|-] [coef] name ...` with an optional
/// trailing constant (objective only).
fn parse_expr<S: Scalar>(
    b: &mut Builder<S>,
    toks: &[&str],
    line: usize,
) -> Result<(Vec<(usize, S)>, S), LpFormatError> {
    let mut terms = Vec::new();
    let mut constant = S::zero();
    let mut i = 0;
    while i < toks.len() {
        let mut sign = S::one();
        while i < toks.len() && (toks[i] == "+" || toks[i] == "-") {
            if toks[i] == "-" {
                sign = -sign;
            }
            i += 1;
        }
        if i >= toks.len() {
            return Err(LpFormatError::Syntax {
                line,
                message: "dangling sign".into(),
            });
        }
        if is_number(toks[i]) {
            let coef: S = parse_num(toks[i], line)?;
            if i + 1 < toks.len() && !is_number(toks[i + 1]) && toks[i + 1] != "+" && toks[i + 1] != "-" {
                let j = b.column(toks[i + 1]);
                terms.push((j, sign * coef));
                i += 2;
            } else {
                constant += sign * coef;
                i += 1;
            }
        } else {
            let j = b.column(toks[i]);
            terms.push((j, sign));
            i += 1;
        }
    }
    Ok((terms, constant))
}

/// Parse LP text produced by [`write_lp`] (or a compatible subset).
pub fn read_lp<S: Scalar>(text: &str) -> Result<LinearModel<S>, LpFormatError> {
    let mut b = Builder {
        model: LinearModel::new(),
        index: Default::default(),
        explicit_bounds: Vec::new(),
    };
    let mut section = Section::None;
    let mut objective: Option<(Vec<(usize, S)>, S)> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('\\').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let lower = content.to_ascii_lowercase();
        let next = match lower.as_str() {
            "minimize" | "minimum" | "min" => {
                b.model.sense = ObjectiveSense::Minimize;
                Some(Section::Objective)
            }
            "maximize" | "maximum" | "max" => {
                b.model.sense = ObjectiveSense::Maximize;
                Some(Section::Objective)
            }
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "generals" | "general" | "integers" => Some(Section::Generals),
            "binaries" | "binary" => Some(Section::Generals),
            "end" => Some(Section::End),
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        match section {
            Section::None | Section::End => {
                return Err(LpFormatError::Syntax {
                    line,
                    message: format!("content outside a section: `{content}`"),
                })
            }
            Section::Objective => {
                let body = strip_label(&toks);
                let (terms, c) = parse_expr(&mut b, body, line)?;
                let entry = objective.get_or_insert((Vec::new(), S::zero()));
                entry.0.extend(terms);
                entry.1 += c;
            }
            Section::Constraints => {
                let (label, body) = match toks.first() {
                    Some(t) if t.ends_with(':') => (t.trim_end_matches(':').to_string(), &toks[1..]),
                    _ => (format!("r{}", b.model.num_rows()), &toks[..]),
                };
                let pos = body
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "=" | "<" | ">" | "=<" | "=>"))
                    .ok_or_else(|| LpFormatError::Syntax {
                        line,
                        message: "constraint without a relation".into(),
                    })?;
                let sense = match body[pos] {
                    "<=" | "<" | "=<" => Sense::Le,
                    ">=" | ">" | "=>" => Sense::Ge,
                    _ => Sense::Eq,
                };
                if pos + 2 != body.len() {
                    return Err(LpFormatError::Syntax {
                        line,
                        message: "expected a single right-hand side number".into(),
                    });
                }
                let rhs = parse_num::<S>(body[pos + 1], line)?;
                let (terms, c) = parse_expr(&mut b, &body[..pos], line)?;
                b.model.add_row(label, terms, sense, rhs - c);
            }
            Section::Bounds => parse_bound(&mut b, &toks, line)?,
            Section::Generals => {
                for t in toks {
                    let j = *b
                        .index
                        .get(t)
                        .ok_or_else(|| LpFormatError::UnknownVariable(t.to_string()))?;
                    b.model.columns[j].integer = true;
                    if !b.explicit_bounds[j] {
                        b.model.columns[j].upper = S::one();
                    }
                }
            }
        }
    }
    if let Some((terms, c)) = objective {
        for (j, a) in terms {
            b.model.columns[j].cost += a;
        }
        b.model.objective_offset = c;
    }
    Ok(b.model)
}

fn strip_label<'a, 'b>(toks: &'b [&'a str]) -> &'b [&'a str] {
    match toks.first() {
        Some(t) if t.ends_with(':') => &toks[1..],
        _ => toks,
    }
}

fn parse_bound<S: Scalar>(b: &mut Builder<S>, toks: &[&str], line: usize) -> Result<(), LpFormatError> {
    let err = |m: &str| LpFormatError::Syntax {
        line,
        message: m.to_string(),
    };
    let lookup = |b: &Builder<S>, n: &str| {
        b.index
            .get(n)
            .copied()
            .ok_or_else(|| LpFormatError::UnknownVariable(n.to_string()))
    };
    match toks {
        [name, free] if free.eq_ignore_ascii_case("free") => {
            let j = lookup(b, name)?;
            b.model.columns[j].lower = S::neg_infinity();
            b.model.columns[j].upper = S::infinity();
            b.explicit_bounds[j] = true;
        }
        [name, "=", v] => {
            let j = lookup(b, name)?;
            let v = parse_num(v, line)?;
            b.model.columns[j].lower = v;
            b.model.columns[j].upper = v;
            b.explicit_bounds[j] = true;
        }
        [lo, "<=", name, "<=", up] => {
            let j = lookup(b, name)?;
            b.model.columns[j].lower = parse_num(lo, line)?;
            b.model.columns[j].upper = parse_num(up, line)?;
            b.explicit_bounds[j] = true;
        }
        [name, "<=", up] => {
            let j = lookup(b, name)?;
            b.model.columns[j].upper = parse_num(up, line)?;
            b.explicit_bounds[j] = true;
        }
        [name, ">=", lo] => {
            let j = lookup(b, name)?;
            b.model.columns[j].lower = parse_num(lo, line)?;
            b.explicit_bounds[j] = true;
        }
        _ => return Err(err("unrecognized bound")),
    }
    Ok(())
}
