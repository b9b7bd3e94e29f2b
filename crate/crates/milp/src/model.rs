use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectiveSense {
    #[default]
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column<S> {
    pub name: String,
    pub lower: S,
    pub upper: S,
    pub cost: S,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row<S> {
    pub name: String,
    pub coeffs: Vec<(usize, S)>,
    pub sense: Sense,
    pub rhs: S,
}

/// A linear model `min/max c·x + offset` over sparse rows and bounded columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearModel<S> {
    pub columns: Vec<Column<S>>,
    pub rows: Vec<Row<S>>,
    pub objective_offset: S,
    pub sense: ObjectiveSense,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("column `{0}` has lower bound above upper bound")]
    InvertedBounds(String),
    #[error("column `{0}` has a NaN bound or cost")]
    NanColumn(String),
    #[error("row `{0}` has a non-finite right-hand side")]
    BadRhs(String),
    #[error("row `{0}` has a non-finite coefficient")]
    BadCoefficient(String),
    #[error("row `{row}` references column {column}, model has {count}")]
    UnknownColumn { row: String, column: usize, count: usize },
    #[error("integer column `{0}` has non-integral or infinite bounds")]
    BadIntegerBounds(String),
}

impl<S: Scalar> LinearModel<S> {
    pub fn new() -> Self {
        Self {
            columns: Vec::new(),
            rows: Vec::new(),
            objective_offset: S::zero(),
            sense: ObjectiveSense::Minimize,
        }
    }

    pub fn add_column(&mut self, name: impl Into<String>, lower: S, upper: S, cost: S) -> usize {
        self.columns.push(Column {
            name: name.into(),
            lower,
            upper,
            cost,
            integer: false,
        });
        self.columns.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>, cost: S) -> usize {
        let j = self.add_column(name, S::zero(), S::one(), cost);
        self.columns[j].integer = true;
        j
    }

    pub fn add_row(&mut self, name: impl Into<String>, coeffs: Vec<(usize, S)>, sense: Sense, rhs: S) -> usize {
        self.rows.push(Row {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn has_integers(&self) -> bool {
        self.columns.iter().any(|c| c.integer)
    }

    /// Objective value of `values` including the constant offset.
    pub fn evaluate(&self, values: &[S]) -> S {
        self.columns.iter().zip(values).map(|(c, &v)| c.cost * v).sum::<S>() + self.objective_offset
    }

    /// Largest bound or row violation of `values`.
    pub fn max_violation(&self, values: &[S]) -> S {
        let mut worst = S::zero();
        for (c, &v) in self.columns.iter().zip(values) {
            worst = worst.max(c.lower - v).max(v - c.upper);
        }
        for row in &self.rows {
            let act: S = row.coeffs.iter().map(|&(j, a)| a * values[j]).sum();
            let viol = match row.sense {
                Sense::Le => act - row.rhs,
                Sense::Ge => row.rhs - act,
                Sense::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for c in &self.columns {
            if c.lower.is_nan() || c.upper.is_nan() || c.cost.is_nan() {
                return Err(ModelError::NanColumn(c.name.clone()));
            }
            if c.lower > c.upper {
                return Err(ModelError::InvertedBounds(c.name.clone()));
            }
            if c.integer
                && (!c.lower.is_finite()
                    || !c.upper.is_finite()
                    || c.lower.fract() != S::zero()
                    || c.upper.fract() != S::zero())
            {
                return Err(ModelError::BadIntegerBounds(c.name.clone()));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(ModelError::BadRhs(r.name.clone()));
            }
            for &(j, a) in &r.coeffs {
                if j >= self.columns.len() {
                    return Err(ModelError::UnknownColumn {
                        row: r.name.clone(),
                        column: j,
                        count: self.columns.len(),
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::BadCoefficient(r.name.clone()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_inverted_bounds() {
        let mut m = LinearModel::<f64>::new();
        m.add_column("x", 2.0, 1.0, 0.0);
        assert_eq!(m.validate(), Err(ModelError::InvertedBounds("x".into())));
    }

    #[test]
    fn validate_rejects_unknown_column_and_nan() {
        let mut m = LinearModel::<f64>::new();
        m.add_column("x", 0.0, 1.0, 0.0);
        m.add_row("r", vec![(3, 1.0)], Sense::Le, 1.0);
        assert!(matches!(m.validate(), Err(ModelError::UnknownColumn { column: 3, .. })));
        let mut m = LinearModel::<f64>::new();
        m.add_column("x", 0.0, 1.0, f64::NAN);
        assert!(matches!(m.validate(), Err(ModelError::NanColumn(_))));
    }

    #[test]
    fn evaluate_includes_offset() {
        let mut m = LinearModel::<f64>::new();
        m.add_column("x", 0.0, 1.0, 2.0);
        m.objective_offset = 3.0;
        assert_eq!(m.evaluate(&[0.5]), 4.0);
    }
}
