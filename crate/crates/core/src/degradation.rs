//! Residual-life distributions and the degradation-based maintenance cost
//!
//! ```text
//! ω(t) = κ · [ω_p · S(t) + ω_f · (1 − S(t))] / [∫₀ᵗ S(z) dz + t_o]
//! ```
//!
//! with time measured in maintenance epochs.

use std::collections::HashMap;

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DegradationError {
    #[error("survival evaluated at negative time {0}")]
    NegativeTime(f64),
    #[error("cost denominator is zero (t = 0 with age 0)")]
    ZeroDenominator,
    #[error("invalid distribution: {0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Spec { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SurvivalModel<S> {
    Exponential {
        rate: S,
    },
    Weibull {
        shape: S,
        scale: S,
    },
    /// `(t, S(t))` points, t strictly increasing, S nonincreasing.
    Tabulated(Vec<(S, S)>),
}

/// RLD of one generator: survival of the remaining life τ, plus its current
/// age t_o in epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualLife<S> {
    pub model: SurvivalModel<S>,
    pub age: S,
}

impl<S: Scalar> ResidualLife<S> {
    pub fn new(model: SurvivalModel<S>, age: S) -> Result<Self, DegradationError> {
        let bad = |m: &str| Err(DegradationError::Invalid(m.into()));
        if !(age >= S::zero()) || !age.is_finite() {
            return bad("age must be finite and nonnegative");
        }
        match &model {
            SurvivalModel::Exponential { rate } if !(*rate > S::zero()) || !rate.is_finite() => {
                return bad("exponential rate must be positive")
            }
            SurvivalModel::Weibull { shape, scale }
                if !(*shape > S::zero() && *scale > S::zero()) || !shape.is_finite() || !scale.is_finite() =>
            {
                return bad("weibull shape and scale must be positive")
            }
            SurvivalModel::Tabulated(pts) => {
                if pts.is_empty() {
                    return bad("survival table is empty");
                }
                if pts
                    .iter()
                    .any(|(t, s)| !t.is_finite() || !s.is_finite() || *t < S::zero())
                {
                    return bad("survival table entries must be finite with t >= 0");
                }
                if pts.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return bad("survival table times must be strictly increasing");
                }
                if pts.windows(2).any(|w| w[1].1 > w[0].1) {
                    return bad("survival table values must be nonincreasing");
                }
            }
            _ => {}
        }
        Ok(Self { model, age })
    }

    /// P(τ > t).
    pub fn survival(&self, t: S) -> Result<S, DegradationError> {
        if t < S::zero() || t.is_nan() {
            return Err(DegradationError::NegativeTime(t.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(match &self.model {
            SurvivalModel::Exponential { rate } => (-*rate * t).exp(),
            SurvivalModel::Weibull { shape, scale } => (-(t / *scale).powf(*shape)).exp(),
            SurvivalModel::Tabulated(pts) => {
                let clamp = |s: S| s.max(S::zero()).min(S::one());
                if t < pts[0].0 {
                    S::one()
                } else if t >= pts[pts.len() - 1].0 {
                    clamp(pts[pts.len() - 1].1)
                } else {
                    let k = pts.partition_point(|p| p.0 <= t) - 1;
                    let (t0, s0) = pts[k];
                    let (t1, s1) = pts[k + 1];
                    clamp(s0 + (s1 - s0) * (t - t0) / (t1 - t0))
                }
            }
        })
    }

    /// ∫₀ᵗ S(z) dz by the composite trapezoid rule with `substeps` panels per epoch.
    pub fn integrated_survival(&self, t: S, substeps: usize) -> Result<S, DegradationError> {
        if t < S::zero() {
            return Err(DegradationError::NegativeTime(t.to_f64().unwrap_or(f64::NAN)));
        }
        if t == S::zero() {
            return Ok(S::zero());
        }
        let panels = (t * S::lit(substeps.max(1) as f64))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let h = t / S::lit(panels as f64);
        let mut acc = (self.survival(S::zero())? + self.survival(t)?) * S::lit(0.5);
        for i in 1..panels {
            acc += self.survival(h * S::lit(i as f64))?;
        }
        Ok(acc * h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams<S> {
    /// Maintenance criticality coefficient κ.
    pub kappa: S,
    /// ω_p, USD.
    pub preventive: S,
    /// ω_f, USD.
    pub failure: S,
    /// Trapezoid panels per epoch.
    pub substeps: usize,
}

impl<S: Scalar> Default for CostParams<S> {
    fn default() -> Self {
        Self {
            kappa: S::one(),
            preventive: S::one(),
            failure: S::lit(10.0),
            substeps: 64,
        }
    }
}

/// Expected maintenance cost of performing maintenance `t` epochs from now.
pub fn maintenance_cost<S: Scalar>(rld: &ResidualLife<S>, p: &CostParams<S>, t: S) -> Result<S, DegradationError> {
    let s = rld.survival(t)?;
    let denom = rld.integrated_survival(t, p.substeps)? + rld.age;
    if denom <= S::zero() {
        return Err(DegradationError::ZeroDenominator);
    }
    Ok(p.kappa * (p.preventive * s + p.failure * (S::one() - s)) / denom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaintenanceCostCurve<S> {
    pub generator: u32,
    /// ω_m for zero-based epochs.
    pub values: Vec<S>,
    pub params: CostParams<S>,
}

/// Time argument for epoch `m` (zero-based): its midpoint, or its end for the
/// first epoch of a brand-new unit where the midpoint formula is singular-prone.
pub fn epoch_time<S: Scalar>(m: usize, age: S) -> S {
    if m == 0 && age == S::zero() {
        S::one()
    } else {
        S::lit(m as f64 + 0.5)
    }
}

pub fn cost_curve<S: Scalar>(
    generator: u32,
    rld: &ResidualLife<S>,
    params: &CostParams<S>,
    epochs: usize,
) -> Result<MaintenanceCostCurve<S>, DegradationError> {
    if epochs == 0 {
        return Err(DegradationError::Invalid(
            "a cost curve needs at least one epoch".into(),
        ));
    }
    let values = (0..epochs)
        .map(|m| maintenance_cost(rld, params, epoch_time(m, rld.age)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MaintenanceCostCurve {
        generator,
        values,
        params: *params,
    })
}

/// Zero-based index of the first minimum.
pub fn argmin_epoch<S: Scalar>(values: &[S]) -> usize {
    assert!(!values.is_empty(), "argmin of an empty curve");
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// One parsed line of an RLD spec file.
#[derive(Debug, Clone, PartialEq)]
pub struct RldEntry<S> {
    pub generator: u32,
    pub rld: ResidualLife<S>,
    pub params: CostParams<S>,
}

/// Parse `gen_id kind params... t_o [kappa=..] [preventive=..] [failure=..]`
/// lines. Kinds: `exponential <rate>`, `weibull <shape> <scale>`,
/// `tabulated <file>`; `load` resolves table files to their contents.
pub fn parse_rld_spec<S: Scalar>(
    text: &str,
    defaults: &CostParams<S>,
    load: &dyn Fn(&str) -> std::io::Result<String>,
) -> Result<Vec<RldEntry<S>>, DegradationError> {
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |message: String| DegradationError::Spec { line, message };
        let num = |tok: &str| -> Result<S, DegradationError> {
            tok.parse::<S>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("expected a number, found `{tok}`")))
        };
        let (pos, opts): (Vec<&str>, Vec<&str>) = body.split_whitespace().partition(|t| !t.contains('='));
        if pos.len() < 3 {
            return Err(err("expected `gen_id kind params... t_o`".into()));
        }
        let generator: u32 = pos[0]
            .parse()
            .map_err(|_| err(format!("bad generator id `{}`", pos[0])))?;
        let arity = match pos[1] {
            "exponential" | "exp" => 1,
            "weibull" => 2,
            "tabulated" | "table" => 1,
            other => return Err(err(format!("unknown distribution kind `{other}`"))),
        };
        if pos.len() != 3 + arity {
            return Err(err(format!("`{}` takes {arity} parameter(s) plus t_o", pos[1])));
        }
        let model = match pos[1] {
            "exponential" | "exp" => SurvivalModel::Exponential { rate: num(pos[2])? },
            "weibull" => SurvivalModel::Weibull {
                shape: num(pos[2])?,
                scale: num(pos[3])?,
            },
            _ => {
                let table = load(pos[2]).map_err(|e| err(format!("cannot read table `{}`: {e}", pos[2])))?;
                let mut pts = Vec::new();
                for row in table.lines() {
                    let row = row.split('#').next().unwrap_or("").trim();
                    if row.is_empty() {
                        continue;
                    }
                    let cols: Vec<&str> = row.split_whitespace().collect();
                    if cols.len() != 2 {
                        return Err(err(format!("table `{}` rows need two columns", pos[2])));
                    }
                    pts.push((num(cols[0])?, num(cols[1])?));
                }
                SurvivalModel::Tabulated(pts)
            }
        };
        let age = num(pos[2 + arity])?;
        let rld = ResidualLife::new(model, age).map_err(|e| err(e.to_string()))?;
        let mut params = *defaults;
        for opt in opts {
            let (k, v) = opt.split_once('=').unwrap_or((opt, ""));
            let v = num(v)?;
            match k {
                "kappa" => params.kappa = v,
                "preventive" => params.preventive = v,
                "failure" => params.failure = v,
                other => return Err(err(format!("unknown option `{other}`"))),
            }
        }
        if seen.insert(generator, line).is_some() {
            return Err(err(format!("duplicate entry for generator {generator}")));
        }
        out.push(RldEntry { generator, rld, params });
    }
    Ok(out)
}
