//! Expression-string and tabulated functions used by scenario files.

use std::collections::BTreeMap;

use meval::ContextProvider;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static BUILTINS: meval::Context<'static> = meval::Context::new();
}

/// Named constants visible to every expression of a scenario.
pub type Constants = BTreeMap<String, f64>;

struct Bindings<'a> {
    vars: &'a [(&'a str, f64)],
    consts: &'a Constants,
}

impl ContextProvider for Bindings<'_> {
    fn get_var(&self, name: &str) -> Option<f64> {
        self.vars
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, v)| v)
            .or_else(|| self.consts.get(name).copied())
            .or_else(|| BUILTINS.with(|b| b.get_var(name)))
    }

    fn eval_func(&self, name: &str, args: &[f64]) -> std::result::Result<f64, meval::FuncEvalError> {
        BUILTINS.with(|b| b.eval_func(name, args))
    }
}

/// A parsed arithmetic expression such as `3.68*exp(-0.5*a)`.
#[derive(Debug, Clone)]
pub struct Formula {
    source: String,
    expr: meval::Expr,
}

impl Formula {
    pub fn parse(source: &str) -> Result<Self> {
        let expr: meval::Expr = source.parse().map_err(|e: meval::Error| Error::Expression {
            expr: source.to_string(),
            message: e.to_string(),
        })?;
        Ok(Formula {
            source: source.to_string(),
            expr,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Free identifiers referenced by the expression (excluding function names).
    pub fn variables(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .expr
            .iter()
            .filter_map(|tok| match tok {
                meval::tokenizer::Token::Var(n) => Some(n.clone()),
                _ => None,
            })
            .collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn references(&self, name: &str) -> bool {
        self.expr
            .iter()
            .any(|tok| matches!(tok, meval::tokenizer::Token::Var(n) if n == name))
    }

    pub fn eval(&self, vars: &[(&str, f64)], consts: &Constants) -> Result<f64> {
        self.expr
            .eval_with_context(Bindings { vars, consts })
            .map_err(|e| Error::Expression {
                expr: self.source.clone(),
                message: e.to_string(),
            })
    }
}

/// Scenario-file representation of a function: a number, an expression, or a table.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum FunctionSpec {
    Constant(f64),
    Expression(String),
    Table { table: Vec<[f64; 2]> },
}

impl From<f64> for FunctionSpec {
    fn from(v: f64) -> Self {
        FunctionSpec::Constant(v)
    }
}

impl From<&str> for FunctionSpec {
    fn from(s: &str) -> Self {
        FunctionSpec::Expression(s.to_string())
    }
}

/// Function of one primary argument (age or time) plus optional extra variables.
#[derive(Debug, Clone)]
pub enum ScalarFn {
    Constant(f64),
    Expression(Formula),
    /// Piecewise-linear interpolation, clamped outside the table.
    Table(Vec<[f64; 2]>),
}

impl ScalarFn {
    pub fn from_spec(spec: &FunctionSpec) -> Result<Self> {
        Ok(match spec {
            FunctionSpec::Constant(v) => ScalarFn::Constant(*v),
            FunctionSpec::Expression(s) => ScalarFn::Expression(Formula::parse(s)?),
            FunctionSpec::Table { table } => {
                if table.is_empty() {
                    return Err(Error::Parse("empty table".into()));
                }
                if table.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::Parse("table abscissae must be strictly increasing".into()));
                }
                ScalarFn::Table(table.clone())
            }
        })
    }

    pub fn references(&self, name: &str) -> bool {
        match self {
            ScalarFn::Expression(f) => f.references(name),
            _ => false,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ScalarFn::Constant(v) => format!("{v}"),
            ScalarFn::Expression(f) => f.source().to_string(),
            ScalarFn::Table(t) => format!("table[{}]", t.len()),
        }
    }

    /// Evaluates at primary argument `x` bound to `primary`, with extra bindings.
    pub fn eval(&self, primary: &str, x: f64, extra: &[(&str, f64)], consts: &Constants) -> Result<f64> {
        match self {
            ScalarFn::Constant(v) => Ok(*v),
            ScalarFn::Expression(f) => {
                let mut vars: Vec<(&str, f64)> = Vec::with_capacity(extra.len() + 1);
                vars.push((primary, x));
                vars.extend_from_slice(extra);
                f.eval(&vars, consts)
            }
            ScalarFn::Table(t) => Ok(interpolate(t, x)),
        }
    }
}

fn interpolate(table: &[[f64; 2]], x: f64) -> f64 {
    let first = table[0];
    let last = table[table.len() - 1];
    if x <= first[0] {
        return first[1];
    }
    if x >= last[0] {
        return last[1];
    }
    let k = table.partition_point(|p| p[0] <= x);
    let [x0, y0] = table[k - 1];
    let [x1, y1] = table[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}
