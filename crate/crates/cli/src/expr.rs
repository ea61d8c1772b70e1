//! Pointwise expressions in `x, y` for g, γ and exponent maps.

use musielak::{Field, Grid};

use crate::CliError;

/// A parsed expression, kept with its source text for error messages.
pub struct Expression {
    name: &'static str,
    text: String,
    expr: meval::Expr,
}

impl Expression {
    pub fn parse(name: &'static str, text: &str) -> Result<Self, CliError> {
        let expr: meval::Expr = text
            .parse()
            .map_err(|e| CliError::Config(format!("cannot parse {name} = {text:?}: {e}")))?;
        // bind once up front so unknown variables fail at parse time
        expr.clone()
            .bind2("x", "y")
            .map(drop)
            .map_err(|e| CliError::Config(format!("{name} = {text:?}: {e}")))?;
        Ok(Expression {
            name,
            text: text.to_string(),
            expr,
        })
    }
}

/// Evaluates `e` at every grid node (`y = 0` in 1D).
pub fn sample(grid: &Grid, e: &Expression) -> Result<Field, CliError> {
    let f = e.expr.clone().bind2("x", "y").expect("checked in parse");
    Field::sample(*grid, f, false)
        .map_err(|err| CliError::Config(format!("{} = {:?} is not finite on the grid: {err}", e.name, e.text)))
}
