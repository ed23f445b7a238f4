//! One-token weight specs: `kind[:param][@rule]`, e.g. `sobolev:1.5`,
//! `sinc:3`, `gaussian:0.5@all` or `custom:weights.csv`.

use std::path::Path;

use quadfun_core::{SupportRule, WeightFamily, WeightKind};

use crate::error::{Error, Result};
use crate::io::read_weight_table;

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

/// Splits off an `@rule` suffix when it names a known rule, so custom paths
/// may contain `@`.
fn split_rule(spec: &str) -> (&str, Option<SupportRule>) {
    if let Some((head, tail)) = spec.rsplit_once('@') {
        if let Some(rule) = SupportRule::parse(tail) {
            return (head, Some(rule));
        }
    }
    (spec, None)
}

fn real_param(kind: &str, param: Option<&str>) -> Result<f64> {
    let p = param.ok_or_else(|| usage(format!("`{kind}` needs a parameter, e.g. {kind}:1")))?;
    p.parse::<f64>()
        .map_err(|_| usage(format!("bad {kind} parameter `{p}`")))
}

/// Parses a weight spec. Custom tables are read relative to the working
/// directory and must have `dimension` frequency columns.
pub fn parse_weight_spec(spec: &str, dimension: usize) -> Result<WeightFamily> {
    let (body, rule) = split_rule(spec.trim());
    let (kind, param) = match body.split_once(':') {
        Some((k, p)) => (k, Some(p)),
        None => (body, None),
    };
    let kind = match kind {
        "constant" => {
            if param.is_some() {
                return Err(usage("`constant` takes no parameter"));
            }
            WeightKind::Constant
        }
        "sobolev" => WeightKind::Sobolev(real_param(kind, param)?),
        "gaussian" => WeightKind::Gaussian(real_param(kind, param)?),
        "exponential" => WeightKind::Exponential(real_param(kind, param)?),
        "logarithmic" | "log" => WeightKind::Logarithmic(real_param("logarithmic", param)?),
        "sinc" => {
            let p = param.ok_or_else(|| usage("`sinc` needs a band, e.g. sinc:3"))?;
            WeightKind::Sinc(
                p.parse::<u64>()
                    .map_err(|_| usage(format!("bad sinc band `{p}`")))?,
            )
        }
        "custom" => {
            let path =
                param.ok_or_else(|| usage("`custom` needs a file, e.g. custom:weights.csv"))?;
            WeightKind::Custom(read_weight_table(Path::new(path), dimension)?)
        }
        other => return Err(usage(format!("unknown weight kind `{other}`"))),
    };
    let family = match rule {
        Some(rule) => WeightFamily::new(kind, rule)?,
        None => WeightFamily::with_default_rule(kind)?,
    };
    Ok(family)
}
