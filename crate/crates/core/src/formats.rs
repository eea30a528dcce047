//! Wire formats: function specs, field specs and extended-real serde helpers.
//!
//! A function spec is JSON of the form
//! `{"family": "power"|"exp_power"|"affine"|"pwl", "params": {...}}`
//! or the inline shorthand `family:param,param`:
//!
//! | inline                      | map                                   |
//! |-----------------------------|---------------------------------------|
//! | `power:c,alpha`             | `c·t^alpha`                           |
//! | `exp_power:alpha,beta[,tau0]` | `exp(alpha·t^beta) − 1 + tau0`      |
//! | `affine:a,b`                | `a·t + b`                             |
//! | `pwl:t/v,t/v,...[@T]`       | piecewise linear, `+∞` from `T` on    |
//! | `step:t/v,t/v,...[@T]`      | right-continuous steps                |
//!
//! Field specs use `{"kind": ..., ...}` or `const:c`, `power:c,e` (`c·r^e`),
//! `log_power:c,e` (`c·(ln 1/r)^e`), `linear:c0,g1,g2[,g3]` (`c0 + g·x`).

use serde::{Deserialize, Serialize};

use crate::error::{QlabError, Result};
use crate::mean_inequality::field::RadialField;
use crate::monotone::{Interpolation, MonotoneMap};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Power {
        #[serde(default = "one")]
        c: f64,
        alpha: f64,
    },
    ExpPower {
        alpha: f64,
        beta: f64,
        #[serde(default)]
        tau0: f64,
    },
    Affine {
        a: f64,
        b: f64,
    },
    Pwl {
        knots: Vec<[f64; 2]>,
        #[serde(default)]
        interpolation: Interpolation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        blow_up: Option<f64>,
    },
}

fn parse_numbers(field: &str, body: &str) -> Result<Vec<f64>> {
    body.split(',')
        .enumerate()
        .map(|(i, s)| {
            s.trim().parse::<f64>().map_err(|_| {
                QlabError::spec(format!("{field}[{i}]"), format!("`{}` is not a number", s.trim()))
            })
        })
        .collect()
}

fn expect_len(field: &str, xs: &[f64], allowed: &[usize]) -> Result<()> {
    if allowed.contains(&xs.len()) {
        Ok(())
    } else {
        Err(QlabError::spec(
            field,
            format!("expected {allowed:?} parameters, got {}", xs.len()),
        ))
    }
}

fn parse_knots(body: &str) -> Result<(Vec<[f64; 2]>, Option<f64>)> {
    let (list, blow_up) = match body.split_once('@') {
        Some((l, b)) => {
            let b = b
                .trim()
                .parse::<f64>()
                .map_err(|_| QlabError::spec("blow_up", format!("`{b}` is not a number")))?;
            (l, Some(b))
        }
        None => (body, None),
    };
    let mut knots = Vec::new();
    for (i, item) in list.split(',').enumerate() {
        let (t, v) = item
            .split_once('/')
            .ok_or_else(|| QlabError::spec(format!("knots[{i}]"), "expected `t/v`"))?;
        let t = t.trim().parse::<f64>();
        let v = v.trim().parse::<f64>();
        match (t, v) {
            (Ok(t), Ok(v)) => knots.push([t, v]),
            _ => return Err(QlabError::spec(format!("knots[{i}]"), "expected numeric `t/v`")),
        }
    }
    Ok((knots, blow_up))
}

impl FunctionSpec {
    /// Parses JSON (when the text starts with `{`) or the inline shorthand.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            return serde_json::from_str(text)
                .map_err(|e| QlabError::spec("params", e.to_string()));
        }
        let (family, body) = text
            .split_once(':')
            .ok_or_else(|| QlabError::spec("family", format!("cannot parse `{text}`")))?;
        match family.trim() {
            "power" => {
                let xs = parse_numbers("params", body)?;
                expect_len("params", &xs, &[2])?;
                Ok(FunctionSpec::Power { c: xs[0], alpha: xs[1] })
            }
            "exp_power" => {
                let xs = parse_numbers("params", body)?;
                expect_len("params", &xs, &[2, 3])?;
                Ok(FunctionSpec::ExpPower {
                    alpha: xs[0],
                    beta: xs[1],
                    tau0: xs.get(2).cloned().unwrap_or(0.0),
                })
            }
            "affine" => {
                let xs = parse_numbers("params", body)?;
                expect_len("params", &xs, &[2])?;
                Ok(FunctionSpec::Affine { a: xs[0], b: xs[1] })
            }
            "pwl" | "step" => {
                let (knots, blow_up) = parse_knots(body)?;
                Ok(FunctionSpec::Pwl {
                    knots,
                    interpolation: if family.trim() == "step" {
                        Interpolation::Step
                    } else {
                        Interpolation::Linear
                    },
                    blow_up,
                })
            }
            other => Err(QlabError::spec("family", format!("unknown family `{other}`"))),
        }
    }

    pub fn build(&self) -> Result<MonotoneMap> {
        match self {
            FunctionSpec::Power { c, alpha } => MonotoneMap::power(*c, *alpha),
            FunctionSpec::ExpPower { alpha, beta, tau0 } => {
                MonotoneMap::exp_power(*alpha, *beta, *tau0)
            }
            FunctionSpec::Affine { a, b } => MonotoneMap::affine(*a, *b),
            FunctionSpec::Pwl {
                knots,
                interpolation,
                blow_up,
            } => {
                let ks: Vec<(f64, f64)> = knots.iter().map(|k| (k[0], k[1])).collect();
                MonotoneMap::table(&ks, *interpolation, *blow_up)
            }
        }
    }

    /// Recovers the spec of a base-family map; derived maps have none.
    pub fn from_map(map: &MonotoneMap) -> Option<Self> {
        Some(match map {
            MonotoneMap::Power { c, alpha } => FunctionSpec::Power { c: *c, alpha: *alpha },
            MonotoneMap::ExpPower {
                alpha,
                beta,
                offset,
            } => FunctionSpec::ExpPower {
                alpha: *alpha,
                beta: *beta,
                tau0: *offset,
            },
            MonotoneMap::Affine { a, b } => FunctionSpec::Affine { a: *a, b: *b },
            MonotoneMap::Table(t) => FunctionSpec::Pwl {
                knots: t.knots().map(|(t, v)| [t, v]).collect(),
                interpolation: t.interpolation(),
                blow_up: t.blow_up(),
            },
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { c: f64 },
    /// `c·r^exponent`
    Power { c: f64, exponent: f64 },
    /// `c·(ln 1/r)^exponent`
    LogPower { c: f64, exponent: f64 },
    /// `c0 + grad·x`, sampled on spheres
    Linear { c0: f64, grad: Vec<f64> },
}

impl FieldSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            return serde_json::from_str(text).map_err(|e| QlabError::spec("kind", e.to_string()));
        }
        let (kind, body) = text
            .split_once(':')
            .ok_or_else(|| QlabError::spec("kind", format!("cannot parse `{text}`")))?;
        let xs = parse_numbers("params", body)?;
        match kind.trim() {
            "const" | "constant" => {
                expect_len("params", &xs, &[1])?;
                Ok(FieldSpec::Constant { c: xs[0] })
            }
            "power" => {
                expect_len("params", &xs, &[2])?;
                Ok(FieldSpec::Power { c: xs[0], exponent: xs[1] })
            }
            "log_power" => {
                expect_len("params", &xs, &[2])?;
                Ok(FieldSpec::LogPower { c: xs[0], exponent: xs[1] })
            }
            "linear" => {
                if xs.len() < 3 {
                    return Err(QlabError::spec("params", "expected c0 and a gradient"));
                }
                Ok(FieldSpec::Linear {
                    c0: xs[0],
                    grad: xs[1..].to_vec(),
                })
            }
            other => Err(QlabError::spec("kind", format!("unknown field kind `{other}`"))),
        }
    }

    pub fn build(&self, dim: usize) -> Result<RadialField> {
        match self {
            FieldSpec::Constant { c } => RadialField::constant(dim, *c),
            FieldSpec::Power { c, exponent } => RadialField::power(dim, *c, *exponent),
            FieldSpec::LogPower { c, exponent } => RadialField::log_power(dim, *c, *exponent),
            FieldSpec::Linear { c0, grad } => RadialField::linear(*c0, grad.clone()).and_then(|f| {
                if f.dim() == dim {
                    Ok(f)
                } else {
                    Err(QlabError::spec(
                        "grad",
                        format!("gradient has {} components but n = {dim}", f.dim()),
                    ))
                }
            }),
        }
    }
}

/// Serializes `f64` keeping non-finite values as the strings `"inf"`,
/// `"-inf"` and `"nan"`.
pub mod extended {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad number `{other}`"))),
            },
        }
    }

    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        #[derive(serde::Serialize, serde::Deserialize)]
        struct Wrap(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                seq.serialize_element(&Wrap(*x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            let v: Vec<Wrap> = Vec::deserialize(d)?;
            Ok(v.into_iter().map(|w| w.0).collect())
        }
    }
}

/// Formats a double with 17 significant digits.
pub fn csv_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
