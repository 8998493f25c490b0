//! Named analytic and seeded random fields.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::space::{MetricMeasureSpace, ScalarField};
use crate::{Error, Result};

/// Built-in fields. Analytic ones are functions of the point's abscissa
/// (first coordinate, or distance to point 0 without coordinates).
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Constant(f64),
    /// `x`
    Linear,
    /// `sin(2πx)`
    Sin,
    /// `|x − 1/2|`
    AbsKink,
    /// `1` for `x ≤ 1/2`, else `0`
    Indicator,
    /// `Σ_k c_k d(·, z_k)` over 5 seeded centers with `c_k ∈ [−1, 1]`;
    /// Lipschitz with constant at most `Σ|c_k|`.
    RandomLipschitz,
    /// Independent uniform values in `[−1, 1]`.
    Random,
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        match name {
            "constant" => {
                let c = if arg.is_empty() {
                    Ok(1.0)
                } else {
                    arg.parse::<f64>()
                };
                c.map(FieldSpec::Constant)
                    .map_err(|_| Error::param(format!("bad constant `{arg}`")))
            }
            "linear" => Ok(FieldSpec::Linear),
            "sin" => Ok(FieldSpec::Sin),
            "abs-kink" => Ok(FieldSpec::AbsKink),
            "indicator" => Ok(FieldSpec::Indicator),
            "random-lipschitz" => Ok(FieldSpec::RandomLipschitz),
            "random" => Ok(FieldSpec::Random),
            other => Err(Error::param(format!("unknown field `{other}`"))),
        }
    }
}

pub fn build_field(space: &MetricMeasureSpace, spec: &FieldSpec, seed: u64) -> Result<ScalarField> {
    let x = |i: usize| space.abscissa(i);
    match spec {
        FieldSpec::Constant(c) => ScalarField::constant(space, *c),
        FieldSpec::Linear => ScalarField::from_fn(space, x),
        FieldSpec::Sin => {
            ScalarField::from_fn(space, |i| (2.0 * std::f64::consts::PI * x(i)).sin())
        }
        FieldSpec::AbsKink => ScalarField::from_fn(space, |i| (x(i) - 0.5).abs()),
        FieldSpec::Indicator => {
            ScalarField::from_fn(space, |i| if x(i) <= 0.5 { 1.0 } else { 0.0 })
        }
        FieldSpec::RandomLipschitz => random_lipschitz(space, 5, seed),
        FieldSpec::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ScalarField::from_fn(space, |_| rng.gen_range(-1.0..1.0))
        }
    }
}

pub fn random_lipschitz(
    space: &MetricMeasureSpace,
    terms: usize,
    seed: u64,
) -> Result<ScalarField> {
    if space.is_empty() {
        return Err(Error::Empty("space has no points"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(usize, f64)> = (0..terms)
        .map(|_| (rng.gen_range(0..space.len()), rng.gen_range(-1.0..1.0)))
        .collect();
    ScalarField::from_fn(space, |i| {
        terms.iter().map(|&(z, c)| c * space.dist(i, z)).sum()
    })
}

/// Reads `{"values": [..]}` with one value per point.
pub fn field_from_json(space: &MetricMeasureSpace, text: &str) -> Result<ScalarField> {
    #[derive(serde::Deserialize)]
    struct File {
        values: Vec<f64>,
    }
    let file: File = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    ScalarField::new(space, file.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::interval;

    #[test]
    fn parse_and_build() {
        let s = interval(5).unwrap();
        let cases = [
            ("constant:3", vec![3.0; 5]),
            ("linear", vec![0.0, 0.25, 0.5, 0.75, 1.0]),
            ("abs-kink", vec![0.5, 0.25, 0.0, 0.25, 0.5]),
            ("indicator", vec![1.0, 1.0, 1.0, 0.0, 0.0]),
        ];
        for (spec, want) in cases {
            let f = build_field(&s, &spec.parse().unwrap(), 0).unwrap();
            assert_eq!(f.values(), &want[..], "{spec}");
        }
        let sin = build_field(&s, &FieldSpec::Sin, 0).unwrap();
        assert!((sin.values()[1] - 1.0).abs() < 1e-15);
        assert!("nope".parse::<FieldSpec>().is_err());
        assert!("constant:x".parse::<FieldSpec>().is_err());
    }

    #[test]
    fn seeded_fields_are_reproducible() {
        let s = interval(40).unwrap();
        for spec in [FieldSpec::Random, FieldSpec::RandomLipschitz] {
            let a = build_field(&s, &spec, 7).unwrap();
            let b = build_field(&s, &spec, 7).unwrap();
            let c = build_field(&s, &spec, 8).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn json_values() {
        let s = interval(3).unwrap();
        let f = field_from_json(&s, r#"{"values":[1,2,3]}"#).unwrap();
        assert_eq!(f.values(), &[1.0, 2.0, 3.0]);
        assert!(field_from_json(&s, r#"{"values":[1]}"#).is_err());
        assert!(field_from_json(&s, "{").is_err());
    }
}
