use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::diffusion::LabeledSamples;
use crate::error::{Error, Result};
use crate::numerics::{Rng, Tensor};

/// Named 2-D synthetic distribution for one class.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSpec {
    /// Mean and row-major 2×2 covariance.
    Gaussian { mean: [f64; 2], cov: [f64; 4] },
    Ring { radius: f64, width: f64 },
    TwoMoons { noise: f64 },
}

impl DatasetSpec {
    pub fn isotropic(mx: f64, my: f64, var: f64) -> Self {
        DatasetSpec::Gaussian {
            mean: [mx, my],
            cov: [var, 0.0, 0.0, var],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DatasetSpec::Gaussian { cov, .. } => {
                let [a, b, c, d] = cov;
                if (b - c).abs() > 0.0 || a <= 0.0 || a * d - b * c <= 0.0 {
                    return Err(Error::Config(format!("covariance {cov:?} is not symmetric positive definite")));
                }
            }
            DatasetSpec::Ring { radius, width } => {
                if !(radius > 0.0) || !(width >= 0.0) {
                    return Err(Error::Config(format!("ring needs radius > 0 and width >= 0, got ({radius}, {width})")));
                }
            }
            DatasetSpec::TwoMoons { noise } => {
                if !(noise >= 0.0) {
                    return Err(Error::Config(format!("two_moons noise must be >= 0, got {noise}")));
                }
            }
        }
        Ok(())
    }

    /// `n` samples as an `[n, 2]` tensor.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Tensor {
        let mut out = Vec::with_capacity(2 * n);
        match *self {
            DatasetSpec::Gaussian { mean, cov } => {
                let l00 = cov[0].sqrt();
                let l10 = cov[2] / l00;
                let l11 = (cov[3] - l10 * l10).sqrt();
                for _ in 0..n {
                    let (u, v) = (rng.normal(), rng.normal());
                    out.push(mean[0] + l00 * u);
                    out.push(mean[1] + l10 * u + l11 * v);
                }
            }
            DatasetSpec::Ring { radius, width } => {
                for _ in 0..n {
                    let theta = 2.0 * PI * rng.uniform();
                    let r = radius + width * rng.normal();
                    out.push(r * theta.cos());
                    out.push(r * theta.sin());
                }
            }
            DatasetSpec::TwoMoons { noise } => {
                for _ in 0..n {
                    let theta = PI * rng.uniform();
                    let (x, y) = if rng.uniform() < 0.5 {
                        (theta.cos(), theta.sin())
                    } else {
                        (1.0 - theta.cos(), 0.5 - theta.sin())
                    };
                    out.push(x + noise * rng.normal());
                    out.push(y + noise * rng.normal());
                }
            }
        }
        Tensor::matrix(n, 2, out).expect("sample shape")
    }
}

impl fmt::Display for DatasetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSpec::Gaussian { mean, cov } => {
                if cov[1] == 0.0 && cov[2] == 0.0 && cov[0] == cov[3] {
                    write!(f, "gaussian({}, {}, {})", mean[0], mean[1], cov[0])
                } else {
                    write!(
                        f,
                        "gaussian({}, {}, {}, {}, {}, {})",
                        mean[0], mean[1], cov[0], cov[1], cov[2], cov[3]
                    )
                }
            }
            DatasetSpec::Ring { radius, width } => write!(f, "ring({radius}, {width})"),
            DatasetSpec::TwoMoons { noise } => write!(f, "two_moons({noise})"),
        }
    }
}

impl FromStr for DatasetSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let open = s.find('(').ok_or_else(|| format!("expected name(args), got `{s}`"))?;
        if !s.ends_with(')') {
            return Err(format!("missing closing parenthesis in `{s}`"));
        }
        let name = s[..open].trim();
        let args = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| format!("bad number `{}` in `{s}`", a.trim())))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let spec = match (name, args.as_slice()) {
            ("gaussian", &[mx, my, var]) => DatasetSpec::isotropic(mx, my, var),
            ("gaussian", &[mx, my, a, b, c, d]) => DatasetSpec::Gaussian {
                mean: [mx, my],
                cov: [a, b, c, d],
            },
            ("ring", &[radius, width]) => DatasetSpec::Ring { radius, width },
            ("two_moons", &[noise]) => DatasetSpec::TwoMoons { noise },
            _ => {
                return Err(format!(
                    "unknown distribution `{s}`; expected gaussian(mx, my, var), \
                     gaussian(mx, my, cxx, cxy, cyx, cyy), ring(radius, width) or two_moons(noise)"
                ))
            }
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

/// `per_class` samples from each spec, interleaved by class so any prefix is balanced.
pub fn labeled_dataset(specs: &[DatasetSpec], per_class: usize, rng: &mut Rng) -> Result<LabeledSamples> {
    let parts: Vec<Tensor> = specs.iter().map(|s| s.sample(per_class, rng)).collect();
    let mut rows = Vec::with_capacity(specs.len() * per_class * 2);
    let mut labels = Vec::with_capacity(specs.len() * per_class);
    for i in 0..per_class {
        for (c, p) in parts.iter().enumerate() {
            rows.extend_from_slice(p.row(i));
            labels.push(c);
        }
    }
    LabeledSamples::new(Tensor::matrix(labels.len(), 2, rows)?, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for text in ["gaussian(-2, 0, 0.25)", "gaussian(1, 2, 1, 0.5, 0.5, 2)", "ring(1.5, 0.1)", "two_moons(0.05)"] {
            let spec: DatasetSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        assert!("gaussian(0, 0, -1)".parse::<DatasetSpec>().is_err());
        assert!("blob(1)".parse::<DatasetSpec>().is_err());
    }

    #[test]
    fn gaussian_moments() {
        let spec = DatasetSpec::Gaussian {
            mean: [1.0, -1.0],
            cov: [1.0, 0.6, 0.6, 2.0],
        };
        let x = spec.sample(50_000, &mut Rng::seed_from_u64(1));
        let set = crate::metrics::SampleSet::new(x, "g").unwrap();
        let mean = set.mean();
        let cov = set.covariance();
        assert!((mean[0] - 1.0).abs() < 0.02 && (mean[1] + 1.0).abs() < 0.02);
        for (got, want) in cov.iter().zip([1.0, 0.6, 0.6, 2.0]) {
            assert!((got - want).abs() < 0.05);
        }
    }

    #[test]
    fn ring_radius() {
        let x = DatasetSpec::Ring { radius: 2.0, width: 0.0 }.sample(100, &mut Rng::seed_from_u64(2));
        for i in 0..100 {
            let r = (x.get2(i, 0).powi(2) + x.get2(i, 1).powi(2)).sqrt();
            assert!((r - 2.0).abs() < 1e-12);
        }
    }
}
