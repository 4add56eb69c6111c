use crate::error::{Error, Result};

/// Forward-process constants indexed by timestep `t ∈ 1..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl NoiseSchedule {
    /// Betas interpolated linearly from `beta_start` to `beta_end`, endpoints included.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps < 2 {
            return Err(Error::Config(format!("schedule needs at least 2 steps, got {steps}")));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(Error::Config(format!(
                "schedule requires 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
            )));
        }
        let span = (steps - 1) as f64;
        let betas: Vec<f64> = (0..steps)
            .map(|i| beta_start + (beta_end - beta_start) * i as f64 / span)
            .collect();
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bars = Vec::with_capacity(steps);
        let mut acc = 1.0;
        for a in &alphas {
            acc *= a;
            alpha_bars.push(acc);
        }
        Ok(Self {
            betas,
            alphas,
            alpha_bars,
        })
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    fn idx(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.steps() {
            return Err(Error::Usage(format!(
                "timestep {t} outside 1..={}",
                self.steps()
            )));
        }
        Ok(t - 1)
    }

    pub fn check(&self, t: usize) -> Result<()> {
        self.idx(t).map(|_| ())
    }

    pub fn beta(&self, t: usize) -> Result<f64> {
        Ok(self.betas[self.idx(t)?])
    }

    pub fn alpha(&self, t: usize) -> Result<f64> {
        Ok(self.alphas[self.idx(t)?])
    }

    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        Ok(self.alpha_bars[self.idx(t)?])
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self::linear(1000, 1e-4, 0.02).expect("default schedule is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_step_hand_product() {
        let s = NoiseSchedule::linear(2, 0.1, 0.2).unwrap();
        assert!((s.alpha_bar(1).unwrap() - 0.9).abs() < 1e-15);
        assert!((s.alpha_bar(2).unwrap() - 0.72).abs() < 1e-15);
    }

    #[test]
    fn invalid_ranges_rejected() {
        assert!(NoiseSchedule::linear(10, 0.2, 0.1).is_err());
        assert!(NoiseSchedule::linear(1, 0.1, 0.1).is_err());
        assert!(NoiseSchedule::linear(10, 0.0, 0.1).is_err());
        assert!(NoiseSchedule::linear(10, 0.1, 1.0).is_err());
    }

    #[test]
    fn timestep_range_is_one_based() {
        let s = NoiseSchedule::default();
        assert!(s.alpha_bar(0).is_err());
        assert!(s.alpha_bar(1000).is_ok());
        assert!(s.alpha_bar(1001).is_err());
    }
}
