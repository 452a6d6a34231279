//! Scaling functions of the stable regime: `b(n) = n^{1/alpha}` (the slowly
//! varying factor is taken to be 1), the error scale `h_d(n)` and
//! `Delta = d/alpha - 5/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which branch of `h_d` applies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorRegime {
    /// `d/alpha > 3`: `h_d = 1`.
    Constant,
    /// `d/alpha = 3`: `h_d(n) = sum_{k<=n} 1/k`.
    Logarithmic,
    /// `2 < d/alpha < 3`: `h_d(n) = n^{3 - d/alpha}`.
    Power { exponent: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Asymptotics {
    pub alpha: f64,
    pub d: usize,
}

const RATIO_EPS: f64 = 1e-12;

impl Asymptotics {
    pub fn new(alpha: f64, d: usize) -> Self {
        Asymptotics { alpha, d }
    }

    pub fn ratio(&self) -> f64 {
        self.d as f64 / self.alpha
    }

    pub fn b(&self, n: f64) -> f64 {
        n.powf(1.0 / self.alpha)
    }

    pub fn delta(&self) -> f64 {
        self.ratio() - 2.5
    }

    pub fn regime(&self) -> Result<ErrorRegime> {
        let r = self.ratio();
        if r <= 2.0 + RATIO_EPS {
            return Err(Error::Domain(format!(
                "h_d needs d > 2 alpha (strong transience), got d/alpha = {r}"
            )));
        }
        Ok(if (r - 3.0).abs() <= RATIO_EPS {
            ErrorRegime::Logarithmic
        } else if r > 3.0 {
            ErrorRegime::Constant
        } else {
            ErrorRegime::Power { exponent: 3.0 - r }
        })
    }

    pub fn h_d(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain("h_d is defined for n >= 1".into()));
        }
        Ok(match self.regime()? {
            ErrorRegime::Constant => 1.0,
            ErrorRegime::Logarithmic => (1..=n).map(|k| 1.0 / k as f64).sum(),
            ErrorRegime::Power { exponent } => (n as f64).powf(exponent),
        })
    }

    /// Log-log slope of `h_d` that the error-term experiment compares with;
    /// for the logarithmic branch the local slope at `n` is `1 / (h_d(n))`
    /// to leading order, reported here as 0.
    pub fn predicted_error_slope(&self) -> Result<f64> {
        Ok(match self.regime()? {
            ErrorRegime::Constant | ErrorRegime::Logarithmic => 0.0,
            ErrorRegime::Power { exponent } => exponent,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_d_branches() {
        assert_eq!(Asymptotics::new(0.8, 3).h_d(12345).unwrap(), 1.0);
        let h = Asymptotics::new(1.0, 3).h_d(8).unwrap();
        assert!((h - 2.717_857_142_857_143).abs() < 1e-14);
        let a = Asymptotics::new(1.1, 3);
        let want = 1024f64.powf(3.0 - 3.0 / 1.1);
        assert!((a.h_d(1024).unwrap() - want).abs() < 1e-12 * want);
        assert!(Asymptotics::new(1.5, 3).h_d(10).is_err());
        assert!(Asymptotics::new(2.0, 3).h_d(10).is_err());
    }

    #[test]
    fn h_d_is_nondecreasing() {
        for (alpha, d) in [(0.8, 3), (1.0, 3), (1.1, 3), (1.6, 5)] {
            let a = Asymptotics::new(alpha, d);
            let mut prev = 0.0;
            for n in 1..200 {
                let h = a.h_d(n).unwrap();
                assert!(h >= prev);
                prev = h;
            }
        }
    }

    #[test]
    fn delta_sign() {
        assert!(Asymptotics::new(0.8, 3).delta() > 0.0);
        assert!((Asymptotics::new(1.6, 5).delta() - 0.625).abs() < 1e-12);
        assert!(Asymptotics::new(1.3, 3).delta() < 0.0);
    }
}
