use crate::error::{Error, Result};
use serde::Serialize;

/// Finite, strictly increasing set of real symbol levels, used with equal
/// probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constellation {
    levels: Vec<f64>,
}

impl Constellation {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::Domain("a constellation needs at least 2 levels".into()));
        }
        if levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::Domain("constellation levels must be finite".into()));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain(format!(
                "constellation levels must be strictly increasing: {levels:?}"
            )));
        }
        Ok(Constellation { levels })
    }

    /// M-PAM `{0, 1, ..., M−1}`.
    pub fn pam(m: usize) -> Result<Self> {
        Self::new((0..m).map(|i| i as f64).collect())
    }

    pub fn ook() -> Self {
        Self::pam(2).expect("two levels")
    }

    /// Every level shifted by `c`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.levels.iter().map(|l| l + c).collect())
    }

    /// Every level multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::Domain(format!("scale factor must be > 0, got {c}")));
        }
        Self::new(self.levels.iter().map(|l| l * c).collect())
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn m(&self) -> usize {
        self.levels.len()
    }

    /// Largest level `â`.
    pub fn a_hat(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    /// Smallest level `ǎ`.
    pub fn a_check(&self) -> f64 {
        self.levels[0]
    }

    /// `L = (â + ǎ)/2`.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a_hat() + self.a_check())
    }

    /// `â − L`, half the spread.
    pub fn half_range(&self) -> f64 {
        0.5 * (self.a_hat() - self.a_check())
    }

    /// `E{a}` under equiprobable symbols.
    pub fn mean(&self) -> f64 {
        self.levels.iter().sum::<f64>() / self.m() as f64
    }

    /// Minimum distance between levels.
    pub fn delta_a(&self) -> f64 {
        self.levels
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Equally spaced levels (an affine image of M-PAM).
    pub fn is_uniform_pam(&self) -> bool {
        let d = self.delta_a();
        let scale = self.a_hat().abs().max(self.a_check().abs()).max(d);
        self.levels
            .windows(2)
            .all(|w| ((w[1] - w[0]) - d).abs() <= 1e-12 * scale)
    }

    /// Index of the level nearest to `x`; a tie goes to the lower level.
    pub fn nearest_index(&self, x: f64) -> usize {
        self.levels
            .windows(2)
            .take_while(|w| x > 0.5 * (w[0] + w[1]))
            .count()
    }

    /// Short label such as `pam4` or `levels[-1,1]`.
    pub fn label(&self) -> String {
        let pam = self
            .levels
            .iter()
            .enumerate()
            .all(|(i, &l)| l == i as f64);
        if pam {
            format!("pam{}", self.m())
        } else {
            let parts: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
            format!("levels[{}]", parts.join(","))
        }
    }
}
