use crate::error::{Error, Result};

/// Massive free scalar field in 1+1 dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeFieldSpec {
    pub mass: f64,
}

impl FreeFieldSpec {
    pub fn new(mass: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidInput(format!("mass must be positive and finite, got {mass}")));
        }
        Ok(Self { mass })
    }
}

/// How the coefficient list relates to the field being modelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// The listed coefficients are the whole series.
    Finite,
    /// Truncation of `:e^{gφ²}:`; coefficients beyond `R` are implied.
    GaussianPreset,
}

/// `φ = Σ_r d_r/r! :φ^r:` over a free field.
#[derive(Clone, Debug, PartialEq)]
pub struct WickSeriesModel {
    pub base: FreeFieldSpec,
    pub g: f64,
    /// `d_0 … d_R`.
    pub coeffs: Vec<f64>,
    /// Constant `C` with `d_r² ≤ C (2g)^r r!`; infinite when `g = 0` and some
    /// `d_r ≠ 0` with `r ≥ 1`.
    pub bound_c: f64,
    pub kind: ModelKind,
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product()
}

/// `d_r = g^{r/2} r!/(r/2)!` for even `r`, zero for odd `r`.
pub fn gaussian_coefficient(g: f64, r: usize) -> f64 {
    if r % 2 == 1 {
        0.0
    } else {
        g.powi(r as i32 / 2) * factorial(r) / factorial(r / 2)
    }
}

impl WickSeriesModel {
    pub fn new(base: FreeFieldSpec, g: f64, coeffs: Vec<f64>) -> Result<Self> {
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::InvalidInput(format!("coupling g must be non-negative, got {g}")));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("coefficient list must contain d_0".into()));
        }
        if coeffs.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        let bound_c = Self::minimal_c(g, &coeffs);
        Ok(Self { base, g, coeffs, bound_c, kind: ModelKind::Finite })
    }

    /// `max_r d_r² / ((2g)^r r!)`.
    fn minimal_c(g: f64, coeffs: &[f64]) -> f64 {
        let mut c: f64 = 0.0;
        for (r, d) in coeffs.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            let denom = (2.0 * g).powi(r as i32) * factorial(r);
            c = c.max(if denom > 0.0 { d * d / denom } else { f64::INFINITY });
        }
        c
    }

    /// The free field itself: `d_1 = 1`.
    pub fn free(mass: f64) -> Result<Self> {
        Self::new(FreeFieldSpec::new(mass)?, 0.0, vec![0.0, 1.0])
    }

    /// `:e^{gφ²}:` truncated at order `r_max`.
    pub fn gaussian(mass: f64, g: f64, r_max: usize) -> Result<Self> {
        if !(g > 0.0) {
            return Err(Error::InvalidInput(format!("Gaussian model needs g > 0, got {g}")));
        }
        let coeffs = (0..=r_max).map(|r| gaussian_coefficient(g, r)).collect();
        let mut m = Self::new(FreeFieldSpec::new(mass)?, g, coeffs)?;
        // d_r²/((2g)^r r!) = binom(r, r/2)/2^r ≤ 1, attained at r = 0
        m.bound_c = 1.0;
        m.kind = ModelKind::GaussianPreset;
        Ok(m)
    }

    pub fn mass(&self) -> f64 {
        self.base.mass
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `d_r`, zero beyond the stored list.
    pub fn coeff(&self, r: usize) -> f64 {
        self.coeffs.get(r).copied().unwrap_or(0.0)
    }

    /// Fundamental length `ℓ = √(2g/3)`.
    pub fn ell(&self) -> f64 {
        (2.0 * self.g / 3.0).sqrt()
    }

    /// Orders with a non-zero coefficient.
    pub fn support(&self) -> Vec<usize> {
        (0..self.coeffs.len()).filter(|&r| self.coeffs[r] != 0.0).collect()
    }

    /// Same model with a different truncation order.
    pub fn truncated(&self, r_max: usize) -> Result<Self> {
        match self.kind {
            ModelKind::GaussianPreset => Self::gaussian(self.mass(), self.g, r_max),
            ModelKind::Finite => {
                let coeffs = (0..=r_max).map(|r| self.coeff(r)).collect();
                Self::new(self.base, self.g, coeffs)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_coefficients_satisfy_bound_with_unit_constant() {
        let g = 0.3;
        for r in 0..20 {
            let d = gaussian_coefficient(g, r);
            assert!(d * d <= (2.0 * g).powi(r as i32) * factorial(r) * (1.0 + 1e-12));
        }
        let m = WickSeriesModel::gaussian(1.0, g, 6).unwrap();
        let want = [1.0, 0.0, 2.0 * g, 0.0, 12.0 * g * g, 0.0, 120.0 * g * g * g];
        for (a, b) in m.coeffs.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((m.ell() - 0.2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(FreeFieldSpec::new(0.0).is_err());
        assert!(WickSeriesModel::new(FreeFieldSpec::new(1.0).unwrap(), -1.0, vec![1.0]).is_err());
        assert!(WickSeriesModel::new(FreeFieldSpec::new(1.0).unwrap(), 0.1, vec![]).is_err());
    }
}
