//! Tversky index, focal Tversky loss and the generalized F-beta score as
//! plain reductions over whole volumes.

use crate::error::{Error, Result};
use crate::metrics::ConfusionCounts;
use crate::volume::{BinaryMask3D, ProbabilityMap3D};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TverskyParams {
    /// Weight of false negatives.
    pub alpha: f64,
    /// Weight of false positives.
    pub beta: f64,
    /// Focal parameter; the loss exponent is `1/gamma`.
    pub gamma: f64,
    /// Additive smoothing.
    pub omega: f64,
}

impl Default for TverskyParams {
    fn default() -> Self {
        Self {
            alpha: 0.85,
            beta: 0.15,
            gamma: 4.0 / 3.0,
            omega: 1.0,
        }
    }
}

impl TverskyParams {
    fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.gamma > 0.0 && self.omega > 0.0) {
            return Err(Error::InvalidParameter(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FBetaParams {
    pub beta: f64,
    pub omega: f64,
}

impl Default for FBetaParams {
    fn default() -> Self {
        Self {
            beta: 2.0,
            omega: 1.0,
        }
    }
}

/// Soft true-positive, false-negative and false-positive mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftCounts {
    pub tp: f64,
    pub fn_: f64,
    pub fp: f64,
}

pub fn soft_counts(pred: &ProbabilityMap3D, gt: &BinaryMask3D) -> Result<SoftCounts> {
    pred.geometry().ensure_same_grid(gt.geometry())?;
    let mut c = SoftCounts {
        tp: 0.0,
        fn_: 0.0,
        fp: 0.0,
    };
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        if g {
            c.tp += p;
            c.fn_ += 1.0 - p;
        } else {
            c.fp += p;
        }
    }
    Ok(c)
}

/// `(TP + Ω) / (TP + α·FN + β·FP + Ω)` over soft counts.
pub fn tversky_index(
    pred: &ProbabilityMap3D,
    gt: &BinaryMask3D,
    params: &TverskyParams,
) -> Result<f64> {
    params.validate()?;
    let c = soft_counts(pred, gt)?;
    Ok(tversky_from_counts(&c, params))
}

pub fn tversky_from_counts(c: &SoftCounts, params: &TverskyParams) -> f64 {
    (c.tp + params.omega) / (c.tp + params.alpha * c.fn_ + params.beta * c.fp + params.omega)
}

/// `(1 − TI)^(1/γ)`.
pub fn tversky_focal_loss(
    pred: &ProbabilityMap3D,
    gt: &BinaryMask3D,
    params: &TverskyParams,
) -> Result<f64> {
    let ti = tversky_index(pred, gt, params)?;
    Ok(focal_from_index(ti, params.gamma))
}

pub fn focal_from_index(ti: f64, gamma: f64) -> f64 {
    (1.0 - ti).max(0.0).powf(1.0 / gamma)
}

/// `((1+β²)·TP + Ω) / ((1+β²)·TP + β²·FN + FP + Ω)` over hard counts.
pub fn f_beta_score(pred: &BinaryMask3D, gt: &BinaryMask3D, params: &FBetaParams) -> Result<f64> {
    if !(params.beta > 0.0 && params.omega > 0.0) {
        return Err(Error::InvalidParameter(format!("{params:?}")));
    }
    let c = ConfusionCounts::from_masks(pred, gt)?;
    let b2 = params.beta * params.beta;
    let num = (1.0 + b2) * c.tp as f64 + params.omega;
    Ok(num / ((1.0 + b2) * c.tp as f64 + b2 * c.fn_ as f64 + c.fp as f64 + params.omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Geometry, Volume3D};

    fn prob(values: &[f64]) -> ProbabilityMap3D {
        let g = Geometry::new([values.len(), 1, 1], [1.0; 3]).unwrap();
        ProbabilityMap3D::new(Volume3D::new(g, values.to_vec()).unwrap()).unwrap()
    }

    fn mask(bits: &[bool]) -> BinaryMask3D {
        let g = Geometry::new([bits.len(), 1, 1], [1.0; 3]).unwrap();
        BinaryMask3D::new(g, bits.to_vec()).unwrap()
    }

    #[test]
    fn perfect_and_empty() {
        let p = TverskyParams::default();
        let gt = mask(&[true, false, true]);
        assert_eq!(
            tversky_index(&prob(&[1.0, 0.0, 1.0]), &gt, &p).unwrap(),
            1.0
        );
        assert_eq!(
            tversky_focal_loss(&prob(&[1.0, 0.0, 1.0]), &gt, &p).unwrap(),
            0.0
        );
        let none = mask(&[false, false]);
        assert_eq!(tversky_index(&prob(&[0.0, 0.0]), &none, &p).unwrap(), 1.0);
    }

    #[test]
    fn single_voxel_half_probability() {
        let p = TverskyParams::default();
        let ti = tversky_index(&prob(&[0.5]), &mask(&[true]), &p).unwrap();
        assert!((ti - 1.5 / 1.925).abs() < 1e-12);
        let loss = tversky_focal_loss(&prob(&[0.5]), &mask(&[true]), &p).unwrap();
        assert!((loss - (1.0 - 1.5 / 1.925f64).powf(0.75)).abs() < 1e-12);
    }

    #[test]
    fn f_beta_example() {
        let s = f_beta_score(
            &mask(&[true, false, false]),
            &mask(&[true, true, false]),
            &FBetaParams::default(),
        )
        .unwrap();
        assert!((s - 0.6).abs() < 1e-12);
        let a = mask(&[true, false, true]);
        assert_eq!(f_beta_score(&a, &a, &FBetaParams::default()).unwrap(), 1.0);
    }

    #[test]
    fn invalid_params() {
        let bad = TverskyParams {
            gamma: 0.0,
            ..Default::default()
        };
        assert!(tversky_index(&prob(&[0.5]), &mask(&[true]), &bad).is_err());
        let bad = FBetaParams {
            beta: 0.0,
            omega: 1.0,
        };
        assert!(f_beta_score(&mask(&[true]), &mask(&[true]), &bad).is_err());
    }
}
