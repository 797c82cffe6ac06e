use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    #[default]
    Mae,
    Mse,
}

fn check(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::invalid(format!(
            "prediction has {} entries, target {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("empty prediction"));
    }
    Ok(())
}

pub fn loss_mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    check(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

pub fn loss_mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check(pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64)
}

impl Loss {
    pub fn value(self, pred: &[f64], target: &[f64]) -> Result<f64> {
        match self {
            Loss::Mae => loss_mae(pred, target),
            Loss::Mse => loss_mse(pred, target),
        }
    }

    /// Gradient of [`Loss::value`] with respect to `pred`, multiplied by `scale`.
    pub fn gradient(self, pred: &[f64], target: &[f64], scale: f64) -> Result<Vec<f64>> {
        check(pred, target)?;
        let n = pred.len() as f64;
        Ok(pred
            .iter()
            .zip(target)
            .map(|(p, t)| {
                let d = p - t;
                scale
                    * match self {
                        Loss::Mae => {
                            if d > 0.0 {
                                1.0 / n
                            } else if d < 0.0 {
                                -1.0 / n
                            } else {
                                0.0
                            }
                        }
                        Loss::Mse => 2.0 * d / n,
                    }
            })
            .collect())
    }
}
