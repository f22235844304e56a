use super::{ParamStore, Tape, Var};
use crate::error::{Error, Result};

/// Outcome of comparing reverse-mode gradients with central differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Flat coordinate (store order) where the maximum was attained.
    pub worst_coordinate: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

/// Relative error used by the checker: `|a - n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

fn evaluate<F>(params: &ParamStore, f: &F, coordinate: usize) -> Result<f64>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    let mut tape = Tape::new(params);
    let loss = f(&mut tape)?;
    let value = tape.value(loss);
    let v = value.item().ok_or_else(|| Error::NonScalarLoss(value.shape().to_vec()))?;
    if !v.is_finite() {
        return Err(Error::NonFinite { coordinate, value: v });
    }
    Ok(v)
}

/// Checks the gradient of the scalar objective built by `f` at `point`.
///
/// `f` records the objective on a fresh tape over the supplied parameters.
/// The numeric side only ever evaluates forward values, perturbing one
/// coordinate at a time by `±h`.
pub fn finite_difference_check<F>(point: &ParamStore, h: f64, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Config(format!("step h must be positive, got {h}")));
    }
    let analytic = {
        let mut tape = Tape::new(point);
        let loss = f(&mut tape)?;
        tape.backward(loss)?.flatten()
    };

    let mut work = point.clone();
    let mut numeric = Vec::with_capacity(analytic.len());
    for i in 0..analytic.len() {
        let original = *work.coordinate_mut(i);
        *work.coordinate_mut(i) = original + h;
        let plus = evaluate(&work, &f, i)?;
        *work.coordinate_mut(i) = original - h;
        let minus = evaluate(&work, &f, i)?;
        *work.coordinate_mut(i) = original;
        numeric.push((plus - minus) / (2.0 * h));
    }

    let (worst_coordinate, max_relative_error) = analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .enumerate()
        .fold((0, 0.0), |best, (i, e)| if e > best.1 { (i, e) } else { best });
    Ok(GradCheck { max_relative_error, worst_coordinate, analytic, numeric })
}
