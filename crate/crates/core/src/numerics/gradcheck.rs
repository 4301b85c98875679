//! Central finite-difference verification of tape gradients.

use super::{NumericsError, Tape, Tensor, Var};

/// Worst discrepancy found by [`check_gradients`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
}

/// Relative error with a small absolute floor so vanishing gradients compare sanely.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-4)
}

/// Compares the tape gradient of a scalar function against central differences
/// with step `h` for every coordinate of every input.
///
/// `f` receives the inputs as gradient-receiving leaves and must return a `1 x 1` value.
pub fn check_gradients<F>(f: F, inputs: &[Tensor<f64>], h: f64) -> Result<GradCheckReport, NumericsError>
where
    F: for<'t> Fn(&'t Tape<f64>, &[Var<'t, f64>]) -> Result<Var<'t, f64>, NumericsError>,
{
    let eval = |values: &[Tensor<f64>]| -> Result<f64, NumericsError> {
        let tape = Tape::new();
        let vars: Vec<_> = values.iter().map(|v| tape.param(v.clone())).collect();
        let out = f(&tape, &vars)?;
        Ok(out.value().get(0, 0))
    };

    let tape = Tape::new();
    let vars: Vec<_> = inputs.iter().map(|v| tape.param(v.clone())).collect();
    let out = f(&tape, &vars)?;
    if out.shape() != (1, 1) {
        return Err(NumericsError::shape("gradcheck output", out.shape(), (1, 1)));
    }
    let grads = tape.backward(out);

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
    };
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    for (k, var) in vars.iter().enumerate() {
        let analytic = grads
            .get(*var)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(inputs[k].rows(), inputs[k].cols()));
        for i in 0..inputs[k].len() {
            let orig = inputs[k].data()[i];
            work[k].data_mut()[i] = orig + h;
            let plus = eval(&work)?;
            work[k].data_mut()[i] = orig - h;
            let minus = eval(&work)?;
            work[k].data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let err = relative_error(analytic.data()[i], numeric);
            report.max_rel_error = report.max_rel_error.max(err);
            report.checked += 1;
        }
    }
    Ok(report)
}
