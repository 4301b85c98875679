use super::NumericsError;
use crate::scalar::Scalar;

fn check(pred: &[impl Copy], target: &[impl Copy]) -> Result<(), NumericsError> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(NumericsError::LengthMismatch {
            context: "loss",
            expected: pred.len(),
            actual: target.len(),
        });
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae<T: Scalar>(pred: &[T], target: &[T]) -> Result<T, NumericsError> {
    check(pred, target)?;
    let total: T = pred.iter().zip(target).map(|(&p, &t)| (p - t).abs()).sum();
    Ok(total / T::from_count(pred.len()))
}

/// Mean squared error.
pub fn mse<T: Scalar>(pred: &[T], target: &[T]) -> Result<T, NumericsError> {
    check(pred, target)?;
    let total: T = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum();
    Ok(total / T::from_count(pred.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(mae(&[1.0, 3.0], &[2.0, 5.0]).unwrap(), 1.5);
        assert_eq!(mse(&[1.0, 3.0], &[2.0, 5.0]).unwrap(), 2.5);
        assert_eq!(mae(&[4.0f32], &[4.0]).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            mae(&[1.0, 2.0], &[1.0]),
            Err(NumericsError::LengthMismatch { .. })
        ));
        assert!(mse::<f64>(&[], &[]).is_err());
    }
}
