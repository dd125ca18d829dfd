use crate::CliError;

/// Elements with density at least half the field's own maximum.
pub fn binarize(rho: &[f64]) -> Vec<bool> {
    let max = rho.iter().copied().fold(0.0_f64, f64::max);
    let threshold = 0.5 * max;
    rho.iter().map(|&r| max > 0.0 && r >= threshold).collect()
}

/// Dice similarity `2|A∩B| / (|A|+|B|)` of the two binarized designs. Two
/// empty designs are identical.
pub fn dice_similarity(a: &[f64], b: &[f64]) -> Result<f64, CliError> {
    if a.len() != b.len() {
        return Err(CliError::Shape { left: a.len(), right: b.len() });
    }
    let (ia, ib) = (binarize(a), binarize(b));
    let na = ia.iter().filter(|&&x| x).count();
    let nb = ib.iter().filter(|&&x| x).count();
    if na + nb == 0 {
        return Ok(1.0);
    }
    let both = ia.iter().zip(&ib).filter(|(x, y)| **x && **y).count();
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical() {
        let a = [0.1, 0.9, 0.7, 0.2];
        assert_eq!(dice_similarity(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn disjoint() {
        assert_eq!(dice_similarity(&[1.0, 1.0, 0.0, 0.0], &[0.0, 0.0, 1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn half_subset() {
        let a = [1.0, 1.0, 0.0, 0.0, 0.0];
        let b = [1.0, 1.0, 1.0, 1.0, 0.0];
        assert!((dice_similarity(&a, &b).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn threshold_is_relative() {
        // Max 0.4, so everything at or above 0.2 counts as solid.
        assert_eq!(binarize(&[0.4, 0.2, 0.19, 0.0]), vec![true, true, false, false]);
    }

    #[test]
    fn empty_designs() {
        assert_eq!(dice_similarity(&[0.0; 3], &[0.0; 3]).unwrap(), 1.0);
        assert_eq!(dice_similarity(&[0.0; 3], &[1.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn shape_mismatch() {
        assert!(matches!(dice_similarity(&[1.0], &[1.0, 0.0]), Err(CliError::Shape { .. })));
    }
}
