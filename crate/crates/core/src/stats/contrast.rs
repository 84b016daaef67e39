//! Contrast coding for the categorical covariates.
//!
//! Two-level factors are sum coded at -0.5/+0.5; the ordered age factor is
//! Helmert coded so each level is compared against the mean of the levels
//! before it. The Helmert matrix is the classic contrast matrix with column
//! j scaled by 1/(j+1), which makes the two-level column coincide with the
//! -0.5/+0.5 convention.

use crate::alignment::AsrType;
use crate::variants::{AgeGroup, Gender, MfaStatus};

use super::StatsError;

/// Helmert contrast matrix for `k` ordered levels: `k` rows by `k - 1`
/// columns. Column `j` (1-based) carries `-1/(j+1)` for the first `j`
/// levels, `j/(j+1)` for level `j + 1`, and zero after; columns sum to zero
/// and are mutually orthogonal.
pub fn helmert_contrasts(k: usize) -> Result<Vec<Vec<f64>>, StatsError> {
    if k < 2 {
        return Err(StatsError::BadFactor(format!(
            "Helmert coding needs at least 2 levels, got {k}"
        )));
    }
    let mut rows = vec![vec![0.0; k - 1]; k];
    for (j, col) in (1..k).enumerate() {
        let scale = (col + 1) as f64;
        for row in rows.iter_mut().take(col) {
            row[j] = -1.0 / scale;
        }
        rows[col][j] = col as f64 / scale;
    }
    Ok(rows)
}

/// Sum code for MFA status: Original -0.5, Reduced +0.5. Other is not a
/// model level.
pub fn code_mfa_status(status: MfaStatus) -> Option<f64> {
    match status {
        MfaStatus::Original => Some(-0.5),
        MfaStatus::Reduced => Some(0.5),
        MfaStatus::Other => None,
    }
}

/// Sum code for gender: male -0.5, female +0.5.
pub fn code_gender(gender: Gender) -> f64 {
    match gender {
        Gender::Male => -0.5,
        Gender::Female => 0.5,
    }
}

/// Sum code for ASR type: without_lm -0.5, with_lm +0.5.
pub fn code_asr_type(asr: AsrType) -> f64 {
    match asr {
        AsrType::WithoutLm => -0.5,
        AsrType::WithLm => 0.5,
    }
}

/// The three Helmert columns for one age-group level (four levels total).
pub fn code_age_group(age: AgeGroup) -> [f64; 3] {
    // unwrap: k = 4 is statically >= 2
    let matrix = helmert_contrasts(4).unwrap();
    let row = &matrix[age.index()];
    [row[0], row[1], row[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_level_helmert_is_half_steps() {
        let m = helmert_contrasts(2).unwrap();
        assert_eq!(m, vec![vec![-0.5], vec![0.5]]);
    }

    #[test]
    fn four_level_helmert_columns_zero_sum_orthogonal() {
        let m = helmert_contrasts(4).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m[0].len(), 3);
        for j in 0..3 {
            let sum: f64 = m.iter().map(|row| row[j]).sum();
            assert!(sum.abs() < 1e-12, "column {j} sums to {sum}");
        }
        for a in 0..3 {
            for b in (a + 1)..3 {
                let dot: f64 = m.iter().map(|row| row[a] * row[b]).sum();
                assert!(dot.abs() < 1e-12, "columns {a},{b} dot {dot}");
            }
        }
    }

    #[test]
    fn four_level_helmert_exact_values() {
        let m = helmert_contrasts(4).unwrap();
        let expected = [
            [-1.0 / 2.0, -1.0 / 3.0, -1.0 / 4.0],
            [1.0 / 2.0, -1.0 / 3.0, -1.0 / 4.0],
            [0.0, 2.0 / 3.0, -1.0 / 4.0],
            [0.0, 0.0, 3.0 / 4.0],
        ];
        for (row, exp) in m.iter().zip(expected.iter()) {
            for (got, want) in row.iter().zip(exp.iter()) {
                assert!((got - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn helmert_rejects_degenerate_factor() {
        assert!(helmert_contrasts(1).is_err());
        assert!(helmert_contrasts(0).is_err());
    }

    #[test]
    fn binary_codes() {
        assert_eq!(code_mfa_status(MfaStatus::Original), Some(-0.5));
        assert_eq!(code_mfa_status(MfaStatus::Reduced), Some(0.5));
        assert_eq!(code_mfa_status(MfaStatus::Other), None);
        assert_eq!(code_gender(Gender::Male), -0.5);
        assert_eq!(code_gender(Gender::Female), 0.5);
        assert_eq!(code_asr_type(AsrType::WithoutLm), -0.5);
        assert_eq!(code_asr_type(AsrType::WithLm), 0.5);
    }
}
