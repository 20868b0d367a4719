//! Dense Gauss–Jordan elimination with partial pivoting.

pub type Dense = Vec<Vec<f64>>;

/// Inverse of a square matrix, or `None` if it is numerically singular.
pub fn inverse(a: &Dense) -> Option<Dense> {
    let n = a.len();
    let mut m: Dense = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let factor = m[r][col];
                if factor != 0.0 {
                    for c in 0..2 * n {
                        m[r][c] -= factor * m[col][c];
                    }
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Determinant by elimination.
pub fn determinant(a: &Dense) -> f64 {
    let n = a.len();
    let mut m = a.clone();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= factor * m[col][c];
            }
        }
    }
    det
}

pub fn mat_vec(a: &Dense, x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `bᵀ A⁻¹ c` through an explicit inverse.
pub fn inverse_form(a: &Dense, b: &[f64], c: &[f64]) -> Option<f64> {
    Some(dot(b, &mat_vec(&inverse(a)?, c)))
}
