//! Gauss-Jordan elimination over a [`Coeff`] field with columns pivoted in
//! their given order. The columns left without a pivot are the free unknowns.

use crate::poly::Coeff;

pub(crate) struct Rref<C: Coeff> {
    /// Reduced augmented rows; the last entry of each row is the right-hand side.
    rows: Vec<Vec<C>>,
    pivots: Vec<usize>,
    ncols: usize,
    scale: f64,
}

pub(crate) fn rref<C: Coeff>(matrix: Vec<Vec<C>>, rhs: Vec<C>) -> Rref<C> {
    let ncols = matrix.first().map(Vec::len).unwrap_or(0);
    let scale = matrix
        .iter()
        .flatten()
        .chain(rhs.iter())
        .map(Coeff::abs_f64)
        .fold(0.0, f64::max);
    let mut rows: Vec<Vec<C>> = matrix
        .into_iter()
        .zip(rhs)
        .map(|(mut r, b)| {
            r.push(b);
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let pick = if C::EXACT {
            (r..rows.len()).find(|&i| !rows[i][c].is_zero())
        } else {
            (r..rows.len())
                .filter(|&i| !rows[i][c].negligible(scale))
                .max_by(|&a, &b| rows[a][c].abs_f64().total_cmp(&rows[b][c].abs_f64()))
        };
        let Some(p) = pick else { continue };
        rows.swap(r, p);
        let inv = C::one() / rows[r][c].clone();
        for v in rows[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(pivot_row.iter()).skip(c) {
                *v = v.clone() - f.clone() * p.clone();
            }
            if !C::EXACT {
                row[c] = C::zero();
            }
        }
        pivots.push(c);
        r += 1;
    }
    Rref {
        rows,
        pivots,
        ncols,
        scale,
    }
}

impl<C: Coeff> Rref<C> {
    pub(crate) fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub(crate) fn free_columns(&self) -> Vec<usize> {
        (0..self.ncols).filter(|c| !self.pivots.contains(c)).collect()
    }

    pub(crate) fn is_consistent(&self) -> bool {
        self.rows[self.rank()..]
            .iter()
            .all(|row| row[self.ncols].negligible(self.scale))
    }

    /// Solution with each free column set to the given value.
    pub(crate) fn solve_with(&self, free_values: &[(usize, C)]) -> Vec<C> {
        let mut x = vec![C::zero(); self.ncols];
        for (c, v) in free_values {
            x[*c] = v.clone();
        }
        for (r, &c) in self.pivots.iter().enumerate() {
            let row = &self.rows[r];
            let mut v = row[self.ncols].clone();
            for (fc, fv) in free_values {
                v = v - row[*fc].clone() * fv.clone();
            }
            x[c] = v;
        }
        x
    }

    /// Null-space vector with `free` set to one and the other free columns zero
    /// (ignores the right-hand side).
    pub(crate) fn kernel_vector(&self, free: usize) -> Vec<C> {
        let mut x = vec![C::zero(); self.ncols];
        x[free] = C::one();
        for (r, &c) in self.pivots.iter().enumerate() {
            x[c] = -self.rows[r][free].clone();
        }
        x
    }
}
