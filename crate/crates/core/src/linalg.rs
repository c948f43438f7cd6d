//! Dense Gaussian elimination over a finite field.
//!
//! Pivoting is deterministic: columns are scanned left to right and the first
//! row with a nonzero entry becomes the pivot row.

use crate::algebra::Ring;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u32>>, cols: usize) -> Self {
        let mut m = Matrix::zeros(rows.len(), cols);
        for (i, r) in rows.into_iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged matrix row");
            m.data[i * cols..(i + 1) * cols].copy_from_slice(&r);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[u32]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul_vec(&self, ring: &Ring, v: &[u32]) -> Vec<u32> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(0, |acc, (&a, &b)| ring.add(acc, ring.mul(a, b)))
            })
            .collect()
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref(&mut self, ring: &Ring) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..self.cols {
                    self.data.swap(pr * self.cols + j, r * self.cols + j);
                }
            }
            let inv = ring.inv(self.get(r, c)).expect("field element");
            for j in c..self.cols {
                let v = ring.mul(self.get(r, j), inv);
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let f = self.get(i, c);
                if f == 0 {
                    continue;
                }
                for j in c..self.cols {
                    let v = ring.sub(self.get(i, j), ring.mul(f, self.get(r, j)));
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self, ring: &Ring) -> usize {
        self.clone().rref(ring).len()
    }

    /// Basis of `{x : A x = 0}`: one vector per free column, with that
    /// column set to 1 and the other free columns 0.
    pub fn kernel(&self, ring: &Ring) -> Vec<Vec<u32>> {
        let mut m = self.clone();
        let pivots = m.rref(ring);
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        (0..self.cols)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut v = vec![0u32; self.cols];
                v[f] = 1;
                for (r, &pc) in pivots.iter().enumerate() {
                    v[pc] = ring.neg(m.get(r, f));
                }
                v
            })
            .collect()
    }
}

/// Incrementally maintained basis of a row space. Each stored row has a
/// unit pivot and vanishes at the pivots of earlier rows.
#[derive(Clone, Debug)]
pub struct RowBasis {
    cols: usize,
    rows: Vec<(usize, Vec<u32>)>,
}

impl RowBasis {
    pub fn new(cols: usize) -> Self {
        RowBasis { cols, rows: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds `row` to the span; returns whether the rank grew.
    pub fn insert(&mut self, ring: &Ring, row: &[u32]) -> bool {
        if self.rows.len() == self.cols {
            return false;
        }
        let mut v = row.to_vec();
        for (c, b) in &self.rows {
            let f = v[*c];
            if f != 0 {
                for (x, &y) in v.iter_mut().zip(b) {
                    *x = ring.sub(*x, ring.mul(f, y));
                }
            }
        }
        let Some(c) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = ring.inv(v[c]).expect("field element");
        v.iter_mut().for_each(|x| *x = ring.mul(*x, inv));
        self.rows.push((c, v));
        true
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_rows(self.rows.iter().map(|(_, r)| r.clone()).collect(), self.cols)
    }
}

/// A solution of `A x = b` with every free variable set to zero.
pub fn solve(a: &Matrix, b: &[u32], ring: &Ring) -> Option<Vec<u32>> {
    assert_eq!(a.rows, b.len());
    let mut aug = Matrix::zeros(a.rows, a.cols + 1);
    for i in 0..a.rows {
        for j in 0..a.cols {
            aug.set(i, j, a.get(i, j));
        }
        aug.set(i, a.cols, b[i]);
    }
    let pivots = aug.rref(ring);
    if pivots.last() == Some(&a.cols) {
        return None;
    }
    let mut x = vec![0u32; a.cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug.get(r, a.cols);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ring_from_text;
    use proptest::prelude::*;

    #[test]
    fn rank_and_kernel_small() {
        let f = ring_from_text("GF(3)").unwrap();
        let m = Matrix::from_rows(vec![vec![1, 2, 0], vec![2, 1, 0], vec![0, 0, 1]], 3);
        // row 2 = 2 * row 1 mod 3
        assert_eq!(m.rank(&f), 2);
        let k = m.kernel(&f);
        assert_eq!(k.len(), 1);
        assert_eq!(m.mul_vec(&f, &k[0]), vec![0, 0, 0]);
    }

    #[test]
    fn inconsistent_system_has_no_solution() {
        let f = ring_from_text("GF(2)").unwrap();
        let m = Matrix::from_rows(vec![vec![1, 1], vec![1, 1]], 2);
        assert!(solve(&m, &[0, 1], &f).is_none());
        assert_eq!(solve(&m, &[1, 1], &f), Some(vec![1, 0]));
    }

    #[test]
    fn row_basis_matches_rank() {
        let f = ring_from_text("GF(5)").unwrap();
        let rows = vec![vec![1, 2, 3], vec![2, 4, 1], vec![3, 1, 4], vec![0, 0, 2]];
        let mut b = RowBasis::new(3);
        for r in &rows {
            b.insert(&f, r);
        }
        assert_eq!(b.rank(), Matrix::from_rows(rows, 3).rank(&f));
    }

    proptest! {
        #[test]
        fn rank_nullity_and_solutions(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>(),
                                      desc in prop::sample::select(vec!["GF(2)", "GF(5)", "GF(4)", "GF(9)"])) {
            let f = ring_from_text(desc).unwrap();
            let mut s = seed;
            let mut next = || { s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (s >> 33) as u32 % f.order() };
            let data: Vec<Vec<u32>> = (0..rows).map(|_| (0..cols).map(|_| next()).collect()).collect();
            let m = Matrix::from_rows(data, cols);
            let rank = m.rank(&f);
            let ker = m.kernel(&f);
            prop_assert_eq!(rank + ker.len(), cols);
            for v in &ker {
                prop_assert!(m.mul_vec(&f, v).iter().all(|&x| x == 0));
            }
            let x: Vec<u32> = (0..cols).map(|_| next()).collect();
            let b = m.mul_vec(&f, &x);
            let sol = solve(&m, &b, &f).expect("consistent by construction");
            prop_assert_eq!(m.mul_vec(&f, &sol), b);
            prop_assert_eq!(m.transpose().rank(&f), rank);
        }
    }
}
