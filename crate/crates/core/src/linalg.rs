//! Dense LU factorization with partial pivoting, row-major storage.

use crate::{Error, Real, Result};

pub(crate) struct Lu<T> {
    n: usize,
    a: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub(crate) fn factor(mut a: Vec<T>, n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, max) =
                (k..n)
                    .map(|i| (i, a[i * n + k].abs()))
                    .fold((k, T::zero()), |best, c| if c.1 > best.1 { c } else { best });
            if max == T::zero() || !max.is_finite() {
                return Err(Error::SingularMatrix("lu"));
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let pivot = a[k * n + k];
            let (top, bottom) = a.split_at_mut((k + 1) * n);
            let row_k = &top[k * n..(k + 1) * n];
            for row in bottom.chunks_exact_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l != T::zero() {
                    for j in k + 1..n {
                        row[j] = row[j] - l * row_k[j];
                    }
                }
            }
        }
        Ok(Self { n, a, piv })
    }

    pub(crate) fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x: Vec<T> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.a[i * n..i * n + i];
            let s = row.iter().zip(&x[..i]).fold(T::zero(), |acc, (&l, &xj)| acc + l * xj);
            x[i] = x[i] - s;
        }
        for i in (0..n).rev() {
            let row = &self.a[i * n + i + 1..(i + 1) * n];
            let s = row.iter().zip(&x[i + 1..]).fold(T::zero(), |acc, (&u, &xj)| acc + u * xj);
            x[i] = (x[i] - s) / self.a[i * n + i];
        }
        x
    }
}
