//! Banded LU factorisation with partial pivoting.
//!
//! Storage follows the LAPACK `gbtrf` layout: column `j` holds rows
//! `j - ku - kl ..= j + kl`, the extra `kl` super-diagonals absorbing the
//! fill-in produced by row interchanges.

#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular(pub usize);

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && i <= j + self.kl);
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    /// Adds `v` to entry `(i, j)`, which must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j <= i + self.ku && i <= j + self.kl,
            "entry ({i}, {j}) outside band"
        );
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    fn get_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    /// Factorises in place and solves `A x = b`, overwriting `b`.
    pub fn solve_in_place(mut self, b: &mut [f64]) -> Result<(), Singular> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kl = self.kl;
        let kv = self.ku + self.kl;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;

        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = self.get(j, j).abs();
            for i in 1..=km {
                let v = self.get(j + i, j).abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(Singular(j));
            }
            ju = ju.max((j + self.ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = self.get(j, c);
                    let bb = self.get(j + jp, c);
                    *self.get_mut(j, c) = bb;
                    *self.get_mut(j + jp, c) = a;
                }
            }
            if km > 0 {
                let pivot = self.get(j, j);
                for i in 1..=km {
                    *self.get_mut(j + i, j) /= pivot;
                }
                for c in j + 1..=ju {
                    let top = self.get(j, c);
                    if top != 0.0 {
                        for i in 1..=km {
                            let l = self.get(j + i, j);
                            *self.get_mut(j + i, c) -= l * top;
                        }
                    }
                }
            }
        }

        for j in 0..n {
            let p = ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            for i in 1..=km {
                b[j + i] -= self.get(j + i, j) * b[j];
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.get(j, j);
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= self.get(i, j) * b[j];
            }
        }
        Ok(())
    }
}
