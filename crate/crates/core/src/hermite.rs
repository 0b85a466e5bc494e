//! Piecewise cubic Hermite interpolation on a tabulated, strictly
//! increasing mesh, with constant-time interval lookup.

#[derive(Debug, Clone)]
pub struct HermiteTable {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
    lookup: Lookup,
}

#[derive(Debug, Clone)]
struct Lookup {
    x0: f64,
    inv_width: f64,
    first_interval: Vec<u32>,
}

impl Lookup {
    fn build(x: &[f64]) -> Self {
        let n_int = x.len() - 1;
        let buckets = (2 * n_int).max(1);
        let x0 = x[0];
        let width = (x[n_int] - x0) / buckets as f64;
        let mut first_interval = Vec::with_capacity(buckets);
        let mut k = 0usize;
        for b in 0..buckets {
            let left = x0 + b as f64 * width;
            while k + 1 < n_int && x[k + 1] <= left {
                k += 1;
            }
            first_interval.push(k as u32);
        }
        Self {
            x0,
            inv_width: 1.0 / width,
            first_interval,
        }
    }
}

impl HermiteTable {
    /// Builds a table from nodes, values and slopes. Panics when the mesh
    /// has fewer than two nodes or is not strictly increasing.
    pub fn new(x: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Self {
        assert!(x.len() >= 2, "need at least two nodes");
        assert!(x.len() == y.len() && x.len() == dy.len());
        assert!(
            x.windows(2).all(|w| w[1] > w[0]),
            "mesh must be strictly increasing"
        );
        let lookup = Lookup::build(&x);
        Self { x, y, dy, lookup }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.dy
    }

    /// Index `k` of the interval `[x_k, x_{k+1}]` containing `t`
    /// (clamped to the table range).
    #[inline]
    pub fn interval(&self, t: f64) -> usize {
        let n_int = self.x.len() - 1;
        let b = ((t - self.lookup.x0) * self.lookup.inv_width) as isize;
        let b = b.clamp(0, self.lookup.first_interval.len() as isize - 1) as usize;
        let mut k = self.lookup.first_interval[b] as usize;
        while k + 1 < n_int && t > self.x[k + 1] {
            k += 1;
        }
        k
    }

    /// Value and first derivative at `t`; `t` is clamped to the table range.
    #[inline]
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let k = self.interval(t);
        self.eval_in(k, t)
    }

    #[inline]
    pub fn eval_in(&self, k: usize, t: f64) -> (f64, f64) {
        let (x0, x1) = (self.x[k], self.x[k + 1]);
        let h = x1 - x0;
        let s = ((t - x0) / h).clamp(0.0, 1.0);
        let s2 = s * s;
        let s3 = s2 * s;
        let (y0, y1) = (self.y[k], self.y[k + 1]);
        let (m0, m1) = (self.dy[k], self.dy[k + 1]);
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * m1;
        let d = (6.0 * s2 - 6.0 * s) / h * (y0 - y1)
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (3.0 * s2 - 2.0 * s) * m1;
        (v, d)
    }
}
