//! Small dense-vector helpers on slices.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dense symmetric matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// `(1/n) * sum_i w_i x_i x_i^T` with unit weights when `weights` is `None`.
    pub fn weighted_second_moment(xs: &[Vec<f64>], weights: Option<&[f64]>) -> Self {
        let dim = xs.first().map_or(0, Vec::len);
        let mut m = SymMatrix::zeros(dim);
        if xs.is_empty() {
            return m;
        }
        for (i, x) in xs.iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[i]);
            if w == 0.0 {
                continue;
            }
            for r in 0..dim {
                let s = w * x[r];
                if s == 0.0 {
                    continue;
                }
                let row = &mut m.data[r * dim..r * dim + dim];
                for c in r..dim {
                    row[c] += s * x[c];
                }
            }
        }
        let inv_n = 1.0 / xs.len() as f64;
        for r in 0..dim {
            for c in r..dim {
                let v = m.data[r * dim + c] * inv_n;
                m.data[r * dim + c] = v;
                m.data[c * dim + r] = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim + c]
    }

    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(&self.data[r * self.dim..(r + 1) * self.dim], v);
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.mul_vec_into(v, &mut out);
        out
    }

    /// `v^T M v`
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        (0..self.dim)
            .map(|r| v[r] * dot(&self.data[r * self.dim..(r + 1) * self.dim], v))
            .sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_moment_of_basis_vectors() {
        let xs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let m = SymMatrix::weighted_second_moment(&xs, None);
        assert_eq!(m.get(0, 0), 0.5);
        assert_eq!(m.get(1, 1), 0.5);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.quad_form(&[1.0, 1.0]), 1.0);
    }

    #[test]
    fn weighted_moment_ignores_zero_weights() {
        let xs = vec![vec![3.0, 4.0], vec![0.0, 1.0]];
        let m = SymMatrix::weighted_second_moment(&xs, Some(&[0.0, 1.0]));
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(1, 1), 0.5);
    }
}
