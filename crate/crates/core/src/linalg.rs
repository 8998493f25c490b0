//! Diagonal-plus-weighted-Laplacian systems solved by Jacobi-preconditioned
//! conjugate gradients.

/// `A x = D x + Σ_{(i,j,w)} w (x_i − x_j)(e_i − e_j)`, symmetric positive
/// definite when `D > 0` and `w ≥ 0`.
pub(crate) struct LaplacianSystem {
    pub diag: Vec<f64>,
    pub edges: Vec<(usize, usize, f64)>,
}

impl LaplacianSystem {
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, (d, xi)) in out.iter_mut().zip(self.diag.iter().zip(x)) {
            *o = d * xi;
        }
        for &(i, j, w) in &self.edges {
            let t = w * (x[i] - x[j]);
            out[i] += t;
            out[j] -= t;
        }
    }

    fn preconditioner(&self) -> Vec<f64> {
        let mut p = self.diag.clone();
        for &(i, j, w) in &self.edges {
            p[i] += w;
            p[j] += w;
        }
        p.iter().map(|v| 1.0 / v).collect()
    }

    /// Solves `A x = b` from the initial guess `x` until
    /// `‖r‖_∞ ≤ tol·‖b‖_∞`. Returns the iteration count and final
    /// residual norm.
    pub fn solve(&self, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> (usize, f64) {
        let n = b.len();
        let inv = self.preconditioner();
        let mut r = vec![0.0; n];
        self.apply(x, &mut r);
        for k in 0..n {
            r[k] = b[k] - r[k];
        }
        let bnorm = b
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0.0; n];
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for it in 0..max_iter {
            let rn = norm(&r);
            if rn <= tol * bnorm {
                return (it, rn);
            }
            self.apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                return (it, rn);
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            for k in 0..n {
                z[k] = r[k] * inv[k];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        // recompute the true residual
        self.apply(x, &mut ap);
        let rn = b
            .iter()
            .zip(&ap)
            .fold(0.0f64, |a, (b, v)| a.max((b - v).abs()));
        (max_iter, rn)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        // [[3, −2], [−2, 3]] x = [0, 1]  ⇒  x = (0.4, 0.6)
        let sys = LaplacianSystem {
            diag: vec![1.0, 1.0],
            edges: vec![(0, 1, 2.0)],
        };
        let mut x = vec![0.0, 0.0];
        let (_, res) = sys.solve(&[0.0, 1.0], &mut x, 1e-15, 100);
        assert!(res < 1e-14);
        assert!((x[0] - 0.4).abs() < 1e-14 && (x[1] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn chain_against_dense_elimination() {
        let n = 12;
        let diag: Vec<f64> = (0..n).map(|k| 0.5 + k as f64 * 0.1).collect();
        let edges: Vec<(usize, usize, f64)> = (0..n - 1)
            .map(|k| (k, k + 1, 1.0 + k as f64))
            .chain([(0, n - 1, 0.3)])
            .collect();
        let sys = LaplacianSystem {
            diag: diag.clone(),
            edges: edges.clone(),
        };
        let b: Vec<f64> = (0..n).map(|k| (k as f64).cos()).collect();
        let mut x = vec![0.0; n];
        sys.solve(&b, &mut x, 1e-14, 500);

        let mut a = vec![vec![0.0; n + 1]; n];
        for k in 0..n {
            a[k][k] = diag[k];
            a[k][n] = b[k];
        }
        for &(i, j, w) in &edges {
            a[i][i] += w;
            a[j][j] += w;
            a[i][j] -= w;
            a[j][i] -= w;
        }
        for c in 0..n {
            let piv = (c..n)
                .max_by(|&p, &q| a[p][c].abs().total_cmp(&a[q][c].abs()))
                .unwrap();
            a.swap(c, piv);
            let pivot_row = a[c].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r != c {
                    let m = row[c] / pivot_row[c];
                    for (x, p) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                        *x -= m * p;
                    }
                }
            }
        }
        for k in 0..n {
            assert!((x[k] - a[k][n] / a[k][k]).abs() < 1e-12);
        }
    }
}
