//! Tridiagonal systems.

/// Tridiagonal matrix stored by diagonals: `lower[i]` is entry `(i, i-1)`
/// (`lower[0]` unused), `upper[i]` is entry `(i, i+1)` (`upper[n-1]` unused).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            out[i] = v;
        }
    }

    /// Thomas algorithm. Returns `None` on a zero or non-finite pivot.
    /// No pivoting: intended for diagonally dominant (M-matrix) systems.
    pub fn solve(&self, rhs: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) -> Option<()> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        assert_eq!(out.len(), n);
        if n == 0 {
            return Some(());
        }
        scratch.clear();
        scratch.resize(n, 0.0);
        let mut pivot = self.diag[0];
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        out[0] = rhs[0] / pivot;
        for i in 1..n {
            scratch[i] = self.upper[i - 1] / pivot;
            pivot = self.diag[i] - self.lower[i] * scratch[i];
            if pivot == 0.0 || !pivot.is_finite() {
                return None;
            }
            out[i] = (rhs[i] - self.lower[i] * out[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            out[i] -= scratch[i + 1] * out[i + 1];
        }
        if out.iter().all(|v| v.is_finite()) {
            Some(())
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn solves_diagonally_dominant_systems(
            off in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..40),
            rhs_seed in prop::collection::vec(-5.0f64..5.0, 40),
        ) {
            let n = off.len();
            let mut m = Tridiagonal::zeros(n);
            for i in 0..n {
                m.lower[i] = if i > 0 { -off[i].0 } else { 0.0 };
                m.upper[i] = if i + 1 < n { -off[i].1 } else { 0.0 };
                m.diag[i] = 0.1 + off[i].0 + off[i].1;
            }
            let rhs = &rhs_seed[..n];
            let mut x = vec![0.0; n];
            let mut scratch = Vec::new();
            m.solve(rhs, &mut scratch, &mut x).unwrap();
            let mut back = vec![0.0; n];
            m.mul_vec(&x, &mut back);
            for i in 0..n {
                prop_assert!((back[i] - rhs[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let m = Tridiagonal::zeros(3);
        let mut x = vec![0.0; 3];
        assert!(m.solve(&[1.0, 1.0, 1.0], &mut Vec::new(), &mut x).is_none());
    }
}
