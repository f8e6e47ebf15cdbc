use serde::Serialize;

use super::{Coefficients1D, FvmError};
use crate::problem::Problem;
use crate::tridiag::Tridiagonal;

pub const MIN_CELLS: usize = 16;

/// Uniform cell grid over the closure of the exhaustion piece D_K.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid1D {
    pub k: u32,
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
    pub h: f64,
}

impl Grid1D {
    pub fn new(problem: &Problem, k: u32, n: usize) -> Result<Self, FvmError> {
        if problem.dim() != 1 {
            return Err(FvmError::NotOneDimensional(problem.dim()));
        }
        if k == 0 {
            return Err(FvmError::Grid("shell index K must be at least 1".into()));
        }
        let region = problem.domain.exhaust(k);
        Self::on_interval(k, region.lower[0], region.upper[0], n)
    }

    pub fn on_interval(k: u32, lower: f64, upper: f64, n: usize) -> Result<Self, FvmError> {
        if n < MIN_CELLS {
            return Err(FvmError::Grid(format!("need at least {MIN_CELLS} cells, got {n}")));
        }
        if !(lower < upper) {
            return Err(FvmError::Grid(format!("empty interval ({lower}, {upper})")));
        }
        Ok(Grid1D {
            k,
            lower,
            upper,
            n,
            h: (upper - lower) / n as f64,
        })
    }

    /// Written as an interpolation so that a grid symmetric about 0 has
    /// exactly mirrored nodes (and a face at exactly 0 when n is even).
    pub fn edge(&self, j: usize) -> f64 {
        let n = self.n as f64;
        let j = j as f64;
        (self.lower * (n - j) + self.upper * j) / n
    }

    pub fn center(&self, i: usize) -> f64 {
        let n2 = 2.0 * self.n as f64;
        let k = 2.0 * i as f64 + 1.0;
        (self.lower * (n2 - k) + self.upper * k) / n2
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.edge(j)).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.center(i)).collect()
    }

    /// Cell containing `x`, if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(self.lower..self.upper).contains(&x) {
            return None;
        }
        Some((((x - self.lower) / self.h) as usize).min(self.n - 1))
    }

    pub fn mass(&self, u: &[f64]) -> f64 {
        u.iter().sum::<f64>() * self.h
    }

    pub fn l1_distance(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.h
    }
}

/// Interface fluxes at one time level. Interface `j` sits between cells
/// `j-1` and `j` (`j = 0` and `j = n` are the frontier), and
/// `F_j = p[j] u_j - q[j] u_{j-1}` with ghost values zero, so that
/// `h du_i/dt = F_{i+1} - F_i + h c_i u_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxStencil {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub c: Vec<f64>,
    /// Interfaces where the central drift was replaced by upwinding.
    pub upwind_faces: usize,
}

impl FluxStencil {
    /// Diffusion is central on `(a + eps) u`. Drift is central where that
    /// keeps both coefficients nonnegative and upwind elsewhere, which makes
    /// the implicit matrix an M-matrix. Frontier faces are always upwind.
    pub fn assemble<C: Coefficients1D + ?Sized>(grid: &Grid1D, coeffs: &C, eps: f64, t: f64) -> Result<Self, FvmError> {
        let n = grid.n;
        let h = grid.h;
        let mut a = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        for i in 0..n {
            let x = grid.center(i);
            let ai = coeffs.a1(x, t)? + eps;
            let ci = coeffs.c1(x, t)?;
            if !ai.is_finite() || !ci.is_finite() {
                return Err(FvmError::NonFiniteCoefficient { x, t });
            }
            a.push(ai);
            c.push(ci);
        }
        let mut p = vec![0.0; n + 1];
        let mut q = vec![0.0; n + 1];
        let mut upwind_faces = 0;
        for j in 0..=n {
            let x = grid.edge(j);
            let b = coeffs.b1(x, t)?;
            if !b.is_finite() {
                return Err(FvmError::NonFiniteCoefficient { x, t });
            }
            let (bp, bm) = (b.max(0.0), (-b).max(0.0));
            if j == 0 {
                p[0] = a[0] / h + bm;
            } else if j == n {
                q[n] = a[n - 1] / h + bp;
            } else {
                let (ar, al) = (a[j] / h, a[j - 1] / h);
                if ar >= 0.5 * b && al >= -0.5 * b {
                    p[j] = ar - 0.5 * b;
                    q[j] = al + 0.5 * b;
                } else {
                    p[j] = ar + bm;
                    q[j] = al + bp;
                    upwind_faces += 1;
                }
            }
        }
        Ok(FluxStencil { p, q, c, upwind_faces })
    }

    /// `(L_h u)_i = (F_{i+1} - F_i)/h + c_i u_i`.
    pub fn apply(&self, h: f64, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        for i in 0..n {
            let right = if i + 1 < n { self.p[i + 1] * u[i + 1] } else { 0.0 } - self.q[i + 1] * u[i];
            let left = self.p[i] * u[i] - if i > 0 { self.q[i] * u[i - 1] } else { 0.0 };
            out[i] = (right - left) / h + self.c[i] * u[i];
        }
    }

    /// Tridiagonal matrix of `L_h` itself.
    pub fn operator_matrix(&self, h: f64) -> Tridiagonal {
        let n = self.c.len();
        let mut m = Tridiagonal::zeros(n);
        for i in 0..n {
            m.diag[i] = -(self.q[i + 1] + self.p[i]) / h + self.c[i];
            if i > 0 {
                m.lower[i] = self.q[i] / h;
            }
            if i + 1 < n {
                m.upper[i] = self.p[i + 1] / h;
            }
        }
        m
    }

    /// Backward-Euler matrix `I - dt L_h`.
    pub fn implicit_matrix(&self, h: f64, dt: f64, m: &mut Tridiagonal) {
        let n = self.c.len();
        let r = dt / h;
        for i in 0..n {
            m.diag[i] = 1.0 + r * (self.q[i + 1] + self.p[i]) - dt * self.c[i];
            m.lower[i] = if i > 0 { -r * self.q[i] } else { 0.0 };
            m.upper[i] = if i + 1 < n { -r * self.p[i + 1] } else { 0.0 };
        }
    }

    /// Rate at which mass leaves through the two frontier faces.
    pub fn outflow(&self, u: &[f64]) -> f64 {
        let n = u.len();
        self.p[0] * u[0] + self.q[n] * u[n - 1]
    }

    pub fn killing_rate(&self, h: f64, u: &[f64]) -> f64 {
        self.c.iter().zip(u).map(|(c, u)| c * u).sum::<f64>() * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;
    use crate::problem::{CoefficientSet, DomainSpec, InitialMeasure};

    fn problem(a: &str, b: &str, c: &str, lo: f64, hi: f64) -> Problem {
        Problem::new(
            DomainSpec::interval(lo, hi),
            CoefficientSet::new(1, vec![parse(a).unwrap()], vec![parse(b).unwrap()], parse(c).unwrap()).unwrap(),
            InitialMeasure::Dirac(vec![0.5 * (lo + hi)]),
        )
        .unwrap()
    }

    #[test]
    fn constant_diffusion_gives_second_difference() {
        let p = problem("2", "0", "0", -1.0, 1.0);
        let g = Grid1D::new(&p, 4, 40).unwrap();
        let s = FluxStencil::assemble(&g, &p.coefficients, 0.0, 0.0).unwrap();
        let m = s.operator_matrix(g.h);
        let h2 = g.h * g.h;
        for i in 1..39 {
            assert!((m.lower[i] - 2.0 / h2).abs() < 1e-9 * (2.0 / h2));
            assert!((m.diag[i] + 4.0 / h2).abs() < 1e-9 * (4.0 / h2));
            assert!((m.upper[i] - 2.0 / h2).abs() < 1e-9 * (2.0 / h2));
        }
    }

    #[test]
    fn pure_transport_is_upwind_and_drains_right() {
        let p = problem("0", "1", "0", -1.0, 1.0);
        let g = Grid1D::new(&p, 3, 32).unwrap();
        let s = FluxStencil::assemble(&g, &p.coefficients, 0.0, 0.0).unwrap();
        assert_eq!(s.upwind_faces, 31);
        let m = s.operator_matrix(g.h);
        for i in 1..32 {
            assert!((m.lower[i] - 1.0 / g.h).abs() < 1e-9);
            assert!((m.diag[i] + 1.0 / g.h).abs() < 1e-9);
        }
        assert!(m.upper.iter().all(|v| *v == 0.0));
        let mut u = vec![0.0; 32];
        u[31] = 1.0;
        assert_eq!(s.outflow(&u), 1.0);
        u[31] = 0.0;
        u[0] = 1.0;
        assert_eq!(s.outflow(&u), 0.0);
    }

    #[test]
    fn degenerate_example_frontier() {
        let p = problem("0.5*abs(1-abs(x))^2", "tan(-pi*x/2) + sign(x)", "0", -1.0, 1.0);
        let k = 10;
        let g = Grid1D::new(&p, k, 4000).unwrap();
        let s = FluxStencil::assemble(&g, &p.coefficients, 0.0, 0.0).unwrap();
        let b_right = p.coefficients.b1(g.upper, 0.0).unwrap();
        assert!(b_right < -100.0);
        // right face carries only the diffusive part, of size (2^-K)^2/2 per h
        let a_last = p.coefficients.a1(g.center(g.n - 1), 0.0).unwrap();
        assert!((s.q[g.n] - a_last / g.h).abs() < 1e-12);
        let scale = 0.5 * 2f64.powi(-2 * k as i32);
        assert!(a_last > scale && a_last < 2.0 * scale);
    }

    #[test]
    fn columns_sum_to_killing() {
        let p = problem("1 + x^2", "3*sin(5*x)", "-x^2", -2.0, 2.0);
        let g = Grid1D::new(&p, 5, 64).unwrap();
        let s = FluxStencil::assemble(&g, &p.coefficients, 0.0, 0.0).unwrap();
        let m = s.operator_matrix(g.h);
        // mass rate of a unit cell = killing minus frontier outflow
        for j in 1..63 {
            let col = m.diag[j] + m.lower[j + 1] + m.upper[j - 1];
            assert!((col - s.c[j]).abs() < 1e-9 * m.diag[j].abs(), "{j}");
            assert!(m.lower[j] >= 0.0 && m.upper[j] >= 0.0);
        }
    }

    #[test]
    fn grid_checks() {
        assert!(Grid1D::on_interval(1, 0.0, 1.0, 8).is_err());
        let g = Grid1D::on_interval(1, -1.0, 1.0, 20).unwrap();
        assert_eq!(g.locate(-1.0), Some(0));
        assert_eq!(g.locate(0.0), Some(10));
        assert_eq!(g.locate(1.0), None);
        assert_eq!(g.edge(20), 1.0);
    }
}
