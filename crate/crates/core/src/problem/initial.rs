use super::{DomainSpec, ProblemError, Region};
use crate::exprlang::{Compiled, Expr};
use crate::quadrature::gauss_legendre_nodes;

/// Initial measure ν. Densities are normalized against whatever support
/// they are discretized on, so the total mass is exactly one there.
#[derive(Debug, Clone)]
pub enum InitialMeasure {
    Density(Expr),
    Dirac(Vec<f64>),
    Uniform { lower: Vec<f64>, upper: Vec<f64> },
}

impl InitialMeasure {
    pub fn check(&self, domain: &DomainSpec) -> Result<(), ProblemError> {
        let d = domain.dim();
        let bad = |m: String| Err(ProblemError::InvalidInitial(m));
        match self {
            InitialMeasure::Density(e) => {
                if let Some(i) = e.max_space_index() {
                    if i >= d {
                        return Err(ProblemError::VariableIndex {
                            field: "initial density".into(),
                            index: i + 1,
                            dim: d,
                        });
                    }
                }
                if e.depends_on_time() {
                    return bad("initial density may not depend on t".into());
                }
            }
            InitialMeasure::Dirac(p) => {
                if p.len() != d {
                    return bad(format!("dirac point has {} coordinates, dimension is {d}", p.len()));
                }
                if !domain.contains(p) {
                    return bad(format!("dirac point {p:?} is outside the domain"));
                }
            }
            InitialMeasure::Uniform { lower, upper } => {
                if lower.len() != d || upper.len() != d {
                    return bad(format!("uniform box needs {d} coordinates"));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
                    return bad("uniform box needs lower < upper".into());
                }
                let mid: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
                if !domain.contains(&mid) {
                    return bad("uniform box is outside the domain".into());
                }
            }
        }
        Ok(())
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self, InitialMeasure::Dirac(_))
    }

    /// Normalized cell masses on a 1D grid with the given edges. A Dirac
    /// mass goes to its cell, split evenly when it sits on an interface.
    pub fn cell_masses_1d(&self, edges: &[f64]) -> Result<Vec<f64>, ProblemError> {
        let n = edges.len() - 1;
        let mut m = vec![0.0; n];
        match self {
            InitialMeasure::Dirac(p) => {
                let x = p[0];
                if !(edges[0] < x && x < edges[n]) {
                    return Err(ProblemError::InvalidInitial(format!(
                        "dirac point {x} outside the meshed region ({}, {})",
                        edges[0], edges[n]
                    )));
                }
                let i = edges.partition_point(|&e| e <= x) - 1;
                if x == edges[i] && i > 0 {
                    m[i - 1] = 0.5;
                    m[i] = 0.5;
                } else {
                    m[i] = 1.0;
                }
                return Ok(m);
            }
            InitialMeasure::Uniform { lower, upper } => {
                for i in 0..n {
                    let lo = edges[i].max(lower[0]);
                    let hi = edges[i + 1].min(upper[0]);
                    m[i] = (hi - lo).max(0.0);
                }
            }
            InitialMeasure::Density(e) => {
                let f = Compiled::new(e);
                for i in 0..n {
                    let mut s = 0.0;
                    for (x, w) in gauss_legendre_nodes(edges[i], edges[i + 1], 1) {
                        let v = f.eval(&[x], 0.0)?;
                        if v < 0.0 {
                            return Err(ProblemError::InvalidInitial(format!("initial density is negative ({v}) at x = {x}")));
                        }
                        s += w * v;
                    }
                    m[i] = s;
                }
            }
        }
        let total: f64 = m.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(ProblemError::InvalidInitial(format!(
                "initial measure has mass {total} on ({}, {})",
                edges[0], edges[n]
            )));
        }
        m.iter_mut().for_each(|v| *v /= total);
        Ok(m)
    }

    /// Tabulation over a tensor grid of `region`'s bounding box with `cells`
    /// cells per axis: returns the cell lower corners, cell widths and
    /// normalized masses. Used to sample particles from densities.
    pub fn tabulate(&self, region: &Region, cells: usize) -> Result<Tabulated, ProblemError> {
        let d = region.dim();
        let widths: Vec<f64> = (0..d).map(|i| (region.upper[i] - region.lower[i]) / cells as f64).collect();
        let total_cells = cells.pow(d as u32);
        let mut corners = Vec::with_capacity(total_cells);
        let mut masses = Vec::with_capacity(total_cells);
        let f = match self {
            InitialMeasure::Density(e) => Some(Compiled::new(e)),
            _ => None,
        };
        let mut x = vec![0.0; d];
        for flat in 0..total_cells {
            let mut rem = flat;
            let mut corner = vec![0.0; d];
            for i in 0..d {
                corner[i] = region.lower[i] + (rem % cells) as f64 * widths[i];
                rem /= cells;
            }
            let mass = match (self, &f) {
                (InitialMeasure::Density(_), Some(f)) => {
                    // midpoint rule per cell; fine for sampling purposes
                    for i in 0..d {
                        x[i] = corner[i] + 0.5 * widths[i];
                    }
                    if region.contains_closed(&x) {
                        let v = f.eval(&x, 0.0)?;
                        if v < 0.0 {
                            return Err(ProblemError::InvalidInitial(format!("initial density is negative ({v}) at {x:?}")));
                        }
                        v * widths.iter().product::<f64>()
                    } else {
                        0.0
                    }
                }
                (InitialMeasure::Uniform { lower, upper }, _) => (0..d)
                    .map(|i| ((corner[i] + widths[i]).min(upper[i]) - corner[i].max(lower[i])).max(0.0))
                    .product(),
                _ => 0.0,
            };
            corners.push(corner);
            masses.push(mass);
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(ProblemError::InvalidInitial(format!("initial measure has mass {total} on the sampling region")));
        }
        masses.iter_mut().for_each(|v| *v /= total);
        Ok(Tabulated { corners, widths, masses })
    }
}

#[derive(Debug, Clone)]
pub struct Tabulated {
    pub corners: Vec<Vec<f64>>,
    pub widths: Vec<f64>,
    pub masses: Vec<f64>,
}
