//! Coefficient regularization: cut off outside D_n (a → δ, b → 0, c → 0),
//! then convolve in (x, t) with the exp-bump kernel of bandwidth 1/n on a
//! tensor grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::exprlang::EvalError;
use crate::problem::Problem;

/// Node budget for one tabulation (input grid including padding).
pub const MAX_NODES: usize = 20_000_000;

#[derive(Debug, thiserror::Error)]
pub enum MollifyError {
    #[error("smoothing index must be at least 1")]
    ZeroIndex,
    #[error("grid spacing {spacing} does not resolve bandwidth 1/{n} (need spacing <= {max})")]
    TooCoarse { spacing: f64, n: u32, max: f64 },
    #[error("tabulation needs {nodes} nodes, limit is {MAX_NODES}")]
    TooLarge { nodes: usize },
    #[error("time horizon must be positive, got {0}")]
    Horizon(f64),
    #[error("coefficient is not finite at x = {x:?}, t = {t}")]
    NonFinite { x: Vec<f64>, t: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// How coefficients are continued outside [0, T] before convolving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeExtension {
    /// Even reflection at t = 0 and t = T.
    #[default]
    Reflect,
    /// Cut off outside [0, T] like outside D_n.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub lower: f64,
    pub step: f64,
    pub nodes: usize,
}

impl Axis {
    fn covering(lo: f64, hi: f64, spacing: f64) -> Axis {
        let cells = ((hi - lo) / spacing).ceil().max(1.0) as usize;
        Axis {
            lower: lo,
            step: (hi - lo) / cells as f64,
            nodes: cells + 1,
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.step
    }

    pub fn upper(&self) -> f64 {
        self.node(self.nodes - 1)
    }

    /// Lower node index and weight of the upper node for linear interpolation.
    fn bracket(&self, x: f64) -> Option<(usize, f64)> {
        let s = (x - self.lower) / self.step;
        if !(s >= 0.0 && s <= (self.nodes - 1) as f64) {
            return None;
        }
        let i = (s.floor() as usize).min(self.nodes.saturating_sub(2));
        Some((i, s - i as f64))
    }
}

/// Tabulated mollified coefficients. Each node stores a (d×d, row-major),
/// then b (d), then c.
#[derive(Debug, Clone, Serialize)]
pub struct MollifiedSet {
    pub n: u32,
    pub dim: usize,
    pub bandwidth: f64,
    pub space: Vec<Axis>,
    /// `None` when the fields do not depend on t.
    pub time: Option<Axis>,
    pub extension: TimeExtension,
    /// Sum of the normalized discrete kernel weights.
    pub kernel_mass: f64,
    #[serde(skip)]
    values: Vec<f64>,
}

impl MollifiedSet {
    pub fn width(&self) -> usize {
        self.dim * self.dim + self.dim + 1
    }

    pub fn node_count(&self) -> usize {
        self.values.len() / self.width()
    }

    /// Point (x, t) of a flat node index; time-major.
    pub fn node_point(&self, idx: usize) -> (Vec<f64>, f64) {
        let mut rest = idx;
        let mut x = vec![0.0; self.dim];
        for j in (0..self.dim).rev() {
            let ax = &self.space[j];
            x[j] = ax.node(rest % ax.nodes);
            rest /= ax.nodes;
        }
        let t = self.time.map_or(0.0, |ax| ax.node(rest));
        (x, t)
    }

    /// Fields stored at a node.
    pub fn node_values(&self, idx: usize) -> &[f64] {
        let w = self.width();
        &self.values[idx * w..(idx + 1) * w]
    }

    fn constants(&self, out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.dim {
            out[i * self.dim + i] = 1.0;
        }
    }

    /// Multilinear interpolation; outside the table the fields are (δ, 0, 0).
    pub fn eval_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let d = self.dim;
        let mut br = Vec::with_capacity(d + 1);
        for j in 0..d {
            match self.space[j].bracket(x[j]) {
                Some(b) => br.push(b),
                None => return self.constants(out),
            }
        }
        let mut axes: Vec<usize> = self.space.iter().map(|a| a.nodes).collect();
        if let Some(ax) = &self.time {
            let tc = t.clamp(ax.lower, ax.upper());
            br.insert(0, ax.bracket(tc).expect("clamped"));
            axes.insert(0, ax.nodes);
        }
        out.fill(0.0);
        let w = self.width();
        for corner in 0..(1usize << br.len()) {
            let mut idx = 0;
            let mut weight = 1.0;
            for (k, ((i, f), n)) in br.iter().zip(&axes).enumerate() {
                let up = (corner >> k) & 1 == 1;
                idx = idx * n + i + up as usize;
                weight *= if up { *f } else { 1.0 - f };
            }
            if weight == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(&self.values[idx * w..(idx + 1) * w]) {
                *o += weight * v;
            }
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.width()];
        self.eval_into(x, t, &mut out);
        out
    }
}

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (-1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

/// Row-major strides for the given extents.
fn strides(extents: &[usize]) -> Vec<usize> {
    let mut s = vec![1; extents.len()];
    for k in (0..extents.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * extents[k + 1];
    }
    s
}

/// Mollified coefficients a_n, b_n, c_n tabulated over the (1/n)-neighborhood
/// of D_n, for times in [−1/n, T + 1/n].
pub fn mollify_coefficients(problem: &Problem, n: u32, spacing: f64, t_end: f64, extension: TimeExtension) -> Result<MollifiedSet, MollifyError> {
    if n == 0 {
        return Err(MollifyError::ZeroIndex);
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(MollifyError::Horizon(t_end));
    }
    let bw = 1.0 / n as f64;
    let max = 0.25 * bw;
    if !(spacing > 0.0 && spacing <= max * (1.0 + 1e-12)) {
        return Err(MollifyError::TooCoarse { spacing, n, max });
    }
    let d = problem.dim();
    let coeffs = &problem.coefficients;
    let region = problem.domain.exhaust(n);
    let space: Vec<Axis> = (0..d).map(|j| Axis::covering(region.lower[j] - bw, region.upper[j] + bw, spacing)).collect();
    let timed = coeffs.depends_on_time() || extension == TimeExtension::Zero;
    let time_axis = Axis::covering(-bw, t_end + bw, spacing);

    // stencil radii in nodes, and kernel weights over the offset box
    let rs: Vec<usize> = space.iter().map(|a| (bw / a.step).floor() as usize).collect();
    let rt = (bw / time_axis.step).floor() as usize;
    let mut k_ext: Vec<usize> = rs.iter().map(|r| 2 * r + 1).collect();
    if timed {
        k_ext.insert(0, 2 * rt + 1);
    }
    let k_len: usize = k_ext.iter().product();
    let mut kernel = vec![0.0; k_len];
    let k_strides = strides(&k_ext);
    for (flat, w) in kernel.iter_mut().enumerate() {
        let mut r2 = 0.0;
        let mut rest = flat;
        for (k, s) in k_strides.iter().enumerate() {
            let i = rest / s;
            rest %= s;
            let (off, step) = if timed && k == 0 {
                (i as f64 - rt as f64, time_axis.step)
            } else {
                let j = if timed { k - 1 } else { k };
                (i as f64 - rs[j] as f64, space[j].step)
            };
            r2 += (off * step * n as f64).powi(2);
        }
        if timed {
            *w = bump(r2);
        } else {
            // marginal over the time offsets
            *w = (-(rt as i64)..=rt as i64)
                .map(|l| bump(r2 + (l as f64 * time_axis.step * n as f64).powi(2)))
                .sum();
        }
    }
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= total);
    let kernel_mass: f64 = kernel.iter().sum();

    // padded input grid
    let mut in_ext: Vec<usize> = space.iter().zip(&rs).map(|(a, r)| a.nodes + 2 * r).collect();
    let mut out_ext: Vec<usize> = space.iter().map(|a| a.nodes).collect();
    if timed {
        in_ext.insert(0, time_axis.nodes + 2 * rt);
        out_ext.insert(0, time_axis.nodes);
    }
    let in_len: usize = in_ext.iter().product();
    let out_len: usize = out_ext.iter().product();
    if in_len > MAX_NODES {
        return Err(MollifyError::TooLarge { nodes: in_len });
    }
    let width = d * d + d + 1;
    let in_strides = strides(&in_ext);
    let point_of = |flat: usize| -> (Vec<f64>, f64) {
        let mut rest = flat;
        let mut x = Vec::with_capacity(d);
        let mut t = 0.0;
        for (k, s) in in_strides.iter().enumerate() {
            let i = (rest / s) as f64;
            rest %= s;
            if timed && k == 0 {
                t = time_axis.lower + (i - rt as f64) * time_axis.step;
            } else {
                let j = x.len();
                x.push(space[j].lower + (i - rs[j] as f64) * space[j].step);
            }
        }
        (x, t)
    };
    let input: Vec<f64> = (0..in_len)
        .into_par_iter()
        .map(|flat| -> Result<Vec<f64>, MollifyError> {
            let (x, t) = point_of(flat);
            let mut v = vec![0.0; width];
            let te = match extension {
                TimeExtension::Reflect => {
                    let r = if t < 0.0 {
                        -t
                    } else if t > t_end {
                        2.0 * t_end - t
                    } else {
                        t
                    };
                    Some(r.clamp(0.0, t_end))
                }
                TimeExtension::Zero => (0.0..=t_end).contains(&t).then_some(t),
            };
            match te {
                Some(te) if region.contains(&x) => {
                    coeffs.eval_a(&x, te, &mut v[..d * d])?;
                    coeffs.eval_b(&x, te, &mut v[d * d..d * d + d])?;
                    v[width - 1] = coeffs.eval_c(&x, te)?;
                    if v.iter().any(|f| !f.is_finite()) {
                        return Err(MollifyError::NonFinite { x, t: te });
                    }
                }
                _ => {
                    for i in 0..d {
                        v[i * d + i] = 1.0;
                    }
                }
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>, _>>()?
        .concat();

    let out_strides = strides(&out_ext);
    // offset of each kernel entry in the padded input, relative to the
    // input index of the output node
    let offsets: Vec<usize> = (0..k_len)
        .map(|flat| {
            let mut rest = flat;
            let mut off = 0;
            for (k, s) in k_strides.iter().enumerate() {
                off += (rest / s) * in_strides[k];
                rest %= s;
            }
            off
        })
        .collect();
    let values: Vec<f64> = (0..out_len)
        .into_par_iter()
        .flat_map_iter(|flat| {
            // output index (i_k) maps to input index i_k (the padding r_k
            // cancels the −r_k of the kernel offset)
            let mut rest = flat;
            let mut base = 0;
            for (k, s) in out_strides.iter().enumerate() {
                base += (rest / s) * in_strides[k];
                rest %= s;
            }
            let mut acc = vec![0.0; width];
            for (w, off) in kernel.iter().zip(&offsets) {
                if *w == 0.0 {
                    continue;
                }
                let src = &input[(base + off) * width..(base + off + 1) * width];
                for (a, v) in acc.iter_mut().zip(src) {
                    *a += w * v;
                }
            }
            acc
        })
        .collect();

    Ok(MollifiedSet {
        n,
        dim: d,
        bandwidth: bw,
        space,
        time: timed.then_some(time_axis),
        extension,
        kernel_mass,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::{parse, Expr};
    use crate::problem::{sym_eigenvalues, CoefficientSet, DomainSpec, InitialMeasure};

    fn p1(domain: DomainSpec, a: &str, b: &str, c: &str) -> Problem {
        Problem::new(
            domain,
            CoefficientSet::new(1, vec![parse(a).unwrap()], vec![parse(b).unwrap()], parse(c).unwrap()).unwrap(),
            InitialMeasure::Dirac(vec![0.0]),
        )
        .unwrap()
    }

    fn example1() -> Problem {
        p1(DomainSpec::interval(-1.0, 1.0), "0.5*abs(1-abs(x))^2", "tan(-pi*x/2) + sign(x)", "0")
    }

    #[test]
    fn unit_diffusion_stays_unit() {
        let p = p1(DomainSpec::interval(-1.0, 1.0), "1", "0", "0");
        for n in [1, 3, 8] {
            let m = mollify_coefficients(&p, n, 0.25 / n as f64, 1.0, TimeExtension::Reflect).unwrap();
            assert!((m.kernel_mass - 1.0).abs() < 1e-12);
            for i in 0..m.node_count() {
                assert!((m.node_values(i)[0] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn killing_keeps_its_sign() {
        let p = p1(DomainSpec::whole_space(1), "0.5", "-x", "-1");
        let m = mollify_coefficients(&p, 4, 1.0 / 16.0, 1.0, TimeExtension::Reflect).unwrap();
        for i in 0..m.node_count() {
            let c = m.node_values(i)[2];
            assert!((-1.0 - 1e-12..=0.0).contains(&c));
        }
        // D_4 = (-4, 4), bandwidth 1/4
        assert!((m.eval(&[0.0], 0.5)[2] + 1.0).abs() < 1e-12);
        assert!((m.eval(&[3.5], 0.5)[2] + 1.0).abs() < 1e-12);
        assert_eq!(m.eval(&[4.3], 0.5)[2], 0.0);
        assert_eq!(m.eval(&[9.0], 0.5), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn degenerate_example_gains_ellipticity() {
        let p = example1();
        let n = 6;
        let m = mollify_coefficients(&p, n, 1.0 / 24.0, 1.0, TimeExtension::Reflect).unwrap();
        // m_6 = inf of a over D_6
        let edge = 1.0 - 0.5f64.powi(7);
        let m6 = 0.5 * (1.0 - edge) * (1.0 - edge);
        let floor = m6.min(1.0);
        let d5 = p.domain.exhaust(5);
        for i in 0..m.node_count() {
            let (x, _) = m.node_point(i);
            if d5.contains(&x) {
                assert!(m.node_values(i)[0] >= floor * (1.0 - 1e-12));
            }
        }
        // dense oracle: evaluate the discrete convolution directly at a node
        let ax = m.space[0];
        let i = ax.nodes / 3;
        let x = ax.node(i);
        let r = (m.bandwidth / ax.step).floor() as i64;
        let region = p.domain.exhaust(n);
        let (mut num, mut den) = (0.0, 0.0);
        for k in -r..=r {
            let y = x + k as f64 * ax.step;
            // time marginal of the bump
            let w: f64 = {
                let t_ax = Axis::covering(-m.bandwidth, 1.0 + m.bandwidth, 1.0 / 24.0);
                let rt = (m.bandwidth / t_ax.step).floor() as i64;
                (-rt..=rt)
                    .map(|l| bump(((k as f64 * ax.step).powi(2) + (l as f64 * t_ax.step).powi(2)) * (n * n) as f64))
                    .sum()
            };
            let a = if region.contains(&[y]) { p.coefficients.a1(y, 0.0).unwrap() } else { 1.0 };
            num += w * a;
            den += w;
        }
        assert!((m.node_values(i)[0] - num / den).abs() < 1e-12);
    }

    #[test]
    fn converges_in_l1_on_a_fixed_piece() {
        let p = example1();
        let d3 = p.domain.exhaust(3);
        let mut errs = Vec::new();
        for n in [8, 16, 32] {
            let m = mollify_coefficients(&p, n, 0.25 / n as f64, 1.0, TimeExtension::Reflect).unwrap();
            let cells = 2000;
            let h = (d3.upper[0] - d3.lower[0]) / cells as f64;
            let mut e = 0.0;
            for i in 0..cells {
                let x = d3.lower[0] + (i as f64 + 0.5) * h;
                e += (m.eval(&[x], 0.5)[0] - p.coefficients.a1(x, 0.0).unwrap()).abs() * h;
            }
            errs.push(e);
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
    }

    #[test]
    fn time_dependent_fields_and_zero_extension() {
        let p = p1(DomainSpec::interval(-1.0, 1.0), "1 + t", "0", "-t");
        let m = mollify_coefficients(&p, 4, 1.0 / 16.0, 1.0, TimeExtension::Reflect).unwrap();
        assert!(m.time.is_some());
        // linear in t: the symmetric kernel reproduces it away from the ends
        assert!((m.eval(&[0.0], 0.5)[0] - 1.5).abs() < 1e-9);
        assert!((m.eval(&[0.0], 0.5)[2] + 0.5).abs() < 1e-9);
        let z = mollify_coefficients(&p, 4, 1.0 / 16.0, 1.0, TimeExtension::Zero).unwrap();
        // at t = 0 about half of the kernel sees the cut-off constant 1
        let a0 = z.eval(&[0.0], 0.0)[0];
        assert!(a0 > 0.9 && a0 < 1.2, "{a0}");
        let c0 = z.eval(&[0.0], 1.0)[2];
        assert!(c0 > -1.0 && c0 < -0.2, "{c0}");
    }

    #[test]
    fn two_dimensional_matrix_stays_psd_and_symmetric() {
        let a = vec![parse("2 + x1").unwrap(), parse("x2/2").unwrap(), parse("x2/2").unwrap(), parse("1").unwrap()];
        let b = vec![parse("-x1").unwrap(), parse("-x2").unwrap()];
        let c = CoefficientSet::new(2, a, b, Expr::num(0.0)).unwrap();
        let p = Problem::new(DomainSpec::whole_space(2), c, InitialMeasure::Dirac(vec![0.0, 0.0])).unwrap();
        let m = mollify_coefficients(&p, 1, 0.25, 1.0, TimeExtension::Reflect).unwrap();
        for i in 0..m.node_count() {
            let v = m.node_values(i);
            assert_eq!(v[1], v[2]);
            let (lo, _) = sym_eigenvalues(&v[..4], 2);
            assert!(lo >= -1e-12);
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        assert!(matches!(
            mollify_coefficients(&example1(), 4, 0.1, 1.0, TimeExtension::Reflect),
            Err(MollifyError::TooCoarse { .. })
        ));
        assert!(matches!(mollify_coefficients(&example1(), 0, 0.1, 1.0, TimeExtension::Reflect), Err(MollifyError::ZeroIndex)));
    }
}
