//! Fixed and adaptive one-dimensional quadrature.

/// Five-point Gauss–Legendre nodes and weights on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Nodes and weights of a composite five-point Gauss–Legendre rule with
/// `cells` equal cells on `[a, b]`.
pub fn gauss_legendre_nodes(a: f64, b: f64, cells: usize) -> impl Iterator<Item = (f64, f64)> {
    let h = (b - a) / cells as f64;
    (0..cells).flat_map(move |c| {
        let mid = a + (c as f64 + 0.5) * h;
        GL5_NODES
            .iter()
            .zip(GL5_WEIGHTS.iter())
            .map(move |(&z, &w)| (mid + 0.5 * h * z, 0.5 * h * w))
    })
}

pub fn gauss_legendre<E>(a: f64, b: f64, cells: usize, mut f: impl FnMut(f64) -> Result<f64, E>) -> Result<f64, E> {
    let mut sum = 0.0;
    for (x, w) in gauss_legendre_nodes(a, b, cells) {
        sum += w * f(x)?;
    }
    Ok(sum)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<E>(a: f64, b: f64, tol: f64, f: &mut impl FnMut(f64) -> Result<f64, E>) -> Result<f64, E> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<E>(
    f: &mut impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, E> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}
