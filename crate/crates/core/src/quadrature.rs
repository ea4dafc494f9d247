//! Composite trapezoidal rule on uniform grids.

/// Trapezoidal integral of `values` sampled with spacing `dx`.
///
/// # Panics
///
/// Panics with fewer than two samples.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    assert!(values.len() >= 2, "trapezoid needs at least 2 samples");
    let interior: f64 = values[1..values.len() - 1].iter().sum();
    dx * (interior + 0.5 * (values[0] + values[values.len() - 1]))
}

/// Trapezoidal integral of the product `f(x_j) g(x_j)` without materializing it.
pub(crate) fn trapezoid_product(
    len: usize,
    dx: f64,
    mut f: impl FnMut(usize) -> f64,
    mut g: impl FnMut(usize) -> f64,
) -> f64 {
    assert!(len >= 2, "trapezoid needs at least 2 samples");
    let last = len - 1;
    let mut acc = 0.5 * (f(0) * g(0) + f(last) * g(last));
    for j in 1..last {
        acc += f(j) * g(j);
    }
    dx * acc
}
