//! Finite-difference stencils in units of the grid spacing.

/// Interior third-derivative stencil on offsets -3..=3.
pub const D3_INTERIOR: [f64; 7] = [0.125, -1.0, 1.625, 0.0, -1.625, 1.0, -0.125];

/// Left closure rows 0..3 of the third-derivative operator (columns 0..7).
/// Together with trapezoid weights H they satisfy
/// H D3 + D3^T H = -e0 s^T - s e0^T + d d^T near x = 0,
/// with s the one-sided u_xx stencil and d the one-sided u_x stencil.
pub const D3_LEFT: [[f64; 7]; 3] = [
    [-1.75, 5.25, -5.25, 1.75, 0.0, 0.0, 0.0],
    [-0.625, 2.0, -2.25, 1.0, -0.125, 0.0, 0.0],
    [-0.625, 1.25, 0.125, -1.625, 1.0, -0.125, 0.0],
];

/// One-sided first derivative at x = 0 (second order).
pub const DX_LEFT: [f64; 3] = [-1.5, 2.0, -0.5];
/// One-sided first derivative at x = L on nodes N-2, N-1, N.
pub const DX_RIGHT: [f64; 3] = [0.5, -2.0, 1.5];
/// One-sided second derivative at x = 0 (second order).
pub const DXX_LEFT: [f64; 4] = [2.0, -5.0, 4.0, -1.0];
/// One-sided second derivative at x = L on nodes N-3..=N.
pub const DXX_RIGHT: [f64; 4] = [-1.0, 4.0, -5.0, 2.0];

/// Nonzero entries (column, coefficient) of row `i` of the third-derivative
/// operator on `nx` nodes, before division by dx^3.
pub fn d3_row(i: usize, nx: usize) -> Vec<(usize, f64)> {
    let last = nx - 1;
    let closure = D3_LEFT.len();
    if i < closure {
        return D3_LEFT[i].iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(j, &c)| (j, c)).collect();
    }
    if last - i < closure {
        let k = last - i;
        return D3_LEFT[k]
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, &c)| (last - j, -c))
            .collect();
    }
    D3_INTERIOR
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(k, &c)| (i + k - 3, c))
        .collect()
}

/// Row `i` of the first-derivative operator (central inside, one-sided
/// first order at the two end nodes), before division by dx.
pub fn d1_row(i: usize, nx: usize) -> Vec<(usize, f64)> {
    let last = nx - 1;
    if i == 0 {
        vec![(0, -1.0), (1, 1.0)]
    } else if i == last {
        vec![(last - 1, -1.0), (last, 1.0)]
    } else {
        vec![(i - 1, -0.5), (i + 1, 0.5)]
    }
}

/// Centered first derivative with second-order one-sided ends.
pub fn derivative(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    let last = n - 1;
    (0..n)
        .map(|i| {
            if i == 0 {
                DX_LEFT.iter().enumerate().map(|(k, c)| c * f[k]).sum::<f64>() / dx
            } else if i == last {
                DX_RIGHT.iter().enumerate().map(|(k, c)| c * f[last - 2 + k]).sum::<f64>() / dx
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * dx)
            }
        })
        .collect()
}

pub fn apply_rows(rows: impl Fn(usize) -> Vec<(usize, f64)>, x: &[f64], scale: f64) -> Vec<f64> {
    (0..x.len()).map(|i| rows(i).iter().map(|&(j, c)| c * x[j]).sum::<f64>() * scale).collect()
}
