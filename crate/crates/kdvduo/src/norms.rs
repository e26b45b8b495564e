use crate::error::Result;
use crate::grid::Grid;
use crate::params::ValidatedParams;
use crate::state::StatePair;

fn trapezoid_dot(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), w)| w * x * y).sum()
}

/// Weighted state inner product (b/c)<u,phi> + <v,psi> by composite trapezoid.
pub fn inner_product_x(lhs: &StatePair, rhs: &StatePair, p: &ValidatedParams, g: &Grid) -> Result<f64> {
    lhs.check(g.nx)?;
    rhs.check(g.nx)?;
    let w = g.space_weights();
    Ok(p.u_weight() * trapezoid_dot(&lhs.u, &rhs.u, &w) + trapezoid_dot(&lhs.v, &rhs.v, &w))
}

pub fn x_norm(s: &StatePair, p: &ValidatedParams, g: &Grid) -> Result<f64> {
    Ok(inner_product_x(s, s, p, g)?.max(0.0).sqrt())
}

/// Unweighted trapezoid pairing <u,phi> + <v,psi>; the Gramian is symmetric in it.
pub fn pairing(lhs: &StatePair, rhs: &StatePair, g: &Grid) -> Result<f64> {
    lhs.check(g.nx)?;
    rhs.check(g.nx)?;
    let w = g.space_weights();
    Ok(trapezoid_dot(&lhs.u, &rhs.u, &w) + trapezoid_dot(&lhs.v, &rhs.v, &w))
}

pub fn pairing_norm(s: &StatePair, g: &Grid) -> Result<f64> {
    Ok(pairing(s, s, g)?.max(0.0).sqrt())
}

/// Trapezoid integral of a series sampled on the time nodes.
pub fn time_integral(series: &[f64], g: &Grid) -> f64 {
    series.iter().zip(g.time_weights()).map(|(x, w)| x * w).sum()
}

/// Discrete L2(0,T) norm with trapezoid weights.
pub fn time_l2(series: &[f64], g: &Grid) -> f64 {
    series.iter().zip(g.time_weights()).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
}
