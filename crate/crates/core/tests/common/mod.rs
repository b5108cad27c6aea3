//! Reference computations shared by the integration tests.

use fractau::oracle::adaptive_integrate_vec;
use fractau::poly::MonomialPoly;
use fractau::special::gamma;
use fractau::Result;

/// Caputo derivatives of order `order` ∈ (0,1) ∪ (1,2) of every `u` at t,
/// from the definition (1/Γ(1−γ)) ∫₀^t v(t−τ) τ^{−γ} dτ with v = u′ or u″.
/// Two Taylor terms of v at t are integrated in closed form; the remainder
/// is O(τ^{2−γ}).
pub fn caputo_by_definition(us: &[MonomialPoly], order: f64, t: f64, tol: f64) -> Result<Vec<f64>> {
    let n = us.len();
    if t == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let (gam, levels) = if order < 1.0 { (order, 1) } else { (order - 1.0, 2) };
    let vs: Vec<_> = us
        .iter()
        .map(|u| (0..levels).fold(u.clone(), |p, _| p.derivative()))
        .collect();
    let taylor: Vec<(f64, f64)> = vs.iter().map(|v| (v.eval(t), v.derivative().eval(t))).collect();
    let rest = adaptive_integrate_vec(
        |tau| {
            let w = tau.powf(-gam);
            Ok(vs
                .iter()
                .zip(&taylor)
                .map(|(v, &(v0, d0))| (v.eval(t - tau) - v0 + d0 * tau) * w)
                .collect())
        },
        0.0,
        t,
        n,
        tol,
    )?;
    let g = gamma(1.0 - gam);
    Ok(taylor
        .iter()
        .zip(rest)
        .map(|(&(v0, d0), r)| {
            (v0 * t.powf(1.0 - gam) / (1.0 - gam) - d0 * t.powf(2.0 - gam) / (2.0 - gam) + r) / g
        })
        .collect())
}
