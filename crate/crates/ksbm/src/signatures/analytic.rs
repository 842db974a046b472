//! Closed-form signatures of synchronized steady states
//! `θ_i(t) = ωt + Δθ_i` on `[0, T]`.

use num_complex::Complex64;

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// Any level-`M` entry of the phase signature: `(ωT)^M / M!`.
pub fn analytic_ss_signature_theta(omega: f64, t: f64, level: usize) -> f64 {
    (omega * t).powi(level as i32) / factorial(level)
}

/// `S_I(e^{iΘ}) = λ_I (e^{iωT} − 1)^M / M!` with `λ_I = e^{iΣ_{u∈I} Δθ_u}`;
/// `delta_thetas` holds `Δθ_u` for each entry of the multi-index.
pub fn analytic_ss_signature_exp(delta_thetas: &[f64], omega: f64, t: f64) -> Complex64 {
    let m = delta_thetas.len();
    let lambda = Complex64::from_polar(1.0, delta_thetas.iter().sum());
    let loop_term = Complex64::from_polar(1.0, omega * t) - 1.0;
    lambda * loop_term.powi(m as i32) / factorial(m)
}

/// Steady-state lead of the sinusoids in the form
/// `(sin Δθ_ij / 2)(ωT + sin ωT)`.
///
/// For the based piecewise path the exact value is
/// [`analytic_ss_lead_sin_exact`]; the two agree whenever `sin ωT = 0` and
/// otherwise differ by `sin Δθ_ij · sin ωT`.
pub fn analytic_ss_lead_sin(delta_theta_ij: f64, omega: f64, t: f64) -> f64 {
    0.5 * delta_theta_ij.sin() * (omega * t + (omega * t).sin())
}

/// Exact `½∫ (x_i dx_j − x_j dx_i)` of `x_k(t) = sin(ωt + Δθ_k) − sin Δθ_k`:
/// `(sin Δθ_ij / 2)(ωT − sin ωT)`.
pub fn analytic_ss_lead_sin_exact(delta_theta_ij: f64, omega: f64, t: f64) -> f64 {
    0.5 * delta_theta_ij.sin() * (omega * t - (omega * t).sin())
}

/// Exact `S_(i,j)` of `sin(ωt + Δθ_i)`, `sin(ωt + Δθ_j)` on `[0, T]`.
pub fn analytic_ss_signature_sin(delta_i: f64, delta_j: f64, omega: f64, t: f64) -> f64 {
    let (wt, dif, sum) = (omega * t, delta_i - delta_j, delta_i + delta_j);
    0.5 * wt * dif.sin() + 0.5 * dif.cos() - 0.25 * sum.cos() - 0.5 * (wt - dif).cos() + 0.5 * (sum + wt).cos()
        - 0.25 * (sum + 2.0 * wt).cos()
}

/// Four-term expression
/// `½sin²(ωT)cos(Δθ_i+Δθ_j) + ¼sin(2ωT)sin(Δθ_i+Δθ_j) + (ωT/2)sin Δθ_ij
///  + [sin θ_j]_0^T sin Δθ_i`.
///
/// Its antisymmetric part is [`analytic_ss_lead_sin`]; it does not equal the
/// iterated integral [`analytic_ss_signature_sin`] in general.
pub fn analytic_ss_signature_sin_four_term(delta_i: f64, delta_j: f64, omega: f64, t: f64) -> f64 {
    let wt = omega * t;
    let sum = delta_i + delta_j;
    0.5 * wt.sin().powi(2) * sum.cos()
        + 0.25 * (2.0 * wt).sin() * sum.sin()
        + 0.5 * wt * (delta_i - delta_j).sin()
        + ((wt + delta_j).sin() - delta_j.sin()) * delta_i.sin()
}
