//! Closed-form moments and bounds for output probabilities of noisy
//! brickwork ensembles.

use serde::{Deserialize, Serialize};

use crate::channel::{pair_coefficients_from_ptm, r_value, Order, PauliTransferMap, StandardNoise};
use crate::error::{check_unit, Error, Result};

/// Above this n the log-domain value is the canonical output.
pub const LOG_DOMAIN_THRESHOLD: usize = 50;

/// Self-describing evaluation of one formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub formula: String,
    pub inputs: Vec<(String, f64)>,
    /// Linear-domain value; may be `inf` or `0` when it over/underflows.
    pub value: f64,
    /// Natural log of the value, finite whenever the value is positive.
    pub ln_value: f64,
    /// True when `ln_value` is the authoritative output (n > 50).
    pub log_domain: bool,
}

impl Prediction {
    fn new(formula: &str, inputs: &[(&str, f64)], ln_value: f64, n: usize) -> Self {
        Self {
            formula: formula.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value: ln_value.exp(),
            ln_value,
            log_domain: n > LOG_DOMAIN_THRESHOLD,
        }
    }
}

/// ln(e^x - 1) without overflow.
fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

fn check_weight(n: usize, w: usize) -> Result<()> {
    if w > n {
        return Err(Error::Parameter {
            name: "w_x",
            value: w as f64,
            range: "[0, n]",
        });
    }
    Ok(())
}

/// E[p_x] = (1-r)^w (1+r)^(n-w) / 2^n.
pub fn first_moment_r(n: usize, w: usize, r: f64) -> Result<Prediction> {
    check_weight(n, w)?;
    check_unit("r", r)?;
    let term = |count: usize, ln_factor: f64| if count == 0 { 0.0 } else { count as f64 * ln_factor };
    let ln = term(w, (-r).ln_1p()) + term(n - w, r.ln_1p()) - n as f64 * std::f64::consts::LN_2;
    let mut rec = Prediction::new("first_moment", &[("n", n as f64), ("w_x", w as f64), ("r", r)], ln, n);
    if n <= LOG_DOMAIN_THRESHOLD {
        rec.value = (1.0 - r).powi(w as i32) * (1.0 + r).powi((n - w) as i32) / 2f64.powi(n as i32);
    }
    Ok(rec)
}

pub fn first_moment(n: usize, w: usize, order: Order, p: f64, q: f64) -> Result<f64> {
    Ok(first_moment_r(n, w, r_value(order, p, q)?)?.value)
}

/// Same formula for a substring of `len` bits with `w_y` ones.
pub fn marginal_first_moment(len: usize, w_y: usize, order: Order, p: f64, q: f64) -> Result<f64> {
    first_moment(len, w_y, order, p, q)
}

/// (1/2) <x_i| N(I) |x_i> = (1 ± t03) / 2.
pub fn conditional_first_moment(t03: f64, bit: u8) -> f64 {
    if bit == 0 {
        0.5 * (1.0 + t03)
    } else {
        0.5 * (1.0 - t03)
    }
}

/// Z >= (1 + r^2)^n - 1.
pub fn collision_lower_bound(n: usize, r: f64) -> f64 {
    collision_bound_record("collision_bound", n, r * r, &[("n", n as f64), ("r", r)]).value
}

pub fn collision_lower_bound_record(n: usize, r: f64) -> Prediction {
    collision_bound_record("collision_bound", n, r * r, &[("n", n as f64), ("r", r)])
}

/// Z >= (1 + t03^2)^n - 1.
pub fn collision_lower_bound_general(n: usize, t03: f64) -> f64 {
    collision_bound_record(
        "collision_bound_general",
        n,
        t03 * t03,
        &[("n", n as f64), ("t03", t03)],
    )
    .value
}

/// Z >= (1 + q^2 cos^2 2θ)^n - 1 with θ the angle minimising |cos 2θ|.
pub fn collision_lower_bound_rotations(n: usize, q: f64, thetas: &[f64]) -> f64 {
    let cos_min = thetas
        .iter()
        .map(|t| (2.0 * t).cos().abs())
        .fold(f64::INFINITY, f64::min);
    let cos_min = if cos_min.is_finite() { cos_min } else { 1.0 };
    collision_bound_record(
        "collision_bound_rotations",
        n,
        q * q * cos_min * cos_min,
        &[("n", n as f64), ("q", q), ("cos_2theta_min", cos_min)],
    )
    .value
}

fn collision_bound_record(formula: &str, n: usize, s: f64, inputs: &[(&str, f64)]) -> Prediction {
    let exponent = n as f64 * s.ln_1p();
    let mut rec = Prediction::new(formula, inputs, ln_expm1(exponent), n);
    // Keep full precision for small values rather than exp(ln(.)).
    rec.value = exponent.exp_m1();
    rec
}

/// Parameters of the high-depth second-moment bound for the standard noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentParams {
    pub mu: f64,
    pub nu: f64,
    /// η = 1 - r^2 (the standard-noise definition; see [`GeneralNoiseParams::eta_general`]).
    pub eta_bias: f64,
    pub c: f64,
    pub r: f64,
}

pub fn second_moment_params(order: Order, p: f64, q: f64) -> Result<SecondMomentParams> {
    let noise = StandardNoise::new(order, p, q)?;
    if p == 0.0 && q == 0.0 {
        return Err(Error::NoiselessRegime);
    }
    let r = noise.r();
    let c = noise.pair_c();
    Ok(SecondMomentParams {
        mu: 0.25 + r * r / (12.0 * c),
        nu: 1.0 / 12.0 - r * r / (12.0 * c),
        eta_bias: 1.0 - r * r,
        c,
        r,
    })
}

/// μ^n η^n exp[n (ν/μ) e^{-c(d-1)}].
pub fn second_moment_bound_record(n: usize, d: usize, params: &SecondMomentParams) -> Prediction {
    let nf = n as f64;
    let ln = nf * params.mu.ln()
        + nf * params.eta_bias.ln()
        + nf * (params.nu / params.mu) * (-params.c * (d as f64 - 1.0)).exp();
    Prediction::new(
        "second_moment_bound",
        &[
            ("n", nf),
            ("d", d as f64),
            ("mu", params.mu),
            ("nu", params.nu),
            ("eta", params.eta_bias),
            ("c", params.c),
        ],
        ln,
        n,
    )
}

pub fn second_moment_bound(n: usize, d: usize, params: &SecondMomentParams) -> f64 {
    second_moment_bound_record(n, d, params).value
}

/// Sufficient condition for lack of anticoncentration at high depth.
pub fn regime_check(order: Order, p: f64, q: f64) -> Result<bool> {
    let r = r_value(order, p, q)?;
    if r == 0.0 {
        return Ok(false);
    }
    Ok(match order {
        Order::AmpThenDep => q == 1.0 || (q * q + 2.0) / ((q - 3.0) * (q - 1.0)) > (1.0 - p).powi(2),
        Order::DepThenAmp => q > 0.75 - 1.0 / (2.0 * (1.0 - p).powi(2)),
    })
}

/// Parameters for a general trace-preserving single-qubit map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralNoiseParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// NaN when the inner 3x3 block has Frobenius norm² 3 (c = 0).
    pub mu: f64,
    pub nu: f64,
    /// sqrt(max{(1+t03)^2, t13^2/2 + t23^2/2 + t33^2/2 + (1+t03)^2/2}).
    pub eta_general: f64,
}

pub fn general_noise_params(ptm: &PauliTransferMap) -> GeneralNoiseParams {
    let pc = pair_coefficients_from_ptm(ptm);
    let shift: f64 = (1..4).map(|j| ptm.t(0, j).powi(2)).sum();
    let inner: f64 = (1..4)
        .flat_map(|i| (1..4).map(move |j| (i, j)))
        .map(|(i, j)| ptm.t(i, j).powi(2))
        .sum();
    let c = 1.0 - inner / 3.0;
    let (mu, nu) = if inner == 3.0 {
        (f64::NAN, f64::NAN)
    } else {
        (
            (-shift + inner - 3.0) / (4.0 * (inner - 3.0)),
            (3.0 * shift + inner - 3.0) / (12.0 * (inner - 3.0)),
        )
    };
    let t03 = ptm.t(0, 3);
    let lead = (1.0 + t03).powi(2);
    let alt = ptm.t(1, 3).powi(2) / 2.0 + ptm.t(2, 3).powi(2) / 2.0 + ptm.t(3, 3).powi(2) / 2.0 + lead / 2.0;
    GeneralNoiseParams {
        a: pc.a,
        b: pc.b,
        c,
        mu,
        nu,
        eta_general: lead.max(alt).sqrt(),
    }
}

pub fn regime_check_general(params: &GeneralNoiseParams) -> bool {
    let prod = 4.0 * params.mu * params.eta_general;
    params.mu >= 0.0 && params.nu >= 0.0 && params.c > 0.0 && params.c <= 1.0 && (0.0..1.0).contains(&prod)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LightconeTerms {
    /// E[A_σ] = 2 w r - n r.
    pub e_a_sigma: f64,
    /// 4 (κ - 1/2 + τ λ^d)^2 / 30^d.
    pub zsq_lower: f64,
    /// n ln 2 + E[A_σ] + n/(4·4^d) · zsq_lower.
    pub neglog_lower: f64,
}

pub fn lightcone_terms(
    n: usize,
    w: usize,
    r: f64,
    d: usize,
    kappa: f64,
    tau: f64,
    lambda: f64,
) -> Result<LightconeTerms> {
    check_weight(n, w)?;
    if kappa < 0.5 {
        return Err(Error::Parameter {
            name: "kappa",
            value: kappa,
            range: "[1/2, 1]",
        });
    }
    let nf = n as f64;
    let di = d as i32;
    let e_a_sigma = 2.0 * w as f64 * r - nf * r;
    let zsq_lower = 4.0 * (kappa - 0.5 + tau * lambda.powi(di)).powi(2) / 30f64.powi(di);
    let neglog_lower = nf * std::f64::consts::LN_2 + e_a_sigma + nf / (4.0 * 4f64.powi(di)) * zsq_lower;
    Ok(LightconeTerms {
        e_a_sigma,
        zsq_lower,
        neglog_lower,
    })
}

/// Finite-n reading of the low-depth concentration statement: with
/// X = -ln p_x, Var X <= 2n and deviation k = n^0.01 sqrt(2n), Chebyshev
/// gives Pr[X < E X - k] <= n^-0.02.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowDepthReport {
    /// Lower bound on E[-ln p_x].
    pub expected_neglog_lower: f64,
    pub deviation: f64,
    /// Upper bound on Pr[-ln p_x < expected_neglog_lower - deviation].
    pub tail_probability: f64,
    /// ln of the threshold t with Pr[p_x <= t] >= 1 - tail_probability.
    pub ln_threshold: f64,
    /// ln(2^n t): p_x < α/2^n is implied for every α above exp of this.
    pub ln_alpha: f64,
}

pub fn low_depth_report(terms: &LightconeTerms, n: usize) -> LowDepthReport {
    let nf = n as f64;
    let deviation = nf.powf(0.01) * (2.0 * nf).sqrt();
    let ln_threshold = -(terms.neglog_lower - deviation);
    LowDepthReport {
        expected_neglog_lower: terms.neglog_lower,
        deviation,
        tail_probability: nf.powf(-0.02),
        ln_threshold,
        ln_alpha: ln_threshold + nf * std::f64::consts::LN_2,
    }
}

/// Lower bound (1-α)^2 mean^2 / second on Pr[p >= α mean].
pub fn paley_zygmund_bound(mean: f64, second_moment: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter {
            name: "alpha",
            value: alpha,
            range: "(0, 1)",
        });
    }
    let mean_sq = mean * mean;
    if second_moment < mean_sq || second_moment <= 0.0 {
        return Err(Error::InconsistentMoments {
            second: second_moment,
            mean_sq,
        });
    }
    Ok((1.0 - alpha).powi(2) * mean_sq / second_moment)
}

/// Chebyshev: Pr[p_x < α/2^n + E p_x] >= 1 - 4^n E[p_x^2] / α^2.
pub fn chebyshev_tail_lower(n: usize, second_moment: f64, alpha: f64) -> f64 {
    1.0 - 4f64.powi(n as i32) * second_moment / (alpha * alpha)
}

/// β = q cos 2θ.
pub fn bias(q: f64, theta: f64) -> f64 {
    q * (2.0 * theta).cos()
}

/// 1/2 + (-1)^b q cos 2θ / 2.
pub fn last_layer_first_moment(q: f64, theta: f64, bit: u8) -> Result<f64> {
    check_unit("q", q)?;
    let sign = if bit == 0 { 1.0 } else { -1.0 };
    Ok(0.5 + sign * bias(q, theta) / 2.0)
}

/// Every |cos 2θ_i| exceeds 4 - sqrt(15).
pub fn last_layer_regime(thetas: &[f64]) -> bool {
    let floor = 4.0 - 15f64.sqrt();
    thetas.iter().all(|t| (2.0 * t).cos().abs() > floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_moment_values() {
        assert!((first_moment(3, 2, Order::AmpThenDep, 0.0, 0.2).unwrap() - 0.096).abs() < 1e-15);
        for w in 0..=5 {
            assert!((first_moment(5, w, Order::AmpThenDep, 0.3, 0.0).unwrap() - 1.0 / 32.0).abs() < 1e-16);
        }
    }

    #[test]
    fn first_moment_normalised() {
        for (p, q) in [(0.1, 0.2), (0.5, 0.9), (0.0, 1.0)] {
            for order in [Order::AmpThenDep, Order::DepThenAmp] {
                let n = 6;
                let total: f64 = (0..=n)
                    .map(|w| binomial(n, w) * first_moment(n, w, order, p, q).unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-14);
            }
        }
    }

    fn binomial(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn collision_bound_values() {
        assert!((collision_lower_bound(4, 0.1) - 0.04060401).abs() < 1e-15);
        assert_eq!(collision_lower_bound(7, 0.0), 0.0);
        // cos(π/2) is 6e-17 in floating point.
        assert!(collision_lower_bound_rotations(3, 0.5, &[0.1, std::f64::consts::FRAC_PI_4]) < 1e-30);
    }

    #[test]
    fn log_domain_for_large_n() {
        let rec = collision_lower_bound_record(100_000, 0.5);
        assert!(rec.log_domain);
        assert!(rec.value.is_infinite());
        let expected = 100_000.0 * 1.25f64.ln();
        assert!((rec.ln_value - expected).abs() < 1e-6);
    }

    #[test]
    fn c_value_for_pure_damping() {
        let params = second_moment_params(Order::AmpThenDep, 0.0, 0.3).unwrap();
        assert!((params.c - 0.37).abs() < 1e-15);
        assert!(matches!(
            second_moment_params(Order::AmpThenDep, 0.0, 0.0),
            Err(Error::NoiselessRegime)
        ));
        let dep = second_moment_params(Order::DepThenAmp, 0.4, 0.0).unwrap();
        assert_eq!((dep.mu, dep.nu, dep.eta_bias), (0.25, 1.0 / 12.0, 1.0));
    }

    #[test]
    fn regime_examples() {
        for q in [0.05, 0.5, 0.99, 1.0] {
            assert!(regime_check(Order::AmpThenDep, 1.0, q).unwrap());
            assert!(!regime_check(Order::DepThenAmp, 1.0, q).unwrap());
        }
        assert!(regime_check(Order::DepThenAmp, 0.0, 0.26).unwrap());
        assert!(!regime_check(Order::DepThenAmp, 0.0, 0.24).unwrap());
    }

    #[test]
    fn regime_matches_general_form() {
        for order in [Order::AmpThenDep, Order::DepThenAmp] {
            for i in 1..10 {
                for j in 1..10 {
                    let (p, q) = (i as f64 / 10.0 - 0.05, j as f64 / 10.0 + 0.03);
                    let noise = StandardNoise::new(order, p, q).unwrap();
                    let bias_params = second_moment_params(order, p, q).unwrap();
                    let by_bias = bias_params.mu >= 0.0
                        && bias_params.nu >= 0.0
                        && 4.0 * bias_params.mu * bias_params.eta_bias < 1.0;
                    assert_eq!(regime_check(order, p, q).unwrap(), by_bias, "{order:?} {p} {q}");
                    let g = general_noise_params(&noise.ptm());
                    assert!((g.mu - bias_params.mu).abs() < 1e-12 && (g.nu - bias_params.nu).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn identity_map_params() {
        let g = general_noise_params(&PauliTransferMap::identity());
        assert_eq!((g.a, g.c), (0.0, 0.0));
        assert!(g.mu.is_nan());
        assert!(!regime_check_general(&g));
    }

    #[test]
    fn lightcone_examples() {
        let t = lightcone_terms(4, 2, 0.3, 2, 0.9, 0.1, 0.5).unwrap();
        assert_eq!(t.e_a_sigma, 0.0);
        let k = 6.0 / 7.0;
        let t = lightcone_terms(4, 3, 0.2, 3, k, 1.0 / 7.0, 0.72).unwrap();
        let expected = 4.0 * (k - 0.5 + 0.72f64.powi(3) / 7.0).powi(2) / 27_000.0;
        assert!((t.zsq_lower - expected).abs() < 1e-18);
    }

    #[test]
    fn paley_zygmund_examples() {
        assert!((paley_zygmund_bound(1.0, 2.0, 0.5).unwrap() - 0.125).abs() < 1e-16);
        assert!(paley_zygmund_bound(1.0, 1.0, 1e-9).unwrap() > 1.0 - 1e-8);
        assert!(matches!(
            paley_zygmund_bound(1.0, 0.5, 0.5),
            Err(Error::InconsistentMoments { .. })
        ));
    }

    #[test]
    fn last_layer_examples() {
        let pi = std::f64::consts::PI;
        assert!((last_layer_first_moment(0.4, pi / 6.0, 1).unwrap() - 0.4).abs() < 1e-15);
        assert!((last_layer_first_moment(0.3, pi / 4.0, 0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(last_layer_first_moment(0.3, 0.0, 0).unwrap(), 0.65);
        assert!(last_layer_regime(&[0.0, 0.3]));
        assert!(!last_layer_regime(&[0.0, pi / 4.0]));
    }
}
