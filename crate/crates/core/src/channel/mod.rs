//! Composite channel: log-distance path loss with shadowing times unit-power
//! Rician small-scale fading.
//!
//! Only the large-scale part is known at planning time. It enters the
//! optimisation through per-link coefficients `b` such that the average SNR
//! of a link of length `d` driven with power `p` is `p·b·d^{-ς}`. The
//! ergodic rate is a strictly increasing concave function of that average
//! SNR, evaluated here by quadrature over the non-central chi-square density
//! of the fading power.

mod bessel;
pub mod quadrature;

use std::f64::consts::LOG2_E;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{self, Vec3};
use crate::scenario::{PathLoss, Scenario};

pub use bessel::{bessel_i0, bessel_i0e};
use quadrature::{integrate, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkKind {
    /// UAV to its served user.
    UavUser,
    /// Base station to UAV (the backhaul).
    TbsUav,
    /// UAV to a protected satellite user.
    UavVictim,
}

/// Large-scale coefficient of one link at one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    pub b: f64,
    pub link_kind: LinkKind,
    pub slot: usize,
}

/// Path loss in dB at distance `d` (meters) with shadowing `x_db`.
pub fn path_loss_db(pathloss: &PathLoss, d: f64, x_db: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidArgument {
            name: "d",
            reason: format!("distance must be positive, got {d}"),
        });
    }
    Ok(pathloss.a0_db + 10.0 * pathloss.exponent * (d / pathloss.d0).log10() + x_db)
}

/// `tx·rx·d0^ς·σ^{-2}·10^{-(A0+X)/10}`.
pub fn b_coefficient(pathloss: &PathLoss, noise_power: f64, tx_gain: f64, rx_gain: f64, x_db: f64) -> f64 {
    tx_gain * rx_gain * pathloss.d0.powf(pathloss.exponent) / noise_power
        * 10f64.powf(-(pathloss.a0_db + x_db) / 10.0)
}

/// Coefficient of the given link at `slot`; `victim` indexes the protected
/// user within the slot and is ignored for the other link kinds.
pub fn link_coefficient(scenario: &Scenario, kind: LinkKind, slot: usize, victim: usize) -> LinkGain {
    let g = &scenario.gains;
    let shadow = &scenario.shadowing;
    let (tx, rx, x_db) = match kind {
        LinkKind::UavUser => (g.uav, g.uav_user, shadow.uav_user[slot]),
        LinkKind::TbsUav => (g.tbs, g.uav, shadow.tbs_uav[slot]),
        LinkKind::UavVictim => (g.uav, g.sat_user, shadow.uav_victim[slot][victim]),
    };
    LinkGain {
        b: b_coefficient(&scenario.pathloss, scenario.noise_power, tx, rx, x_db),
        link_kind: kind,
        slot,
    }
}

/// All link coefficients of a scenario, indexed by slot.
#[derive(Debug, Clone)]
pub struct LinkGains {
    pub uav_user: Vec<LinkGain>,
    pub tbs_uav: Vec<LinkGain>,
    pub uav_victim: Vec<Vec<LinkGain>>,
}

impl LinkGains {
    pub fn new(scenario: &Scenario) -> Self {
        let t = scenario.num_slots();
        LinkGains {
            uav_user: (0..t)
                .map(|s| link_coefficient(scenario, LinkKind::UavUser, s, 0))
                .collect(),
            tbs_uav: (0..t)
                .map(|s| link_coefficient(scenario, LinkKind::TbsUav, s, 0))
                .collect(),
            uav_victim: scenario
                .victim_tracks
                .iter()
                .enumerate()
                .map(|(s, victims)| {
                    (0..victims.len())
                        .map(|j| link_coefficient(scenario, LinkKind::UavVictim, s, j))
                        .collect()
                })
                .collect(),
        }
    }
}

/// Average SNR `p·b·‖tx − rx‖^{-ς}`.
pub fn average_snr(p: f64, gain: &LinkGain, exponent: f64, tx: Vec3, rx: Vec3) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "p",
            reason: format!("power must be non-negative, got {p}"),
        });
    }
    let d = geometry::distance(tx, rx);
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "transmitter and receiver coincide on {:?} link at slot {}",
            gain.link_kind, gain.slot
        )));
    }
    Ok(p * gain.b * d.powf(-exponent))
}

/// Density of `|h̃|²` for unit-power Rician fading with factor `k`
/// (non-central chi-square with two degrees of freedom).
pub fn rician_power_pdf(gamma: f64, k: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "gamma",
            reason: format!("must be non-negative, got {gamma}"),
        });
    }
    if !(k >= 0.0) {
        return Err(Error::InvalidArgument {
            name: "k",
            reason: format!("Rician factor must be non-negative, got {k}"),
        });
    }
    Ok(pdf_unchecked(gamma, k))
}

#[inline]
fn pdf_unchecked(gamma: f64, k: f64) -> f64 {
    let x = 2.0 * (k * (1.0 + k) * gamma).sqrt();
    // e^{-K} e^{-(1+K)γ} I0(x) = exp(x - K - (1+K)γ) · e^{-x} I0(x)
    (1.0 + k) * (x - k - (1.0 + k) * gamma).exp() * bessel_i0e(x)
}

/// One draw of `|√(K/(1+K)) + √(1/(1+K))·g|²` with `g ~ CN(0, 1)`.
pub fn sample_rician_power<R: Rng + ?Sized>(rng: &mut R, k: f64) -> f64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let scatter = (0.5 / (1.0 + k)).sqrt();
    let los = (k / (1.0 + k)).sqrt();
    let a = los + scatter * re;
    let b = scatter * im;
    a * a + b * b
}

/// Breakpoints covering the bulk of the fading-power density. In amplitude
/// units `u = √((1+K)γ)` the density is Rice with `ν = √K` and per-component
/// variance 1/2, so `ν ± 7` leaves a tail mass far below 1e-12.
fn fading_support(k: f64) -> Vec<f64> {
    let nu = k.sqrt();
    let lo_u = (nu - 7.0).max(0.0);
    let hi_u = nu + 7.0;
    let to_gamma = |u: f64| u * u / (1.0 + k);
    let pieces = 16;
    (0..=pieces)
        .map(|i| to_gamma(lo_u + (hi_u - lo_u) * i as f64 / pieces as f64))
        .collect()
}

fn fading_expectation<F: Fn(f64) -> f64>(k: f64, weight: F) -> Result<f64> {
    let breaks = fading_support(k);
    let tol = Tolerance {
        abs: 1e-13,
        rel: 1e-11,
        max_intervals: 4000,
    };
    Ok(integrate(|g| weight(g) * pdf_unchecked(g, k), &breaks, tol)?.value)
}

fn check_rate_args(a: f64, k: f64) -> Result<()> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument {
            name: "a",
            reason: format!("average SNR must be finite and non-negative, got {a}"),
        });
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidArgument {
            name: "k",
            reason: format!("Rician factor must be finite and non-negative, got {k}"),
        });
    }
    Ok(())
}

/// Ergodic rate `E[log2(1 + a·|h̃|²)]` in bit/s/Hz for average SNR `a`.
pub fn ergodic_rate(a: f64, k: f64) -> Result<f64> {
    check_rate_args(a, k)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(LOG2_E * fading_expectation(k, |g| (a * g).ln_1p())?)
}

/// First and second derivatives of [`ergodic_rate`] with respect to `a`,
/// from the integrals `E[γ/(1+aγ)]` and `-E[γ²/(1+aγ)²]`.
pub fn ergodic_rate_derivatives(a: f64, k: f64) -> Result<(f64, f64)> {
    check_rate_args(a, k)?;
    let first = LOG2_E * fading_expectation(k, |g| g / (1.0 + a * g))?;
    let second = -LOG2_E
        * fading_expectation(k, |g| {
            let r = g / (1.0 + a * g);
            r * r
        })?;
    Ok((first, second))
}

/// `∫ f(γ) dγ` and `∫ γ f(γ) dγ` over the fading density.
pub fn fading_moments(k: f64) -> Result<(f64, f64)> {
    Ok((fading_expectation(k, |_| 1.0)?, fading_expectation(k, |g| g)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::paper_scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_loss_reference_points() {
        let pl = paper_scenario().pathloss;
        assert!((path_loss_db(&pl, 2600.0, 0.0).unwrap() - 116.7).abs() < 1e-12);
        assert!((path_loss_db(&pl, pl.d0, 0.0).unwrap() - pl.a0_db).abs() < 1e-12);
        let decade = path_loss_db(&pl, 10.0 * pl.d0, 0.0).unwrap();
        assert!((decade - (pl.a0_db + 15.0)).abs() < 1e-12);
        assert!(path_loss_db(&pl, 0.0, 0.0).is_err());
        assert!(path_loss_db(&pl, -5.0, 0.0).is_err());
    }

    #[test]
    fn path_loss_increases_with_distance() {
        let pl = paper_scenario().pathloss;
        let mut last = f64::NEG_INFINITY;
        for i in 1..200 {
            let v = path_loss_db(&pl, 50.0 * i as f64, 0.0).unwrap();
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn coefficient_matches_linear_path_loss() {
        let s = paper_scenario();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let d: f64 = rng.random_range(100.0..1e5);
            let x: f64 = rng.random_range(-1.0..1.0);
            let (gt, gr) = (s.gains.uav, s.gains.sat_user);
            let b = b_coefficient(&s.pathloss, s.noise_power, gt, gr, x);
            let l = 10f64.powf(path_loss_db(&s.pathloss, d, x).unwrap() / 10.0);
            let direct = gt * gr / (l * s.noise_power);
            let via_b = b * d.powf(-s.pathloss.exponent);
            assert!(((via_b - direct) / direct).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficient_is_inverse_in_noise() {
        let s = paper_scenario();
        let b1 = b_coefficient(&s.pathloss, s.noise_power, 2.0, 3.0, 0.0);
        let b2 = b_coefficient(&s.pathloss, 2.0 * s.noise_power, 2.0, 3.0, 0.0);
        assert!((b1 / b2 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn average_snr_edge_cases() {
        let s = paper_scenario();
        let g = link_coefficient(&s, LinkKind::UavUser, 0, 0);
        let e = s.pathloss.exponent;
        assert_eq!(average_snr(0.0, &g, e, [0.0; 3], [1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            average_snr(1.0, &g, e, [1.0; 3], [1.0; 3]),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(average_snr(-1.0, &g, e, [0.0; 3], [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn pdf_reduces_to_exponential_without_line_of_sight() {
        for &g in &[0.0, 0.1, 1.0, 3.0, 10.0] {
            let v = rician_power_pdf(g, 0.0).unwrap();
            assert!((v - (-g as f64).exp()).abs() < 1e-15);
        }
        assert!(rician_power_pdf(-0.1, 1.0).is_err());
    }

    #[test]
    fn pdf_normalised_with_unit_mean() {
        for &k in &[0.0, 10.0, 30.0, 31.3] {
            let (mass, mean) = fading_moments(k).unwrap();
            assert!((mass - 1.0).abs() < 1e-8, "k={k} mass={mass}");
            assert!((mean - 1.0).abs() < 1e-6, "k={k} mean={mean}");
        }
    }

    #[test]
    fn rate_edge_cases() {
        assert_eq!(ergodic_rate(0.0, 31.3).unwrap(), 0.0);
        let los = ergodic_rate(100.0, 1e6).unwrap();
        assert!((los - 101f64.log2()).abs() <= 1e-3);
        assert!(ergodic_rate(-1.0, 1.0).is_err());
        assert!(ergodic_rate(1.0, f64::NAN).is_err());
    }

    #[test]
    fn rate_below_jensen_and_above_rayleigh() {
        for &k in &[0.5, 1.0, 10.0, 30.0] {
            for i in 0..25 {
                let a = 10f64.powf(-2.0 + 6.0 * i as f64 / 24.0);
                let r = ergodic_rate(a, k).unwrap();
                assert!(r <= (1.0 + a).log2());
                assert!(r >= ergodic_rate(a, 0.0).unwrap());
            }
        }
    }

    #[test]
    fn rayleigh_rate_has_closed_form() {
        // K = 0: E[ln(1 + aγ)] = e^{1/a} E1(1/a). Check via an independent
        // series for E1 at a = 1 (E1(1) = 0.219383934395520...).
        let r = ergodic_rate(1.0, 0.0).unwrap();
        let expected = std::f64::consts::E * 0.219_383_934_395_520_3 * LOG2_E;
        assert!((r - expected).abs() < 1e-10);
    }

    #[test]
    fn sampled_power_has_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| sample_rician_power(&mut rng, 10.0)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01);
    }
}
