//! Finite-blocklength secrecy rates, effective throughput, EAST and the
//! Monte-Carlo estimator of the average uplink secrecy rate.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::planner::DecisionVariables;
use crate::radio::{dispersion_unchecked, q_inv, slot_snrs, SlotSnr};
use crate::scenario::Scenario;

fn check_prob(name: &str, p: f64) -> Result<f64> {
    if p > 0.0 && p < 0.5 {
        q_inv(p)
    } else {
        Err(Error::Domain(format!("{name} must lie in (0, 0.5), got {p}")))
    }
}

fn check_blocklength(l: f64) -> Result<()> {
    if l >= 1.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("blocklength must be ≥ 1, got {l}")))
    }
}

/// Unclipped single-hop bound
/// `log₂(1+γ) − √(V(γ)/l)·q_leg − log₂(1+γ_e) − √(V(γ_e)/l)·q_eve`.
pub(crate) fn hop_rate_unclipped(gamma: f64, gamma_eve: f64, l: f64, q_leg: f64, q_eve: f64) -> f64 {
    let cap = (gamma.ln_1p() - gamma_eve.ln_1p()) * std::f64::consts::LOG2_E;
    cap - (dispersion_unchecked(gamma) / l).sqrt() * q_leg
        - (dispersion_unchecked(gamma_eve) / l).sqrt() * q_eve
}

/// Uplink secrecy-rate lower bound in bits per channel use, clipped at 0.
pub fn uplink_rate_lb(snr: &SlotSnr, l_u: f64, eps_r: f64, eta_e: f64) -> Result<f64> {
    check_blocklength(l_u)?;
    let (qr, qe) = (check_prob("eps_r", eps_r)?, check_prob("eta_e", eta_e)?);
    Ok(hop_rate_unclipped(snr.gamma_r, snr.gamma_ae_tilde, l_u, qr, qe).max(0.0))
}

/// Downlink secrecy-rate lower bound in bits per channel use, clipped at 0.
pub fn downlink_rate_lb(snr: &SlotSnr, l_d: f64, eps_b: f64, eta_e: f64) -> Result<f64> {
    check_blocklength(l_d)?;
    let (qb, qe) = (check_prob("eps_b", eps_b)?, check_prob("eta_e", eta_e)?);
    Ok(hop_rate_unclipped(snr.gamma_b, snr.gamma_re_tilde, l_d, qb, qe).max(0.0))
}

/// Effective secure bits per second of one slot.
pub fn slot_throughput(
    r_u: f64,
    r_d: f64,
    l_u: f64,
    l_d: f64,
    eps_r: f64,
    eps_b: f64,
    delta_t: f64,
) -> f64 {
    let up = r_u * l_u * (1.0 - eps_r);
    let down = r_d * l_d * (1.0 - eps_b);
    (up.min(down) / delta_t).max(0.0)
}

/// Gaussian tail quantiles used by every rate evaluation of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateQuantiles {
    pub q_r: f64,
    pub q_b: f64,
    pub q_e: f64,
}

impl RateQuantiles {
    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        Ok(Self {
            q_r: check_prob("eps_r", s.eps_r)?,
            q_b: check_prob("eps_b", s.eps_b)?,
            q_e: check_prob("eta_e", s.eta_e)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotRates {
    pub r_u_lb: f64,
    pub r_d_lb: f64,
    pub b_s: f64,
    pub c_u_inf: f64,
    pub c_d_inf: f64,
    pub snr: SlotSnr,
}

pub(crate) fn slot_rates_q(
    s: &Scenario,
    qs: &RateQuantiles,
    q: Vec3,
    p_a: f64,
    p_r: f64,
    l_u: f64,
    l_d: f64,
) -> Result<SlotRates> {
    check_blocklength(l_u)?;
    check_blocklength(l_d)?;
    let snr = slot_snrs(s, q, p_a, p_r)?;
    let r_u_lb = hop_rate_unclipped(snr.gamma_r, snr.gamma_ae_tilde, l_u, qs.q_r, qs.q_e).max(0.0);
    let r_d_lb = hop_rate_unclipped(snr.gamma_b, snr.gamma_re_tilde, l_d, qs.q_b, qs.q_e).max(0.0);
    let b_s = slot_throughput(r_u_lb, r_d_lb, l_u, l_d, s.eps_r, s.eps_b, s.slot_duration);
    let cap = |g: f64, e: f64| ((g.ln_1p() - e.ln_1p()) * std::f64::consts::LOG2_E).max(0.0);
    Ok(SlotRates {
        r_u_lb,
        r_d_lb,
        b_s,
        c_u_inf: cap(snr.gamma_r, snr.gamma_ae_tilde),
        c_d_inf: cap(snr.gamma_b, snr.gamma_re_tilde),
        snr,
    })
}

/// Lower-bound rates and throughput of a single slot.
pub fn slot_rates(
    s: &Scenario,
    q: Vec3,
    p_a: f64,
    p_r: f64,
    l_u: f64,
    l_d: f64,
) -> Result<SlotRates> {
    slot_rates_q(s, &RateQuantiles::from_scenario(s)?, q, p_a, p_r, l_u, l_d)
}

/// Per-slot rates for every slot of `dv`.
pub fn all_slot_rates(s: &Scenario, dv: &DecisionVariables) -> Result<Vec<SlotRates>> {
    let n = dv.len();
    if [dv.p_r.len(), dv.l_u.len(), dv.l_d.len(), dv.q.len()]
        .iter()
        .any(|&k| k != n)
    {
        return Err(Error::Domain("decision variable blocks have different lengths".into()));
    }
    let qs = RateQuantiles::from_scenario(s)?;
    (0..n)
        .map(|i| slot_rates_q(s, &qs, dv.q[i], dv.p_a[i], dv.p_r[i], dv.l_u[i], dv.l_d[i]))
        .collect()
}

/// Effective average secrecy throughput in bits per second.
pub fn east(s: &Scenario, dv: &DecisionVariables) -> Result<f64> {
    let rates = all_slot_rates(s, dv)?;
    if rates.is_empty() {
        return Err(Error::Domain("no slots".into()));
    }
    Ok(rates.iter().map(|r| r.b_s).sum::<f64>() / rates.len() as f64)
}

/// Small-scale fading of the Alice–Eve link in the Monte-Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    /// Unit-mean exponential power gain.
    Exponential,
    /// Deterministic gain (test hook).
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

const MC_CHUNK: usize = 4096;

/// Monte-Carlo average uplink secrecy rate over Alice–Eve fading, with the
/// worst-case Eve distance.
pub fn mc_uplink_rate(
    s: &Scenario,
    q_uav: Vec3,
    p_a: f64,
    l_u: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    mc_uplink_rate_with(s, q_uav, p_a, l_u, n_samples, seed, 0, Fading::Exponential)
}

/// As [`mc_uplink_rate`], with an explicit slot key and fading model.
///
/// Samples are drawn from ChaCha8 keyed by `seed` with `slot` as the stream
/// and a fixed word offset per chunk, so the estimate does not depend on how
/// chunks are spread over threads.
#[allow(clippy::too_many_arguments)]
pub fn mc_uplink_rate_with(
    s: &Scenario,
    q_uav: Vec3,
    p_a: f64,
    l_u: f64,
    n_samples: usize,
    seed: u64,
    slot: u64,
    fading: Fading,
) -> Result<McEstimate> {
    if n_samples < 1000 {
        return Err(Error::Domain(format!("need at least 1000 samples, got {n_samples}")));
    }
    check_blocklength(l_u)?;
    let qs = RateQuantiles::from_scenario(s)?;
    let snr = slot_snrs(s, q_uav, p_a, 0.0)?;
    let (g_r, g_e) = (snr.gamma_r, snr.gamma_ae_tilde);
    let legit = g_r.ln_1p() * std::f64::consts::LOG2_E - (dispersion_unchecked(g_r) / l_u).sqrt() * qs.q_r;
    let sample = |zeta: f64| {
        let ge = zeta * g_e;
        (legit - ge.ln_1p() * std::f64::consts::LOG2_E - (dispersion_unchecked(ge) / l_u).sqrt() * qs.q_e)
            .max(0.0)
    };
    let n_chunks = n_samples.div_ceil(MC_CHUNK);
    // (count, mean, M2) per chunk, merged in chunk order.
    let parts: Vec<(f64, f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let len = MC_CHUNK.min(n_samples - c * MC_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(slot);
            rng.set_word_pos((c * MC_CHUNK * 2) as u128);
            let (mut mean, mut m2) = (0.0, 0.0);
            for k in 0..len {
                let zeta = match fading {
                    Fading::Exponential => {
                        let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                        -(-u).ln_1p()
                    }
                    Fading::Fixed(z) => z,
                };
                let x = sample(zeta);
                let d = x - mean;
                mean += d / (k + 1) as f64;
                m2 += d * (x - mean);
            }
            (len as f64, mean, m2)
        })
        .collect();
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for (nb, mb, m2b) in parts {
        let tot = n + nb;
        let d = mb - mean;
        mean += d * nb / tot;
        m2 += m2b + d * d * n * nb / tot;
        n = tot;
    }
    let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt(),
        n_samples,
    })
}
