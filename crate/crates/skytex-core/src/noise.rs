//! AC magnetic-field dephasing in a spin-echo sequence.
//!
//! The field `B(t) = B sin(2πf(t − t₀))` shifts the qubit frequency by
//! `Γ B(t)`. An echo of total length `T` accumulates
//! `φ_SE = Γ[∫₀^{T/2} B dt − ∫_{T/2}^T B dt]`, the same on every ion. In the
//! dressed frame this is a rotation about lab X, which multiplies the order
//! parameter by a pure phase. Only averaging over a random line phase `t₀`
//! shrinks `|Ψ|`, by `|J₀(A)|` with `A = (ΓB/2πf)·4 sin²(πfT/2)`.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::diagnostics::order_parameter;
use crate::error::{fit_failure, invalid, Error, Result};
use crate::fit::{levenberg_marquardt, LmOptions};
use crate::geometry::{wrap_signed, IonCrystal};
use crate::rng;
use crate::spin::{rotate_global, BlochField, PulseOp};

/// Default Zeeman slope `Γ`: 2π × 28 rad/s per nT.
pub const DEFAULT_GAMMA: f64 = TAU * 28.0;

/// Sinusoidal field noise.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseParams {
    /// Amplitude (nT).
    pub b: f64,
    /// Frequency (Hz).
    pub f: f64,
    /// Phase-offset time (s).
    pub t0: f64,
    /// Zeeman slope (rad/s per nT).
    pub gamma: f64,
}

impl NoiseParams {
    /// Checks `f > 0`, `Γ > 0` and finiteness.
    pub fn validate(&self) -> Result<()> {
        if !(self.f > 0.0 && self.f.is_finite()) {
            return Err(invalid("f", "must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(invalid("gamma", "must be positive"));
        }
        if !(self.b.is_finite() && self.t0.is_finite()) {
            return Err(invalid("b", "amplitude and t0 must be finite"));
        }
        Ok(())
    }

    fn omega(&self) -> f64 {
        TAU * self.f
    }
}

/// Closed-form echo phase after total time `t`.
pub fn spin_echo_phase(noise: &NoiseParams, t: f64) -> f64 {
    let w = noise.omega();
    let antider = |s: f64| -noise.b * (w * (s - noise.t0)).cos() / w;
    noise.gamma * (2.0 * antider(0.5 * t) - antider(0.0) - antider(t))
}

/// Echo phase of a constant field `b0`: both arms cancel exactly.
pub fn spin_echo_phase_constant(b0: f64, gamma: f64, t: f64) -> f64 {
    let half = 0.5 * t;
    gamma * (b0 * half - b0 * (t - half))
}

/// Amplitude of `φ_SE` as `t₀` varies: `(ΓB/2πf)·4 sin²(πfT/2)`.
pub fn echo_amplitude(noise: &NoiseParams, t: f64) -> f64 {
    let s = (PI * noise.f * t / 2.0).sin();
    noise.gamma * noise.b.abs() / noise.omega() * 4.0 * s * s
}

/// `|J₀(A(T))|`: coherence left after averaging over a uniform `t₀`.
pub fn echo_decay_closed_form(noise: &NoiseParams, t: f64) -> f64 {
    libm::j0(echo_amplitude(noise, t)).abs()
}

/// `atan2(sy, sx)` in `(−π, π]`.
pub fn extract_phase(sx: f64, sy: f64) -> Result<f64> {
    if sx == 0.0 && sy == 0.0 {
        return Err(Error::UndefinedPhase);
    }
    let p = sy.atan2(sx);
    Ok(if p == -PI { PI } else { p })
}

/// Transverse signal `(s_x, s_y) = (cos φ_SE, sin φ_SE)` of a spin started
/// along x.
pub fn echo_signal(noise: &NoiseParams, t: f64) -> (f64, f64) {
    let (s, c) = spin_echo_phase(noise, t).sin_cos();
    (c, s)
}

/// How `t₀` is chosen per experimental shot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum T0Mode {
    /// The `t₀` of [`NoiseParams`] every shot.
    Fixed,
    /// Uniform over one period, stratified into equal sub-intervals.
    RandomUniform,
}

/// Minimum samples for [`T0Mode::RandomUniform`].
pub const MIN_ECHO_SAMPLES: usize = 100;

/// One echo time of [`simulate_echo_decay`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EchoPoint {
    /// Echo time `T` (s).
    pub t: f64,
    /// Shot-averaged transverse signal `⟨cos φ_SE⟩`.
    pub sx: f64,
    /// Shot-averaged transverse signal `⟨sin φ_SE⟩`.
    pub sy: f64,
    /// `|Ψ|` of the shot-averaged texture.
    pub order_parameter: f64,
    /// `|Ψ|(T)/|Ψ|(0)`.
    pub retention: f64,
}

/// Order parameter of `field` after echoes of lengths `times`, averaged
/// over `n_samples` line phases in random mode.
pub fn simulate_echo_decay(
    crystal: &IonCrystal,
    field: &BlochField,
    noise: &NoiseParams,
    times: &[f64],
    mode: T0Mode,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<EchoPoint>> {
    noise.validate()?;
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(invalid("times", "echo times must be finite and non-negative"));
    }
    let t0s: Vec<f64> = match mode {
        T0Mode::Fixed => alloc::vec![noise.t0],
        T0Mode::RandomUniform => {
            if n_samples < MIN_ECHO_SAMPLES {
                return Err(invalid("n_samples", "random mode needs at least 100 samples"));
            }
            let period = 1.0 / noise.f;
            (0..n_samples)
                .map(|s| {
                    let u: f64 = rng::stream(seed, rng::DOMAIN_ECHO, s as u64).gen();
                    (s as f64 + u) / n_samples as f64 * period
                })
                .collect()
        }
    };
    let psi0 = order_parameter(crystal, field)?.magnitude();
    times
        .iter()
        .map(|&t| {
            let (mut c, mut s) = (0.0, 0.0);
            for &t0 in &t0s {
                let (sn, cs) = spin_echo_phase(&NoiseParams { t0, ..*noise }, t).sin_cos();
                c += cs;
                s += sn;
            }
            let n = t0s.len() as f64;
            let (c, s) = (c / n, s / n);
            // The shot average of R_x(φ) acts on (u_y, u_z) as ρ·R_x(α)
            // with ρe^{iα} = ⟨e^{iφ}⟩, and leaves u_x alone.
            let rotated = rotate_global(field, &PulseOp::x(s.atan2(c)));
            let coherence = c.hypot(s);
            let lab = rotated.lab_vectors();
            let v = lab.iter().map(|u| crate::Vec3::new(u.x, coherence * u.y, coherence * u.z)).collect();
            let avg = BlochField::from_unchecked(v, crate::Basis::Lab);
            let psi = order_parameter(crystal, &avg)?.magnitude();
            Ok(EchoPoint {
                t,
                sx: c,
                sy: s,
                order_parameter: psi,
                retention: if psi0 > 0.0 { psi / psi0 } else { f64::NAN },
            })
        })
        .collect()
}

/// Amplitude `B` for which the random-`t₀` retention at echo time `t`
/// equals `retention` (using the first lobe of `J₀`).
pub fn calibrate_amplitude_for_retention(f: f64, gamma: f64, t: f64, retention: f64) -> Result<f64> {
    if !(retention > 0.0 && retention <= 1.0) {
        return Err(invalid("retention", "must lie in (0, 1]"));
    }
    let unit = NoiseParams { b: 1.0, f, t0: 0.0, gamma };
    unit.validate()?;
    let per_nt = echo_amplitude(&unit, t);
    if !(per_nt > 1e-300) {
        return Err(invalid("t", "echo is insensitive to this frequency at this time"));
    }
    // J₀ decreases monotonically on [0, 2.4048].
    let (mut lo, mut hi) = (0.0f64, 2.404_825_557_695_773);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if libm::j0(mid) > retention {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / per_nt)
}

/// Result of [`fit_noise_model`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NoiseFit {
    /// Best fit, with `B ≥ 0` and `t₀ ∈ [0, 1/f)`.
    pub params: NoiseParams,
    /// Standard error of `B`.
    pub b_std_error: f64,
    /// Standard error of `f`.
    pub f_std_error: f64,
    /// Standard error of `t₀`.
    pub t0_std_error: f64,
    /// Norm of the wrapped phase residuals.
    pub residual_norm: f64,
}

/// Fits `(B, f, t₀)` to measured echo phases `(T, φ_SE)` at known `Γ`.
///
/// Residuals are wrapped into `(−π, π]`, so phases may be given wrapped.
/// Starts come from a frequency grid scanned jointly over 16 line phases and
/// 16 amplitudes; the 8 best frequencies are refined.
pub fn fit_noise_model(series: &[(f64, f64)], gamma: f64) -> Result<NoiseFit> {
    if series.len() < 8 {
        return Err(fit_failure("need at least 8 echo points", f64::NAN));
    }
    if !(gamma > 0.0) {
        return Err(invalid("gamma", "must be positive"));
    }
    if series.iter().all(|p| p.1.abs() < 1e-12) {
        return Err(fit_failure("no phase signal: amplitude, frequency and t0 are not identifiable", 0.0));
    }
    let mut ts: Vec<f64> = series.iter().map(|p| p.0).collect();
    ts.sort_by(f64::total_cmp);
    let span = ts[ts.len() - 1] - ts[0];
    let dt = ts.windows(2).map(|w| w[1] - w[0]).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min);
    if !(span > 0.0) {
        return Err(fit_failure("echo times do not span an interval", f64::NAN));
    }
    let m = series.len();
    let model = |p: &[f64], r: &mut [f64], jac: Option<&mut [f64]>| {
        let (b, f, t0) = (p[0], p[1], p[2]);
        let mut jac = jac;
        let w = TAU * f;
        for (k, &(t, phi)) in series.iter().enumerate() {
            let np = NoiseParams { b, f, t0, gamma };
            r[k] = wrap_signed(spin_echo_phase(&np, t) - phi);
            if let Some(j) = jac.as_deref_mut() {
                // φ = −(Γb/w)·S, S = 2cos(w(T/2−t0)) − cos(w t0) − cos(w(T−t0)).
                let (a1, a0, a2) = (w * (0.5 * t - t0), w * t0, w * (t - t0));
                let s = 2.0 * a1.cos() - a0.cos() - a2.cos();
                let ds_dw = -2.0 * (0.5 * t - t0) * a1.sin() + t0 * a0.sin() + (t - t0) * a2.sin();
                let ds_dt0 = 2.0 * w * a1.sin() + w * a0.sin() - w * a2.sin();
                j[3 * k] = -gamma / w * s;
                j[3 * k + 1] = TAU * (gamma * b / (w * w) * s - gamma * b / w * ds_dw);
                j[3 * k + 2] = -gamma * b / w * ds_dt0;
            }
        }
    };
    let f_min = 1.0 / span;
    let f_max = 0.5 / dt;
    let n_f = (((f_max - f_min) * 8.0 * span).ceil() as usize).clamp(16, 4000);
    let mut r = alloc::vec![0.0; m];
    let mut scan = Vec::with_capacity(n_f);
    for i in 0..n_f {
        let f = f_min + (f_max - f_min) * i as f64 / (n_f - 1) as f64;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for ia in 0..16 {
            let t0 = ia as f64 / 16.0 / f;
            for ib in 1..=16 {
                // Amplitudes whose peak echo phase spans (0, 4π].
                let b = ib as f64 / 16.0 * PI * TAU * f / gamma;
                model(&[b, f, t0], &mut r, None);
                let c: f64 = r.iter().map(|x| x * x).sum();
                if c < best.0 {
                    best = (c, b, t0);
                }
            }
        }
        scan.push((f, best));
    }
    let costs: Vec<f64> = scan.iter().map(|s| s.1 .0).collect();
    let mut order: Vec<usize> = (0..n_f)
        .filter(|&i| (i == 0 || costs[i] <= costs[i - 1]) && (i + 1 == n_f || costs[i] <= costs[i + 1]))
        .collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]));
    order.truncate(8);
    let mut best: Option<crate::fit::LmFit> = None;
    for i in order {
        let (f, (_, b, t0)) = scan[i];
        let fit = levenberg_marquardt(model, &[b, f, t0], m, LmOptions::default());
        if fit.params.iter().all(|v| v.is_finite())
            && fit.params[1] > 0.0
            && best.as_ref().map_or(true, |x| fit.ssr < x.ssr)
        {
            best = Some(fit);
        }
    }
    let fit = best.ok_or_else(|| fit_failure("no start converged", f64::NAN))?;
    let (mut b, f, mut t0) = (fit.params[0], fit.params[1], fit.params[2]);
    if fit.covariance.is_none() {
        return Err(fit_failure("parameters not identifiable", fit.residual_norm()));
    }
    if b < 0.0 {
        b = -b;
        t0 += 0.5 / f;
    }
    let period = 1.0 / f;
    t0 = t0 - (t0 / period).floor() * period;
    Ok(NoiseFit {
        params: NoiseParams { b, f, t0, gamma },
        b_std_error: fit.std_error(0),
        f_std_error: fit.std_error(1),
        t0_std_error: fit.std_error(2),
        residual_norm: fit.residual_norm(),
    })
}
