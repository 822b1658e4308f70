//! Closed-form solutions of the sideband dynamics and synthetic-band
//! quantities.
//!
//! These serve as the analytic cross-check for the integrator: Bessel
//! breathing of a single occupied sideband, the general Bessel-kernel
//! propagator, the Wannier-Stark ladder decomposition, the band dispersion
//! with its group velocity and diffraction coefficient, and the
//! Gaussian-envelope Bloch-oscillation trajectory. All functions are pure.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::bessel::{bessel_j, bessel_j_sequence};
use crate::error::{Error, Result, Validity};
use crate::params::LatticeModel;
use crate::tba::{SidebandState, Window, KERNEL_TAIL_LIMIT};

/// Bessel argument of the propagator kernel, (4|κ|/Δω)·sin(Δωt/2).
fn kernel_argument(model: &LatticeModel, t: f64) -> f64 {
    4.0 * model.kappa_mag() / model.detuning * (0.5 * model.detuning * t).sin()
}

/// Amplitude of sideband n at time t for a single occupied sideband input:
/// J_n[(4|κ|/Δω)·sin(Δωt/2)]·e^(−i n (φ₀ − Δωt/2)).
///
/// Requires Δω_L ≠ 0; the synchronized limit is [`pinem_limit`].
pub fn breathing_amplitude(n: i32, t: f64, model: &LatticeModel) -> C64 {
    assert!(
        model.detuning != 0.0,
        "breathing_amplitude needs a detuned lattice"
    );
    let x = kernel_argument(model, t);
    let phase = -(n as f64) * (model.phase_delay - 0.5 * model.detuning * t);
    C64::from_polar(1.0, phase) * bessel_j(n, x)
}

/// Synchronized (Δω_L = 0) sideband distribution:
/// J_n(2|κ|t)·e^(−i n phase).
pub fn pinem_limit(n: i32, t: f64, kappa_mag: f64, phase: f64) -> C64 {
    C64::from_polar(1.0, -(n as f64) * phase) * bessel_j(n, 2.0 * kappa_mag * t)
}

/// Propagate an arbitrary state by the closed-form kernel,
///
/// ```text
/// a_n(t) = Σ_m a_m(0)·J_{n−m}(X)·e^(−i(n−m)(φ₀ + Δωt/2))·e^(i n Δωt),
/// X = (4|κ|/Δω)·sin(Δωt/2).
/// ```
///
/// Errors with a window overflow when the truncated kernel tail carries
/// more than [`KERNEL_TAIL_LIMIT`] of the norm.
pub fn closed_form_propagate(
    initial: &SidebandState,
    t: f64,
    model: &LatticeModel,
) -> Result<SidebandState> {
    if model.detuning == 0.0 {
        return Err(Error::Domain(
            "closed-form propagator needs a detuned lattice; use the modulation kernel when synchronized".into(),
        ));
    }
    let x = kernel_argument(model, t);
    let phi = model.phase_delay + 0.5 * model.detuning * t;
    let len = initial.amplitudes.len();
    let max_order = len.saturating_sub(1);
    let j = bessel_j_sequence(max_order, x.abs());
    let j_at = |p: i32| -> f64 {
        let mag = j[p.unsigned_abs() as usize];
        // sign from negative order and from a negative argument
        let mut s = 1.0;
        if p < 0 && p & 1 != 0 {
            s = -s;
        }
        if x < 0.0 && p & 1 != 0 {
            s = -s;
        }
        s * mag
    };

    let window = initial.window;
    let norm_in = initial.norm_sqr();
    let mut out = vec![C64::new(0.0, 0.0); len];
    for (ni, o) in out.iter_mut().enumerate() {
        let n = window.n_at(ni);
        let mut acc = C64::new(0.0, 0.0);
        for (mi, &a) in initial.amplitudes.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let m = window.n_at(mi);
            let p = n - m;
            acc += a * j_at(p) * C64::from_polar(1.0, -(p as f64) * phi);
        }
        *o = acc * C64::from_polar(1.0, n as f64 * model.detuning * t);
    }
    let norm_out: f64 = out.iter().map(|a| a.norm_sqr()).sum();
    if norm_in - norm_out > KERNEL_TAIL_LIMIT {
        return Err(Error::WindowOverflow {
            time: initial.time + t,
            population: norm_in - norm_out,
            limit: KERNEL_TAIL_LIMIT,
        });
    }
    SidebandState::new(window, out, initial.time + t)
}

/// The same propagator through synthetic momentum space: transform to the
/// ring θ_j = 2πj/M, multiply by exp[i·X·sin(θ − φ₀ − Δωt/2)], transform
/// back, and restore the on-site phases. Kept as an independent route for
/// cross-checking [`closed_form_propagate`].
pub fn propagate_kspace(
    initial: &SidebandState,
    t: f64,
    model: &LatticeModel,
) -> Result<SidebandState> {
    if model.detuning == 0.0 {
        return Err(Error::Domain(
            "k-space propagator needs a detuned lattice".into(),
        ));
    }
    let x = kernel_argument(model, t);
    let m_len = initial.amplitudes.len();
    let window = initial.window;
    // forward transform u(theta_j) = sum_n a_n e^{i n theta_j}
    let mut u_theta = vec![C64::new(0.0, 0.0); m_len];
    for (ji, u) in u_theta.iter_mut().enumerate() {
        let theta = 2.0 * PI * ji as f64 / m_len as f64;
        let mut acc = C64::new(0.0, 0.0);
        for (ni, &a) in initial.amplitudes.iter().enumerate() {
            let n = window.n_at(ni) as f64;
            acc += a * C64::from_polar(1.0, n * theta);
        }
        *u = acc;
    }
    // band phase
    for (ji, u) in u_theta.iter_mut().enumerate() {
        let theta = 2.0 * PI * ji as f64 / m_len as f64;
        let arg = x * (theta - model.phase_delay - 0.5 * model.detuning * t).sin();
        *u *= C64::from_polar(1.0, arg);
    }
    // inverse transform and gauge restoration
    let mut out = vec![C64::new(0.0, 0.0); m_len];
    for (ni, o) in out.iter_mut().enumerate() {
        let n = window.n_at(ni) as f64;
        let mut acc = C64::new(0.0, 0.0);
        for (ji, &u) in u_theta.iter().enumerate() {
            let theta = 2.0 * PI * ji as f64 / m_len as f64;
            acc += u * C64::from_polar(1.0, -n * theta);
        }
        *o = acc / m_len as f64 * C64::from_polar(1.0, n * model.detuning * t);
    }
    SidebandState::new(window, out, initial.time + t)
}

/// One point of the synthetic band ω̃(k̃) and its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    /// Synthetic wavevector, fs (first Brillouin zone [−π/ω_L, π/ω_L]).
    pub k_tilde: f64,
    /// Band frequency ω̃ = −2|κ|·sin(θ), rad/fs.
    pub omega_tilde: f64,
    /// ∂ω̃/∂k̃ = −2|κ|ω_L·cos(θ), rad/fs².
    pub group_velocity: f64,
    /// ∂²ω̃/∂k̃² = 2|κ|ω_L²·sin(θ), rad/fs³.
    pub diffraction: f64,
}

/// Evaluate the band at synthetic wavevector k̃ and time t, with
/// θ = k̃ω_L − φ₀ − Δω_L·t.
///
/// Note the sign convention of the transform ⟨k̃|n⟩ = e^(i n k̃ ω_L): the
/// measured sideband drift of a k̃-localized packet is −group_velocity.
pub fn band(k_tilde: f64, t: f64, model: &LatticeModel) -> BandPoint {
    let omega = model.lattice_constant;
    let bz = PI / omega;
    assert!(
        (-bz..=bz).contains(&k_tilde),
        "k_tilde {k_tilde} outside the first Brillouin zone +-{bz}"
    );
    let kappa = model.kappa_mag();
    let theta = k_tilde * omega - model.phase_delay - model.detuning * t;
    BandPoint {
        k_tilde,
        omega_tilde: -2.0 * kappa * theta.sin(),
        group_velocity: -2.0 * kappa * omega * theta.cos(),
        diffraction: 2.0 * kappa * omega * omega * theta.sin(),
    }
}

/// Which sign family the phase delay enters the band phase with. The rest
/// of the crate uses the minus family throughout; the plus family is kept
/// for displacement audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseConvention {
    /// θ_k = k̃ω_L + φ₀.
    PlusPhase,
    /// θ_k = k̃ω_L − φ₀ (crate-wide default).
    MinusPhase,
}

/// Accumulated spectral displacement of a k̃-component over [0, t]:
/// (2|κ|ω_L/Δω)·[sin(θ_k) − sin(θ_k + Δωt)], with the convention flag
/// selecting the sign φ₀ enters θ_k with.
///
/// Like [`band`], this is the formal band-structure quantity; at k̃ = 0 in
/// the plus-phase convention it equals −(4|κ|ω_L/Δω)·d(t), the negative of
/// the packet trajectory under the transform convention used here.
pub fn displacement(
    t: f64,
    k_tilde: f64,
    model: &LatticeModel,
    convention: PhaseConvention,
) -> f64 {
    assert!(
        model.detuning != 0.0,
        "displacement needs a detuned lattice"
    );
    let omega = model.lattice_constant;
    let theta_k = match convention {
        PhaseConvention::PlusPhase => k_tilde * omega + model.phase_delay,
        PhaseConvention::MinusPhase => k_tilde * omega - model.phase_delay,
    };
    2.0 * model.kappa_mag() * omega / model.detuning
        * (theta_k.sin() - (theta_k + model.detuning * t).sin())
}

/// Gaussian-envelope description of a broad sideband comb.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianEnvelopeSpec {
    /// Envelope width σ_en in the energy coordinate x = ω_L·n, rad/fs.
    pub sigma_en: f64,
    /// Width of a single sideband line, rad/fs. Used by the grid solver
    /// and the scenario layer, not by the lattice closed forms.
    pub sigma_band: f64,
}

impl GaussianEnvelopeSpec {
    pub fn new(sigma_en: f64, sigma_band: f64) -> Result<Self> {
        if !(sigma_en > 0.0) || !(sigma_band > 0.0) {
            return Err(Error::Domain(format!(
                "envelope widths must be positive, got sigma_en = {sigma_en}, sigma_band = {sigma_band}"
            )));
        }
        Ok(Self {
            sigma_en,
            sigma_band,
        })
    }
}

/// Closed-form snapshot of a Gaussian-envelope Bloch oscillation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBoSnapshot {
    pub state: SidebandState,
    /// (4|κ|ω_L/Δω)·d(t) with d(t) = sin(Δωt/2)·cos(φ₀ + Δωt/2).
    pub mean_x: f64,
    /// Constant 2σ_en².
    pub variance_x: f64,
    pub validity: Validity,
}

/// Trajectory factor d(t) = sin(Δωt/2)·cos(φ₀ + Δωt/2)
/// = ½·[sin(Δωt + φ₀) − sin(φ₀)].
pub fn oscillation_d(t: f64, model: &LatticeModel) -> f64 {
    let half = 0.5 * model.detuning * t;
    half.sin() * (model.phase_delay + half).cos()
}

/// Phase factor Φ(t) = −sin(Δωt/2)·sin(φ₀ + Δωt/2)
/// = ½·[cos(Δωt + φ₀) − cos(φ₀)].
pub fn oscillation_phi(t: f64, model: &LatticeModel) -> f64 {
    let half = 0.5 * model.detuning * t;
    -half.sin() * (model.phase_delay + half).sin()
}

/// Closed-form Bloch oscillation of a broad Gaussian envelope: the
/// envelope translates rigidly with mean (4|κ|ω_L/Δω)·d(t) while the
/// variance stays pinned at 2σ_en².
///
/// Valid for σ_en ≫ ω_L; below 5ω_L a validity warning is attached.
pub fn gaussian_bo(
    spec: &GaussianEnvelopeSpec,
    window: Window,
    t: f64,
    model: &LatticeModel,
) -> Result<GaussianBoSnapshot> {
    if model.detuning == 0.0 {
        return Err(Error::Domain(
            "Gaussian oscillation closed form needs a detuned lattice".into(),
        ));
    }
    let omega = model.lattice_constant;
    let sigma = spec.sigma_en;
    let validity = if sigma >= 5.0 * omega {
        Validity::Ok
    } else {
        Validity::Warning(format!(
            "sigma_en = {sigma} below 5 lattice constants; envelope closed form degrades"
        ))
    };
    let d = oscillation_d(t, model);
    let phi = oscillation_phi(t, model);
    let ratio = 4.0 * model.kappa_mag() / model.detuning;
    let mean_x = ratio * omega * d;
    let global = ratio * phi;
    let mut amplitudes: Vec<C64> = window
        .iter()
        .map(|n| {
            let x = n as f64 * omega - mean_x;
            let mag = (-x * x / (8.0 * sigma * sigma)).exp();
            C64::from_polar(mag, n as f64 * model.detuning * t + global)
        })
        .collect();
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in amplitudes.iter_mut() {
        *a /= norm;
    }
    Ok(GaussianBoSnapshot {
        state: SidebandState::new(window, amplitudes, t)?,
        mean_x,
        variance_x: 2.0 * sigma * sigma,
        validity,
    })
}

/// Wannier-Stark decomposition of a state on the detuned lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct WannierStarkLadder {
    pub window: Window,
    /// Ladder eigenvalues Ω_m = −m·Δω_L, one per window site.
    pub eigenvalues: Vec<f64>,
    /// Projections c_m of the initial state on the ladder states.
    pub coefficients: Vec<C64>,
    /// 2|κ|/Δω_L, the localization argument of the ladder eigenvectors.
    pub bessel_argument: f64,
    phase_delay: f64,
    detuning: f64,
}

/// Project a state onto the Wannier-Stark ladder:
/// c_m = Σ_n a_n(0)·J_{n−m}(2|κ|/Δω)·e^(i n (φ₀ − π/2)).
///
/// Errors with a window overflow when the ladder states do not fit the
/// window (Σ|c_m|² loses more than [`KERNEL_TAIL_LIMIT`]).
pub fn wannier_stark(initial: &SidebandState, model: &LatticeModel) -> Result<WannierStarkLadder> {
    if model.detuning == 0.0 {
        return Err(Error::Domain(
            "Wannier-Stark ladder needs a detuned lattice".into(),
        ));
    }
    let z = 2.0 * model.kappa_mag() / model.detuning;
    let window = initial.window;
    let len = initial.amplitudes.len();
    let jseq = bessel_j_sequence(len.saturating_sub(1), z.abs());
    let j_at = |p: i32| -> f64 {
        let mag = jseq[p.unsigned_abs() as usize];
        let mut s = 1.0;
        if p < 0 && p & 1 != 0 {
            s = -s;
        }
        if z < 0.0 && p & 1 != 0 {
            s = -s;
        }
        s * mag
    };
    let gauge = model.phase_delay - PI / 2.0;
    let mut coefficients = vec![C64::new(0.0, 0.0); len];
    let mut eigenvalues = vec![0.0; len];
    for (mi, c) in coefficients.iter_mut().enumerate() {
        let m = window.n_at(mi);
        eigenvalues[mi] = -(m as f64) * model.detuning;
        let mut acc = C64::new(0.0, 0.0);
        for (ni, &a) in initial.amplitudes.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let n = window.n_at(ni);
            acc += a * j_at(n - m) * C64::from_polar(1.0, n as f64 * gauge);
        }
        *c = acc;
    }
    let total: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    if initial.norm_sqr() - total > KERNEL_TAIL_LIMIT {
        return Err(Error::WindowOverflow {
            time: initial.time,
            population: initial.norm_sqr() - total,
            limit: KERNEL_TAIL_LIMIT,
        });
    }
    Ok(WannierStarkLadder {
        window,
        eigenvalues,
        coefficients,
        bessel_argument: z,
        phase_delay: model.phase_delay,
        detuning: model.detuning,
    })
}

impl WannierStarkLadder {
    /// Rebuild the sideband amplitudes at time t from the ladder:
    /// a_n(t) = Σ_m c_m·e^(i m Δω t)·J_{n−m}(2|κ|/Δω)·e^(−i n (φ₀ − π/2)).
    pub fn reconstruct(&self, t: f64) -> Result<SidebandState> {
        let len = self.coefficients.len();
        let jseq = bessel_j_sequence(len.saturating_sub(1), self.bessel_argument.abs());
        let j_at = |p: i32| -> f64 {
            let mag = jseq[p.unsigned_abs() as usize];
            let mut s = 1.0;
            if p < 0 && p & 1 != 0 {
                s = -s;
            }
            if self.bessel_argument < 0.0 && p & 1 != 0 {
                s = -s;
            }
            s * mag
        };
        let gauge = self.phase_delay - PI / 2.0;
        let mut out = vec![C64::new(0.0, 0.0); len];
        for (ni, o) in out.iter_mut().enumerate() {
            let n = self.window.n_at(ni);
            let mut acc = C64::new(0.0, 0.0);
            for (mi, &c) in self.coefficients.iter().enumerate() {
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                let m = self.window.n_at(mi);
                acc += c * j_at(n - m) * C64::from_polar(1.0, m as f64 * self.detuning * t);
            }
            *o = acc * C64::from_polar(1.0, -(n as f64) * gauge);
        }
        SidebandState::new(self.window, out, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(kappa: f64, detuning: f64, phi0: f64) -> LatticeModel {
        LatticeModel {
            hopping_kappa: C64::from_polar(kappa, phi0 - PI / 2.0),
            detuning,
            lattice_constant: 2.36,
            bloch_period: if detuning == 0.0 {
                f64::INFINITY
            } else {
                2.0 * PI / detuning.abs()
            },
            phase_delay: phi0,
        }
    }

    #[test]
    fn breathing_starts_as_delta() {
        let m = model(0.7, 1.0, 0.3);
        assert!((breathing_amplitude(0, 0.0, &m) - C64::new(1.0, 0.0)).norm() < 1e-15);
        for n in 1..6 {
            assert!(breathing_amplitude(n, 0.0, &m).norm() < 1e-15);
        }
    }

    #[test]
    fn breathing_revives_at_bloch_period() {
        let m = model(0.7, 1.0, 0.3);
        let t = m.bloch_period;
        assert!((breathing_amplitude(0, t, &m).norm() - 1.0).abs() < 1e-12);
        for n in 1..6 {
            assert!(breathing_amplitude(n, t, &m).norm() < 1e-12);
        }
    }

    #[test]
    fn breathing_half_period_value() {
        // |J_0(2.8)| at t = T_B/2, |kappa| = 0.7, detuning 1
        let m = model(0.7, 1.0, 0.0);
        let a0 = breathing_amplitude(0, m.bloch_period / 2.0, &m);
        assert_relative_eq!(a0.norm(), 0.185036033364387325, max_relative = 1e-12);
    }

    #[test]
    fn pinem_limit_values() {
        assert!((pinem_limit(0, 0.0, 0.7, 0.3) - C64::new(1.0, 0.0)).norm() < 1e-15);
        // sum rule over the truncated ladder
        let t = 3.0;
        let total: f64 = (-60i32..=60)
            .map(|n| pinem_limit(n, t, 0.7, 0.3).norm_sqr())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        // first zero of J0
        let t0 = crate::bessel::J0_FIRST_ZERO / (2.0 * 0.7);
        assert!(pinem_limit(0, t0, 0.7, 0.0).norm_sqr() < 1e-9);
    }

    #[test]
    fn closed_form_delta_reduces_to_breathing() {
        let m = model(0.7, 1.0, 0.9);
        let w = Window::symmetric(30);
        let delta = SidebandState::delta(w);
        for t in [0.7, 2.9, 5.0] {
            let out = closed_form_propagate(&delta, t, &m).unwrap();
            for n in -6i32..=6 {
                let expect = breathing_amplitude(n, t, &m);
                assert!(
                    (out.amplitude(n) - expect).norm() < 1e-13,
                    "n = {n}, t = {t}"
                );
            }
        }
    }

    #[test]
    fn closed_form_full_revival_any_input() {
        let m = model(0.7, 1.0, 0.4);
        let w = Window::symmetric(20);
        let mut amps = vec![C64::new(0.0, 0.0); w.len()];
        amps[w.index_of(-2).unwrap()] = C64::new(0.5, 0.1);
        amps[w.index_of(0).unwrap()] = C64::new(0.3, -0.4);
        amps[w.index_of(5).unwrap()] = C64::new(0.0, 0.7);
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in amps.iter_mut() {
            *a /= norm;
        }
        let state = SidebandState::new(w, amps, 0.0).unwrap();
        let out = closed_form_propagate(&state, m.bloch_period, &m).unwrap();
        let f = crate::tba::fidelity(&state, &out).unwrap();
        assert!(f > 1.0 - 1e-12, "revival fidelity {f}");
    }

    #[test]
    fn closed_form_matches_kspace_route() {
        let m = model(0.8, 1.3, 1.7);
        let w = Window::new(-45, 46).unwrap();
        let state = SidebandState::gaussian_envelope(w, 2.0 * 2.36, 2.36);
        for t in [0.31, 1.9, 4.4] {
            let a = closed_form_propagate(&state, t, &m).unwrap();
            let b = propagate_kspace(&state, t, &m).unwrap();
            let diff: f64 = a
                .amplitudes
                .iter()
                .zip(&b.amplitudes)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-10, "t = {t}: max diff {diff}");
        }
    }

    #[test]
    fn breathing_trajectory_stays_centered() {
        let m = model(0.7, 1.0, 0.0);
        for t in [0.5, 1.5, 3.0, 6.0] {
            let mean: f64 = (-40i32..=40)
                .map(|n| n as f64 * breathing_amplitude(n, t, &m).norm_sqr())
                .sum();
            assert!(mean.abs() < 1e-12, "t = {t}: mean {mean}");
        }
    }

    #[test]
    fn band_extremes() {
        let m = model(0.7, 0.0, 0.0);
        let omega = m.lattice_constant;
        // theta = pi/2 at k = (pi/2 + phi0)/omega
        let k = PI / 2.0 / omega;
        let p = band(k, 0.0, &m);
        assert_relative_eq!(
            p.diffraction,
            2.0 * 0.7 * omega * omega,
            max_relative = 1e-12
        );
        assert!(p.group_velocity.abs() < 1e-12);
        let p0 = band(0.0, 0.0, &m);
        assert_relative_eq!(p0.group_velocity, -2.0 * 0.7 * omega, max_relative = 1e-12);
        assert!(p0.diffraction.abs() < 1e-12);
    }

    #[test]
    fn band_vanishes_without_drive() {
        let m = model(0.0, 0.0, 0.0);
        let p = band(0.2, 0.0, &m);
        assert_eq!(p.omega_tilde, 0.0);
        assert_eq!(p.group_velocity, 0.0);
        assert_eq!(p.diffraction, 0.0);
    }

    #[test]
    fn band_derivatives_match_finite_differences() {
        let m = model(0.7, 0.6, 1.1);
        let omega = m.lattice_constant;
        let h = 1e-5 / omega;
        for k in [-0.9 / omega, 0.1 / omega, 1.2 / omega] {
            let p = band(k, 0.4, &m);
            let up = band(k + h, 0.4, &m).omega_tilde;
            let dn = band(k - h, 0.4, &m).omega_tilde;
            let fd_v = (up - dn) / (2.0 * h);
            assert_relative_eq!(p.group_velocity, fd_v, max_relative = 1e-6);
            let fd_d = (up + dn - 2.0 * p.omega_tilde) / (h * h);
            assert_relative_eq!(p.diffraction, fd_d, max_relative = 1e-4);
        }
    }

    #[test]
    fn displacement_examples() {
        let m = model(0.7, 1.0, 0.8);
        assert_eq!(displacement(0.0, 0.1, &m, PhaseConvention::PlusPhase), 0.0);
        let t_b = m.bloch_period;
        assert!(displacement(t_b, 0.1, &m, PhaseConvention::PlusPhase).abs() < 1e-12);
        // short-time slope equals the group velocity at the zone center;
        // tested at phase zero where the O(Δωt) correction to the ratio
        // vanishes and the 1e-6 tolerance is meaningful
        let m0 = model(0.7, 1.0, 0.0);
        let t = 1e-4 * m0.bloch_period;
        let slope = displacement(t, 0.0, &m0, PhaseConvention::MinusPhase) / t;
        let vg = band(0.0, 0.0, &m0).group_velocity;
        assert_relative_eq!(slope, vg, max_relative = 1e-6);
        // at the zone center the plus-phase displacement is the negative of
        // the oscillation trajectory factor
        for t in [0.3, 1.1] {
            let lhs = displacement(t, 0.0, &m, PhaseConvention::PlusPhase);
            let rhs = -4.0 * m.kappa_mag() * m.lattice_constant / m.detuning * oscillation_d(t, &m);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn gaussian_bo_rest_and_width() {
        let m = model(0.7, 1.0, 0.5);
        let spec = GaussianEnvelopeSpec::new(10.0 * m.lattice_constant, 0.2).unwrap();
        let w = Window::symmetric(160);
        let snap = gaussian_bo(&spec, w, 0.0, &m).unwrap();
        assert!(snap.validity.is_ok());
        assert!(snap.mean_x.abs() < 1e-12);
        assert_relative_eq!(
            snap.variance_x,
            2.0 * spec.sigma_en * spec.sigma_en,
            max_relative = 1e-14
        );
        // the discrete moments of the returned amplitudes agree with the
        // continuum values for a broad envelope
        let (mx, vx) = crate::tba::observables(&snap.state, &m);
        assert!(mx.abs() < 1e-9);
        assert_relative_eq!(vx, snap.variance_x, max_relative = 1e-6);
    }

    #[test]
    fn gaussian_bo_half_period_displacement() {
        // phi0 = pi/2 at t = T_B/2: d = -1, mean = -4 kappa omega / detuning
        let m = model(0.7, 1.0, PI / 2.0);
        let spec = GaussianEnvelopeSpec::new(10.0 * m.lattice_constant, 0.2).unwrap();
        let w = Window::symmetric(170);
        let snap = gaussian_bo(&spec, w, m.bloch_period / 2.0, &m).unwrap();
        let expect = -4.0 * 0.7 * m.lattice_constant / m.detuning;
        assert_relative_eq!(snap.mean_x, expect, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_bo_warns_when_narrow() {
        let m = model(0.7, 1.0, 0.0);
        let spec = GaussianEnvelopeSpec::new(3.0 * m.lattice_constant, 0.2).unwrap();
        let snap = gaussian_bo(&spec, Window::symmetric(60), 0.0, &m).unwrap();
        assert!(!snap.validity.is_ok());
    }

    #[test]
    fn wannier_stark_projection_is_unitary() {
        let m = model(0.7, 1.0, 0.6);
        let w = Window::symmetric(40);
        let state = SidebandState::gaussian_envelope(w, 2.0 * 2.36, 2.36);
        let ladder = wannier_stark(&state, &m).unwrap();
        let total: f64 = ladder.coefficients.iter().map(|c| c.norm_sqr()).sum();
        assert!((total - 1.0).abs() < 1e-10);
        // equally spaced eigenvalues
        for pair in ladder.eigenvalues.windows(2) {
            assert_relative_eq!(pair[0] - pair[1], m.detuning, max_relative = 1e-12);
        }
        assert_relative_eq!(ladder.bessel_argument, 1.4, max_relative = 1e-12);
    }

    #[test]
    fn wannier_stark_decoupled_limit() {
        // kappa/detuning -> 0 localizes the ladder states on single sites
        let m = model(1e-9, 1.0, 0.4);
        let w = Window::symmetric(10);
        let state = SidebandState::gaussian_envelope(w, 1.5 * 2.36, 2.36);
        let ladder = wannier_stark(&state, &m).unwrap();
        for (mi, c) in ladder.coefficients.iter().enumerate() {
            assert_relative_eq!(c.norm(), state.amplitudes[mi].norm(), epsilon = 1e-8);
        }
    }

    #[test]
    fn wannier_stark_reconstruction() {
        let m = model(0.7, 1.0, 1.3);
        let w = Window::symmetric(35);
        let state = SidebandState::gaussian_envelope(w, 1.8 * 2.36, 2.36);
        let ladder = wannier_stark(&state, &m).unwrap();
        // t = 0 returns the input
        let back = ladder.reconstruct(0.0).unwrap();
        let diff: f64 = back
            .amplitudes
            .iter()
            .zip(&state.amplitudes)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-10, "reconstruction at t = 0: {diff}");
        // finite time agrees with the closed-form propagator
        for t in [0.9, 3.3] {
            let via_ladder = ladder.reconstruct(t).unwrap();
            let direct = closed_form_propagate(&state, t, &m).unwrap();
            let diff: f64 = via_ladder
                .amplitudes
                .iter()
                .zip(&direct.amplitudes)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-10, "t = {t}: {diff}");
        }
    }

    #[test]
    fn synchronized_lattice_rejected() {
        let m = model(0.7, 0.0, 0.0);
        let state = SidebandState::delta(Window::symmetric(10));
        assert!(closed_form_propagate(&state, 1.0, &m).is_err());
        assert!(wannier_stark(&state, &m).is_err());
    }
}
