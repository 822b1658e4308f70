//! Real-space Crank-Nicolson solver for the slow electron envelope.
//!
//! The envelope χ(z, τ) with τ = ct obeys a drift-diffusion-drive equation
//! on a periodic grid spanning an integer number of grating periods:
//!
//! ```text
//! i ∂χ/∂τ = −i[β − α₁ sin θ] ∂χ/∂z − [α₂ ∂²/∂z² + α₀ sin θ] χ,
//! θ = k_L τ − k_z z + φ₀
//! ```
//!
//! discretized to a cyclic tridiagonal Hamiltonian and stepped with the
//! unitary Cayley form (1 + iΔτH/2)·χ' = (1 − iΔτH/2)·χ. The raw stencil
//! is not exactly Hermitian at order α₁ because the drive multiplies the
//! gradient; the assembled matrix is symmetrized with its conjugate
//! transpose, which keeps second-order accuracy and makes the step exactly
//! norm-conserving. H is evaluated at the midpoint τ + Δτ/2 of each step.
//!
//! Projecting χ on the grating harmonics e^(i n q z) recovers the sideband
//! amplitudes, which is how this solver cross-checks the lattice picture.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::params::{BeamKinematics, DriveParams};
use crate::tba::{SidebandState, Window};

/// Mass limit in the outer 5% of the grid for a valid sideband projection.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-8;

/// Fraction of the grid counted as "outer" on each side.
const BOUNDARY_FRACTION: f64 = 0.05;

/// Grid, step, and physical coefficients of one envelope simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct TdseConfig {
    pub z_min: f64,
    pub z_max: f64,
    /// Number of grid nodes N_z (periodic: node N_z coincides with node 0).
    pub grid_points: usize,
    /// Time step Δτ in μm of optical path (τ = ct).
    pub step_tau: f64,
    /// Drive amplitude on the potential term, eE₀β/(ħω_L), μm⁻¹.
    pub alpha0: f64,
    /// Drive amplitude on the gradient term, eE₀/(γmcω_L), dimensionless.
    pub alpha1: f64,
    /// Diffusion coefficient ħ/(2γ³mc), μm.
    pub alpha2: f64,
    /// Speed fraction β of the beam.
    pub beta: f64,
    /// Optical wavevector k_L = ω_L/c, μm⁻¹.
    pub laser_k: f64,
    /// Grating wavevector q, μm⁻¹.
    pub grating_k: f64,
    /// Drive phase delay, rad.
    pub phase_delay: f64,
    /// Periodic treatment: skips the boundary-mass guard on projection.
    pub periodic: bool,
}

impl TdseConfig {
    /// Build a config from beam/drive parameters and grid choices. The
    /// domain is `periods` grating periods wide; the drive coefficients are
    /// recomputed from the physical constants here and nowhere else.
    pub fn new(
        consts: &PhysicalConstants,
        beam: &BeamKinematics,
        drive: &DriveParams,
        periods: u32,
        points_per_period: usize,
        step_tau: f64,
    ) -> Result<Self> {
        if periods == 0 || points_per_period < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least one period and 3 points per period, got {periods} x {points_per_period}"
            )));
        }
        let length = periods as f64 * drive.grating_period;
        let grid_points = periods as usize * points_per_period;
        let config = Self {
            z_min: -0.5 * length,
            z_max: 0.5 * length,
            grid_points,
            step_tau,
            alpha0: consts.elementary_charge * drive.field_strength * beam.beta
                / (consts.hbar * drive.laser_angular_frequency),
            alpha1: consts.elementary_charge * drive.field_strength
                / (beam.gamma
                    * consts.electron_mass
                    * consts.light_speed
                    * drive.laser_angular_frequency),
            alpha2: consts.hbar
                / (2.0 * beam.gamma.powi(3) * consts.electron_mass * consts.light_speed),
            beta: beam.beta,
            laser_k: drive.laser_angular_frequency / consts.light_speed,
            grating_k: drive.grating_wavevector,
            phase_delay: drive.phase_delay,
            periodic: true,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 grid points, got {}",
                self.grid_points
            )));
        }
        let length = self.z_max - self.z_min;
        if !(length > 0.0) {
            return Err(Error::InvalidGrid("empty spatial domain".into()));
        }
        let period = 2.0 * PI / self.grating_k;
        let periods = length / period;
        if (periods - periods.round()).abs() > 1e-9 * periods.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "domain spans {periods} grating periods; must be an integer"
            )));
        }
        let ratio = self.beta * self.step_tau / self.dz();
        if ratio > 1.0 {
            return Err(Error::CflViolation { ratio });
        }
        Ok(())
    }

    /// Grid spacing δz, μm.
    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / self.grid_points as f64
    }

    /// Node coordinate z_j.
    pub fn z_at(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.dz()
    }
}

/// Complex envelope χ on the grid nodes, tagged with the elapsed τ = ct.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub values: Vec<C64>,
    pub tau: f64,
}

impl GridWavefunction {
    /// Discrete norm Σ|χ_j|²·δz.
    pub fn norm_sqr(&self, config: &TdseConfig) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * config.dz()
    }

    /// Mass fraction in the outer 5% of nodes on each side.
    pub fn boundary_mass(&self) -> f64 {
        let n = self.values.len();
        let k = ((n as f64 * BOUNDARY_FRACTION) as usize).max(1);
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let outer: f64 = self.values[..k]
            .iter()
            .chain(self.values[n - k..].iter())
            .map(|v| v.norm_sqr())
            .sum();
        outer / total
    }
}

/// Cyclic tridiagonal matrix: `diag[j]`, `upper[j]` couples j → j+1 (mod N),
/// `lower[j]` couples j → j−1 (mod N).
#[derive(Debug, Clone)]
pub struct CyclicTridiag {
    pub diag: Vec<C64>,
    pub upper: Vec<C64>,
    pub lower: Vec<C64>,
}

impl CyclicTridiag {
    fn zeros(n: usize) -> Self {
        Self {
            diag: vec![C64::new(0.0, 0.0); n],
            upper: vec![C64::new(0.0, 0.0); n],
            lower: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// y = M·x with cyclic wrap.
    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let n = x.len();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            let up = x[(j + 1) % n];
            let dn = x[(j + n - 1) % n];
            y[j] = self.diag[j] * x[j] + self.upper[j] * up + self.lower[j] * dn;
        }
        y
    }

    /// Largest Hermiticity defect `max_j |M[j][j+1] − conj(M[j+1][j])|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.diag.len();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            let jp = (j + 1) % n;
            worst = worst.max((self.upper[j] - self.lower[jp].conj()).norm());
        }
        for d in &self.diag {
            worst = worst.max(d.im.abs());
        }
        worst
    }
}

/// Assemble the discretized Hamiltonian at time τ.
///
/// With `symmetrize` the drive factor on the off-diagonals is averaged with
/// the conjugate-transposed entry, making the matrix exactly Hermitian;
/// without it the stencil is kept as written, which leaves an O(α₁·q·δz/δz)
/// defect useful as a diagnostic.
pub fn assemble_hamiltonian(config: &TdseConfig, tau: f64, symmetrize: bool) -> CyclicTridiag {
    let n = config.grid_points;
    let dz = config.dz();
    let mut h = CyclicTridiag::zeros(n);
    let kinetic = -config.alpha2 / (dz * dz);
    let drift = C64::new(0.0, -config.beta / (2.0 * dz));
    let theta = |j: usize| -> f64 {
        config.laser_k * tau - config.grating_k * config.z_at(j) + config.phase_delay
    };
    for j in 0..n {
        let th = theta(j);
        let th_up = theta(j + 1); // z-periodic drive: j + 1 = n wraps exactly
        let th_dn = theta(if j == 0 { n - 1 } else { j - 1 });
        let drive_up = if symmetrize {
            (C64::from_polar(1.0, th) + C64::from_polar(1.0, th_up)) * (config.alpha1 / (4.0 * dz))
        } else {
            C64::from_polar(1.0, th) * (config.alpha1 / (2.0 * dz))
        };
        let drive_dn = if symmetrize {
            (C64::from_polar(1.0, -th) + C64::from_polar(1.0, -th_dn))
                * (config.alpha1 / (4.0 * dz))
        } else {
            C64::from_polar(1.0, -th) * (config.alpha1 / (2.0 * dz))
        };
        h.upper[j] = kinetic + drift + drive_up;
        h.lower[j] = kinetic - drift + drive_dn;
        h.diag[j] = C64::new(
            2.0 * config.alpha2 / (dz * dz)
                - config.alpha1 / dz * th.cos()
                - config.alpha0 * th.sin(),
            0.0,
        );
    }
    h
}

/// The Cayley pair (1 + iΔτH/2, 1 − iΔτH/2) with H evaluated at τ + Δτ/2.
pub fn build_step_matrices(
    config: &TdseConfig,
    tau: f64,
) -> Result<(CyclicTridiag, CyclicTridiag)> {
    let ratio = config.beta * config.step_tau / config.dz();
    if ratio > 1.0 {
        return Err(Error::CflViolation { ratio });
    }
    let h = assemble_hamiltonian(config, tau + 0.5 * config.step_tau, true);
    let n = config.grid_points;
    let mut implicit = CyclicTridiag::zeros(n);
    let mut explicit = CyclicTridiag::zeros(n);
    let half = C64::new(0.0, 0.5 * config.step_tau);
    for j in 0..n {
        implicit.diag[j] = C64::new(1.0, 0.0) + half * h.diag[j];
        implicit.upper[j] = half * h.upper[j];
        implicit.lower[j] = half * h.lower[j];
        explicit.diag[j] = C64::new(1.0, 0.0) - half * h.diag[j];
        explicit.upper[j] = -half * h.upper[j];
        explicit.lower[j] = -half * h.lower[j];
    }
    Ok((implicit, explicit))
}

/// Solve the cyclic tridiagonal system M·x = rhs by Thomas elimination with
/// a rank-one (Sherman-Morrison) correction for the periodic corners.
pub fn solve_cyclic(m: &CyclicTridiag, rhs: &[C64]) -> Result<Vec<C64>> {
    let n = rhs.len();
    if n < 3 {
        return Err(Error::InvalidGrid(
            "cyclic solve needs at least 3 nodes".into(),
        ));
    }
    // corner entries: M[0][n-1] = lower[0], M[n-1][0] = upper[n-1]
    let beta_c = m.lower[0];
    let alpha_c = m.upper[n - 1];
    let gamma = -m.diag[0];
    if gamma.norm() == 0.0 {
        return Err(Error::InvalidGrid("singular cyclic system".into()));
    }
    // modified non-cyclic diagonal
    let mut diag = m.diag.clone();
    diag[0] -= gamma;
    diag[n - 1] -= alpha_c * beta_c / gamma;

    let solve_tridiag = |d: &[C64], rhs: &[C64]| -> Result<Vec<C64>> {
        let mut c_prime = vec![C64::new(0.0, 0.0); n];
        let mut x = vec![C64::new(0.0, 0.0); n];
        let mut denom = d[0];
        if denom.norm() == 0.0 {
            return Err(Error::InvalidGrid("singular tridiagonal system".into()));
        }
        c_prime[0] = m.upper[0] / denom;
        x[0] = rhs[0] / denom;
        for j in 1..n {
            denom = d[j] - m.lower[j] * c_prime[j - 1];
            if denom.norm() == 0.0 {
                return Err(Error::InvalidGrid("singular tridiagonal system".into()));
            }
            if j < n - 1 {
                c_prime[j] = m.upper[j] / denom;
            }
            x[j] = (rhs[j] - m.lower[j] * x[j - 1]) / denom;
        }
        for j in (0..n - 1).rev() {
            let next = x[j + 1];
            x[j] -= c_prime[j] * next;
        }
        Ok(x)
    };

    let x = solve_tridiag(&diag, rhs)?;
    let mut u = vec![C64::new(0.0, 0.0); n];
    u[0] = gamma;
    u[n - 1] = alpha_c;
    let z = solve_tridiag(&diag, &u)?;
    // v = (1, 0, ..., 0, beta_c/gamma)
    let v_dot_x = x[0] + beta_c / gamma * x[n - 1];
    let v_dot_z = z[0] + beta_c / gamma * z[n - 1];
    let factor = v_dot_x / (C64::new(1.0, 0.0) + v_dot_z);
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - factor * zi).collect())
}

/// Advance the envelope by one Crank-Nicolson step.
pub fn cn_step(psi: &GridWavefunction, config: &TdseConfig) -> Result<GridWavefunction> {
    let (implicit, explicit) = build_step_matrices(config, psi.tau)?;
    let rhs = explicit.mul_vec(&psi.values);
    let values = solve_cyclic(&implicit, &rhs)?;
    Ok(GridWavefunction {
        values,
        tau: psi.tau + config.step_tau,
    })
}

/// Project the envelope on the grating harmonics:
/// a_n ∝ Σ_j χ_j·e^(−i n q z_j)·δz, normalized to Σ|a_n|² = 1.
///
/// The domain must span an integer number of grating periods (checked at
/// config construction). Without periodic treatment the boundary-mass
/// guard rejects envelopes leaking into the outer 5% of the grid.
pub fn extract_sidebands(
    psi: &GridWavefunction,
    config: &TdseConfig,
    window: Window,
) -> Result<SidebandState> {
    if !config.periodic {
        let mass = psi.boundary_mass();
        if mass > BOUNDARY_MASS_LIMIT {
            return Err(Error::BoundaryMass {
                mass,
                fraction: BOUNDARY_FRACTION * 100.0,
                limit: BOUNDARY_MASS_LIMIT,
            });
        }
    }
    let dz = config.dz();
    let mut amplitudes: Vec<C64> = window
        .iter()
        .map(|n| {
            let nq = n as f64 * config.grating_k;
            let mut acc = C64::new(0.0, 0.0);
            for (j, &v) in psi.values.iter().enumerate() {
                acc += v * C64::from_polar(1.0, -nq * config.z_at(j));
            }
            acc * dz
        })
        .collect();
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Domain("cannot project a zero wavefunction".into()));
    }
    for a in amplitudes.iter_mut() {
        *a /= norm;
    }
    SidebandState::new(window, amplitudes, psi.tau / crate::constants::LIGHT_SPEED)
}

/// Initial envelope types for the grid solver.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialWavepacket {
    /// A single Gaussian envelope of the given real-space width σ_z (μm),
    /// a pure n = 0 state in sideband space.
    Envelope { center: f64, sigma_z: f64 },
    /// Gaussian envelope multiplied by a grating-harmonic comb with the
    /// given sideband weights c_n for n in the window.
    Comb {
        center: f64,
        sigma_z: f64,
        window: Window,
        weights: Vec<C64>,
    },
}

/// Build a normalized initial envelope. Requires the envelope to fit in
/// the domain with less than [`BOUNDARY_MASS_LIMIT`] of its mass in the
/// outer 5% of the grid.
pub fn make_initial_wavepacket(
    config: &TdseConfig,
    packet: &InitialWavepacket,
) -> Result<GridWavefunction> {
    let make_envelope = |center: f64, sigma_z: f64| -> Vec<f64> {
        (0..config.grid_points)
            .map(|j| {
                let dz = config.z_at(j) - center;
                (-dz * dz / (4.0 * sigma_z * sigma_z)).exp()
            })
            .collect()
    };
    let values: Vec<C64> = match packet {
        InitialWavepacket::Envelope { center, sigma_z } => make_envelope(*center, *sigma_z)
            .into_iter()
            .map(|e| C64::new(e, 0.0))
            .collect(),
        InitialWavepacket::Comb {
            center,
            sigma_z,
            window,
            weights,
        } => {
            if weights.len() != window.len() {
                return Err(Error::InvalidGrid(format!(
                    "{} comb weights for a window of {} sites",
                    weights.len(),
                    window.len()
                )));
            }
            let envelope = make_envelope(*center, *sigma_z);
            (0..config.grid_points)
                .map(|j| {
                    let z = config.z_at(j);
                    let comb: C64 = window
                        .iter()
                        .zip(weights)
                        .map(|(n, &c)| c * C64::from_polar(1.0, n as f64 * config.grating_k * z))
                        .sum();
                    comb * envelope[j]
                })
                .collect()
        }
    };
    let norm = (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * config.dz()).sqrt();
    if norm == 0.0 {
        return Err(Error::DomainTooSmall("wavepacket has zero mass".into()));
    }
    let psi = GridWavefunction {
        values: values.into_iter().map(|v| v / norm).collect(),
        tau: 0.0,
    };
    let mass = psi.boundary_mass();
    if mass > BOUNDARY_MASS_LIMIT {
        return Err(Error::DomainTooSmall(format!(
            "envelope carries {mass:.2e} of its mass in the outer grid margin"
        )));
    }
    Ok(psi)
}
