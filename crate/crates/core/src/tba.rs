//! Tight-binding evolution of the sideband amplitudes.
//!
//! The state lives on a truncated window of sideband indices n and evolves
//! under
//!
//! ```text
//! da_n/dt = i n Δω_L a_n − i κ a_{n+1} − i κ* a_{n−1}
//! ```
//!
//! with piecewise-constant drive segments. Integration is classical
//! fixed-step RK4; within a segment the Hamiltonian is constant, so no
//! mid-step drive interpolation is involved. The norm is monitored and
//! reported, never renormalized: drift is a diagnostic of the integrator,
//! not something to hide.
//!
//! Runs are pure functions of their inputs; independent runs can execute
//! concurrently with no shared state.

use num_complex::Complex64 as C64;

use crate::bessel::bessel_j_sequence;
use crate::error::{Error, Result};
use crate::params::LatticeModel;

/// Population limit on the two outermost sites of either window edge.
pub const EDGE_GUARD_LIMIT: f64 = 1e-8;

/// Truncation-loss limit when applying a discrete modulation kernel.
pub const KERNEL_TAIL_LIMIT: f64 = 1e-10;

/// Tolerated norm deviation for a state accepted as "normalized".
pub const NORM_TOLERANCE: f64 = 1e-9;

/// Inclusive sideband-index window [n_min, n_max], always containing n = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub n_min: i32,
    pub n_max: i32,
}

impl Window {
    pub fn new(n_min: i32, n_max: i32) -> Result<Self> {
        if n_min > 0 || n_max < 0 {
            return Err(Error::InvalidGrid(format!(
                "window [{n_min}, {n_max}] must contain n = 0"
            )));
        }
        Ok(Self { n_min, n_max })
    }

    /// Symmetric window [−half_width, half_width].
    pub fn symmetric(half_width: u32) -> Self {
        Self {
            n_min: -(half_width as i32),
            n_max: half_width as i32,
        }
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, n: i32) -> Option<usize> {
        (n >= self.n_min && n <= self.n_max).then(|| (n - self.n_min) as usize)
    }

    /// Sideband index at storage position `idx`.
    pub fn n_at(&self, idx: usize) -> i32 {
        self.n_min + idx as i32
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.n_min..=self.n_max
    }
}

/// Complex sideband amplitudes a_n on a window; the lattice wavefunction.
#[derive(Debug, Clone, PartialEq)]
pub struct SidebandState {
    pub window: Window,
    pub amplitudes: Vec<C64>,
    pub time: f64,
}

impl SidebandState {
    /// State with the given amplitudes; length must match the window.
    pub fn new(window: Window, amplitudes: Vec<C64>, time: f64) -> Result<Self> {
        if amplitudes.len() != window.len() {
            return Err(Error::InvalidGrid(format!(
                "amplitude count {} does not match window size {}",
                amplitudes.len(),
                window.len()
            )));
        }
        Ok(Self {
            window,
            amplitudes,
            time,
        })
    }

    /// Single occupied sideband n = 0.
    pub fn delta(window: Window) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); window.len()];
        let idx = window.index_of(0).expect("window contains 0");
        amplitudes[idx] = C64::new(1.0, 0.0);
        Self {
            window,
            amplitudes,
            time: 0.0,
        }
    }

    /// Real Gaussian envelope over the sidebands, normalized. The width is
    /// parameterized so that the intensity variance in x = ω_L·n equals
    /// 2·σ_en² exactly in the continuum limit.
    pub fn gaussian_envelope(window: Window, sigma_en: f64, lattice_constant: f64) -> Self {
        let mut amplitudes: Vec<C64> = window
            .iter()
            .map(|n| {
                let x = n as f64 * lattice_constant;
                C64::new((-x * x / (8.0 * sigma_en * sigma_en)).exp(), 0.0)
            })
            .collect();
        normalize(&mut amplitudes);
        Self {
            window,
            amplitudes,
            time: 0.0,
        }
    }

    /// Periodic comb: `pattern[j]` placed at n = (j − len/2)·period, zeros
    /// elsewhere, normalized.
    pub fn comb(window: Window, period: u32, pattern: &[C64]) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidGrid("comb period must be positive".into()));
        }
        if pattern.iter().all(|c| c.norm_sqr() == 0.0) {
            return Err(Error::InvalidGrid(
                "comb pattern needs at least one nonzero entry".into(),
            ));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); window.len()];
        let offset = pattern.len() as i32 / 2;
        for (j, &c) in pattern.iter().enumerate() {
            let n = (j as i32 - offset) * period as i32;
            let idx = window.index_of(n).ok_or_else(|| {
                Error::InvalidGrid(format!(
                    "comb site n = {n} falls outside window [{}, {}]",
                    window.n_min, window.n_max
                ))
            })?;
            amplitudes[idx] = c;
        }
        normalize(&mut amplitudes);
        Self::new(window, amplitudes, 0.0)
    }

    /// Σ_n |a_n|².
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// |Σ|a_n|² − 1|.
    pub fn norm_error(&self) -> f64 {
        (self.norm_sqr() - 1.0).abs()
    }

    /// |a_n|² for every window site.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Amplitude at sideband n, zero outside the window.
    pub fn amplitude(&self, n: i32) -> C64 {
        self.window
            .index_of(n)
            .map(|i| self.amplitudes[i])
            .unwrap_or_else(|| C64::new(0.0, 0.0))
    }
}

fn normalize(amplitudes: &mut [C64]) {
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in amplitudes.iter_mut() {
            *a /= norm;
        }
    }
}

/// ⟨a|b⟩ for two states on the same window.
pub fn overlap(a: &SidebandState, b: &SidebandState) -> Result<C64> {
    if a.window != b.window {
        return Err(Error::GridMismatch(format!(
            "windows [{}, {}] vs [{}, {}]",
            a.window.n_min, a.window.n_max, b.window.n_min, b.window.n_max
        )));
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// |⟨a|b⟩|².
pub fn fidelity(a: &SidebandState, b: &SidebandState) -> Result<f64> {
    Ok(overlap(a, b)?.norm_sqr())
}

/// Sign of the detuning during a drive segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetuningSign {
    Positive,
    Negative,
}

impl DetuningSign {
    pub fn factor(self) -> f64 {
        match self {
            DetuningSign::Positive => 1.0,
            DetuningSign::Negative => -1.0,
        }
    }
}

/// One piecewise-constant stretch of the drive program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Duration, fs.
    pub duration: f64,
    /// Phase delay φ₀ during the segment, rad.
    pub phase_delay: f64,
    /// Whether the detuning keeps or flips the model's sign.
    pub detuning_sign: DetuningSign,
    /// |κ| during the segment, fs⁻¹.
    pub hopping_magnitude: f64,
}

/// Ordered list of drive segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Scenario(
                "schedule needs at least one segment".into(),
            ));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.duration > 0.0) {
                return Err(Error::Scenario(format!(
                    "segment {i} has non-positive duration {}",
                    seg.duration
                )));
            }
            if !(seg.hopping_magnitude >= 0.0) {
                return Err(Error::Scenario(format!(
                    "segment {i} has negative hopping magnitude"
                )));
            }
        }
        Ok(Self { segments })
    }

    /// Single segment taken straight from the model.
    pub fn constant(model: &LatticeModel, duration: f64) -> Result<Self> {
        Self::new(vec![Segment {
            duration,
            phase_delay: model.phase_delay,
            detuning_sign: DetuningSign::Positive,
            hopping_magnitude: model.kappa_mag(),
        }])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }
}

/// Time-sampled record of an evolution run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub window: Window,
    /// Strictly increasing sample times, fs.
    pub times: Vec<f64>,
    /// |a_n|² per sample (row) and window site (column).
    pub spectra: Vec<Vec<f64>>,
    /// ⟨x⟩ = ω_L·Σ n|a_n|² per sample, rad/fs.
    pub mean_x: Vec<f64>,
    /// Δx² = ω_L²·(⟨n²⟩ − ⟨n⟩²) per sample, (rad/fs)².
    pub variance_x: Vec<f64>,
    /// Complex amplitudes at the final sample.
    pub amplitudes_final: Vec<C64>,
    /// Largest |Σ|a_n|² − 1| seen at any sample; integrator diagnostic.
    pub max_norm_error: f64,
}

/// ⟨x⟩ and Δx² of a state: mean and variance of the energy coordinate
/// x = ω_L·n over the sideband distribution.
pub fn observables(state: &SidebandState, model: &LatticeModel) -> (f64, f64) {
    let omega = model.lattice_constant;
    let mut p_sum = 0.0;
    let mut n_mean = 0.0;
    let mut n_sq = 0.0;
    for (idx, a) in state.amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        let n = state.window.n_at(idx) as f64;
        p_sum += p;
        n_mean += n * p;
        n_sq += n * n * p;
    }
    // guard against a slightly drifted norm skewing the moments
    if p_sum > 0.0 {
        n_mean /= p_sum;
        n_sq /= p_sum;
    }
    (omega * n_mean, omega * omega * (n_sq - n_mean * n_mean))
}

/// Right-hand side of the coupled-mode equations:
/// ȧ_n = i·n·Δω_L·a_n − i·κ·a_{n+1} − i·κ*·a_{n−1},
/// with out-of-window neighbors treated as zero.
pub fn derivative(state: &SidebandState, model: &LatticeModel) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); state.amplitudes.len()];
    derivative_into(
        &state.amplitudes,
        state.window,
        model.hopping_kappa,
        model.detuning,
        &mut out,
    );
    out
}

fn derivative_into(a: &[C64], window: Window, kappa: C64, detuning: f64, out: &mut [C64]) {
    let i = C64::new(0.0, 1.0);
    let kc = kappa.conj();
    let len = a.len();
    for idx in 0..len {
        let n = window.n_at(idx) as f64;
        let up = if idx + 1 < len {
            a[idx + 1]
        } else {
            C64::new(0.0, 0.0)
        };
        let dn = if idx > 0 {
            a[idx - 1]
        } else {
            C64::new(0.0, 0.0)
        };
        out[idx] = i * (n * detuning * a[idx]) - i * (kappa * up) - i * (kc * dn);
    }
}

fn edge_population(a: &[C64]) -> f64 {
    let len = a.len();
    let take = 2.min(len);
    let left: f64 = a[..take].iter().map(|v| v.norm_sqr()).sum();
    let right: f64 = a[len - take..].iter().map(|v| v.norm_sqr()).sum();
    left.max(right)
}

struct Rk4Buffers {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4Buffers {
    fn new(len: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); len];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }
}

fn rk4_step(a: &mut [C64], window: Window, kappa: C64, detuning: f64, dt: f64, b: &mut Rk4Buffers) {
    let half = dt / 2.0;
    derivative_into(a, window, kappa, detuning, &mut b.k1);
    for i in 0..a.len() {
        b.tmp[i] = a[i] + b.k1[i] * half;
    }
    derivative_into(&b.tmp, window, kappa, detuning, &mut b.k2);
    for i in 0..a.len() {
        b.tmp[i] = a[i] + b.k2[i] * half;
    }
    derivative_into(&b.tmp, window, kappa, detuning, &mut b.k3);
    for i in 0..a.len() {
        b.tmp[i] = a[i] + b.k3[i] * dt;
    }
    derivative_into(&b.tmp, window, kappa, detuning, &mut b.k4);
    let sixth = dt / 6.0;
    for i in 0..a.len() {
        a[i] += (b.k1[i] + (b.k2[i] + b.k3[i]) * 2.0 + b.k4[i]) * sixth;
    }
}

/// Integrate a state through a drive schedule, sampling uniformly.
///
/// `step` is the largest RK4 step allowed; it must satisfy
/// step ≤ 0.01 / max(|κ|, |Δω_L|) over all segments. Sampling instants and
/// segment boundaries are hit exactly by shortening the local step, so the
/// result is deterministic for identical inputs.
pub fn evolve(
    state: &SidebandState,
    schedule: &Schedule,
    model: &LatticeModel,
    step: f64,
    samples: usize,
) -> Result<TraceRecord> {
    if samples < 2 {
        return Err(Error::Scenario(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    if !(step > 0.0) {
        return Err(Error::Scenario(format!(
            "step must be positive, got {step}"
        )));
    }
    if state.norm_error() > NORM_TOLERANCE {
        return Err(Error::Domain(format!(
            "input state norm deviates by {:.3e}",
            state.norm_error()
        )));
    }
    let mut rate_scale: f64 = 0.0;
    for seg in schedule.segments() {
        rate_scale = rate_scale
            .max(seg.hopping_magnitude)
            .max((seg.detuning_sign.factor() * model.detuning).abs());
    }
    if rate_scale > 0.0 {
        let bound = 0.01 / rate_scale;
        if step > bound {
            return Err(Error::StepTooLarge { step, bound });
        }
    }

    let total = schedule.total_duration();
    let t0 = state.time;
    let sample_times: Vec<f64> = (0..samples)
        .map(|i| total * i as f64 / (samples - 1) as f64)
        .collect();

    // boundaries between piecewise-constant stretches, relative to t0
    let mut boundaries = Vec::with_capacity(schedule.segments().len() + 1);
    let mut acc = 0.0;
    boundaries.push(0.0);
    for seg in schedule.segments() {
        acc += seg.duration;
        boundaries.push(acc);
    }

    let mut events: Vec<f64> = sample_times
        .iter()
        .chain(boundaries.iter())
        .copied()
        .collect();
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup_by(|a, b| (*a - *b).abs() <= total * 1e-12);

    let window = state.window;
    let mut amplitudes = state.amplitudes.clone();
    let mut buffers = Rk4Buffers::new(amplitudes.len());

    let mut times = Vec::with_capacity(samples);
    let mut spectra = Vec::with_capacity(samples);
    let mut mean_x = Vec::with_capacity(samples);
    let mut variance_x = Vec::with_capacity(samples);
    let mut max_norm_error: f64 = 0.0;
    let mut next_sample = 0usize;

    let mut record = |t: f64, amps: &[C64], next: &mut usize, max_err: &mut f64| -> Result<()> {
        while *next < sample_times.len() && (sample_times[*next] - t).abs() <= total * 1e-12 {
            let snapshot = SidebandState {
                window,
                amplitudes: amps.to_vec(),
                time: t0 + t,
            };
            let edge = edge_population(amps);
            if edge > EDGE_GUARD_LIMIT {
                return Err(Error::WindowOverflow {
                    time: t0 + t,
                    population: edge,
                    limit: EDGE_GUARD_LIMIT,
                });
            }
            let (m, v) = observables(&snapshot, model);
            *max_err = max_err.max(snapshot.norm_error());
            times.push(t0 + t);
            spectra.push(snapshot.probabilities());
            mean_x.push(m);
            variance_x.push(v);
            *next += 1;
        }
        Ok(())
    };

    record(0.0, &amplitudes, &mut next_sample, &mut max_norm_error)?;

    for pair in events.windows(2) {
        let (ta, tb) = (pair[0], pair[1]);
        let span = tb - ta;
        if span <= total * 1e-12 {
            record(tb, &amplitudes, &mut next_sample, &mut max_norm_error)?;
            continue;
        }
        let tmid = 0.5 * (ta + tb);
        let seg_idx = boundaries
            .windows(2)
            .position(|w| tmid >= w[0] && tmid < w[1])
            .unwrap_or(schedule.segments().len() - 1);
        let seg = schedule.segments()[seg_idx];
        let seg_model = model.with_segment(
            seg.hopping_magnitude,
            seg.phase_delay,
            seg.detuning_sign.factor(),
        );
        let n_steps = (span / step).ceil().max(1.0) as usize;
        let dt = span / n_steps as f64;
        for _ in 0..n_steps {
            rk4_step(
                &mut amplitudes,
                window,
                seg_model.hopping_kappa,
                seg_model.detuning,
                dt,
                &mut buffers,
            );
        }
        record(tb, &amplitudes, &mut next_sample, &mut max_norm_error)?;
    }

    Ok(TraceRecord {
        window,
        times,
        spectra,
        mean_x,
        variance_x,
        amplitudes_final: amplitudes,
        max_norm_error,
    })
}

/// Apply the discrete phase-modulation kernel
/// a_n ← Σ_m J_{n−m}(g)·e^(−i(n−m)·phase)·a_m.
///
/// For a single occupied sideband this produces a_n = J_n(g)·e^(−i n phase),
/// identical to evolving the synchronized lattice for g = 2|κ|t at phase
/// delay `phase`. Errors with a window overflow when the kernel tail
/// truncated at the window edge carries more than [`KERNEL_TAIL_LIMIT`] of
/// the norm.
pub fn apply_phase_modulation(state: &SidebandState, g: f64, phase: f64) -> Result<SidebandState> {
    if !(g >= 0.0) {
        return Err(Error::Domain(format!(
            "modulation coupling must be nonnegative, got {g}"
        )));
    }
    let len = state.amplitudes.len();
    let max_order = len.saturating_sub(1);
    let j = bessel_j_sequence(max_order, g);
    // J_p with sign for negative p, and the phase factor e^(-i p phase)
    let kernel: Vec<C64> = (-(max_order as i32)..=(max_order as i32))
        .map(|p| {
            let mag = j[p.unsigned_abs() as usize];
            let signed = if p < 0 && p & 1 != 0 { -mag } else { mag };
            C64::from_polar(1.0, -(p as f64) * phase) * signed
        })
        .collect();
    let kernel_at = |p: i32| kernel[(p + max_order as i32) as usize];

    let norm_in = state.norm_sqr();
    let mut out = vec![C64::new(0.0, 0.0); len];
    for (ni, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (mi, &a) in state.amplitudes.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            acc += kernel_at(ni as i32 - mi as i32) * a;
        }
        *o = acc;
    }
    let norm_out: f64 = out.iter().map(|a| a.norm_sqr()).sum();
    let deficit = norm_in - norm_out;
    if deficit > KERNEL_TAIL_LIMIT {
        return Err(Error::WindowOverflow {
            time: state.time,
            population: deficit,
            limit: KERNEL_TAIL_LIMIT,
        });
    }
    let edge = edge_population(&out);
    if edge > EDGE_GUARD_LIMIT {
        return Err(Error::WindowOverflow {
            time: state.time,
            population: edge,
            limit: EDGE_GUARD_LIMIT,
        });
    }
    SidebandState::new(state.window, out, state.time)
}
