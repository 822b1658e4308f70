//! Bessel functions of the first kind, integer order.
//!
//! Downward recurrence with normalization (Miller's algorithm): seed a tiny
//! value far above max(n, x), run J_{m−1} = (2m/x)·J_m − J_{m+1} down to zero,
//! and scale the whole sequence with J₀(x) + 2·Σ_{k≥1} J_{2k}(x) = 1. The
//! recurrence is executed with on-the-fly rescaling so the intermediate
//! growth over hundreds of orders cannot overflow. Accuracy is a few parts
//! in 1e14 for orders up to ~300 and arguments up to ~100, which covers
//! every kernel and ladder evaluation in this crate.

/// First positive zero of J₀.
pub const J0_FIRST_ZERO: f64 = 2.4048255576957728;

const SEED: f64 = 1e-30;
const RESCALE_LIMIT: f64 = 1e250;
const RESCALE_FACTOR: f64 = 1e-250;

/// Starting order for the downward recurrence: comfortably above both the
/// requested order and the turning point at m ≈ x, rounded up to even.
fn starting_order(n_max: usize, x: f64) -> usize {
    let t = (n_max as f64).max(x);
    let start = t + 1.5 * t.sqrt() + 60.0;
    let start = start.ceil() as usize;
    start + (start & 1)
}

/// J₀(x), J₁(x), …, J_{n_max}(x) for x ≥ 0.
pub fn bessel_j_sequence(n_max: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0, "bessel_j_sequence: negative argument {x}");
    assert!(x.is_finite(), "bessel_j_sequence: non-finite argument");
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = starting_order(n_max, x);
    let mut sum = 0.0;
    let mut jnext = 0.0; // J_{m+1}
    let mut jcur = SEED; // J_m, starting at m = start (start is even)
    sum += 2.0 * jcur;
    let mut m = start;
    while m > 0 {
        let jprev = (2.0 * m as f64 / x) * jcur - jnext; // J_{m-1}
        jnext = jcur;
        jcur = jprev;
        m -= 1;
        if m <= n_max {
            out[m] = jcur;
        }
        if m % 2 == 0 {
            sum += if m == 0 { jcur } else { 2.0 * jcur };
        }
        if jcur.abs() > RESCALE_LIMIT {
            jcur *= RESCALE_FACTOR;
            jnext *= RESCALE_FACTOR;
            sum *= RESCALE_FACTOR;
            for v in out.iter_mut() {
                *v *= RESCALE_FACTOR;
            }
        }
    }
    let scale = 1.0 / sum;
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// J_n(x) for any integer order and real argument, via the symmetries
/// J_{−n}(x) = (−1)ⁿ J_n(x) and J_n(−x) = (−1)ⁿ J_n(x).
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let na = n.unsigned_abs() as usize;
    let v = bessel_j_sequence(na, x.abs())[na];
    let mut sign = 1.0;
    if n < 0 && n & 1 != 0 {
        sign = -sign;
    }
    if x < 0.0 && n & 1 != 0 {
        sign = -sign;
    }
    sign * v
}
