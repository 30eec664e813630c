//! 512-bit fixed-point evaluation of the ascending series for `J_n` and `Y_n`.
//! The f64 argument is converted exactly, every polynomial part of the series
//! is summed in big-integer fixed point (rounding ~1e-70 relative to the
//! largest term), and only the transcendental constants
//! (ln, π, γ) enter in floating point at the very end on O(1) quantities.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const BITS: usize = 512;

fn fixed(x: f64) -> BigInt {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let mant = if exp == 0 {
        frac << 1
    } else {
        frac | (1u64 << 52)
    };
    let shift = BITS as i64 + exp - 1075;
    let m = BigInt::from(mant);
    let v = if shift >= 0 {
        m << (shift as usize)
    } else {
        m >> ((-shift) as usize)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> BITS
}

fn to_f64(a: &BigInt) -> f64 {
    a.to_f64().unwrap() * 2f64.powi(-(BITS as i32))
}

fn one() -> BigInt {
    BigInt::one() << BITS
}

fn terms_for(x: f64) -> usize {
    (x * 1.5) as usize + 60
}

/// `Σ_k w(k) (-1)^k (x/2)^(2k+n) / (k! (n+k)!)` in fixed point.
fn series(n: usize, x: f64, weight: impl Fn(usize) -> BigInt) -> BigInt {
    let half = fixed(x / 2.0);
    let q = mul(&half, &half);
    let mut lead = one();
    for i in 1..=n {
        lead = mul(&lead, &half) / BigInt::from(i);
    }
    let mut term = lead;
    let mut sum = mul(&term, &weight(0));
    for k in 1..terms_for(x) {
        term = -mul(&term, &q) / BigInt::from(k * (n + k));
        sum += mul(&term, &weight(k));
    }
    sum
}

fn harmonic(m: usize) -> BigInt {
    (1..=m).fold(BigInt::zero(), |acc, i| acc + one() / BigInt::from(i))
}

pub fn oracle_j(n: usize, x: f64) -> f64 {
    to_f64(&series(n, x, |_| one()))
}

/// Y_n(x) = (2/π) J_n (ln(x/2) + γ)
///        - (1/π) Σ_{k<n} (n-k-1)!/k! (x/2)^(2k-n)
///        - (1/π) Σ_k (-1)^k (H_k + H_{n+k}) (x/2)^(2k+n)/(k!(n+k)!)
/// The two sums are individually large for big x; they are added in fixed point.
pub fn oracle_y(n: usize, x: f64) -> f64 {
    let j = series(n, x, |_| one());
    let harmonic_part = series(n, x, |k| harmonic(k) + harmonic(n + k));
    let half = fixed(x / 2.0);
    let inv_half = (one() << BITS) / &half;
    let mut finite = BigInt::zero();
    for k in 0..n {
        let mut c = one();
        for i in 1..=(n - k - 1) {
            c *= BigInt::from(i);
        }
        for i in 1..=k {
            c /= BigInt::from(i);
        }
        let p = 2 * k as i64 - n as i64;
        let (base, reps) = if p >= 0 { (&half, p) } else { (&inv_half, -p) };
        let mut pow = one();
        for _ in 0..reps {
            pow = mul(&pow, base);
        }
        finite += mul(&c, &pow);
    }
    let pi = std::f64::consts::PI;
    (2.0 / pi) * to_f64(&j) * ((x / 2.0).ln() + EULER_GAMMA)
        - to_f64(&(finite + harmonic_part)) / pi
}
