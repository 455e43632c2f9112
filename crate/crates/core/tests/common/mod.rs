// SPDX-License-Identifier: Apache-2.0

//! Test-only reference machinery that shares no code with the crate.

#![allow(dead_code)]

/// xorshift64* generator, unrelated to the crate's ChaCha streams.
pub struct XorShift(u64);

impl XorShift {
    pub fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform on (0, 1).
    pub fn unit(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn exp(&mut self, rate: f64) -> f64 {
        -self.unit().ln() / rate
    }
}

/// Composite Simpson rule on [a, b] with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Erlang density, `λ^k t^(k−1) e^(−λt) / (k−1)!`, via logs.
pub fn erlang_pdf(k: u32, rate: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return if k == 1 { rate } else { 0.0 };
    }
    let ln_fact: f64 = (1..k).map(|i| f64::from(i).ln()).sum();
    (f64::from(k) * rate.ln() + f64::from(k - 1) * t.ln() - rate * t - ln_fact).exp()
}

/// DKW half-width at 99%.
pub fn dkw99(n: usize) -> f64 {
    ((2.0f64 / 0.01).ln() / (2.0 * n as f64)).sqrt()
}

/// Sup distance between the ECDF of `xs` and a continuous CDF.
pub fn ks(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).abs().max((f - i as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}
