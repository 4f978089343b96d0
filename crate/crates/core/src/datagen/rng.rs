//! Counter-based pseudo-random generator for reproducible scenario data.
//!
//! The stream is a pure function of `(seed, counter)` so any implementation
//! in any language reproduces it exactly:
//!
//! ```text
//! value(seed, k) = mix64(seed + (k + 1) * 0x9E3779B97F4A7C15)   (wrapping)
//! mix64(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!           z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
//! ```
//!
//! (`mix64` is the SplitMix64 output finalizer.) Uniform doubles take the top
//! 53 bits: `(value >> 11) * 2^-53 in [0, 1)`. Normal draws use the
//! Box-Muller cosine branch on two consecutive uniforms, so one normal
//! consumes exactly two counter values. `split(tag)` derives an independent
//! stream with `seed' = mix64(seed ^ mix64(tag + GOLDEN))`.

const GOLDEN: u64 = 0x9E3779B97F4A7C15;

#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58476D1CE4E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D049BB133111EB);
    z ^= z >> 31;
    z
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    /// An independent stream addressed by `tag`; the parent is unaffected.
    pub fn split(&self, tag: u64) -> Self {
        Self {
            seed: mix64(self.seed ^ mix64(tag.wrapping_add(GOLDEN))),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        mix64(self.seed.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1].
    pub fn next_f64_open(&mut self) -> f64 {
        1.0 - self.next_f64()
    }

    /// Standard normal (Box-Muller cosine branch; two counter values).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Exponential with unit rate.
    pub fn next_exp(&mut self) -> f64 {
        -self.next_f64_open().ln()
    }

    /// Uniform integer in `0..bound`.
    pub fn next_index(&mut self, bound: usize) -> usize {
        (self.next_f64() * bound as f64) as usize % bound.max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_deterministic_and_stateless_in_the_counter() {
        let mut a = CounterRng::new(7);
        let mut b = CounterRng::new(7);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs[0], xs[1]);
    }

    #[test]
    fn documented_algorithm_reference_values() {
        // frozen values of the documented construction for seed 0
        let mut r = CounterRng::new(0);
        let v1 = r.next_u64();
        assert_eq!(v1, mix64(GOLDEN));
        let v2 = r.next_u64();
        assert_eq!(v2, mix64(GOLDEN.wrapping_mul(2)));
    }

    #[test]
    fn splits_are_independent_of_parent_state() {
        let mut parent = CounterRng::new(42);
        let _ = parent.next_u64();
        let mut s1 = parent.split(1);
        let mut s2 = CounterRng::new(42).split(1);
        assert_eq!(s1.next_u64(), s2.next_u64());
        assert_ne!(
            CounterRng::new(42).split(1).next_u64(),
            CounterRng::new(42).split(2).next_u64()
        );
    }

    #[test]
    fn uniforms_and_normals_look_sane() {
        let mut r = CounterRng::new(123);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| r.next_f64()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
        let mut r = CounterRng::new(321);
        let zs: Vec<f64> = (0..n).map(|_| r.next_normal()).collect();
        let m = zs.iter().sum::<f64>() / n as f64;
        let v = zs.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / n as f64;
        assert!(m.abs() < 0.02, "{m}");
        assert!((v - 1.0).abs() < 0.05, "{v}");
    }
}
