//! Haar sampling on `St(n, k)` and `O(k)`, and seeded, sharded Monte Carlo
//! estimators of the Fourier transform and of trace moments.
//!
//! Every estimator splits its sample budget over [`SHARDS`] shards. Shard `i`
//! draws from the ChaCha8 stream `(seed, i)`, keeps a Welford accumulator,
//! and the shards are merged in index order, so a result depends only on
//! `(seed, N)` and not on the thread count.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimate::{total_mass, ErrorEstimate, FourierEstimate, Method};
use crate::geometry::StiefelPoint;
use crate::linalg::{frobenius_pairing, qr_positive, Matrix};

pub const SHARDS: u64 = 64;
const MAX_RETRIES: usize = 8;
pub const MIN_SAMPLES: u64 = 1000;

/// Environment variable capping the worker threads used by estimators.
pub const THREADS_ENV: &str = "STIEFEL_FOURIER_THREADS";

/// Worker pool sized by [`THREADS_ENV`] when set, else rayon's default.
pub fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to build worker pool")
    })
}

/// A seeded random stream with a Box–Muller Gaussian source.
#[derive(Clone, Debug)]
pub struct StreamRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, spare: None }
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let (s, c) = (2.0 * PI * self.uniform()).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// Haar-distributed point of `St(n, k)`: the `Q` factor of an `n × k`
/// Gaussian matrix under the positive-diagonal QR convention.
pub fn sample_stiefel(n: usize, k: usize, rng: &mut StreamRng) -> Result<StiefelPoint> {
    if k == 0 || k > n {
        return Err(Error::Domain(format!("St(n, k) needs 1 <= k <= n, got n = {n}, k = {k}")));
    }
    for _ in 0..MAX_RETRIES {
        let g = Matrix::from_fn(n, k, |_, _| rng.normal());
        if let Ok(f) = qr_positive(&g) {
            return Ok(StiefelPoint::new_unchecked(f.q));
        }
    }
    Err(Error::Sampling(format!(
        "Gaussian matrix was rank deficient {MAX_RETRIES} times in a row"
    )))
}

/// Haar-distributed element of `O(k)`.
pub fn sample_orthogonal(k: usize, rng: &mut StreamRng) -> Result<StiefelPoint> {
    sample_stiefel(k, k, rng)
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Pairwise merge (Chan et al.).
    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * (other.count as f64 / count as f64);
        let m2 = self.m2 + other.m2 + delta * delta * (self.count as f64 * other.count as f64 / count as f64);
        RunningStats { count, mean, m2 }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return f64::INFINITY;
        }
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Runs `draw` `samples` times over the fixed shard layout and returns one
/// accumulator per output slot.
pub fn sharded<const M: usize, F>(samples: u64, seed: u64, draw: F) -> Result<[RunningStats; M]>
where
    F: Fn(&mut StreamRng) -> Result<[f64; M]> + Sync,
{
    let per = samples / SHARDS;
    let extra = samples % SHARDS;
    let shards: Vec<Result<[RunningStats; M]>> = pool().install(|| {
        (0..SHARDS)
            .into_par_iter()
            .map(|shard| {
                let mut rng = StreamRng::new(seed, shard);
                let mut acc = [RunningStats::default(); M];
                let count = per + u64::from(shard < extra);
                for _ in 0..count {
                    let xs = draw(&mut rng)?;
                    for (a, x) in acc.iter_mut().zip(xs) {
                        a.push(x);
                    }
                }
                Ok(acc)
            })
            .collect()
    });
    let mut total = [RunningStats::default(); M];
    for shard in shards {
        let shard = shard?;
        for (t, s) in total.iter_mut().zip(shard.iter()) {
            *t = t.merge(s);
        }
    }
    Ok(total)
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    Ok(())
}

/// Real and imaginary parts of the surface-measure transform at `Ξ`,
/// estimated from `samples` Haar frames. The imaginary part vanishes in
/// expectation and is returned only so callers can check it.
pub fn mc_fourier_parts(n: usize, k: usize, xi: &Matrix, samples: u64, seed: u64) -> Result<(FourierEstimate, FourierEstimate)> {
    if xi.shape() != (n, k) {
        return Err(Error::Dimension {
            expected: (n, k),
            got: xi.shape(),
        });
    }
    check_samples(samples)?;
    let mass = total_mass(n, k);
    let [re, im] = sharded(samples, seed, |rng| {
        let x = sample_stiefel(n, k, rng)?;
        let phase = 2.0 * PI * frobenius_pairing(x.frame(), xi)?;
        Ok([phase.cos(), -phase.sin()])
    })?;
    let wrap = |s: RunningStats| {
        FourierEstimate::new(
            mass * s.mean,
            ErrorEstimate::Statistical(mass * s.std_error()),
            Method::MonteCarlo,
            samples,
            mass,
        )
    };
    Ok((wrap(re), wrap(im)))
}

/// Monte Carlo estimate of the surface-measure transform
/// `∫ cos(2π Tr(XᵀΞ)) dμ(X)`.
pub fn mc_fourier(n: usize, k: usize, xi: &Matrix, samples: u64, seed: u64) -> Result<FourierEstimate> {
    Ok(mc_fourier_parts(n, k, xi, samples, seed)?.0)
}

/// `E[(Tr X)^m]` under Haar probability on `O(k)`, with its standard error.
pub fn mc_trace_moment(k: usize, m: u32, samples: u64, seed: u64) -> Result<(f64, f64)> {
    check_samples(samples)?;
    let [s] = sharded(samples, seed, |rng| {
        let x = sample_orthogonal(k, rng)?;
        Ok([trace(x.frame()).powi(m as i32)])
    })?;
    Ok((s.mean, s.std_error()))
}

/// Real part of `E[e^{iλ Tr X}]` under Haar probability on `O(k)`, with its
/// standard error.
pub fn mc_char_function(k: usize, lambda: f64, samples: u64, seed: u64) -> Result<(f64, f64)> {
    check_samples(samples)?;
    let [s] = sharded(samples, seed, |rng| {
        let x = sample_orthogonal(k, rng)?;
        Ok([(lambda * trace(x.frame())).cos()])
    })?;
    Ok((s.mean, s.std_error()))
}

fn trace(x: &Matrix) -> f64 {
    (0..x.cols().min(x.rows())).map(|i| x[(i, i)]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigen;
    use crate::special::{bessel_j, sphere_hat, BesselOrder};

    fn two_sample_ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let (mut i, mut j, mut d) = (0, 0, 0.0f64);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        d
    }

    fn random_orthogonal(n: usize, seed: u64) -> Matrix {
        let mut rng = StreamRng::new(seed, 999);
        sample_orthogonal(n, &mut rng).unwrap().frame().clone()
    }

    #[test]
    fn samples_are_orthonormal() {
        let mut rng = StreamRng::new(1, 0);
        for (n, k) in [(1, 1), (3, 1), (4, 2), (5, 3), (6, 6)] {
            for _ in 0..50 {
                let x = sample_stiefel(n, k, &mut rng).unwrap();
                let defect = (&x.frame().t_dot(x.frame()) - &Matrix::identity(k)).frobenius_norm();
                assert!(defect <= 1e-10);
            }
        }
        assert!(sample_stiefel(2, 3, &mut rng).is_err());
    }

    #[test]
    fn s0_signs_are_balanced() {
        let mut rng = StreamRng::new(7, 0);
        let n = 10_000;
        let plus = (0..n)
            .filter(|_| sample_stiefel(1, 1, &mut rng).unwrap().frame()[(0, 0)] > 0.0)
            .count();
        // |z| < 3.29 is the two-sided 1e-3 level.
        let z = (plus as f64 - 5000.0) / 50.0;
        assert!(z.abs() < 3.29, "z = {z}");
        let mut rng = StreamRng::new(8, 0);
        for _ in 0..100 {
            let v = sample_orthogonal(1, &mut rng).unwrap().frame()[(0, 0)];
            assert!(v == 1.0 || v == -1.0);
        }
    }

    #[test]
    fn sphere_mean_is_near_zero() {
        let [a, b, c] = sharded(1_000_000, 3, |rng| {
            let x = sample_stiefel(3, 1, rng)?;
            Ok([x.frame()[(0, 0)], x.frame()[(1, 0)], x.frame()[(2, 0)]])
        })
        .unwrap();
        let norm = (a.mean.powi(2) + b.mean.powi(2) + c.mean.powi(2)).sqrt();
        assert!(norm <= 4e-3, "norm = {norm}");
    }

    #[test]
    fn two_sided_invariance_ks() {
        let xi0 = Matrix::new(4, 2, vec![0.7, -0.2, 0.1, 0.9, -0.5, 0.3, 0.4, 0.6]).unwrap();
        let o = random_orthogonal(4, 11);
        let p = random_orthogonal(2, 12);
        let draws = 20_000;
        let mut rng = StreamRng::new(21, 0);
        let plain: Vec<f64> = (0..draws)
            .map(|_| frobenius_pairing(sample_stiefel(4, 2, &mut rng).unwrap().frame(), &xi0).unwrap())
            .collect();
        let mut rng = StreamRng::new(22, 0);
        let moved: Vec<f64> = (0..draws)
            .map(|_| {
                let x = sample_stiefel(4, 2, &mut rng).unwrap();
                frobenius_pairing(&o.dot(x.frame()).dot(&p), &xi0).unwrap()
            })
            .collect();
        let d = two_sample_ks(plain, moved);
        // Critical value at level 1e-3 for equal sizes m: 1.949·√(2/m).
        let crit = 1.949 * (2.0 / draws as f64).sqrt();
        assert!(d < crit, "D = {d}, critical {crit}");
    }

    #[test]
    fn orthogonal_group_moments() {
        let [det, tr2] = sharded(1_000_000, 5, |rng| {
            let x = sample_orthogonal(2, rng)?;
            let m = x.frame();
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            Ok([det, (m[(0, 0)] + m[(1, 1)]).powi(2)])
        })
        .unwrap();
        assert!(det.mean.abs() < 3.0 * det.std_error());
        assert!((tr2.mean - 1.0).abs() < 3.0 * tr2.std_error());
    }

    #[test]
    fn zero_frequency_returns_total_mass() {
        let est = mc_fourier(3, 2, &Matrix::zeros(3, 2), 1000, 1).unwrap();
        assert!((est.value - 8.0 * PI * PI).abs() < 1e-12);
        assert_eq!(est.error, ErrorEstimate::Statistical(0.0));
        assert_eq!(est.method, Method::MonteCarlo);
    }

    #[test]
    fn sphere_value_at_unit_radius() {
        let xi = Matrix::new(3, 1, vec![0.6, 0.0, 0.8]).unwrap();
        let est = mc_fourier(3, 1, &xi, 200_000, 2).unwrap();
        let se = est.error.std_error().unwrap();
        assert!(est.value.abs() < 3.0 * se, "{} ± {se}", est.value);
        let exact = sphere_hat(3, 1.0).unwrap();
        assert!(exact.abs() < 1e-12);
    }

    #[test]
    fn n4_k2_half_half() {
        let xi = Matrix::rect_diag(4, &[0.5, 0.5]);
        let est = mc_fourier(4, 2, &xi, 400_000, 3).unwrap();
        let exact = 8.0 * PI * (1.0 - bessel_j(BesselOrder::integer(0), 2.0 * PI).unwrap());
        let se = est.error.std_error().unwrap();
        assert!((est.value - exact).abs() < 3.0 * se, "{} vs {exact} ± {se}", est.value);
    }

    #[test]
    fn imaginary_part_vanishes() {
        for (n, k, vals) in [(3, 1, vec![0.7]), (4, 2, vec![1.3, 0.4]), (5, 3, vec![0.9, 0.5, 0.2])] {
            let xi = Matrix::rect_diag(n, &vals);
            let (_, im) = mc_fourier_parts(n, k, &xi, 100_000, 4).unwrap();
            assert!(im.value.abs() < 3.0 * im.error.magnitude(), "n = {n}");
        }
    }

    #[test]
    fn invariance_under_two_sided_rotation() {
        let xi = Matrix::new(4, 2, vec![0.3, 0.5, -0.4, 0.2, 0.1, -0.6, 0.25, 0.05]).unwrap();
        let o = random_orthogonal(4, 31);
        let p = random_orthogonal(2, 32);
        let a = mc_fourier(4, 2, &xi, 200_000, 9).unwrap();
        let b = mc_fourier(4, 2, &o.dot(&xi).dot(&p), 200_000, 10).unwrap();
        let combined = a.error.magnitude().hypot(b.error.magnitude());
        assert!((a.value - b.value).abs() < 3.0 * combined);
    }

    #[test]
    fn zero_column_reduction() {
        let xi = Matrix::rect_diag(4, &[0.8, 0.0]);
        let full = mc_fourier(4, 2, &xi, 200_000, 13).unwrap();
        let reduced = mc_fourier(4, 1, &Matrix::rect_diag(4, &[0.8]), 200_000, 14).unwrap();
        let factor = crate::special::sphere_vol(2);
        let combined = full.error.magnitude().hypot(factor * reduced.error.magnitude());
        assert!((full.value - factor * reduced.value).abs() < 3.0 * combined);
    }

    #[test]
    fn reproducible_for_fixed_seed() {
        let xi = Matrix::rect_diag(5, &[1.0, 0.5, 0.25]);
        let a = mc_fourier(5, 3, &xi, 5000, 77).unwrap();
        let b = mc_fourier(5, 3, &xi, 5000, 77).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let c = mc_fourier(5, 3, &xi, 5000, 78).unwrap();
        assert_ne!(a.value, c.value);
    }

    #[test]
    fn shape_and_budget_errors() {
        assert!(matches!(
            mc_fourier(4, 2, &Matrix::zeros(3, 2), 1000, 0),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            mc_fourier(4, 2, &Matrix::zeros(4, 2), 999, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn trace_moments_k2() {
        assert_eq!(mc_trace_moment(2, 0, 1000, 1).unwrap(), (1.0, 0.0));
        let (m1, s1) = mc_trace_moment(2, 1, 1_000_000, 2).unwrap();
        assert!(m1.abs() < 3.0 * s1);
        let (m2, s2) = mc_trace_moment(2, 2, 1_000_000, 2).unwrap();
        assert!((m2 - 1.0).abs() < 3.0 * s2);
    }

    #[test]
    fn characteristic_function() {
        assert_eq!(mc_char_function(2, 0.0, 1000, 1).unwrap(), (1.0, 0.0));
        let (c, _) = mc_char_function(1, 0.7, 1000, 1).unwrap();
        assert!((c - 0.7f64.cos()).abs() < 1e-15);

        let lambda = 0.5;
        let samples = 400_000;
        let (direct, se_direct) = mc_char_function(2, lambda, samples, 40).unwrap();
        let mut series = 0.0;
        let mut var = 0.0;
        let mut fact = 1.0;
        for m in 0..=8u32 {
            if m > 0 {
                fact *= f64::from(m);
            }
            if m % 2 == 1 {
                continue;
            }
            let sign = if (m / 2) % 2 == 0 { 1.0 } else { -1.0 };
            let (mom, se) = mc_trace_moment(2, m, samples, 41 + u64::from(m)).unwrap();
            let c = sign * lambda.powi(m as i32) / fact;
            series += c * mom;
            var += (c * se).powi(2);
        }
        let combined = (var + se_direct * se_direct).sqrt();
        assert!((series - direct).abs() < 3.0 * combined, "{series} vs {direct} ± {combined}");
    }

    #[test]
    fn running_stats_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = RunningStats::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (RunningStats::default(), RunningStats::default());
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let m = a.merge(&b);
        assert_eq!(m.count, whole.count);
        assert!((m.mean - whole.mean).abs() < 1e-12);
        assert!((m.variance() - whole.variance()).abs() < 1e-10);
    }

    #[test]
    fn sampled_frames_have_unit_singular_values() {
        let mut rng = StreamRng::new(3, 3);
        let x = sample_stiefel(5, 3, &mut rng).unwrap();
        let e = sym_eigen(&x.frame().t_dot(x.frame())).unwrap();
        for v in e.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }
}
