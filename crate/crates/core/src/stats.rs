//! Single-pass moment statistics generic over [`Scalar`].
//!
//! Central moments are accumulated with the pairwise-stable online update,
//! so a window is walked once regardless of how many statistics are read.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Running count, mean, central moments 2..=4, and extrema.
///
/// Values are accumulated as offsets from the first one, which keeps the
/// running mean small and preserves precision on a large baseline.
#[derive(Debug, Clone, Copy)]
pub struct Moments<T> {
    n: usize,
    shift: T,
    mean: T,
    m2: T,
    m3: T,
    m4: T,
    min: T,
    max: T,
}

impl<T: Scalar> Default for Moments<T> {
    fn default() -> Self {
        Self {
            n: 0,
            shift: T::zero(),
            mean: T::zero(),
            m2: T::zero(),
            m3: T::zero(),
            m4: T::zero(),
            min: T::infinity(),
            max: T::neg_infinity(),
        }
    }
}

impl<T: Scalar> Moments<T> {
    pub fn push(&mut self, x: T) {
        if self.n == 0 {
            self.shift = x;
        }
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        let x = x - self.shift;
        let n1 = T::from_count(self.n);
        self.n += 1;
        let n = T::from_count(self.n);
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        let three = T::from_f64_lossy(3.0);
        let four = T::from_f64_lossy(4.0);
        let six = T::from_f64_lossy(6.0);
        self.mean = self.mean + delta_n;
        self.m4 = self.m4 + term1 * delta_n2 * (n * n - three * n + three) + six * delta_n2 * self.m2
            - four * delta_n * self.m3;
        self.m3 = self.m3 + term1 * delta_n * (n - T::from_f64_lossy(2.0)) - three * delta_n * self.m2;
        self.m2 = self.m2 + term1;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> T {
        self.shift + self.mean
    }

    pub fn min(&self) -> T {
        self.min
    }

    pub fn max(&self) -> T {
        self.max
    }

    pub fn range(&self) -> T {
        self.max - self.min
    }

    /// Population variance (divisor n).
    pub fn variance(&self) -> T {
        if self.n == 0 {
            return T::zero();
        }
        (self.m2 / T::from_count(self.n)).max(T::zero())
    }

    pub fn std_dev(&self) -> T {
        self.variance().sqrt()
    }

    /// Biased skewness g1; zero for a constant signal.
    pub fn skewness(&self) -> T {
        if self.m2 <= T::zero() {
            return T::zero();
        }
        let n = T::from_count(self.n);
        n.sqrt() * self.m3 / self.m2.powf(T::from_f64_lossy(1.5))
    }

    /// Biased excess kurtosis g2; zero for a constant signal.
    pub fn kurtosis(&self) -> T {
        if self.m2 <= T::zero() {
            return T::zero();
        }
        let n = T::from_count(self.n);
        n * self.m4 / (self.m2 * self.m2) - T::from_f64_lossy(3.0)
    }
}

impl<T: Scalar> FromIterator<T> for Moments<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut m = Self::default();
        iter.into_iter().for_each(|x| m.push(x));
        m
    }
}

fn at_least_two(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::TooFewSamples { needed: 2, got: n })
    } else {
        Ok(())
    }
}

pub fn skewness<T: Scalar>(values: &[T]) -> Result<T> {
    at_least_two(values.len())?;
    Ok(values.iter().copied().collect::<Moments<T>>().skewness())
}

pub fn kurtosis<T: Scalar>(values: &[T]) -> Result<T> {
    at_least_two(values.len())?;
    Ok(values.iter().copied().collect::<Moments<T>>().kurtosis())
}

/// Least-squares slope of `values` against time in seconds.
///
/// Uses an online co-moment update; timestamps must strictly increase.
pub fn slope<T: Scalar>(values: &[T], timestamps_ms: &[i64]) -> Result<T> {
    if values.len() != timestamps_ms.len() {
        return Err(Error::InvalidParams(format!(
            "{} values but {} timestamps",
            values.len(),
            timestamps_ms.len()
        )));
    }
    at_least_two(values.len())?;
    if timestamps_ms.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("timestamps must strictly increase".into()));
    }
    // Offsets from the first sample keep the running means small, so a
    // near-flat trend on a large baseline (pressure near 1000 hPa) keeps its
    // relative precision.
    let origin = timestamps_ms[0];
    let base = values[0];
    let thousand = T::from_f64_lossy(1000.0);
    let (mut n, mut mean_t, mut mean_v, mut c_tv, mut m_tt) = (0usize, T::zero(), T::zero(), T::zero(), T::zero());
    for (&v, &ts) in values.iter().zip(timestamps_ms) {
        let v = v - base;
        let t = T::from_i64(ts - origin).unwrap_or_else(T::nan) / thousand;
        n += 1;
        let nn = T::from_count(n);
        let dt = t - mean_t;
        mean_t = mean_t + dt / nn;
        mean_v = mean_v + (v - mean_v) / nn;
        c_tv = c_tv + dt * (v - mean_v);
        m_tt = m_tt + dt * (t - mean_t);
    }
    Ok(c_tv / m_tt)
}
