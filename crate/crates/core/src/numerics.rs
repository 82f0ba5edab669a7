//! Amplitude vectors, norms and floor-quantized fixed-point values.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar type the simulation layers are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `2^e` in the scalar type.
pub fn pow2<T: Real>(e: i32) -> T {
    T::lit(2.0).powi(e)
}

/// Complex amplitudes indexed by domain position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AmplitudeVector<T> {
    entries: Vec<Complex<T>>,
}

impl<T: Real> AmplitudeVector<T> {
    pub fn new(entries: Vec<Complex<T>>) -> Self {
        Self { entries }
    }

    pub fn from_real<I: IntoIterator<Item = T>>(values: I) -> Self {
        Self::new(values.into_iter().map(|v| Complex::new(v, T::zero())).collect())
    }

    /// Builds entries `r·e^{iφ}` from magnitude/phase pairs.
    pub fn from_polar<I: IntoIterator<Item = (T, T)>>(values: I) -> Self {
        Self::new(
            values
                .into_iter()
                .map(|(r, phi)| Complex::from_polar(r, phi))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Complex<T>> {
        self.entries
    }

    pub fn norm_sqr(&self) -> T {
        self.entries.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&self) -> Result<Self> {
        normalize(self)
    }

    pub fn distance(&self, other: &Self) -> Result<T> {
        distance(self, other)
    }
}

/// Rescales `v` to unit Euclidean norm.
pub fn normalize<T: Real>(v: &AmplitudeVector<T>) -> Result<AmplitudeVector<T>> {
    // Scale by the max modulus first so tiny or huge inputs do not under/overflow.
    let scale = v
        .entries
        .iter()
        .map(|c| c.norm())
        .fold(T::zero(), |a, b| a.max(b));
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(Error::DegenerateInput(
            "cannot normalize a zero or non-finite vector".into(),
        ));
    }
    let scaled: Vec<Complex<T>> = v.entries.iter().map(|c| c / scale).collect();
    let n = scaled.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
    Ok(AmplitudeVector::new(scaled.into_iter().map(|c| c / n).collect()))
}

/// Euclidean norm of `a − b`.
pub fn distance<T: Real>(a: &AmplitudeVector<T>, b: &AmplitudeVector<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "dimension {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(a
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<T>()
        .sqrt())
}

/// A value on the dyadic grid `{k·2^{-bits}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FixedPoint<T> {
    pub bits: u32,
    pub value: T,
}

/// Floor quantization of a nonnegative value to `bits` fractional bits.
pub fn quantize<T: Real>(v: T, bits: u32) -> Result<FixedPoint<T>> {
    if bits == 0 {
        return Err(Error::Domain("quantize needs at least one bit".into()));
    }
    if v < T::zero() || !v.is_finite() {
        return Err(Error::Domain(format!("cannot quantize {v}")));
    }
    let scale = pow2::<T>(bits as i32);
    Ok(FixedPoint {
        bits,
        value: (v * scale).floor() / scale,
    })
}

/// Smallest power of two `≥ x` (at least 1).
pub fn next_pow2_at_least(x: f64) -> Result<u64> {
    if !x.is_finite() || x > (1u64 << 62) as f64 {
        return Err(Error::Numerical(format!("{x} exceeds the 2^62 range")));
    }
    let mut m = 1u64;
    while (m as f64) < x {
        m <<= 1;
    }
    Ok(m)
}

/// `⌈log₂ x⌉` for `x > 0`, computed so exact powers of two are not rounded up.
pub fn ceil_log2(x: f64) -> i64 {
    assert!(x > 0.0, "ceil_log2 of non-positive value");
    let mut e = x.log2().ceil() as i64;
    // Guard against log2 rounding on either side of an integer.
    while 2f64.powi((e - 1) as i32) >= x {
        e -= 1;
    }
    while 2f64.powi(e as i32) < x {
        e += 1;
    }
    e
}
