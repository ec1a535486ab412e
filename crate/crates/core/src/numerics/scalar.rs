use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftNum;

/// Floating-point scalar the whole simulator is generic over.
///
/// `f32` and `f64` implement it; the crate root exports `f64`-instantiated
/// aliases for the common types.
pub trait Scalar: Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default {
    /// One draw from the standard normal distribution.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One uniform draw from `[0, 1)`.
    fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Shorthand for converting an `f64` literal into `Self`.
    fn real(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy view of `self` as `f64` (exact for f32/f64).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample(StandardNormal)
            }
            fn uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random()
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// Circularly-symmetric complex Gaussian draw with the given total variance.
pub fn complex_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R, variance: T) -> Complex<T> {
    let s = (variance / T::real(2.0)).sqrt();
    Complex::new(T::std_normal(rng) * s, T::std_normal(rng) * s)
}

/// SplitMix64 step, used to derive independent per-task seeds from a master
/// seed so parallel work stays deterministic.
pub fn mix_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
