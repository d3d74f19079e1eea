//! Exact and adaptive-precision arithmetic: rational seeds with prime
//! denominators, modular kernels for the integer-coefficient generators and
//! error-tracked fixed-point reals for the non-linear (power) generator.

mod fixed;
mod modular;
mod prime;
mod seed;

pub use fixed::{fixed_point_pow, FixedPointReal, PrecisionCap, DEFAULT_PRECISION_CAP_BITS};
pub use modular::{factorial_mod, modpow};
pub use prime::is_probable_prime;
pub use seed::{Interval, RationalSeed, SeedSampler, DEFAULT_SEED_BITS};
