use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// `base^exponent mod modulus` by square-and-multiply.
pub fn modpow(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    if *modulus < BigUint::from(2u32) {
        return Err(Error::Domain(format!("modulus must be >= 2, got {modulus}")));
    }
    Ok(base.modpow(exponent, modulus))
}

/// `k! mod modulus`.
///
/// When `prev` is supplied it must be `(k-1)! mod modulus`; the result then
/// costs a single modular multiplication.
pub fn factorial_mod(k: u64, modulus: &BigUint, prev: Option<&BigUint>) -> Result<BigUint> {
    if k == 0 {
        return Err(Error::Domain("factorial_mod requires k >= 1".into()));
    }
    if *modulus < BigUint::from(2u32) {
        return Err(Error::Domain(format!("modulus must be >= 2, got {modulus}")));
    }
    match prev {
        Some(p) => Ok((p * BigUint::from(k)) % modulus),
        None => {
            let mut acc = BigUint::one() % modulus;
            for i in 2..=k {
                acc = (acc * BigUint::from(i)) % modulus;
                if acc.is_zero() {
                    break;
                }
            }
            Ok(acc)
        }
    }
}
