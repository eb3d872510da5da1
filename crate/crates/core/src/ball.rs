//! Centred balls of `Q_2`, Haar measure and coset transversals.
//!
//! `A_n = {x : |x|_2 <= 2^n}` and `V_n = A_{-n}`. Every such ball is a clopen
//! subgroup, so `A_n = ξ_n^k ⊕ A_k` for `k <= n` with the canonical
//! transversal `ξ_n^k = {m / 2^n : 0 <= m < 2^{n-k}}`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::One;

use crate::dyadic::{pow2_rational, Dyadic, Valuation};
use crate::{Error, Result};

/// The ball `{x : |x|_2 <= 2^radius_exp}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ball {
    pub radius_exp: i64,
}

impl Ball {
    /// `A_n`.
    pub fn a(n: i64) -> Self {
        Ball { radius_exp: n }
    }

    /// `V_n = A_{-n}`.
    pub fn v(n: i64) -> Self {
        Ball { radius_exp: -n }
    }

    pub fn contains(&self, x: &Dyadic) -> bool {
        in_ball(x, self.radius_exp)
    }

    pub fn haar(&self) -> BigRational {
        haar(self.radius_exp)
    }

    pub fn contains_ball(&self, other: &Ball) -> bool {
        other.radius_exp <= self.radius_exp
    }
}

/// `|x|_2 <= 2^n`.
pub fn in_ball(x: &Dyadic, n: i64) -> bool {
    match x.val2() {
        Valuation::Infinite => true,
        Valuation::Finite(v) => v >= -n,
    }
}

/// Haar measure of `A_n` with `θ(A_0) = 1`.
pub fn haar(n: i64) -> BigRational {
    pow2_rational(n)
}

/// The transversal `ξ_n^k`, ascending.
pub fn transversal(n: i64, k: i64) -> Result<Vec<Dyadic>> {
    if k < 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "transversal requires 0 <= k <= n, got n = {n}, k = {k}"
        )));
    }
    let n = u32::try_from(n).map_err(|_| Error::InvalidParameter("n too large".into()))?;
    let count = 1u64
        .checked_shl((i64::from(n) - k) as u32)
        .filter(|&c| c <= 1 << 32)
        .ok_or_else(|| Error::InvalidParameter("transversal too large".into()))?;
    Ok((0..count).map(|m| Dyadic::new(m, n)).collect())
}

/// Canonical representative of `x + A_k`, drawn from `ξ^k = Z[1/2] ∩ [0, 2^{-k})`.
pub fn coset_rep(x: &Dyadic, k: i64) -> Dyadic {
    let j = i64::from(x.exp());
    if j <= k {
        return Dyadic::zero();
    }
    let modulus = BigInt::one() << (j - k) as u64;
    Dyadic::new(x.num().mod_floor(&modulus), x.exp())
}
