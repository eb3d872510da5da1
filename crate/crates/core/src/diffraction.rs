//! Finite-volume autocorrelation, finite-quotient diffraction spectra and
//! geometric almost-period defects.
//!
//! The spectrum of `S ⊆ A_a` at resolution `M` lives on `A_a / V_M`, a cyclic
//! group of order `2^{a+M}`: the point `x = m / 2^a` maps to
//! `m mod 2^{a+M}` and `I(k) = |Σ_x e^{2πi k m_x / 2^{a+M}}|^2 / θ(A_a)`.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::ball::{coset_rep, haar, in_ball};
use crate::dyadic::Dyadic;
use crate::pointset::{delta_v, FinitePointSet};
use crate::{Error, Result};

pub const MAX_SPECTRUM_EXP: u32 = 22;

/// How pairs contribute to `η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairCounting {
    /// `η(g) = #{(x, y) : x - y = g} / θ(A_n)`.
    WithMultiplicity,
    /// One unit per element of the difference set.
    DifferenceSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Autocorrelation {
    pub n: i64,
    pub counting: PairCounting,
    pub coefficients: BTreeMap<Dyadic, BigRational>,
}

impl Autocorrelation {
    pub fn eta(&self, g: &Dyadic) -> BigRational {
        self.coefficients
            .get(g)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total_mass(&self) -> BigRational {
        self.coefficients.values().sum()
    }
}

#[derive(Serialize, Deserialize)]
struct EtaEntry {
    g: Dyadic,
    eta: (String, String),
}

impl Serialize for Autocorrelation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.coefficients.iter().map(|(g, eta)| EtaEntry {
            g: g.clone(),
            eta: (eta.numer().to_string(), eta.denom().to_string()),
        }))
    }
}

/// Parses the JSON array form back into coefficients.
pub fn autocorr_from_json(text: &str, n: i64, counting: PairCounting) -> Result<Autocorrelation> {
    let entries: Vec<EtaEntry> =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let mut coefficients = BTreeMap::new();
    for e in entries {
        let num: BigInt = e
            .eta
            .0
            .parse()
            .map_err(|_| Error::Format("bad eta numerator".into()))?;
        let den: BigInt = e
            .eta
            .1
            .parse()
            .map_err(|_| Error::Format("bad eta denominator".into()))?;
        if den.is_zero() {
            return Err(Error::Format("zero eta denominator".into()));
        }
        coefficients.insert(e.g, BigRational::new(num, den));
    }
    Ok(Autocorrelation {
        n,
        counting,
        coefficients,
    })
}

pub fn autocorr(set: &FinitePointSet, n: i64, counting: PairCounting) -> Result<Autocorrelation> {
    if let Some(x) = set.iter().find(|x| !in_ball(x, n)) {
        return Err(Error::InvalidParameter(format!("{x} lies outside A_{n}")));
    }
    let mut pairs: BTreeMap<Dyadic, u64> = BTreeMap::new();
    for x in set {
        for y in set {
            *pairs.entry(x - y).or_insert(0) += 1;
        }
    }
    let theta = haar(n);
    let coefficients = pairs
        .into_iter()
        .map(|(g, c)| {
            let weight = match counting {
                PairCounting::WithMultiplicity => c,
                PairCounting::DifferenceSet => 1,
            };
            (g, BigRational::from_integer(weight.into()) / &theta)
        })
        .collect();
    Ok(Autocorrelation {
        n,
        counting,
        coefficients,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub a: u32,
    pub m: u32,
    pub intensities: Vec<f64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.intensities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intensities.is_empty()
    }

    pub fn total(&self) -> f64 {
        neumaier_sum(self.intensities.iter().copied())
    }
}

/// Compensated summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Residues `m_x mod 2^{a+M}`, or `None` if two points collide.
fn residues(set: &FinitePointSet, a: u32, m: u32) -> Result<Option<Vec<usize>>> {
    let modulus = BigInt::one() << (a + m) as u64;
    let mut seen = HashSet::with_capacity(set.len());
    let mut out = Vec::with_capacity(set.len());
    for x in set {
        let num = x
            .scaled_numerator(a)
            .ok_or_else(|| Error::InvalidParameter(format!("{x} lies outside A_{a}")))?;
        let r = num
            .mod_floor(&modulus)
            .to_usize()
            .expect("residue below 2^22");
        if !seen.insert(r) {
            return Ok(None);
        }
        out.push(r);
    }
    Ok(Some(out))
}

pub fn spectrum(set: &FinitePointSet, a: u32, m: u32) -> Result<Spectrum> {
    if a + m > MAX_SPECTRUM_EXP {
        return Err(Error::InvalidParameter(format!(
            "spectrum size 2^{} exceeds 2^{MAX_SPECTRUM_EXP}",
            a + m
        )));
    }
    let size = 1usize << (a + m);
    let res = residues(set, a, m)?.ok_or(Error::NotSeparated(m))?;
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for r in res {
        buf[r].re = 1.0;
    }
    FftPlanner::new().plan_fft_forward(size).process(&mut buf);
    let theta = (a as f64).exp2();
    // the forward transform uses e^{-2πi...}; for a real indicator |X(k)| is
    // the same with either sign
    let intensities = buf.iter().map(|z| z.norm_sqr() / theta).collect();
    Ok(Spectrum { a, m, intensities })
}

/// Share of the total intensity carried by the `j` largest bins.
pub fn pp_mass(spec: &Spectrum, j: usize) -> Result<f64> {
    if j < 1 || j > spec.len() {
        return Err(Error::InvalidParameter(format!(
            "J must lie in 1..={}, got {j}",
            spec.len()
        )));
    }
    let mut sorted = spec.intensities.clone();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let top = neumaier_sum(sorted[..j].iter().copied());
    let total = neumaier_sum(sorted.iter().copied());
    Ok(if total > 0.0 { top / total } else { 0.0 })
}

/// Control set: every point `x` is replaced by `coset_rep(x, 0) + t` with `t`
/// uniform in `[0, 2^M)`, a uniformly random lift inside the same unit ball
/// at resolution `M`.
pub fn control_set(set: &FinitePointSet, m: u32, rng: &mut impl Rng) -> FinitePointSet {
    FinitePointSet::new(set.iter().map(|x| {
        let t = rng.gen_range(0..(1i64 << m));
        &coset_rep(x, 0) + &Dyadic::from_int(t)
    }))
}

/// `|(ω Δ_{V_k} (ω - g)) ∩ A_a| / θ(A_a)` for `ω` well placed in `A_a`.
pub fn almost_period_defect(
    omega: &FinitePointSet,
    a: u32,
    g: &Dyadic,
    k: i64,
) -> Result<BigRational> {
    let a = i64::from(a);
    if !in_ball(g, a) {
        return Err(Error::InvalidParameter(format!(
            "translation {g} lies outside A_{a}; the finite stage cannot evaluate it"
        )));
    }
    let shifted = omega.translate(g);
    let count = delta_v(omega, &shifted, k).restrict(a).len();
    Ok(BigRational::from_integer(BigInt::from(count)) / haar(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::transversal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn d(n: i64, e: u32) -> Dyadic {
        Dyadic::new(n, e)
    }

    fn q(n: i64, den: i64) -> BigRational {
        BigRational::new(n.into(), den.into())
    }

    /// Direct DFT in the stated sign convention.
    fn naive_spectrum(res: &[usize], size: usize, theta: f64) -> Vec<f64> {
        (0..size)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for &r in res {
                    let phase = 2.0 * std::f64::consts::PI * ((k * r) % size) as f64 / size as f64;
                    re += phase.cos();
                    im += phase.sin();
                }
                (re * re + im * im) / theta
            })
            .collect()
    }

    #[test]
    fn autocorr_examples() {
        let s = FinitePointSet::new(vec![d(0, 0), d(1, 1)]);
        let eta = autocorr(&s, 1, PairCounting::WithMultiplicity).unwrap();
        assert_eq!(eta.eta(&Dyadic::zero()), q(1, 1));
        assert_eq!(eta.eta(&d(1, 1)), q(1, 2));
        assert_eq!(eta.eta(&d(-1, 1)), q(1, 2));
        let single = autocorr(
            &FinitePointSet::new(vec![Dyadic::zero()]),
            3,
            PairCounting::WithMultiplicity,
        )
        .unwrap();
        assert_eq!(single.eta(&Dyadic::zero()), q(1, 8));
        assert!(autocorr(&s, 0, PairCounting::WithMultiplicity).is_err());
    }

    #[test]
    fn autocorr_symmetry_and_mass() {
        let s = FinitePointSet::new(vec![d(0, 0), d(41, 2), d(7, 3), d(5, 1), d(-3, 3)]);
        let eta = autocorr(&s, 3, PairCounting::WithMultiplicity).unwrap();
        for (g, v) in &eta.coefficients {
            assert_eq!(eta.eta(&-g), *v);
        }
        assert_eq!(eta.total_mass(), q(25, 8));
        assert_eq!(eta.eta(&Dyadic::zero()), q(5, 8));
        let literal = autocorr(&s, 3, PairCounting::DifferenceSet).unwrap();
        assert_eq!(literal.coefficients.len(), eta.coefficients.len());
        assert_eq!(literal.eta(&Dyadic::zero()), q(1, 8));
    }

    #[test]
    fn autocorr_json_round_trip() {
        let s = FinitePointSet::new(vec![d(0, 0), d(1, 1)]);
        let eta = autocorr(&s, 1, PairCounting::WithMultiplicity).unwrap();
        let text = serde_json::to_string(&eta).unwrap();
        assert!(text.starts_with(r#"[{"g":["-1",1],"eta":["1","2"]}"#));
        assert_eq!(
            autocorr_from_json(&text, 1, PairCounting::WithMultiplicity).unwrap(),
            eta
        );
    }

    #[test]
    fn spectrum_matches_direct_dft() {
        let s = FinitePointSet::new(vec![d(0, 0), d(5, 2), d(3, 1), d(13, 2)]);
        let spec = spectrum(&s, 2, 2).unwrap();
        let res: Vec<usize> = vec![0, 5, 6, 13];
        let naive = naive_spectrum(&res, 16, 4.0);
        for (x, y) in spec.intensities.iter().zip(&naive) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn single_point_is_flat() {
        let spec = spectrum(&FinitePointSet::new(vec![Dyadic::zero()]), 0, 2).unwrap();
        assert_eq!(spec.len(), 4);
        for i in &spec.intensities {
            assert!((i - 1.0).abs() < 1e-12);
        }
        assert!((pp_mass(&spec, 1).unwrap() - 0.25).abs() < 1e-12);
        assert!((pp_mass(&spec, 4).unwrap() - 1.0).abs() < 1e-12);
        assert!(pp_mass(&spec, 0).is_err());
        assert!(pp_mass(&spec, 5).is_err());
    }

    #[test]
    fn transversal_geometric_sum_zeros() {
        // Σ_{m < 2^a} e^{2πi k m / 2^{a+M}} vanishes exactly when 2^M | k, k != 0
        for a in 0..=6u32 {
            for m in 0..=3u32 {
                let spec = spectrum(&FinitePointSet::xi(a), a, m).unwrap();
                let i0 = spec.intensities[0];
                assert!((i0 - f64::from(1u32 << a)).abs() <= 1e-9 * i0);
                for (k, i) in spec.intensities.iter().enumerate().skip(1) {
                    if k % (1 << m) == 0 {
                        assert!(*i <= 1e-9 * i0, "a={a} M={m} k={k} I={i}");
                    } else {
                        assert!(*i > 1e-9, "a={a} M={m} k={k} I={i}");
                    }
                }
                let parseval = f64::from(1u32 << (a + m));
                assert!((spec.total() - parseval).abs() <= 1e-9 * parseval);
            }
        }
    }

    #[test]
    fn lattice_like_set_concentrates() {
        let spec = spectrum(&FinitePointSet::xi(2), 2, 0).unwrap();
        assert!((pp_mass(&spec, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collisions_are_rejected() {
        // 0 and 4 agree modulo 2^{0+2}
        let s = FinitePointSet::new(vec![d(0, 0), d(4, 0)]);
        assert_eq!(spectrum(&s, 0, 2), Err(Error::NotSeparated(2)));
        assert!(spectrum(&s, 0, 3).is_ok());
        assert!(spectrum(&FinitePointSet::xi(3), 2, 1).is_err());
        assert!(spectrum(&FinitePointSet::xi(3), 20, 3).is_err());
    }

    #[test]
    fn control_sets_keep_unit_balls() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xi = FinitePointSet::xi(4);
        let c = control_set(&xi, 3, &mut rng);
        assert!(crate::pointset::well_placed(&c, 4));
        assert!(spectrum(&c, 4, 3).is_ok());
    }

    #[test]
    fn defect_examples() {
        let xi3 = FinitePointSet::xi(3);
        assert!(almost_period_defect(&xi3, 3, &Dyadic::zero(), 4)
            .unwrap()
            .is_zero());
        for g in transversal(3, 0).unwrap() {
            for k in -1..3 {
                assert_eq!(
                    almost_period_defect(&xi3, 3, &g, k).unwrap(),
                    almost_period_defect(&xi3, 3, &-&g, k).unwrap()
                );
            }
        }
        // shifting ξ_3 by 1/8 moves 7/8 to 1, which is V_0-close to 0
        assert!(almost_period_defect(&xi3, 3, &d(1, 3), 0)
            .unwrap()
            .is_zero());
        assert_eq!(almost_period_defect(&xi3, 3, &d(1, 3), 1).unwrap(), q(2, 8));
        assert!(almost_period_defect(&xi3, 3, &d(1, 4), 0).is_err());
    }
}
