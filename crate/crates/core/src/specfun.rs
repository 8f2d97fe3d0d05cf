//! Bessel functions of the first kind for half-integer orders, the
//! normalized function `F_alpha(t) = J_alpha(t) / t^alpha`, and the Gamma
//! values they need.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Below this argument `J_alpha` is summed from its power series.
pub const SERIES_SWITCH: f64 = 12.0;

/// Below this argument `F_alpha` uses a four-term Taylor expansion.
pub const SMALL_T_SWITCH: f64 = 1e-4;

const MAX_TWICE_ORDER: u8 = 8;

/// A Bessel order `alpha = k / 2` with `0 <= k <= 8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BesselOrder {
    twice: u8,
}

impl BesselOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        let twice = 2.0 * alpha;
        if !(0.0..=MAX_TWICE_ORDER as f64).contains(&twice) || twice.fract() != 0.0 {
            return Err(Error::UnsupportedOrder(alpha));
        }
        Ok(Self { twice: twice as u8 })
    }

    /// The order `k / 2`.
    pub fn half(k: u32) -> Result<Self> {
        if k > MAX_TWICE_ORDER as u32 {
            return Err(Error::UnsupportedOrder(k as f64 / 2.0));
        }
        Ok(Self { twice: k as u8 })
    }

    /// Order `m / 2` of the universal kernel in dimension `m`.
    pub fn for_dimension(m: usize) -> Result<Self> {
        Self::half(m as u32)
    }

    pub fn alpha(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn twice(self) -> u32 {
        self.twice as u32
    }

    pub fn is_integer(self) -> bool {
        self.twice.is_multiple_of(2)
    }
}

/// `Gamma(z)` for `z = twice_z / 2`, exact up to rounding.
pub fn gamma_half_integer(twice_z: u32) -> f64 {
    assert!(twice_z > 0, "Gamma has a pole at 0");
    let (mut z, mut value) = if twice_z.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (0.5, PI.sqrt())
    };
    let target = twice_z as f64 / 2.0;
    while z < target {
        value *= z;
        z += 1.0;
    }
    value
}

/// `J_alpha(x)` for `x >= 0`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "Bessel argument must be finite and >= 0, got {x}"
        )));
    }
    if x <= SERIES_SWITCH {
        return Ok(bessel_series(order, x));
    }
    if order.is_integer() {
        Ok(bessel_miller(order.twice / 2, x))
    } else {
        Ok(bessel_half_integer(order.twice / 2, x))
    }
}

/// Power series, truncated once the next term is below 1e-16 of the sum.
fn bessel_series(order: BesselOrder, x: f64) -> f64 {
    let alpha = order.alpha();
    let half = 0.5 * x;
    let mut term = half.powf(alpha) / gamma_half_integer(order.twice() + 2);
    let mut sum = term;
    let q = -half * half;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + alpha));
        if term == 0.0 || term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sum += term;
    }
    sum
}

/// `J_{n+1/2}(x) = sqrt(2x/pi) j_n(x)`, with `j_n` from the upward
/// recurrence, which is stable for `x > n`.
fn bessel_half_integer(n: u8, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let mut j_prev = s / x;
    let scale = (2.0 * x / PI).sqrt();
    if n == 0 {
        return scale * j_prev;
    }
    let mut j_cur = s / (x * x) - c / x;
    for l in 1..n {
        let next = (2 * l + 1) as f64 / x * j_cur - j_prev;
        j_prev = j_cur;
        j_cur = next;
    }
    scale * j_cur
}

/// Integer order by downward (Miller) recurrence normalized with
/// `J_0 + 2 * sum_k J_{2k} = 1`.
fn bessel_miller(n: u8, x: f64) -> f64 {
    const BIG: f64 = 1e200;
    let mut start = (1.2 * x + 40.0) as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let n = n as usize;
    let mut above = 0.0;
    let mut current = 1e-300_f64.max(f64::MIN_POSITIVE);
    let mut norm = if start.is_multiple_of(2) { 2.0 * current } else { 0.0 };
    let mut wanted = if start == n { current } else { 0.0 };
    for k in (1..=start).rev() {
        let below = (2 * k) as f64 / x * current - above;
        above = current;
        current = below;
        let i = k - 1;
        if current.abs() > BIG {
            current /= BIG;
            above /= BIG;
            norm /= BIG;
            wanted /= BIG;
        }
        if i == n {
            wanted = current;
        }
        if i == 0 {
            norm += current;
        } else if i % 2 == 0 {
            norm += 2.0 * current;
        }
    }
    wanted / norm
}

/// `F_alpha(t) = J_alpha(t) / t^alpha`, continuous at `t = 0` where it equals
/// `2^-alpha / Gamma(alpha + 1)`.
pub fn f_alpha(order: BesselOrder, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "F_alpha argument must be finite and >= 0, got {t}"
        )));
    }
    let alpha = order.alpha();
    if t < SMALL_T_SWITCH {
        let half = 0.5 * t;
        let q = -half * half;
        let mut term = 1.0 / gamma_half_integer(order.twice() + 2);
        let mut sum = term;
        for k in 1..4 {
            let kf = k as f64;
            term *= q / (kf * (kf + alpha));
            sum += term;
        }
        return Ok(sum * 2f64.powf(-alpha));
    }
    Ok(bessel_j(order, t)? / t.powf(alpha))
}

/// Lebesgue volume of the unit ball in `R^m`, `1 <= m <= 8`.
pub fn unit_ball_volume(m: usize) -> Result<f64> {
    if !(1..=8).contains(&m) {
        return Err(Error::Domain(format!("unit ball dimension must be in 1..=8, got {m}")));
    }
    Ok(PI.powf(m as f64 / 2.0) / gamma_half_integer(m as u32 + 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(alpha: f64) -> BesselOrder {
        BesselOrder::new(alpha).unwrap()
    }

    // Reference values from 40-digit mpmath evaluation.
    const REFERENCE: &[(f64, f64, f64)] = &[
        (0.0, 0.5, 0.9384698072408129),
        (0.0, 3.0, -0.26005195490193345),
        (0.0, 11.9, 0.025049441699589645),
        (0.0, 12.1, 0.06966677360680731),
        (0.0, 25.0, 0.09626678327595811),
        (0.0, 57.3, 0.1053341332124604),
        (0.0, 99.5, -0.019543066407440784),
        (0.5, 0.5, 0.540973789934528),
        (0.5, 11.9, -0.14297213406708068),
        (0.5, 12.1, -0.10313819465555996),
        (0.5, 99.5, -0.06861391606637347),
        (1.0, 0.5, 0.2422684576748739),
        (1.0, 11.9, -0.22898324966192404),
        (1.0, 12.1, -0.2157489733769248),
        (1.0, 57.3, -0.0029007973423950915),
        (1.0, 99.5, -0.07766319824307694),
        (1.5, 3.0, 0.4777182150870918),
        (1.5, 25.0, -0.15901789538603658),
        (2.0, 11.9, -0.06353402147470293),
        (2.0, 12.1, -0.10532776094183621),
        (2.0, 99.5, 0.01798199709602215),
        (2.5, 0.5, 0.009236407819379724),
        (2.5, 25.0, 0.0020381361533260553),
        (3.0, 12.1, 0.18092987885069797),
        (3.0, 57.3, -0.004459438796062093),
        (3.5, 11.9, 0.23336980516952596),
        (3.5, 12.1, 0.2341590415391173),
        (3.5, 99.5, 0.04518767774794035),
        (4.0, 0.5, 0.0001607364763642876),
        (4.0, 11.9, 0.16822004301603832),
        (4.0, 12.1, 0.19504505623970297),
        (4.0, 99.5, -0.013255197542331947),
    ];

    #[test]
    fn matches_high_precision_reference() {
        for &(alpha, x, expected) in REFERENCE {
            let got = bessel_j(order(alpha), x).unwrap();
            assert!(
                (got - expected).abs() <= 1e-12,
                "J_{alpha}({x}) = {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn documented_values() {
        assert_eq!(bessel_j(order(0.0), 0.0).unwrap(), 1.0);
        let v = bessel_j(order(0.5), PI / 2.0).unwrap();
        assert!((v - 2.0 / PI).abs() < 1e-15);
        assert!(bessel_j(order(0.0), 2.404_825_557_695_773).unwrap().abs() < 1e-10);
    }

    #[test]
    fn f_alpha_values() {
        assert_eq!(f_alpha(order(1.0), 0.0).unwrap(), 0.5);
        assert!(f_alpha(order(0.5), PI).unwrap().abs() < 1e-15);
        let at_zero = f_alpha(order(0.5), 0.0).unwrap();
        assert!((at_zero - (2.0 / PI).sqrt()).abs() < 1e-15);
        for t in [1e-12, 1e-8, 5e-5, 9.99e-5] {
            assert!((f_alpha(order(0.5), t).unwrap() - at_zero).abs() < 1e-8);
        }
        assert!((f_alpha(order(0.5), 1e-9).unwrap() - at_zero).abs() < 1e-10);
    }

    #[test]
    fn f_alpha_continuous_across_switch() {
        for k in 0..=8 {
            let o = BesselOrder::half(k).unwrap();
            let below = f_alpha(o, SMALL_T_SWITCH * (1.0 - 1e-9)).unwrap();
            let above = f_alpha(o, SMALL_T_SWITCH).unwrap();
            assert!((below - above).abs() < 1e-13, "k={k}: {below} vs {above}");
        }
    }

    #[test]
    fn half_order_against_closed_form() {
        let o = order(0.5);
        let mut x = 1e-3;
        while x <= 50.0 {
            let closed = (2.0 / (PI * x)).sqrt() * x.sin();
            assert!((bessel_j(o, x).unwrap() - closed).abs() <= 1e-12, "x={x}");
            x *= 1.01;
        }
    }

    #[test]
    fn sinc_consistency() {
        let o = order(0.5);
        let mut r = 0.01;
        while r <= 20.0 {
            let lhs = f_alpha(o, r).unwrap() / (2.0 * PI).sqrt();
            assert!((lhs - r.sin() / (PI * r)).abs() < 1e-12);
            r += 0.01;
        }
    }

    #[test]
    fn continuity_across_series_switch() {
        for k in 0..=8 {
            let o = BesselOrder::half(k).unwrap();
            let a = bessel_j(o, SERIES_SWITCH).unwrap();
            let b = bessel_j(o, SERIES_SWITCH + 1e-12).unwrap();
            assert!((a - b).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1).unwrap() - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2).unwrap() - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3).unwrap() - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!(unit_ball_volume(0).is_err());
        assert!(unit_ball_volume(9).is_err());
    }

    #[test]
    fn errors() {
        assert!(matches!(bessel_j(order(0.0), -1.0), Err(Error::Domain(_))));
        assert!(matches!(BesselOrder::new(0.3), Err(Error::UnsupportedOrder(_))));
        assert!(matches!(BesselOrder::new(4.5), Err(Error::UnsupportedOrder(_))));
        assert!(f_alpha(order(1.0), f64::NAN).is_err());
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_half_integer(1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half_integer(2), 1.0);
        assert!((gamma_half_integer(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half_integer(10), 24.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]
            #[test]
            fn bounded_by_one(k in 0u32..=8, x in 0.0f64..50.0) {
                let v = bessel_j(BesselOrder::half(k).unwrap(), x).unwrap();
                prop_assert!(v.abs() <= 1.0 + 1e-15);
            }
        }
    }
}
