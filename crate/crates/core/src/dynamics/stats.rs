//! Welch's two-sample t-test and the special functions behind it.

use serde::{Deserialize, Serialize};

use super::DynamicsError;

pub const WELCH_TEST: &str = "welch_t";

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos approximation, reflection below 0.5).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`, `0 ≤ x ≤ 1`.
pub fn betainc(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(1.0 - x, b, a) / b
    }
}

/// Student-t distribution function with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let tail = 0.5 * betainc(df / (df + t * t), 0.5 * df, 0.5);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Two-sided p value of `t` under Student-t with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    betainc(df / (df + t * t), 0.5 * df, 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub name: String,
    pub n: usize,
    pub mean: f64,
    /// Sample variance (n − 1 denominator).
    pub variance: f64,
}

impl GroupStats {
    pub fn of(name: &str, values: &[f64]) -> Result<Self, DynamicsError> {
        if values.len() < 2 {
            return Err(DynamicsError::TooFewValues {
                group: name.to_string(),
                n: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite(name.to_string()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self {
            name: name.to_string(),
            n: values.len(),
            mean,
            variance,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub test: String,
    pub a: GroupStats,
    pub b: GroupStats,
    /// Infinite when both groups are constant with different means.
    #[serde(with = "extended_float")]
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of
/// freedom. Two constant groups give `t = 0, p = 1` when their means agree
/// and `t = ±∞, p = 0` otherwise.
pub fn compare_groups(a: &[f64], b: &[f64]) -> Result<GroupComparison, DynamicsError> {
    compare_named("a", a, "b", b)
}

pub fn compare_named(name_a: &str, a: &[f64], name_b: &str, b: &[f64]) -> Result<GroupComparison, DynamicsError> {
    let ga = GroupStats::of(name_a, a)?;
    let gb = GroupStats::of(name_b, b)?;
    let (sa, sb) = (ga.variance / ga.n as f64, gb.variance / gb.n as f64);
    let se2 = sa + sb;
    let diff = ga.mean - gb.mean;
    let (t, df, p) = if se2 == 0.0 {
        let df = (ga.n + gb.n - 2) as f64;
        if diff == 0.0 {
            (0.0, df, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, df, 0.0)
        }
    } else {
        let t = diff / se2.sqrt();
        let df = se2 * se2 / (sa * sa / (ga.n - 1) as f64 + sb * sb / (gb.n - 1) as f64);
        (t, df, two_sided_p(t, df))
    };
    Ok(GroupComparison {
        test: WELCH_TEST.to_string(),
        a: ga,
        b: gb,
        t,
        df,
        p,
    })
}

/// Floats that may be infinite: finite values as JSON numbers, the rest as
/// the strings `"inf"`, `"-inf"` or `"nan"`.
pub(crate) mod extended_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("invalid float {other:?}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_at_integers_and_half() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12, "n={n}");
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(0.1) - 2.252_712_651_734_206).abs() < 1e-12);
    }

    #[test]
    fn betainc_closed_forms() {
        // I_x(1, 1) = x;  I_x(a, 1) = x^a;  I_x(1, b) = 1 − (1 − x)^b
        for x in [0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((betainc(x, 1.0, 1.0) - x).abs() < 1e-14);
            assert!((betainc(x, 3.5, 1.0) - x.powf(3.5)).abs() < 1e-13);
            assert!((betainc(x, 1.0, 2.5) - (1.0 - (1.0 - x).powf(2.5))).abs() < 1e-13);
        }
        assert_eq!(betainc(0.0, 2.0, 3.0), 0.0);
        assert_eq!(betainc(1.0, 2.0, 3.0), 1.0);
    }

    #[test]
    fn t_cdf_cauchy_case() {
        // one degree of freedom is the Cauchy distribution
        for t in [-3.0f64, -0.5, 0.0, 1.0, 7.0] {
            let expect = 0.5 + t.atan() / std::f64::consts::PI;
            assert!((student_t_cdf(t, 1.0) - expect).abs() < 1e-13, "t={t}");
        }
    }

    #[test]
    fn identical_groups() {
        let c = compare_groups(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((c.t, c.p), (0.0, 1.0));
    }

    #[test]
    fn swapped_groups_negate_t() {
        let a = [3.1, 4.7, 2.2, 9.0, 5.5];
        let b = [1.0, 0.4, 2.5, 1.9];
        let x = compare_groups(&a, &b).unwrap();
        let y = compare_groups(&b, &a).unwrap();
        assert_eq!(x.t, -y.t);
        assert_eq!(x.p, y.p);
        assert_eq!(x.df, y.df);
    }

    #[test]
    fn degenerate_groups() {
        let c = compare_groups(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!((c.t, c.p), (0.0, 1.0));
        let c = compare_groups(&[2.0, 2.0], &[5.0, 5.0]).unwrap();
        assert_eq!((c.t, c.p), (f64::NEG_INFINITY, 0.0));
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"-inf\""));
        let back: GroupComparison = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn too_few_values() {
        assert!(matches!(compare_groups(&[1.0], &[1.0, 2.0]), Err(DynamicsError::TooFewValues { .. })));
        assert!(matches!(compare_groups(&[1.0, f64::NAN], &[1.0, 2.0]), Err(DynamicsError::NonFinite(_))));
    }
}
