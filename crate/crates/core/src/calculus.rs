//! Spectral multipliers `Φ : ℝ → ℂ` and direct (decomposition-free)
//! evaluation of `Φ(L)f` where one exists.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix};
use crate::operator::Kernel;
use crate::scalar::{Real, C};
use crate::space::VertexFunction;

/// The bounded Borel functions exercised by the checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multiplier {
    /// `Φ ≡ 1`.
    One,
    /// `Φ(s) = s`.
    Identity,
    /// `Φ(s) = s²`.
    Square,
    /// `Φ(s) = e^{−ts}`.
    ExpNeg(f64),
    /// `Φ(s) = 1/(s + i)`.
    Resolvent,
    /// `Φ = χ_[a,b]`, closed interval.
    Indicator(f64, f64),
}

impl Multiplier {
    /// The default check set.
    pub fn standard_set() -> Vec<Multiplier> {
        vec![
            Multiplier::One,
            Multiplier::Identity,
            Multiplier::Square,
            Multiplier::ExpNeg(1.0),
            Multiplier::Resolvent,
            Multiplier::Indicator(1.5, 2.5),
        ]
    }

    pub fn eval<R: Real>(&self, s: R) -> C<R> {
        let re = |x: R| C::new(x, R::zero());
        match *self {
            Multiplier::One => re(R::one()),
            Multiplier::Identity => re(s),
            Multiplier::Square => re(s * s),
            Multiplier::ExpNeg(t) => re((-R::lit(t) * s).exp()),
            Multiplier::Resolvent => C::new(s, R::one()).inv(),
            Multiplier::Indicator(a, b) => {
                if s >= R::lit(a) && s <= R::lit(b) {
                    re(R::one())
                } else {
                    re(R::zero())
                }
            }
        }
    }

    /// Evaluates at an atom, rejecting non-finite values.
    pub fn eval_checked<R: Real>(&self, s: R) -> Result<C<R>> {
        let v = self.eval(s);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteMultiplier(s.as_f64()))
        }
    }

    /// `sup |Φ|` over the given points.
    pub fn sup_abs<R: Real>(&self, points: &[R]) -> R {
        points.iter().fold(R::zero(), |acc, &s| acc.max(self.eval(s).norm()))
    }
}

impl fmt::Display for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplier::One => write!(f, "one"),
            Multiplier::Identity => write!(f, "identity"),
            Multiplier::Square => write!(f, "square"),
            Multiplier::ExpNeg(t) => write!(f, "exp_neg:{t}"),
            Multiplier::Resolvent => write!(f, "resolvent"),
            Multiplier::Indicator(a, b) => write!(f, "indicator:{a}:{b}"),
        }
    }
}

impl FromStr for Multiplier {
    type Err = Error;

    /// Parses `one`, `identity`, `square`, `exp_neg[:t]`, `resolvent`,
    /// `indicator:a:b`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| -> Result<f64> {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::InvalidArgument(format!("bad multiplier parameter {p:?}")))
        };
        match parts.as_slice() {
            ["one"] => Ok(Multiplier::One),
            ["identity"] => Ok(Multiplier::Identity),
            ["square"] => Ok(Multiplier::Square),
            ["resolvent"] => Ok(Multiplier::Resolvent),
            ["exp_neg"] => Ok(Multiplier::ExpNeg(1.0)),
            ["exp_neg", t] => Ok(Multiplier::ExpNeg(num(t)?)),
            ["indicator", a, b] => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(Error::InvalidArgument(format!("empty indicator interval [{a}, {b}]")));
                }
                Ok(Multiplier::Indicator(a, b))
            }
            _ => Err(Error::InvalidArgument(format!("unknown multiplier {s:?}"))),
        }
    }
}

/// Parses a comma-separated multiplier list.
pub fn parse_multipliers(list: &str) -> Result<Vec<Multiplier>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Evaluates `Φ(L)f` without any eigendecomposition:
///
/// * `1`, `s`, `s²`: sparse application of `Ã`;
/// * `1/(s+i)`: LU solve with `A_m + iI`;
/// * `e^{−ts}`: Taylor series with scaling and squaring by repeated application.
///
/// Returns `None` for indicators, which have no decomposition-free route.
pub fn apply_direct<R: Real>(
    kernel: &Kernel<R>,
    phi: Multiplier,
    f: &VertexFunction<R>,
) -> Result<Option<VertexFunction<R>>> {
    f.ensure_on(kernel.space())?;
    let space = kernel.space().clone();
    let values = match phi {
        Multiplier::One => f.values().to_vec(),
        Multiplier::Identity => kernel.apply_raw(f.values()),
        Multiplier::Square => kernel.apply_raw(&kernel.apply_raw(f.values())),
        Multiplier::Resolvent => {
            let mut a: Matrix<R> = kernel.operator_matrix();
            for i in 0..a.rows() {
                a[(i, i)] = a[(i, i)] + C::new(R::zero(), R::one());
            }
            Lu::factor(a)?.solve(f.values())?
        }
        Multiplier::ExpNeg(t) => exp_apply(kernel, R::lit(t), f.values()),
        Multiplier::Indicator(..) => return Ok(None),
    };
    Ok(Some(VertexFunction::new(space, values)?))
}

/// `e^{−tA} w` as `(e^{−tA/s})^s w`, each factor summed by Taylor series
/// until terms drop below machine precision. `s` is chosen so that
/// `‖tA/s‖ ≤ 1` in the row-sum bound.
fn exp_apply<R: Real>(kernel: &Kernel<R>, t: R, w: &[C<R>]) -> Vec<C<R>> {
    let bound = (t.abs() * kernel.row_norm_bound()).max(R::one());
    let steps = bound.ceil().to_usize().unwrap_or(1).max(1);
    let h = -t / R::from_usize(steps).unwrap_or_else(R::one);
    let mut cur = w.to_vec();
    for _ in 0..steps {
        let mut term = cur.clone();
        let mut acc = cur.clone();
        let scale = acc.iter().fold(R::zero(), |a, v| a.max(v.norm()));
        for k in 1..200usize {
            let next = kernel.apply_raw(&term);
            let factor = h / R::from_usize(k).unwrap_or_else(R::one);
            term = next.into_iter().map(|v| v * factor).collect();
            let size = term.iter().fold(R::zero(), |a, v| a.max(v.norm()));
            for (a, &v) in acc.iter_mut().zip(&term) {
                *a = *a + v;
            }
            if size <= R::epsilon() * R::lit(1e-3) * scale.max(R::min_positive_value()) {
                break;
            }
        }
        cur = acc;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{laplacian_from_graph, GraphSpec};
    use crate::space::DiscreteMeasureSpace;
    use std::sync::Arc;

    fn k2() -> Kernel<f64> {
        let sp = Arc::new(DiscreteMeasureSpace::uniform(2));
        laplacian_from_graph(&GraphSpec::new(sp, vec![(0, 1, 1.0)]).unwrap()).unwrap()
    }

    #[test]
    fn parse_round_trip() {
        for m in Multiplier::standard_set() {
            assert_eq!(m.to_string().parse::<Multiplier>().unwrap(), m);
        }
        assert_eq!("exp_neg:0.1".parse::<Multiplier>().unwrap(), Multiplier::ExpNeg(0.1));
        assert!("indicator:3:1".parse::<Multiplier>().is_err());
        assert!("cosine".parse::<Multiplier>().is_err());
        assert_eq!(parse_multipliers("one, square").unwrap(), vec![Multiplier::One, Multiplier::Square]);
    }

    #[test]
    fn indicator_is_closed() {
        let m = Multiplier::Indicator(1.0, 2.0);
        assert_eq!(m.eval(1.0f64).re, 1.0);
        assert_eq!(m.eval(2.0f64).re, 1.0);
        assert_eq!(m.eval(2.000001f64).re, 0.0);
    }

    #[test]
    fn direct_routes_on_k2() {
        let k = k2();
        let f = VertexFunction::from_real(k.space().clone(), &[1.0, 0.0]).unwrap();
        let lf = apply_direct(&k, Multiplier::Identity, &f).unwrap().unwrap();
        assert_eq!(lf.values()[0].re, 1.0);
        assert_eq!(lf.values()[1].re, -1.0);

        let e = apply_direct(&k, Multiplier::ExpNeg(1.0), &f).unwrap().unwrap();
        let want = (1.0 + (-4.0f64).exp()) / 2.0;
        assert!((e.norm_sq() - want).abs() < 1e-14);
        assert!((e.norm_sq() - 0.509158).abs() < 1e-6);

        // (L+i)^{-1} on K2 acts by 1/i on constants and 1/(2+i) on (1,-1).
        let r = apply_direct(&k, Multiplier::Resolvent, &f).unwrap().unwrap();
        let a = C::new(0.0, 1.0).inv() / 2.0;
        let b = C::new(2.0, 1.0).inv() / 2.0;
        assert!((r.values()[0] - (a + b)).norm() < 1e-15);
        assert!((r.values()[1] - (a - b)).norm() < 1e-15);

        assert!(apply_direct(&k, Multiplier::Indicator(0.0, 1.0), &f).unwrap().is_none());
    }
}
