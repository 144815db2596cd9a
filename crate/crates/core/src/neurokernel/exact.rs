//! Accurate finite differences for dense ReLU/softmax networks.
//!
//! Logits are evaluated in double-double arithmetic (about 32 significant
//! digits) and the loss difference `L(θ+h) − L(θ−h)` is formed directly as
//! `log1p(Σ p_j · expm1(Δz_j)) − Δz_y`, which avoids subtracting two nearly
//! equal losses. When a perturbation changes the ReLU activation pattern the
//! step is halved until both sides stay on the linear piece containing θ.

use super::activation::{softmax, LOG_FLOOR};
use super::MLPModel;

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        Dd {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        let t = Dd::two_sum(self.lo, o.lo);
        let r = Dd::two_sum(s.hi, s.lo + t.hi);
        Dd::two_sum(r.hi, r.lo + t.lo)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul_f64(self, w: f64) -> Dd {
        let p = self.hi * w;
        let err = self.hi.mul_add(w, -p);
        Dd::two_sum(p, err + self.lo * w)
    }

    fn is_positive(self) -> bool {
        self.hi > 0.0 || (self.hi == 0.0 && self.lo > 0.0)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Layer, row and column (`None` for the bias) of a flat parameter index.
fn locate(model: &MLPModel, mut index: usize) -> (usize, usize, Option<usize>) {
    for (k, l) in model.layers().iter().enumerate() {
        let nw = l.outputs() * l.inputs();
        if index < nw {
            return (k, index / l.inputs(), Some(index % l.inputs()));
        }
        index -= nw;
        if index < l.outputs() {
            return (k, index, None);
        }
        index -= l.outputs();
    }
    panic!("parameter index out of range");
}

/// Logits in double-double with parameter `param` shifted by `shift`, and
/// the sign pattern of every hidden pre-activation.
fn logits(model: &MLPModel, x: &[f64], param: (usize, usize, Option<usize>), shift: f64) -> (Vec<Dd>, Vec<bool>) {
    let last = model.layers().len() - 1;
    let mut a: Vec<Dd> = x.iter().map(|&v| Dd::from(v)).collect();
    let mut pattern = Vec::new();
    for (k, layer) in model.layers().iter().enumerate() {
        let mut z = Vec::with_capacity(layer.outputs());
        for r in 0..layer.outputs() {
            let mut acc = Dd::from(layer.bias[r]);
            if param == (k, r, None) {
                acc = acc.add(Dd::from(shift));
            }
            for (c, (&w, &ac)) in layer.weights.row(r).iter().zip(&a).enumerate() {
                acc = acc.add(ac.mul_f64(w));
                if param == (k, r, Some(c)) {
                    acc = acc.add(ac.mul_f64(shift));
                }
            }
            z.push(acc);
        }
        if k == last {
            return (z, pattern);
        }
        a = z
            .into_iter()
            .map(|v| {
                pattern.push(v.is_positive());
                if v.is_positive() {
                    v
                } else {
                    Dd::ZERO
                }
            })
            .collect();
    }
    unreachable!("model has at least one layer")
}

pub(crate) enum Refined {
    /// Central difference on the linear piece containing θ.
    Derivative(f64),
    /// θ sits exactly on a ReLU kink; the derivative is one-sided.
    Kink,
}

/// Largest number of step halvings tried before declaring a kink.
const MAX_HALVINGS: usize = 40;

/// Accurate central difference of the mean batch loss in parameter `index`.
pub(crate) fn refined_derivative(model: &MLPModel, xs: &[Vec<f64>], ys: &[usize], index: usize, eps: f64) -> Refined {
    let param = locate(model, index);
    let base: Vec<Vec<bool>> = xs.iter().map(|x| logits(model, x, param, 0.0).1).collect();
    let mut h = eps;
    for _ in 0..=MAX_HALVINGS {
        let mut total = 0.0;
        let mut stable = true;
        for ((x, &y), pat) in xs.iter().zip(ys).zip(&base) {
            let (up, p_up) = logits(model, x, param, h);
            let (down, p_down) = logits(model, x, param, -h);
            if &p_up != pat || &p_down != pat {
                stable = false;
                break;
            }
            let probs = softmax(&down.iter().map(|v| v.to_f64()).collect::<Vec<_>>());
            let up_y = softmax(&up.iter().map(|v| v.to_f64()).collect::<Vec<_>>())[y];
            if probs[y] < LOG_FLOOR || up_y < LOG_FLOOR {
                // the floored log is flat here
                continue;
            }
            let delta: Vec<f64> = up.iter().zip(&down).map(|(u, d)| u.add(d.neg()).to_f64()).collect();
            let s: f64 = probs.iter().zip(&delta).map(|(p, d)| p * d.exp_m1()).sum();
            total += s.ln_1p() - delta[y];
        }
        if stable {
            return Refined::Derivative(total / xs.len() as f64 / (2.0 * h));
        }
        h *= 0.5;
    }
    Refined::Kink
}
