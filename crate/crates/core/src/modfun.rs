//! Polynomial modulating functions `phi_n(x) = x^(N+b+1-n) (L1-x)^(b+n)`.
//!
//! Each member vanishes at `0` to order `N+b+1-n >= b+1` and at `L1` to order
//! `b+n >= b+1`, so with `b >= 2` every member and its first derivative vanish
//! at both ends of `[0, L1]`. The smallest monomial power is at least `b+1 > 2`,
//! which keeps the fractional derivative and its order sensitivity finite at
//! the origin for any order up to 2.
//!
//! Grid samples never use the expanded monomial form: near `x = L1` its
//! alternating coefficients cancel badly once the degree grows. Values and
//! first derivatives come from the factored product, and the fractional
//! derivative from the Pfaff-transformed terminating hypergeometric sum
//!
//! ```text
//! D^a [x^p (L-x)^q] = G(p+1)/G(p+1-a) x^(p-a) L^q
//!                     * sum_k C(q,k) (-a)_k / (p+1-a)_k * y^k (1-y)^(q-k),   y = x / L
//! ```
//!
//! whose weights are all positive except the `k = 1` term. The expanded
//! route through [`crate::fracpoly`] stays available on each member.

use crate::error::{Error, Result};
use crate::fracpoly::{
    rl_alpha_sensitivity, rl_derivative, AlphaSensitivity, FracExpansion, Polynomial,
};
use crate::special::{digamma, falling_gamma_ratio};

/// Default order offset `b`.
pub const DEFAULT_OFFSET: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ModulatingFunction {
    index: u32,
    left_power: u32,
    right_power: u32,
    length: f64,
    expanded: Polynomial,
}

impl ModulatingFunction {
    fn new(index: u32, left_power: u32, right_power: u32, length: f64) -> Self {
        let left = Polynomial::monomial(left_power as usize, 1.0);
        let right = Polynomial::monomial(right_power as usize, 1.0).shift_reflect(length);
        Self {
            index,
            left_power,
            right_power,
            length,
            expanded: left.multiply(&right),
        }
    }

    /// One-based position `n` in the family.
    pub fn index(&self) -> u32 {
        self.index
    }

    /// Vanishing order at 0.
    pub fn left_power(&self) -> u32 {
        self.left_power
    }

    /// Vanishing order at `L1`.
    pub fn right_power(&self) -> u32 {
        self.right_power
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.expanded
    }

    pub fn eval(&self, x: f64) -> f64 {
        x.powi(self.left_power as i32) * (self.length - x).powi(self.right_power as i32)
    }

    /// First derivative by the product rule on the factored form.
    pub fn derivative(&self, x: f64) -> f64 {
        let (a, b) = (self.left_power as i32, self.right_power as i32);
        let y = self.length - x;
        x.powi(a - 1) * y.powi(b - 1) * (a as f64 * y - b as f64 * x)
    }

    pub fn rl_derivative(&self, alpha: f64) -> Result<FracExpansion> {
        rl_derivative(&self.expanded, alpha)
    }

    pub fn alpha_sensitivity(&self, alpha: f64) -> Result<AlphaSensitivity> {
        rl_alpha_sensitivity(&self.expanded, alpha)
    }

    /// Factored evaluator of `D^alpha phi` and its order sensitivity.
    pub fn factored_derivative(&self, alpha: f64) -> Result<FactoredDerivative> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::OrderOutOfRange(alpha));
        }
        let p = self.left_power;
        let q = self.right_power as usize;
        let base = p as f64 + 1.0 - alpha;
        let mut weights = Vec::with_capacity(q + 1);
        let mut dweights = Vec::with_capacity(q + 1);
        // rising (-alpha)_k, its alpha-derivative, (p+1-alpha)_k and sum 1/(p+1-alpha+i)
        let (mut rise, mut drise, mut denom, mut harmonic) = (1.0, 0.0, 1.0, 0.0);
        let mut binom = 1.0;
        for k in 0..=q {
            weights.push(binom * rise / denom);
            dweights.push(binom * (drise + rise * harmonic) / denom);
            let i = k as f64;
            drise = drise * (i - alpha) - rise;
            rise *= i - alpha;
            denom *= base + i;
            harmonic += 1.0 / (base + i);
            binom = binom * (q - k) as f64 / (k + 1) as f64;
        }
        Ok(FactoredDerivative {
            alpha,
            length: self.length,
            lead: p as f64 - alpha,
            ratio: falling_gamma_ratio(p, alpha),
            psi: if p as f64 > alpha {
                digamma(base)?
            } else {
                f64::NAN
            },
            weights,
            dweights,
        })
    }
}

/// `D^alpha phi` of one modulating function in factored form, see the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredDerivative {
    alpha: f64,
    length: f64,
    lead: f64,
    ratio: f64,
    psi: f64,
    weights: Vec<f64>,
    dweights: Vec<f64>,
}

impl FactoredDerivative {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `(D^alpha phi(x), d/dalpha D^alpha phi(x))` for `x` in `[0, L1]`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        if x == 0.0 {
            return (0.0, 0.0);
        }
        let q = self.weights.len() - 1;
        let rest = self.length - x;
        // Bernstein-type sums, Horner in the ratio that stays <= 1
        let (plain, dplain) = if x <= rest {
            let t = x / rest;
            let scale = rest.powi(q as i32);
            let (s, ds) = self
                .weights
                .iter()
                .zip(&self.dweights)
                .rev()
                .fold((0.0, 0.0), |(s, ds), (w, dw)| (s * t + w, ds * t + dw));
            (s * scale, ds * scale)
        } else {
            let t = rest / x;
            let scale = x.powi(q as i32);
            let (s, ds) = self
                .weights
                .iter()
                .zip(&self.dweights)
                .fold((0.0, 0.0), |(s, ds), (w, dw)| (s * t + w, ds * t + dw));
            (s * scale, ds * scale)
        };
        let front = self.ratio * x.powf(self.lead);
        let value = front * plain;
        (value, value * (self.psi - x.ln()) + front * dplain)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulatingFamily {
    count: u32,
    offset: u32,
    length: f64,
    members: Vec<ModulatingFunction>,
}

/// Builds the `count` members of the family on `[0, length]`.
pub fn build_family(count: u32, offset: u32, length: f64) -> Result<ModulatingFamily> {
    if count < 2 {
        return Err(Error::InvalidFamily(format!(
            "need at least 2 functions, got {count}"
        )));
    }
    if offset < 2 {
        return Err(Error::InvalidFamily(format!(
            "order offset must be >= 2, got {offset}"
        )));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidFamily(format!(
            "interval length must be positive, got {length}"
        )));
    }
    let members = (1..=count)
        .map(|n| ModulatingFunction::new(n, count + offset + 1 - n, offset + n, length))
        .collect();
    Ok(ModulatingFamily {
        count,
        offset,
        length,
        members,
    })
}

impl ModulatingFamily {
    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn offset(&self) -> u32 {
        self.offset
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Common degree `N + 2b + 1` of all members.
    pub fn degree(&self) -> u32 {
        self.count + 2 * self.offset + 1
    }

    pub fn members(&self) -> &[ModulatingFunction] {
        &self.members
    }

    /// Same family with members in the order given by `permutation`.
    pub fn reordered(&self, permutation: &[usize]) -> Result<ModulatingFamily> {
        let mut seen = vec![false; self.members.len()];
        if permutation.len() != self.members.len()
            || permutation
                .iter()
                .any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::InvalidFamily(
                "not a permutation of the members".into(),
            ));
        }
        Ok(ModulatingFamily {
            members: permutation
                .iter()
                .map(|&i| self.members[i].clone())
                .collect(),
            ..self.clone()
        })
    }
}

/// Samples of every member on the uniform grid `x_j = j * dx`, `j = 0..M`, `dx = L1 / (M - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEval {
    pub alpha: f64,
    pub dx: f64,
    pub phi: Vec<Vec<f64>>,
    pub dphi_dx: Vec<Vec<f64>>,
    pub dalpha_phi: Vec<Vec<f64>>,
    pub dalpha_dalpha_phi: Vec<Vec<f64>>,
}

impl GridEval {
    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.phi.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| j as f64 * self.dx)
    }
}

/// Evaluates the family and its derivatives on `points` uniform nodes.
pub fn evaluate_on_grid(family: &ModulatingFamily, alpha: f64, points: usize) -> Result<GridEval> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::OrderOutOfRange(alpha));
    }
    if points < 3 {
        return Err(Error::GridMismatch(format!(
            "need at least 3 grid points, got {points}"
        )));
    }
    let dx = family.length / (points - 1) as f64;
    let n = family.members.len();
    let mut out = GridEval {
        alpha,
        dx,
        phi: Vec::with_capacity(n),
        dphi_dx: Vec::with_capacity(n),
        dalpha_phi: Vec::with_capacity(n),
        dalpha_dalpha_phi: Vec::with_capacity(n),
    };
    for member in &family.members {
        let frac_eval = member
            .factored_derivative(alpha)
            .expect("member powers exceed the order by construction");
        let mut phi = Vec::with_capacity(points);
        let mut dphi = Vec::with_capacity(points);
        let mut frac = Vec::with_capacity(points);
        let mut frac_sens = Vec::with_capacity(points);
        for j in 0..points {
            // pin the last node to L1 exactly
            let x = if j + 1 == points {
                family.length
            } else {
                j as f64 * dx
            };
            phi.push(member.eval(x));
            dphi.push(member.derivative(x));
            let (v, s) = frac_eval.eval(x);
            frac.push(v);
            frac_sens.push(s);
        }
        out.phi.push(phi);
        out.dphi_dx.push(dphi);
        out.dalpha_phi.push(frac);
        out.dalpha_dalpha_phi.push(frac_sens);
    }
    Ok(out)
}
