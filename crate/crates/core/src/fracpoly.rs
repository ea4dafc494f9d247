//! Monomial-basis polynomials and their Riemann–Liouville derivatives.
//!
//! For a monomial the left-sided Riemann–Liouville derivative on `[0, x]` has
//! the closed form
//!
//! ```text
//! D^a x^k = Gamma(k + 1) / Gamma(k + 1 - a) * x^(k - a)
//! ```
//!
//! so the image of a polynomial is a finite sum of powers `x^(k - a)`. A
//! [`FracExpansion`] stores the integer `k` of every term together with the
//! one order `a` shared by all terms. Two terms never have to be merged by
//! comparing floating exponents.

use crate::error::{Error, Result};
use crate::special::{digamma, falling_gamma_ratio};

/// Real polynomial `c0 + c1 x + ... + cn x^n`.
///
/// Trailing zero coefficients are trimmed, so the last stored coefficient is
/// nonzero unless the polynomial is identically zero (stored as no coefficients).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    /// `coeff * x^power`
    pub fn monomial(power: usize, coeff: f64) -> Self {
        let mut coeffs = vec![0.0; power + 1];
        coeffs[power] = coeff;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^power` (zero beyond the degree).
    pub fn coeff(&self, power: usize) -> f64 {
        self.coeffs.get(power).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(other.coeffs.len());
        Polynomial::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn scale(&self, factor: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    pub fn multiply(&self, other: &Polynomial) -> Polynomial {
        if self.is_zero() || other.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }

    /// The polynomial `x -> p(length - x)`.
    pub fn shift_reflect(&self, length: f64) -> Polynomial {
        // (L - x)^k = sum_j C(k, j) L^(k-j) (-x)^j
        let mut out = vec![0.0; self.coeffs.len()];
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mut binom = 1.0;
            for (j, slot) in out.iter_mut().enumerate().take(k + 1) {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                *slot += c * binom * length.powi((k - j) as i32) * sign;
                binom = binom * (k - j) as f64 / (j + 1) as f64;
            }
        }
        Polynomial::new(out)
    }

    /// Classical derivative of the given order.
    pub fn derivative(&self, order: usize) -> Polynomial {
        if order == 0 {
            return self.clone();
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(order)
                .map(|(k, &c)| c * (k + 1 - order..=k).fold(1.0, |acc, i| acc * i as f64))
                .collect(),
        )
    }
}

/// One term `coeff * x^(power - order)` of a [`FracExpansion`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracTerm {
    pub power: u32,
    pub coeff: f64,
}

/// Finite sum `sum_i c_i x^(k_i - order)` with strictly increasing integer `k_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FracExpansion {
    order: f64,
    terms: Vec<FracTerm>,
}

impl FracExpansion {
    /// Builds an expansion from `(power, coeff)` pairs. Equal powers are summed
    /// and zero coefficients dropped.
    pub fn new(order: f64, terms: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut terms: Vec<FracTerm> = terms
            .into_iter()
            .map(|(power, coeff)| FracTerm { power, coeff })
            .collect();
        terms.sort_by_key(|t| t.power);
        let mut merged: Vec<FracTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.power == t.power => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        Self {
            order,
            terms: merged,
        }
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn terms(&self) -> &[FracTerm] {
        &self.terms
    }

    /// `(coefficient, real exponent)` pairs in increasing exponent order.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.terms
            .iter()
            .map(move |t| (t.coeff, t.power as f64 - self.order))
    }

    /// Coefficient of `x^(power - order)`, zero when absent.
    pub fn coeff_of(&self, power: u32) -> f64 {
        self.terms
            .iter()
            .find(|t| t.power == power)
            .map_or(0.0, |t| t.coeff)
    }

    pub fn scale(&self, factor: f64) -> FracExpansion {
        FracExpansion::new(
            self.order,
            self.terms.iter().map(|t| (t.power, t.coeff * factor)),
        )
    }

    /// Term-wise sum. Both operands must carry the same order.
    pub fn add(&self, other: &FracExpansion) -> FracExpansion {
        assert_eq!(
            self.order, other.order,
            "adding expansions of different order"
        );
        FracExpansion::new(
            self.order,
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|t| (t.power, t.coeff)),
        )
    }

    /// Value at `x >= 0`.
    ///
    /// At `x = 0` positive exponents contribute 0, a zero exponent its
    /// coefficient, and a negative exponent an infinity of its sign.
    pub fn eval(&self, x: f64) -> f64 {
        let Some(first) = self.terms.first() else {
            return 0.0;
        };
        if x == 0.0 {
            return self
                .pairs()
                .map(|(c, p)| match p.partial_cmp(&0.0) {
                    Some(std::cmp::Ordering::Greater) => 0.0,
                    Some(std::cmp::Ordering::Equal) => c,
                    _ => c.signum() * f64::INFINITY,
                })
                .sum();
        }
        // x^(k0 - a) * sum_i c_i x^(k_i - k0)
        let base = first.power;
        let poly = self.horner_from(x, base);
        poly * x.powf(base as f64 - self.order)
    }

    fn horner_from(&self, x: f64, base: u32) -> f64 {
        let mut acc = 0.0;
        let mut prev = self.terms.last().map_or(base, |t| t.power);
        for t in self.terms.iter().rev() {
            acc *= x.powi((prev - t.power) as i32);
            acc += t.coeff;
            prev = t.power;
        }
        acc * x.powi((prev - base) as i32)
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange(alpha))
    }
}

/// Riemann–Liouville derivative of order `alpha` in `(0, 2]` of a polynomial.
///
/// Monomials whose gamma denominator sits on a pole map to zero, so integer
/// orders reproduce classical differentiation.
pub fn rl_derivative(p: &Polynomial, alpha: f64) -> Result<FracExpansion> {
    check_order(alpha)?;
    Ok(FracExpansion::new(
        alpha,
        p.coeffs()
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, &c)| (k as u32, c * falling_gamma_ratio(k as u32, alpha))),
    ))
}

/// Pointwise evaluator of `d/d alpha [D^alpha p](x)`.
///
/// Per monomial the derivative is
/// `Gamma(k+1)/Gamma(k+1-a) * x^(k-a) * (psi(k+1-a) - ln x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSensitivity {
    derivative: FracExpansion,
    digammas: Vec<f64>,
}

impl AlphaSensitivity {
    pub fn order(&self) -> f64 {
        self.derivative.order
    }

    /// The fractional derivative this sensitivity belongs to.
    pub fn derivative(&self) -> &FracExpansion {
        &self.derivative
    }

    /// Value at `x >= 0`; the analytic limit 0 at the origin.
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).1
    }

    /// Evaluates `D^alpha p` and its order sensitivity at one point, sharing
    /// the power evaluations.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let terms = &self.derivative.terms;
        let Some(first) = terms.first() else {
            return (0.0, 0.0);
        };
        if x == 0.0 {
            return (self.derivative.eval(0.0), 0.0);
        }
        let base = first.power;
        let lead = x.powf(base as f64 - self.derivative.order);
        let mut weighted = 0.0;
        let mut plain = 0.0;
        let mut prev = terms.last().map_or(base, |t| t.power);
        for (t, psi) in terms.iter().zip(&self.digammas).rev() {
            let shift = x.powi((prev - t.power) as i32);
            weighted = weighted * shift + t.coeff * psi;
            plain = plain * shift + t.coeff;
            prev = t.power;
        }
        let scale = lead * x.powi((prev - base) as i32);
        (scale * plain, scale * (weighted - x.ln() * plain))
    }
}

/// Order sensitivity of the Riemann–Liouville derivative of `p`.
///
/// Every monomial power `k` present in `p` must satisfy `k > alpha`.
pub fn rl_alpha_sensitivity(p: &Polynomial, alpha: f64) -> Result<AlphaSensitivity> {
    check_order(alpha)?;
    for (k, &c) in p.coeffs().iter().enumerate() {
        if c != 0.0 && k as f64 - alpha <= 0.0 {
            return Err(Error::SensitivityDomain {
                power: k as u32,
                alpha,
            });
        }
    }
    let derivative = rl_derivative(p, alpha)?;
    let digammas = derivative
        .terms
        .iter()
        .map(|t| digamma(t.power as f64 + 1.0 - alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(AlphaSensitivity {
        derivative,
        digammas,
    })
}
