//! Modulating-function estimation of `(nu, d)` at a fixed order and the
//! two-stage Newton iteration that also recovers the order `alpha`.
//!
//! Multiplying the transport equation by `phi_n(L1 - x)`, integrating over
//! `[0, L1]` and moving every derivative onto the modulating function gives
//! one linear equation per member:
//!
//! ```text
//! A_n (-nu) + B_n d = C_n
//! A_n = int phi_n'(L1 - x) c(x) dx
//! B_n = int (D^alpha phi_n)(x) c(L1 - x) dx
//! C_n = int phi_n(L1 - x) (dc/dt(x) - r(x)) dx
//! ```
//!
//! On the uniform grid `L1 - x_j = x_(m-j)`, so all reflected samples are
//! read from mirrored indices and nothing is interpolated.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::modfun::{build_family, evaluate_on_grid, GridEval, ModulatingFamily, DEFAULT_OFFSET};
use crate::quadrature::trapezoid_product;
use crate::synthdata::MeasurementSet;

/// Relative singular-value threshold below which a system is rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Lower end of the admissible order range after projection.
pub const ALPHA_FLOOR: f64 = 1.0 + 1e-6;

/// Threshold on `<K', K'>` below which the Newton step is undefined.
pub const GRADIENT_FLOOR: f64 = 1e-30;

/// Overdetermined `N x 2` system `[first | second] * unknowns = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn new(first: Vec<f64>, second: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if first.len() < 2 || second.len() != first.len() || rhs.len() != first.len() {
            return Err(Error::InvalidConfig(format!(
                "system needs >= 2 rows of equal length, got {}/{}/{}",
                first.len(),
                second.len(),
                rhs.len()
            )));
        }
        let sys = Self { first, second, rhs };
        if !sys.all_finite() {
            return Err(Error::Data("non-finite entry in linear system".into()));
        }
        Ok(sys)
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    fn all_finite(&self) -> bool {
        self.first
            .iter()
            .chain(&self.second)
            .chain(&self.rhs)
            .all(|v| v.is_finite())
    }

    /// Row residual `first * u0 + second * u1 - rhs`.
    pub fn residual(&self, u0: f64, u1: f64) -> Vec<f64> {
        (0..self.rows())
            .map(|i| self.first[i] * u0 + self.second[i] * u1 - self.rhs[i])
            .collect()
    }
}

/// Least-squares solution of a [`LinearSystem`].
#[derive(Debug, Clone, PartialEq)]
pub struct TwoColumnSolution {
    pub unknowns: [f64; 2],
    /// Condition number after scaling both columns to unit norm, so it does
    /// not depend on the units of the unknowns.
    pub cond: f64,
    /// Ratio of the singular values of the unscaled `N x 2` matrix.
    pub sigma_ratio: f64,
    pub residual: Vec<f64>,
}

/// Solves the two-column least-squares problem through a singular value decomposition.
pub fn solve_two_column(sys: &LinearSystem) -> Result<TwoColumnSolution> {
    let n = sys.rows();
    let matrix = DMatrix::from_fn(
        n,
        2,
        |i, j| if j == 0 { sys.first[i] } else { sys.second[i] },
    );
    let svd = matrix.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.min();
    if !(sigma_min > RANK_TOLERANCE * sigma_max) {
        return Err(Error::RankDeficient {
            sigma_min,
            sigma_max,
        });
    }
    let solution = svd
        .solve(&DVector::from_column_slice(&sys.rhs), 0.0)
        .map_err(|e| Error::Data(e.to_string()))?;
    let unknowns = [solution[0], solution[1]];
    let mut scaled = matrix;
    for j in 0..2 {
        let norm = scaled.column(j).norm();
        scaled.column_mut(j).scale_mut(1.0 / norm);
    }
    let sv = scaled.singular_values();
    Ok(TwoColumnSolution {
        unknowns,
        cond: sv.max() / sv.min(),
        sigma_ratio: sigma_max / sigma_min,
        residual: sys.residual(unknowns[0], unknowns[1]),
    })
}

/// Velocity and dispersion from a fixed-order system.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityDispersion {
    pub nu: f64,
    pub d: f64,
    pub cond: f64,
}

/// Least-squares `(nu, d)` of a system whose unknown vector is `(-nu, d)`.
pub fn solve_2col_least_squares(sys: &LinearSystem) -> Result<VelocityDispersion> {
    let sol = solve_two_column(sys)?;
    Ok(VelocityDispersion {
        nu: -sol.unknowns[0],
        d: sol.unknowns[1],
        cond: sol.cond,
    })
}

/// Checks that `ge` lives on the first `ge.len()` nodes of the measurement grid.
fn check_alignment(ms: &MeasurementSet, ge: &GridEval) -> Result<usize> {
    let m = ge.len();
    if m > ms.len() {
        return Err(Error::GridMismatch(format!(
            "{m} modulating nodes exceed {} measurement nodes",
            ms.len()
        )));
    }
    if (ge.dx - ms.dx).abs() > 1e-9 * ms.dx {
        return Err(Error::GridMismatch(format!(
            "modulating spacing {} differs from measurement spacing {}",
            ge.dx, ms.dx
        )));
    }
    Ok(m)
}

/// Fixed-order system for `(-nu, d)` from the noisy measurements.
pub fn assemble_theorem1(ms: &MeasurementSet, ge: &GridEval) -> Result<LinearSystem> {
    let m = check_alignment(ms, ge)?;
    let last = m - 1;
    let (c, dcdt, r) = (&ms.c_noisy, &ms.dcdt_noisy, &ms.r);
    let mut first = Vec::with_capacity(ge.phi.len());
    let mut second = Vec::with_capacity(ge.phi.len());
    let mut rhs = Vec::with_capacity(ge.phi.len());
    for n in 0..ge.phi.len() {
        let (phi, dphi, frac) = (&ge.phi[n], &ge.dphi_dx[n], &ge.dalpha_phi[n]);
        first.push(trapezoid_product(m, ge.dx, |j| dphi[last - j], |j| c[j]));
        second.push(trapezoid_product(m, ge.dx, |j| frac[j], |j| c[last - j]));
        rhs.push(trapezoid_product(
            m,
            ge.dx,
            |j| phi[last - j],
            |j| dcdt[j] - r[j],
        ));
    }
    LinearSystem::new(first, second, rhs)
}

/// System for the order derivatives `(d'(alpha), -nu'(alpha))`.
///
/// Its columns are the fixed-order columns swapped; only the right-hand side
/// `-d * int (d/dalpha D^alpha phi_n)(x) c(L1 - x) dx` is new.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySystem {
    pub system: LinearSystem,
    /// `int (d/dalpha D^alpha phi_n)(x) c(L1 - x) dx` per member.
    pub order_column: Vec<f64>,
}

pub fn assemble_prop1(
    ms: &MeasurementSet,
    ge: &GridEval,
    fixed_order: &LinearSystem,
    d_of_alpha: f64,
) -> Result<SensitivitySystem> {
    let m = check_alignment(ms, ge)?;
    if fixed_order.rows() != ge.phi.len() {
        return Err(Error::GridMismatch(
            "system and grid evaluation disagree on member count".into(),
        ));
    }
    let last = m - 1;
    let c = &ms.c_noisy;
    let order_column: Vec<f64> = ge
        .dalpha_dalpha_phi
        .iter()
        .map(|row| trapezoid_product(m, ge.dx, |j| row[j], |j| c[last - j]))
        .collect();
    let system = LinearSystem::new(
        fixed_order.second.clone(),
        fixed_order.first.clone(),
        order_column.iter().map(|v| -d_of_alpha * v).collect(),
    )?;
    Ok(SensitivitySystem {
        system,
        order_column,
    })
}

/// `K(alpha) = -nu A + d B` and `U = C` for every member.
pub fn residual_k_u(sys: &LinearSystem, nu: f64, d: f64) -> (Vec<f64>, Vec<f64>) {
    let k = sys
        .first
        .iter()
        .zip(&sys.second)
        .map(|(a, b)| -nu * a + d * b)
        .collect();
    (k, sys.rhs.clone())
}

/// `K'(alpha) = d' B - nu' A + d * order_column`.
pub fn gradient_k_prime(
    sys: &LinearSystem,
    order_column: &[f64],
    d: f64,
    dnu_dalpha: f64,
    dd_dalpha: f64,
) -> Vec<f64> {
    sys.first
        .iter()
        .zip(&sys.second)
        .zip(order_column)
        .map(|((a, b), s)| dd_dalpha * b - dnu_dalpha * a + d * s)
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modulating family and quadrature window matched to a measurement grid.
///
/// `L1` is snapped to the nearest measurement node.
#[derive(Debug, Clone)]
pub struct Window<'a> {
    ms: &'a MeasurementSet,
    family: ModulatingFamily,
    points: usize,
}

impl<'a> Window<'a> {
    pub fn new(ms: &'a MeasurementSet, l1: f64, count: u32, offset: u32) -> Result<Self> {
        let intervals = (l1 / ms.dx).round();
        if !(intervals >= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "L1 = {l1} spans fewer than 2 grid intervals"
            )));
        }
        let intervals = intervals as usize;
        if intervals + 1 > ms.len() {
            return Err(Error::InvalidConfig(format!(
                "L1 = {l1} exceeds the measured domain length {}",
                ms.length()
            )));
        }
        let family = build_family(count, offset, intervals as f64 * ms.dx)?;
        Ok(Self {
            ms,
            family,
            points: intervals + 1,
        })
    }

    pub fn family(&self) -> &ModulatingFamily {
        &self.family
    }

    /// Snapped interval length.
    pub fn l1(&self) -> f64 {
        self.family.length()
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn grid_eval(&self, alpha: f64) -> Result<GridEval> {
        evaluate_on_grid(&self.family, alpha, self.points)
    }

    /// Stage 1: least-squares `(nu, d)` at a fixed order.
    pub fn fixed_order(&self, alpha: f64) -> Result<FixedOrderFit> {
        let ge = self.grid_eval(alpha)?;
        let system = assemble_theorem1(self.ms, &ge)?;
        let fit = solve_2col_least_squares(&system)?;
        Ok(FixedOrderFit { ge, system, fit })
    }

    /// Stage 1 plus the order derivatives and `K'` at `alpha`.
    pub fn linearize(&self, alpha: f64) -> Result<Linearization> {
        let stage = self.fixed_order(alpha)?;
        let (k, u) = residual_k_u(&stage.system, stage.fit.nu, stage.fit.d);
        let sens = assemble_prop1(self.ms, &stage.ge, &stage.system, stage.fit.d)?;
        let derivs = solve_two_column(&sens.system)?;
        let (dd, dnu) = (derivs.unknowns[0], -derivs.unknowns[1]);
        let k_prime = gradient_k_prime(&stage.system, &sens.order_column, stage.fit.d, dnu, dd);
        Ok(Linearization {
            alpha,
            nu: stage.fit.nu,
            d: stage.fit.d,
            dnu_dalpha: dnu,
            dd_dalpha: dd,
            cond: stage.fit.cond,
            k,
            u,
            k_prime,
        })
    }

    pub fn measurements(&self) -> &MeasurementSet {
        self.ms
    }
}

#[derive(Debug, Clone)]
pub struct FixedOrderFit {
    pub ge: GridEval,
    pub system: LinearSystem,
    pub fit: VelocityDispersion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub alpha: f64,
    pub nu: f64,
    pub d: f64,
    pub dnu_dalpha: f64,
    pub dd_dalpha: f64,
    pub cond: f64,
    pub k: Vec<f64>,
    pub u: Vec<f64>,
    pub k_prime: Vec<f64>,
}

impl Linearization {
    /// `J(alpha) = |K - U|^2`
    pub fn cost(&self) -> f64 {
        self.k
            .iter()
            .zip(&self.u)
            .map(|(k, u)| (k - u).powi(2))
            .sum()
    }
}

/// Known-order estimate of `(nu, d)`.
pub fn estimate_two_param(
    ms: &MeasurementSet,
    l1: f64,
    count: u32,
    offset: u32,
    alpha: f64,
) -> Result<VelocityDispersion> {
    Ok(Window::new(ms, l1, count, offset)?.fixed_order(alpha)?.fit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Integration interval length, snapped to the measurement grid.
    pub l1: f64,
    /// Number of modulating functions.
    pub count: u32,
    /// Order offset `b`.
    pub offset: u32,
    pub alpha0: f64,
    /// Stop when `J < epsilon`; `None` uses `1e-10 * |U|^2`.
    pub epsilon: Option<f64>,
    pub max_iter: usize,
    pub step_clamp: f64,
    /// Stop when the projected order update is at most this large.
    pub step_tol: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            l1: 9.0,
            count: 7,
            offset: DEFAULT_OFFSET,
            alpha0: 1.4,
            epsilon: None,
            max_iter: 50,
            step_clamp: 0.2,
            step_tol: 1e-10,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 1.0 && self.alpha0 <= 2.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha0 = {} not in (1, 2]",
                self.alpha0
            )));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "epsilon = {eps} must be positive"
                )));
            }
        }
        if self.count < 3 {
            return Err(Error::InvalidConfig(format!(
                "order estimation needs at least 3 modulating functions, got {}",
                self.count
            )));
        }
        if !(self.step_clamp > 0.0) || !(self.step_tol >= 0.0) {
            return Err(Error::InvalidConfig(
                "step_clamp must be > 0 and step_tol >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `J(alpha_k) < epsilon`.
    Residual,
    /// The projected order update fell below `step_tol`.
    Stationary,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Residual => "residual",
            StopReason::Stationary => "stationary",
            StopReason::MaxIterations => "max_iterations",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub alpha: f64,
    pub cost: f64,
    pub nu: f64,
    pub d: f64,
    pub cond: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub nu: f64,
    pub d: f64,
    pub alpha: f64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub stop: StopReason,
    pub residual_final: f64,
    /// Effective `epsilon` used for the residual test.
    pub epsilon: f64,
    pub cond: f64,
}

impl EstimateResult {
    /// Number of order updates performed.
    pub fn updates(&self) -> usize {
        self.iterations.len().saturating_sub(1)
    }
}

/// Two-stage estimation of `(nu, d, alpha)`.
///
/// Each iterate refits `(nu, d)` at the current order, then takes the
/// Gauss–Newton step `<K', U - K> / <K', K'>` over all members, clamped to
/// `step_clamp` and projected into `[1 + 1e-6, 2]`.
pub fn newton_estimate(ms: &MeasurementSet, config: &EstimatorConfig) -> Result<EstimateResult> {
    config.validate()?;
    let window = Window::new(ms, config.l1, config.count, config.offset)?;
    let mut alpha = config.alpha0;
    let mut history = Vec::new();
    let mut epsilon = config.epsilon.unwrap_or(f64::NAN);
    let mut best: Option<(f64, Linearization)> = None;
    let mut stop = StopReason::MaxIterations;
    let mut last = None;

    for k in 0..=config.max_iter {
        let lin = window.linearize(alpha)?;
        let cost = lin.cost();
        if epsilon.is_nan() {
            epsilon = 1e-10 * dot(&lin.u, &lin.u);
        }
        history.push(IterationRecord {
            alpha,
            cost,
            nu: lin.nu,
            d: lin.d,
            cond: lin.cond,
        });
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, lin.clone()));
        }
        if cost < epsilon {
            stop = StopReason::Residual;
            last = Some(lin);
            break;
        }
        if k == config.max_iter {
            break;
        }
        let gram = dot(&lin.k_prime, &lin.k_prime);
        if !(gram >= GRADIENT_FLOOR) {
            return Err(Error::GradientDegenerate(gram));
        }
        let mismatch: Vec<f64> = lin.u.iter().zip(&lin.k).map(|(u, k)| u - k).collect();
        let step =
            (dot(&lin.k_prime, &mismatch) / gram).clamp(-config.step_clamp, config.step_clamp);
        let next = (alpha + step).clamp(ALPHA_FLOOR, 2.0);
        if (next - alpha).abs() <= config.step_tol {
            stop = StopReason::Stationary;
            last = Some(lin);
            break;
        }
        alpha = next;
    }

    let converged = stop != StopReason::MaxIterations;
    let (residual_final, chosen) = match last {
        Some(lin) => (lin.cost(), lin),
        None => best.expect("at least one iterate"),
    };
    Ok(EstimateResult {
        nu: chosen.nu,
        d: chosen.d,
        alpha: chosen.alpha,
        iterations: history,
        converged,
        stop,
        residual_final,
        epsilon,
        cond: chosen.cond,
    })
}
