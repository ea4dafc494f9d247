//! Synthetic final-time measurements for the manufactured solution
//! `c(x, t) = cos(-t) x (L - x)`.
//!
//! The source term is the residual closure
//! `r = dc/dt + nu dc/dx - d D^alpha c`, so the transport equation holds
//! exactly for every choice of `(nu, d, alpha)`. `D^alpha c` carries an
//! `x^(1-alpha)` term which diverges at the origin; the sample at `x = 0` is
//! stored as 0.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fracpoly::{rl_derivative, Polynomial};

/// Ground-truth parameters of the transport equation and the measurement time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueModel {
    pub nu: f64,
    pub d: f64,
    pub alpha: f64,
    pub length: f64,
    pub time: f64,
}

impl TrueModel {
    /// The worked example on `[0, 9]` at `T = 1`.
    pub fn example(nu: f64, d: f64, alpha: f64) -> Self {
        Self {
            nu,
            d,
            alpha,
            length: 9.0,
            time: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            return Err(Error::InvalidModel(format!(
                "alpha = {} not in (1, 2]",
                self.alpha
            )));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "length = {} must be positive",
                self.length
            )));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "d = {} must be positive",
                self.d
            )));
        }
        if !self.nu.is_finite() || !self.time.is_finite() {
            return Err(Error::InvalidModel("nu and time must be finite".into()));
        }
        Ok(())
    }

    /// Spatial factor `x (L - x)` as a polynomial.
    fn profile(&self) -> Polynomial {
        Polynomial::new(vec![0.0, self.length, -1.0])
    }
}

/// Uniform grid `x_j = j * dx` on `[0, length]` with `intervals + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub length: f64,
    pub intervals: usize,
}

impl UniformGrid {
    pub fn new(length: f64, intervals: usize) -> Self {
        Self { length, intervals }
    }

    /// Grid whose spacing is `spacing` snapped so that it divides `length`.
    pub fn with_spacing(length: f64, spacing: f64) -> Result<Self> {
        let intervals = (length / spacing).round();
        if !(intervals >= 1.0 && intervals.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "spacing {spacing} does not fit in length {length}"
            )));
        }
        Ok(Self::new(length, intervals as usize))
    }

    pub fn dx(&self) -> f64 {
        self.length / self.intervals as f64
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.intervals {
            self.length
        } else {
            j as f64 * self.dx()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.node(j))
    }
}

/// Provenance of the noise in a [`MeasurementSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

/// Final-time samples of concentration, flux and source on a uniform grid.
///
/// `c_noisy` and `dcdt_noisy` are what the estimator sees; for clean data they
/// are copies of `c` and `dcdt`. `noise` is `None` for clean synthetic data
/// and for data loaded from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub dx: f64,
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    pub dcdt: Vec<f64>,
    pub r: Vec<f64>,
    pub c_noisy: Vec<f64>,
    pub dcdt_noisy: Vec<f64>,
    pub noise: Option<NoiseSpec>,
}

impl MeasurementSet {
    /// Clean measurements from arbitrary samples on `x_j = j * dx`.
    pub fn from_samples(dx: f64, c: Vec<f64>, dcdt: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        let n = c.len();
        if n < 3 || dcdt.len() != n || r.len() != n {
            return Err(Error::Data(format!(
                "need >= 3 samples of equal length, got c={}, dcdt={}, r={}",
                n,
                dcdt.len(),
                r.len()
            )));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::Data(format!("grid spacing {dx} must be positive")));
        }
        Ok(Self {
            dx,
            x: (0..n).map(|j| j as f64 * dx).collect(),
            c_noisy: c.clone(),
            dcdt_noisy: dcdt.clone(),
            c,
            dcdt,
            r,
            noise: None,
        })
    }

    /// Synthesizes clean measurements of `model` on `grid`.
    pub fn synthesize(model: &TrueModel, grid: &UniformGrid) -> Result<Self> {
        let (c, dcdt) = exact_solution(model, grid)?;
        let r = source_term(model, grid)?;
        let mut ms = Self::from_samples(grid.dx(), c, dcdt, r)?;
        ms.x = grid.nodes().collect();
        Ok(ms)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Domain length covered by the samples.
    pub fn length(&self) -> f64 {
        (self.len() - 1) as f64 * self.dx
    }

    /// Writes `x,c,dcdt,r,c_noisy,dcdt_noisy` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,c,dcdt,r,c_noisy,dcdt_noisy")?;
        for j in 0..self.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.x[j], self.c[j], self.dcdt[j], self.r[j], self.c_noisy[j], self.dcdt_noisy[j]
            )?;
        }
        Ok(())
    }

    /// Reads the format produced by [`MeasurementSet::write_csv`].
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data("empty input".into()))?
            .map_err(|e| Error::Data(e.to_string()))?;
        if header.trim() != "x,c,dcdt,r,c_noisy,dcdt_noisy" {
            return Err(Error::Data(format!("unexpected header {header:?}")));
        }
        let mut cols: [Vec<f64>; 6] = Default::default();
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Data(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(Error::Data(format!(
                    "line {}: expected 6 fields",
                    lineno + 2
                )));
            }
            for (col, field) in cols.iter_mut().zip(fields) {
                col.push(
                    field
                        .trim()
                        .parse()
                        .map_err(|e| Error::Data(format!("line {}: {e}", lineno + 2)))?,
                );
            }
        }
        let [x, c, dcdt, r, c_noisy, dcdt_noisy] = cols;
        if x.len() < 3 {
            return Err(Error::Data("need at least 3 rows".into()));
        }
        let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
        let uniform = x
            .iter()
            .enumerate()
            .all(|(j, &xj)| (xj - j as f64 * dx).abs() <= 1e-9 * dx.max(x[x.len() - 1].abs()));
        if x[0] != 0.0 || !uniform {
            return Err(Error::Data("grid must be uniform and start at 0".into()));
        }
        Ok(Self {
            dx,
            x,
            c,
            dcdt,
            r,
            c_noisy,
            dcdt_noisy,
            noise: None,
        })
    }
}

/// Concentration and flux of the manufactured solution at time `model.time`.
pub fn exact_solution(model: &TrueModel, grid: &UniformGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    model.validate()?;
    let profile = model.profile();
    let (cos_t, sin_t) = ((-model.time).cos(), (-model.time).sin());
    Ok(grid
        .nodes()
        .map(|x| {
            let s = profile.eval(x);
            (cos_t * s, sin_t * s)
        })
        .unzip())
}

/// Source term making the manufactured solution exact; 0 at the origin.
pub fn source_term(model: &TrueModel, grid: &UniformGrid) -> Result<Vec<f64>> {
    model.validate()?;
    let profile = model.profile();
    let slope = profile.derivative(1);
    let frac = rl_derivative(&profile, model.alpha)?;
    let (cos_t, sin_t) = ((-model.time).cos(), (-model.time).sin());
    Ok(grid
        .nodes()
        .map(|x| {
            if x == 0.0 {
                0.0
            } else {
                sin_t * profile.eval(x)
                    + cos_t * (model.nu * slope.eval(x) - model.d * frac.eval(x))
            }
        })
        .collect())
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// Adds white Gaussian noise with standard deviation `level * rms(clean)` to
/// the concentration and the flux. The clean arrays are kept; draws come from
/// ChaCha20 seeded with `seed`, concentration first, then flux.
pub fn add_noise(ms: &MeasurementSet, level: f64, seed: u64) -> Result<MeasurementSet> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise level {level} must be >= 0"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut perturb = |clean: &[f64]| -> Vec<f64> {
        let sigma = level * rms(clean);
        clean
            .iter()
            .map(|&v| {
                let xi: f64 = StandardNormal.sample(&mut rng);
                v + sigma * xi
            })
            .collect()
    };
    let c_noisy = perturb(&ms.c);
    let dcdt_noisy = perturb(&ms.dcdt);
    Ok(MeasurementSet {
        c_noisy,
        dcdt_noisy,
        noise: Some(NoiseSpec { level, seed }),
        ..ms.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;

    fn example_grid() -> UniformGrid {
        UniformGrid::new(9.0, 18)
    }

    #[test]
    fn closed_form_values() {
        let model = TrueModel::example(0.2, 1.0, 1.8);
        let grid = example_grid();
        let (c, dcdt) = exact_solution(&model, &grid).unwrap();
        assert_eq!(c[0], 0.0);
        assert_eq!(c[18], 0.0);
        // x = 4.5 is node 9
        assert!((c[9] - 20.25 * 1f64.cos()).abs() < 1e-13);
        assert!((c[9] - 10.941_122).abs() < 1e-6);
        assert!((dcdt[9] + 17.039_788).abs() < 1e-6);
    }

    #[test]
    fn initial_condition_is_parabola() {
        let model = TrueModel {
            time: 0.0,
            ..TrueModel::example(0.2, 1.0, 1.8)
        };
        let grid = example_grid();
        let (c, _) = exact_solution(&model, &grid).unwrap();
        for (x, v) in grid.nodes().zip(c) {
            assert!((v - x * (9.0 - x)).abs() < 1e-13);
        }
    }

    #[test]
    fn source_matches_displayed_bracket() {
        let model = TrueModel::example(0.2, 1.0, 1.8);
        let grid = example_grid();
        let r = source_term(&model, &grid).unwrap();
        assert_eq!(r[0], 0.0);
        let t = 1.0f64;
        for (j, x) in grid.nodes().enumerate().skip(1) {
            let bracket = 0.2 * (9.0 - 2.0 * x)
                - (9.0 * gamma(2.0).unwrap() / gamma(0.2).unwrap() * x.powf(-0.8)
                    - gamma(3.0).unwrap() / gamma(1.2).unwrap() * x.powf(0.2));
            let flux = (-t).sin() * x * (9.0 - x);
            let expected = (-t).cos() * bracket + flux;
            assert!(
                (r[j] - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                "x = {x}"
            );
        }
    }

    #[test]
    fn source_diverges_near_origin() {
        let model = TrueModel::example(0.2, 1.0, 1.8);
        let r = source_term(&model, &UniformGrid::new(1e-6, 1)).unwrap();
        // x = 1e-6: x^-0.8 term is ~ 6e4
        assert!(r[1].abs() > 1e3);
    }

    #[test]
    fn pde_residual_vanishes() {
        // independent evaluation of every term straight from the gamma function
        for model in [
            TrueModel::example(0.2, 1.0, 1.8),
            TrueModel::example(0.5, 1.0, 1.8),
            TrueModel {
                nu: -0.7,
                d: 2.5,
                alpha: 1.3,
                length: 4.0,
                time: 2.2,
            },
            TrueModel {
                nu: 0.0,
                d: 0.1,
                alpha: 2.0,
                length: 1.0,
                time: 0.3,
            },
        ] {
            let grid = UniformGrid::new(model.length, 40);
            let (c, dcdt) = exact_solution(&model, &grid).unwrap();
            let r = source_term(&model, &grid).unwrap();
            let (l, a, t) = (model.length, model.alpha, model.time);
            for (j, x) in grid.nodes().enumerate().skip(1) {
                let dcdx = (-t).cos() * (l - 2.0 * x);
                let frac = (-t).cos()
                    * (l * x.powf(1.0 - a) / gamma_or_inf(2.0 - a)
                        - 2.0 * x.powf(2.0 - a) / gamma(3.0 - a).unwrap());
                let residual = dcdt[j] + model.nu * dcdx - model.d * frac - r[j];
                let scale =
                    dcdt[j].abs() + (model.nu * dcdx).abs() + (model.d * frac).abs() + r[j].abs();
                assert!(residual.abs() <= 1e-10 * scale, "x = {x}: {residual}");
                let _ = c[j];
            }
        }
    }

    fn gamma_or_inf(z: f64) -> f64 {
        gamma(z).unwrap_or(f64::INFINITY)
    }

    #[test]
    fn invalid_model_rejected() {
        let grid = example_grid();
        for m in [
            TrueModel::example(0.2, 1.0, 1.0),
            TrueModel::example(0.2, 1.0, 2.1),
            TrueModel::example(0.2, 0.0, 1.8),
            TrueModel {
                length: -1.0,
                ..TrueModel::example(0.2, 1.0, 1.8)
            },
        ] {
            assert!(matches!(
                exact_solution(&m, &grid),
                Err(Error::InvalidModel(_))
            ));
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let model = TrueModel::example(0.2, 1.0, 1.8);
        let ms = MeasurementSet::synthesize(&model, &example_grid()).unwrap();
        let noisy = add_noise(&ms, 0.0, 7).unwrap();
        assert_eq!(noisy.c_noisy, ms.c);
        assert_eq!(noisy.dcdt_noisy, ms.dcdt);
        assert_eq!(
            noisy.noise,
            Some(NoiseSpec {
                level: 0.0,
                seed: 7
            })
        );
    }

    #[test]
    fn noise_is_deterministic_and_scaled() {
        let model = TrueModel::example(0.2, 1.0, 1.8);
        let grid = UniformGrid::with_spacing(9.0, 1.0 / 1500.0).unwrap();
        assert_eq!(grid.len(), 13501);
        let ms = MeasurementSet::synthesize(&model, &grid).unwrap();
        let a = add_noise(&ms, 0.03, 42).unwrap();
        let b = add_noise(&ms, 0.03, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(add_noise(&ms, 0.03, 43).unwrap().c_noisy, a.c_noisy);
        assert_eq!(a.c, ms.c);
        for (clean, noisy) in [(&ms.c, &a.c_noisy), (&ms.dcdt, &a.dcdt_noisy)] {
            let diff: Vec<f64> = noisy.iter().zip(clean.iter()).map(|(n, c)| n - c).collect();
            let mean = diff.iter().sum::<f64>() / diff.len() as f64;
            let sd = (diff.iter().map(|d| (d - mean).powi(2)).sum::<f64>()
                / (diff.len() - 1) as f64)
                .sqrt();
            let target = 0.03 * rms(clean);
            assert!(
                (sd - target).abs() <= 0.05 * target,
                "sd {sd} target {target}"
            );
        }
    }

    #[test]
    fn csv_round_trip() {
        let model = TrueModel::example(0.5, 1.0, 1.8);
        let ms = add_noise(
            &MeasurementSet::synthesize(&model, &example_grid()).unwrap(),
            0.02,
            3,
        )
        .unwrap();
        let mut buf = Vec::new();
        ms.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,c,dcdt,r,c_noisy,dcdt_noisy\n"));
        let back = MeasurementSet::read_csv(&buf[..]).unwrap();
        assert_eq!(back.c, ms.c);
        assert_eq!(back.dcdt_noisy, ms.dcdt_noisy);
        assert_eq!(back.r, ms.r);
        assert_eq!(back.x, ms.x);
        assert!((back.dx - ms.dx).abs() < 1e-15);
        assert!(MeasurementSet::read_csv("x,c\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn spacing_snaps_to_divisor() {
        let g = UniformGrid::with_spacing(9.0, 1.0 / 3500.0).unwrap();
        assert_eq!(g.len(), 31501);
        assert_eq!(g.node(g.intervals), 9.0);
        assert!(UniformGrid::with_spacing(9.0, 100.0).is_err());
    }
}
