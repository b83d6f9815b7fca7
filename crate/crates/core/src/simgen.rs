//! Random linear-Gaussian time-series SCMs and their simulation.

use log::debug;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::graph::{expand_from_slice_as, Edge, GraphKind, NodeId, WindowGraph};

/// Reduced-form spectral radius must stay below `1 - STATIONARITY_MARGIN`.
pub const STATIONARITY_MARGIN: f64 = 1e-6;

/// Cross-link coefficient magnitudes; each is drawn with a random sign.
pub const COEFFICIENT_MAGNITUDES: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Lower bound of the self-link coefficient interval `[lo, a]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AutocorrLower {
    /// `min(0.1, a - 0.3)`
    #[default]
    Unclamped,
    /// `max(0.1, a - 0.3)`
    Clamped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    #[serde(rename = "N")]
    pub n_vars: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub d: f64,
    pub frac_contemporaneous: f64,
    pub a: f64,
    pub tau_max: usize,
    pub burn_in_factor: f64,
    pub rng_seed: u64,
    pub noise_std: f64,
    pub autocorr_lower: AutocorrLower,
    pub max_attempts: usize,
    /// Overrides every self-link coefficient. Test hook.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forced_self_coeff: Option<f64>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_vars: 5,
            t: 1000,
            k: 100,
            d: 1.5,
            frac_contemporaneous: 0.3,
            a: 0.3,
            tau_max: 3,
            burn_in_factor: 0.2,
            rng_seed: 0,
            noise_std: 1.0,
            autocorr_lower: AutocorrLower::Unclamped,
            max_attempts: 1000,
            forced_self_coeff: None,
        }
    }
}

impl GenConfig {
    /// `floor(d * N)` cross-links.
    pub fn num_links(&self) -> usize {
        (self.d * self.n_vars as f64).floor() as usize
    }

    pub fn num_contemporaneous(&self) -> usize {
        (self.frac_contemporaneous * self.num_links() as f64).round() as usize
    }

    pub fn burn_in(&self) -> usize {
        (self.burn_in_factor * self.t as f64).round() as usize
    }

    pub fn self_coeff_range(&self) -> (f64, f64) {
        let lo = match self.autocorr_lower {
            AutocorrLower::Unclamped => f64::min(0.1, self.a - 0.3),
            AutocorrLower::Clamped => f64::max(0.1, self.a - 0.3),
        };
        (lo, self.a)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.n_vars == 0 || self.t == 0 || self.k == 0 {
            return bad("N, T and K must be positive".into());
        }
        if self.tau_max == 0 {
            return bad("tau_max must be at least 1 for the lag-1 self-links".into());
        }
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return bad(format!("density {} must be nonnegative", self.d));
        }
        if !(0.0..=1.0).contains(&self.frac_contemporaneous) {
            return bad("frac_contemporaneous must lie in [0, 1]".into());
        }
        if !(self.burn_in_factor >= 0.0 && self.burn_in_factor.is_finite()) {
            return bad("burn_in_factor must be nonnegative".into());
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be positive".into());
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be positive".into());
        }
        let (lo, hi) = self.self_coeff_range();
        if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
            return bad(format!("empty autocorrelation interval [{lo}, {hi}]"));
        }
        let n = self.n_vars;
        let nc = self.num_contemporaneous();
        let nl = self.num_links() - nc;
        if nc > n * (n - 1) / 2 || nl > n * (n - 1) * self.tau_max {
            return bad(format!(
                "{} links do not fit {n} variables without duplicates",
                self.num_links()
            ));
        }
        Ok(())
    }
}

/// `X_t^j = sum_{i, tau} coeffs[tau][(j, i)] X_{t-tau}^i + eps_t^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearTsScm {
    m: usize,
    tau_max: usize,
    coeffs: Vec<DMatrix<f64>>,
    noise_std: Vec<f64>,
}

impl LinearTsScm {
    /// All-zero model with the given noise scales.
    pub fn zeros(m: usize, tau_max: usize, noise_std: Vec<f64>) -> Result<Self> {
        if noise_std.len() != m || noise_std.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput("need one positive noise std per variable".into()));
        }
        Ok(LinearTsScm {
            m,
            tau_max,
            coeffs: vec![DMatrix::zeros(m, m); tau_max + 1],
            noise_std,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tau_max(&self) -> usize {
        self.tau_max
    }

    pub fn noise_std(&self) -> &[f64] {
        &self.noise_std
    }

    /// Coefficient of `X^from_{t-lag}` in the equation of `X^to_t`.
    pub fn coefficient(&self, from: usize, to: usize, lag: usize) -> f64 {
        self.coeffs[lag][(to, from)]
    }

    pub fn set_coefficient(&mut self, from: usize, to: usize, lag: usize, value: f64) -> Result<()> {
        if from >= self.m || to >= self.m || lag > self.tau_max {
            return Err(Error::InvalidInput("coefficient index outside the model".into()));
        }
        if lag == 0 && from == to {
            return Err(Error::InvalidInput("contemporaneous self-loop".into()));
        }
        self.coeffs[lag][(to, from)] = value;
        Ok(())
    }

    /// Nonzero coefficients as `(from, to, lag, value)`.
    pub fn links(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for (lag, a) in self.coeffs.iter().enumerate() {
            for to in 0..self.m {
                for from in 0..self.m {
                    let v = a[(to, from)];
                    if v != 0.0 {
                        out.push((from, to, lag, v));
                    }
                }
            }
        }
        out
    }

    /// Variables ordered so that every contemporaneous link points forward.
    pub fn contemporaneous_order(&self) -> Result<Vec<usize>> {
        let a0 = &self.coeffs[0];
        let m = self.m;
        let mut indeg: Vec<usize> = (0..m)
            .map(|j| (0..m).filter(|&i| a0[(j, i)] != 0.0).count())
            .collect();
        let mut ready: Vec<usize> = (0..m).rev().filter(|&j| indeg[j] == 0).collect();
        let mut order = Vec::with_capacity(m);
        while let Some(i) = ready.pop() {
            order.push(i);
            for j in (0..m).rev() {
                if a0[(j, i)] != 0.0 {
                    indeg[j] -= 1;
                    if indeg[j] == 0 {
                        ready.push(j);
                    }
                }
            }
        }
        if order.len() != m {
            return Err(Error::InvalidModel("contemporaneous links form a cycle".into()));
        }
        Ok(order)
    }

    /// Companion matrix of the reduced-form VAR `B_tau = (I - A_0)^-1 A_tau`.
    pub fn companion_matrix(&self) -> Result<DMatrix<f64>> {
        self.contemporaneous_order()?;
        let m = self.m;
        let k = self.tau_max;
        if k == 0 {
            return Ok(DMatrix::zeros(0, 0));
        }
        let inv = (DMatrix::identity(m, m) - &self.coeffs[0])
            .try_inverse()
            .ok_or_else(|| Error::InvalidModel("I - A_0 is singular".into()))?;
        let mut c = DMatrix::zeros(m * k, m * k);
        for tau in 1..=k {
            let b = &inv * &self.coeffs[tau];
            c.view_mut((0, (tau - 1) * m), (m, m)).copy_from(&b);
        }
        for r in m..m * k {
            c[(r, r - m)] = 1.0;
        }
        Ok(c)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        let c = self.companion_matrix()?;
        if c.nrows() == 0 {
            return Ok(0.0);
        }
        let eig = c
            .complex_eigenvalues();
        Ok(eig.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }
}

/// True iff the reduced-form spectral radius is below `1 - 1e-6`.
pub fn stationarity_check(model: &LinearTsScm) -> Result<bool> {
    Ok(model.spectral_radius()? < 1.0 - STATIONARITY_MARGIN)
}

fn draw_model<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Result<LinearTsScm> {
    let n = cfg.n_vars;
    let mut model = LinearTsScm::zeros(n, cfg.tau_max, vec![cfg.noise_std; n])?;
    let (lo, hi) = cfg.self_coeff_range();
    for j in 0..n {
        let c = match cfg.forced_self_coeff {
            Some(c) => c,
            None if lo < hi => rng.random_range(lo..=hi),
            None => lo,
        };
        model.set_coefficient(j, j, 1, c)?;
    }

    let mut hidden: Vec<usize> = (0..n).collect();
    hidden.shuffle(rng);
    let mut contemporaneous: Vec<(usize, usize, usize)> = Vec::new();
    for p in 0..n {
        for q in p + 1..n {
            contemporaneous.push((hidden[p], hidden[q], 0));
        }
    }
    contemporaneous.shuffle(rng);
    contemporaneous.truncate(cfg.num_contemporaneous());

    let mut lagged: Vec<(usize, usize, usize)> = Vec::new();
    for lag in 1..=cfg.tau_max {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    lagged.push((i, j, lag));
                }
            }
        }
    }
    lagged.shuffle(rng);
    lagged.truncate(cfg.num_links() - cfg.num_contemporaneous());

    for (from, to, lag) in contemporaneous.into_iter().chain(lagged) {
        let mag = COEFFICIENT_MAGNITUDES[rng.random_range(0..COEFFICIENT_MAGNITUDES.len())];
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        model.set_coefficient(from, to, lag, sign * mag)?;
    }
    Ok(model)
}

/// Draws models until one is stationary.
pub fn sample_model<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Result<LinearTsScm> {
    cfg.validate()?;
    for attempt in 0..cfg.max_attempts {
        let model = draw_model(cfg, rng)?;
        if stationarity_check(&model)? {
            return Ok(model);
        }
        debug!("draw {attempt} rejected as non-stationary");
    }
    Err(Error::GenerationFailure(format!(
        "no stationary model in {} draws",
        cfg.max_attempts
    )))
}

/// Iterates the structural equations from zero initial conditions for
/// `burn_in + t` steps and keeps the last `t` rows.
pub fn simulate<R: Rng + ?Sized>(
    model: &LinearTsScm,
    t: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<TimeSeriesDataset> {
    if t == 0 {
        return Err(Error::InvalidInput("T must be positive".into()));
    }
    let order = model.contemporaneous_order()?;
    let m = model.m;
    let total = burn_in + t;
    let normals: Vec<Normal<f64>> = model
        .noise_std
        .iter()
        .map(|&s| Normal::new(0.0, s).map_err(|e| Error::InvalidModel(e.to_string())))
        .collect::<Result<_>>()?;
    let mut x = DMatrix::<f64>::zeros(total, m);
    let mut eps = vec![0.0; m];
    for row in 0..total {
        for (e, d) in eps.iter_mut().zip(&normals) {
            *e = d.sample(rng);
        }
        for &j in &order {
            let mut v = eps[j];
            for lag in 0..=model.tau_max.min(row) {
                let a = &model.coeffs[lag];
                for i in 0..m {
                    let c = a[(j, i)];
                    if c != 0.0 {
                        v += c * x[(row - lag, i)];
                    }
                }
            }
            x[(row, j)] = v;
        }
    }
    let kept = x.rows(burn_in, t).into_owned();
    TimeSeriesDataset::from_matrix(kept)
}

/// Stationary window DAG with one slice edge per nonzero coefficient.
pub fn true_graph(model: &LinearTsScm) -> Result<WindowGraph> {
    let slice: Vec<Edge> = model
        .links()
        .into_iter()
        .map(|(from, to, lag, _)| Edge::directed(NodeId::new(from, lag), NodeId::new(to, 0)))
        .collect();
    expand_from_slice_as(GraphKind::Dag, &slice, model.m, model.tau_max)
}
