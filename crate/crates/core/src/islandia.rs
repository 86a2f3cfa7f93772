//! The Islandia economy: 33 producers in five layers that learn a decision
//! boundary over the steel/brass import map from final-market prices alone.
//!
//! A period runs the producers layer by layer at the prices implied by
//! upstream output, clears each good with one demand/supply-scaled price
//! step, and lets every producer compare what she was paid with what she
//! anticipated. Learning moves the anticipated price along a moving average
//! and the exponents by one gradient step.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::datagen::{generate_with_rng, Period};
use crate::error::{EnnError, Result};
use crate::producer::{
    inverse_demand, inverse_demand_inverse, ln_output_from_prices, optimal_input_bundle, output_gradient_wrt_exponents, ProducerParams,
};
use crate::stats::accuracy;

/// Producers per hidden layer.
pub const WIDTH: usize = 8;
pub const HIDDEN_LAYERS: usize = 4;
pub const RAW_GOODS: usize = 2;
/// Import quantities at which the economy is calibrated.
pub const REFERENCE_Q: [f64; 2] = [50.0, 50.0];

/// How a producer turns her pricing outcome into a production error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorEstimator {
    /// `Y - Y*`, where `Y*` is what she would have made had she anticipated
    /// the realized price: `Y (p/P)^(Phi/(1-Phi))`.
    Reprice,
    /// First-order version of `Reprice`: `Y Phi/(1-Phi) (1 - p/P)`. Its mean
    /// is zero whenever `P` is the mean realized price.
    Linear,
    /// `Y - rho^-1(min(p, 1))`: the quantity the unshifted demand curve
    /// would absorb at the realized price.
    Reflect,
}

impl FromStr for ErrorEstimator {
    type Err = EnnError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reprice" => Ok(Self::Reprice),
            "linear" => Ok(Self::Linear),
            "reflect" => Ok(Self::Reflect),
            _ => Err(EnnError::InvalidConfig(format!("unknown estimator `{s}`"))),
        }
    }
}

impl fmt::Display for ErrorEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Reprice => "reprice",
            Self::Linear => "linear",
            Self::Reflect => "reflect",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketConfig {
    /// Learning rate of the exponent update.
    pub mu: f64,
    /// Moving-average window for anticipated prices.
    pub window: usize,
    /// Demand shifter on the final good.
    pub delta: f64,
    /// Quantity-to-price scale `s`.
    pub scale: f64,
    pub e_max: f64,
    /// Exponent floor of the projection.
    pub epsilon: f64,
    /// Ceiling on each producer's exponent sum.
    pub phi_max: f64,
    /// Initial exponents are drawn from `[alpha_low * phi_max / n, phi_max / n]`.
    pub alpha_low: f64,
    /// Log-uniform range of each layer's technology draw.
    pub a_low: f64,
    pub a_high: f64,
    /// Scale each layer's technology so the reference period yields about
    /// `y_ref`; the draw above then acts as a multiplicative jitter.
    pub calibrate_technology: bool,
    pub y_ref: f64,
    /// Start anticipated prices at the self-consistent `P = rho(Y(P))` of the
    /// reference period instead of 1.
    pub fixed_point_prices: bool,
    /// Divide intermediate demand by its reference level before pricing.
    pub normalize_demand: bool,
    /// Exponent on the demand/supply ratio in intermediate pricing; 1 is the
    /// plain `(D/Y) rho(Y)` step, 0 ignores demand.
    pub demand_weight: f64,
    pub price_cap: f64,
    /// Unlabelled periods run at construction so anticipated prices settle.
    pub burn_in: usize,
    pub estimator: ErrorEstimator,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            mu: 1e-5,
            window: 200,
            delta: 0.3,
            scale: 10.0,
            e_max: 10.0,
            epsilon: 1e-3,
            phi_max: 0.8,
            alpha_low: 0.5,
            a_low: 0.5,
            a_high: 2.0,
            calibrate_technology: true,
            y_ref: 0.5,
            fixed_point_prices: true,
            normalize_demand: true,
            demand_weight: 0.2,
            price_cap: 10.0,
            burn_in: 300,
            estimator: ErrorEstimator::Linear,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| EnnError::InvalidConfig(format!("bad value `{value}` for `{key}`")))
}

impl MarketConfig {
    pub const KEYS: [&'static str; 18] = [
        "mu",
        "window",
        "delta",
        "scale",
        "e_max",
        "epsilon",
        "phi_max",
        "alpha_low",
        "a_low",
        "a_high",
        "calibrate_technology",
        "y_ref",
        "fixed_point_prices",
        "normalize_demand",
        "demand_weight",
        "price_cap",
        "burn_in",
        "estimator",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "mu" => self.mu = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "scale" => self.scale = parse(key, value)?,
            "e_max" => self.e_max = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "phi_max" => self.phi_max = parse(key, value)?,
            "alpha_low" => self.alpha_low = parse(key, value)?,
            "a_low" => self.a_low = parse(key, value)?,
            "a_high" => self.a_high = parse(key, value)?,
            "calibrate_technology" => self.calibrate_technology = parse(key, value)?,
            "y_ref" => self.y_ref = parse(key, value)?,
            "fixed_point_prices" => self.fixed_point_prices = parse(key, value)?,
            "normalize_demand" => self.normalize_demand = parse(key, value)?,
            "demand_weight" => self.demand_weight = parse(key, value)?,
            "price_cap" => self.price_cap = parse(key, value)?,
            "burn_in" => self.burn_in = parse(key, value)?,
            "estimator" => self.estimator = value.trim().parse()?,
            _ => return Err(EnnError::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// `(key, value)` pairs in a fixed order, for manifests.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let v = [
            self.mu.to_string(),
            self.window.to_string(),
            self.delta.to_string(),
            self.scale.to_string(),
            self.e_max.to_string(),
            self.epsilon.to_string(),
            self.phi_max.to_string(),
            self.alpha_low.to_string(),
            self.a_low.to_string(),
            self.a_high.to_string(),
            self.calibrate_technology.to_string(),
            self.y_ref.to_string(),
            self.fixed_point_prices.to_string(),
            self.normalize_demand.to_string(),
            self.demand_weight.to_string(),
            self.price_cap.to_string(),
            self.burn_in.to_string(),
            self.estimator.to_string(),
        ];
        Self::KEYS.iter().copied().zip(v).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(EnnError::InvalidConfig(m.to_string()));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad("mu must be > 0");
        }
        if self.window < 1 {
            return bad("window must be >= 1");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad("scale must be > 0");
        }
        if !(self.e_max > 0.0) {
            return bad("e_max must be > 0");
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.01) {
            return bad("epsilon must lie in (0, 0.01]");
        }
        if !(self.phi_max > 0.0 && self.phi_max <= 1.0 - self.epsilon) {
            return bad("phi_max must lie in (0, 1 - epsilon]");
        }
        if !(self.epsilon * WIDTH as f64 * 10.0 < self.phi_max) {
            return bad("phi_max too small for the exponent floor");
        }
        if !(0.0..1.0).contains(&self.alpha_low) {
            return bad("alpha_low must lie in [0, 1)");
        }
        if !(self.a_low > 0.0 && self.a_low <= self.a_high && self.a_high.is_finite()) {
            return bad("need 0 < a_low <= a_high");
        }
        if !(self.y_ref > 0.0 && self.y_ref.is_finite()) {
            return bad("y_ref must be > 0");
        }
        if !(0.0..=1.0).contains(&self.demand_weight) {
            return bad("demand_weight must lie in [0, 1]");
        }
        if !(self.price_cap > 0.0) {
            return bad("price_cap must be > 0");
        }
        Ok(())
    }
}

/// `p_j = 1 / (1 + q_j / s)`.
pub fn quantities_to_prices(q_steel: f64, q_brass: f64, config: &MarketConfig) -> Result<[f64; 2]> {
    for q in [q_steel, q_brass] {
        if !(0.0..=100.0).contains(&q) {
            return Err(EnnError::Domain(format!("import quantity {q} outside [0, 100]")));
        }
    }
    Ok([1.0 / (1.0 + q_steel / config.scale), 1.0 / (1.0 + q_brass / config.scale)])
}

/// Arithmetic mean of the last `min(w, len)` prices.
pub fn update_anticipated_price(history: &[f64], w: usize) -> Result<f64> {
    if history.is_empty() {
        return Err(EnnError::Empty("price history"));
    }
    let k = w.max(1).min(history.len());
    Ok(history[history.len() - k..].iter().sum::<f64>() / k as f64)
}

/// One gradient step on the exponents followed by projection onto
/// `alpha >= epsilon`, `sum alpha <= phi_max`.
pub fn update_exponents(
    params: &ProducerParams<f64>,
    e: f64,
    x: &[f64],
    mu: f64,
    epsilon: f64,
    phi_max: f64,
) -> Result<ProducerParams<f64>> {
    let y = crate::producer::output_from_inputs(params, x)?;
    if e == 0.0 || y <= 0.0 {
        return Ok(params.clone());
    }
    let g = output_gradient_wrt_exponents(y, x)?;
    let mut a: Vec<f64> = params
        .alpha()
        .iter()
        .zip(&g)
        .map(|(&al, &gi)| (al - e * mu * gi).max(epsilon))
        .collect();
    let s: f64 = a.iter().sum();
    if s >= phi_max {
        let k = phi_max / s;
        a.iter_mut().for_each(|v| *v *= k);
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Ok(params.clone());
    }
    params.with_alpha(a)
}

#[derive(Debug, Clone)]
struct Agent {
    params: ProducerParams<f64>,
    history: VecDeque<f64>,
}

#[derive(Debug, Clone)]
struct Layer {
    a: f64,
    agents: Vec<Agent>,
    /// Per-good demand normalizer (hidden layers only).
    kappa: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct IslandiaEconomy {
    layers: Vec<Layer>,
    posted: Vec<Vec<f64>>,
    config: MarketConfig,
    stream_id: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodRecord {
    pub period: usize,
    pub q_steel: f64,
    pub q_brass: f64,
    pub label: bool,
    pub final_output: f64,
    pub final_price: f64,
    /// Realized minus anticipated price, per layer and producer.
    pub pricing_error: Vec<Vec<f64>>,
    pub production_error: Vec<Vec<f64>>,
}

/// Everything one forward pass produces.
#[derive(Debug, Clone)]
struct Pass {
    y: Vec<Vec<f64>>,
    x: Vec<Vec<Vec<f64>>>,
}

fn numeric(layer: usize, producer: usize, what: impl Into<String>) -> EnnError {
    EnnError::Numeric {
        layer,
        producer,
        what: what.into(),
    }
}

fn layer_sizes() -> Vec<(usize, usize)> {
    let mut v = vec![(WIDTH, RAW_GOODS)];
    v.extend(std::iter::repeat_n((WIDTH, WIDTH), HIDDEN_LAYERS - 1));
    v.push((1, WIDTH));
    v
}

/// Output at input prices for anticipated price `ln_p`.
fn ln_y_at(params: &ProducerParams<f64>, prices: &[f64], ln_p: f64) -> Result<f64> {
    ln_output_from_prices(&params.with_price(ln_p.exp())?, prices)
}

/// Solves `P = rho(Y(P))` by bisection in `ln P`.
fn fixed_point_price(params: &ProducerParams<f64>, prices: &[f64]) -> Result<f64> {
    let f = |lp: f64| -> Result<f64> { Ok(lp + ln_y_at(params, prices, lp)?.min(700.0).exp().ln_1p()) };
    let (mut lo, mut hi) = (-60.0_f64, 0.0_f64);
    if f(lo)? > 0.0 {
        return Ok(lo.exp());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

impl IslandiaEconomy {
    pub fn config(&self) -> &MarketConfig {
        &self.config
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn n_producers(&self) -> usize {
        self.layers.iter().map(|l| l.agents.len()).sum()
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_technology(&self, layer: usize) -> f64 {
        self.layers[layer].a
    }

    pub fn params(&self, layer: usize, idx: usize) -> &ProducerParams<f64> {
        &self.layers[layer].agents[idx].params
    }

    pub fn price_history(&self, layer: usize, idx: usize) -> Vec<f64> {
        self.layers[layer].agents[idx].history.iter().copied().collect()
    }

    /// Realized prices of the last learning period, per layer.
    pub fn posted_prices(&self) -> &[Vec<f64>] {
        &self.posted
    }

    /// Replaces one producer's parameters (tests and experiments).
    pub fn set_params(&mut self, layer: usize, idx: usize, params: ProducerParams<f64>) -> Result<()> {
        let want = self.layers[layer].agents[idx].params.n_inputs();
        if params.n_inputs() != want {
            return Err(EnnError::Dimension {
                expected: want,
                got: params.n_inputs(),
            });
        }
        self.layers[layer].agents[idx].params = params;
        Ok(())
    }

    /// Stable per-producer fingerprint of exponents and anticipated price.
    pub fn fingerprint(&self, layer: usize, idx: usize) -> u64 {
        let p = &self.layers[layer].agents[idx].params;
        let mut h = Sha256::new();
        for a in p.alpha() {
            h.update(a.to_le_bytes());
        }
        h.update(p.price().to_le_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().unwrap())
    }

    fn pass(&self, raw: &[f64]) -> Result<Pass> {
        let mut prices = raw.to_vec();
        let mut y = Vec::with_capacity(self.layers.len());
        let mut x = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut yk = Vec::with_capacity(layer.agents.len());
            let mut xk = Vec::with_capacity(layer.agents.len());
            for (i, ag) in layer.agents.iter().enumerate() {
                let ly = ln_output_from_prices(&ag.params, &prices)?;
                if !(ly < 700.0) {
                    return Err(numeric(k, i, format!("output overflow (ln Y = {ly})")));
                }
                let b = optimal_input_bundle(&ag.params, &prices)?;
                if b.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                    return Err(numeric(k, i, "input bundle not finite"));
                }
                yk.push(ly.exp());
                xk.push(b);
            }
            prices = yk.iter().map(|&v| inverse_demand(v)).collect::<Result<_>>()?;
            y.push(yk);
            x.push(xk);
        }
        Ok(Pass { y, x })
    }

    /// Quantity demanded of each good of hidden layer `k`.
    fn demand(&self, pass: &Pass, k: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.layers[k].agents.len()];
        for bundle in &pass.x[k + 1] {
            for (i, &q) in bundle.iter().enumerate() {
                d[i] += q;
            }
        }
        d
    }

    /// Realized prices per layer for a given pass and label.
    fn realized(&self, pass: &Pass, label: Option<bool>) -> Vec<Vec<f64>> {
        let cap = self.config.price_cap;
        let last = self.layers.len() - 1;
        (0..self.layers.len())
            .map(|k| {
                if k < last {
                    let d = self.demand(pass, k);
                    pass.y[k]
                        .iter()
                        .zip(&d)
                        .zip(&self.layers[k].kappa)
                        .map(|((&y, &dk), &kap)| realized_intermediate_price(dk, y, kap, self.config.demand_weight, cap))
                        .collect()
                } else {
                    let rho = 1.0 / (1.0 + pass.y[k][0]);
                    let shift = match label {
                        Some(true) => 1.0 + self.config.delta,
                        Some(false) => 1.0 - self.config.delta,
                        None => 1.0,
                    };
                    vec![(shift * rho).min(cap)]
                }
            })
            .collect()
    }

    fn production_error(&self, params: &ProducerParams<f64>, y: f64, realized: f64) -> Result<f64> {
        let e = match self.config.estimator {
            ErrorEstimator::Reprice => {
                let phi = params.phi();
                let g = phi / (1.0 - phi);
                -y * ((g * (realized / params.price()).ln()).exp_m1())
            }
            ErrorEstimator::Linear => {
                let phi = params.phi();
                y * phi / (1.0 - phi) * (1.0 - realized / params.price())
            }
            ErrorEstimator::Reflect => y - inverse_demand_inverse(realized.min(1.0))?,
        };
        Ok(e.clamp(-self.config.e_max, self.config.e_max))
    }

    fn apply(&mut self, pass: &Pass, realized: &[Vec<f64>], errors: Option<&[Vec<f64>]>) -> Result<()> {
        let (w, mu, eps, phi_max) = (self.config.window, self.config.mu, self.config.epsilon, self.config.phi_max);
        for (k, layer) in self.layers.iter_mut().enumerate() {
            for (i, ag) in layer.agents.iter_mut().enumerate() {
                ag.history.push_back(realized[k][i]);
                while ag.history.len() > w {
                    ag.history.pop_front();
                }
                let hist: Vec<f64> = ag.history.iter().copied().collect();
                let p_new = update_anticipated_price(&hist, w)?;
                if let Some(errs) = errors {
                    let upd = update_exponents(&ag.params, errs[k][i], &pass.x[k][i], mu, eps, phi_max)?;
                    ag.params = upd;
                }
                ag.params = ag.params.with_price(p_new).map_err(|e| numeric(k, i, e.to_string()))?;
            }
        }
        self.posted = realized.to_vec();
        Ok(())
    }

    /// Final output for given import quantities; never changes state.
    pub fn final_output(&self, q_steel: f64, q_brass: f64) -> Result<f64> {
        let raw = quantities_to_prices(q_steel, q_brass, &self.config)?;
        Ok(self.pass(&raw)?.y.last().unwrap()[0])
    }

    pub fn run_period(&mut self, period: usize, q_steel: f64, q_brass: f64, label: bool, learn: bool) -> Result<PeriodRecord> {
        let raw = quantities_to_prices(q_steel, q_brass, &self.config)?;
        let pass = self.pass(&raw)?;
        let realized = self.realized(&pass, Some(label));
        let mut pricing = Vec::with_capacity(self.layers.len());
        let mut production = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let mut pe = Vec::with_capacity(layer.agents.len());
            let mut ee = Vec::with_capacity(layer.agents.len());
            for (i, ag) in layer.agents.iter().enumerate() {
                let p = realized[k][i];
                pe.push(p - ag.params.price());
                let e = self.production_error(&ag.params, pass.y[k][i], p)?;
                if !e.is_finite() {
                    return Err(numeric(k, i, "production error not finite"));
                }
                ee.push(e);
            }
            pricing.push(pe);
            production.push(ee);
        }
        let rec = PeriodRecord {
            period,
            q_steel,
            q_brass,
            label,
            final_output: pass.y.last().unwrap()[0],
            final_price: realized.last().unwrap()[0],
            pricing_error: pricing,
            production_error: production,
        };
        if learn {
            self.apply(&pass, &realized, Some(&rec.production_error))?;
        }
        Ok(rec)
    }

    /// Unlabelled periods at random import quantities; anticipated prices
    /// follow their moving average, exponents stay put.
    pub fn settle<R: Rng>(&mut self, periods: usize, rng: &mut R) -> Result<()> {
        for _ in 0..periods {
            let q1 = rng.gen::<f64>() * 100.0;
            let q2 = rng.gen::<f64>() * 100.0;
            let raw = quantities_to_prices(q1, q2, &self.config)?;
            let pass = self.pass(&raw)?;
            let realized = self.realized(&pass, None);
            self.apply(&pass, &realized, None)?;
        }
        Ok(())
    }
}

/// `min(cap, (kappa D / Y)^lambda * rho(Y))`.
pub fn realized_intermediate_price(demand: f64, supply: f64, kappa: f64, lambda: f64, cap: f64) -> f64 {
    let rho = 1.0 / (1.0 + supply);
    ((kappa * demand / supply).powf(lambda) * rho).min(cap)
}

pub fn init_economy(seed: u64, config: &MarketConfig) -> Result<IslandiaEconomy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_economy_with_rng(&mut rng, seed, config)
}

pub fn init_economy_with_rng<R: Rng>(rng: &mut R, stream_id: u64, config: &MarketConfig) -> Result<IslandiaEconomy> {
    config.validate()?;
    let c = config;
    let mut prices = quantities_to_prices(REFERENCE_Q[0], REFERENCE_Q[1], c)?.to_vec();
    let mut layers = Vec::new();
    let rho_ref = 1.0 / (1.0 + c.y_ref);
    for (k, (m, n)) in layer_sizes().into_iter().enumerate() {
        let hi = c.phi_max / n as f64;
        let lo = (c.alpha_low * hi).max(c.epsilon);
        let alphas: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(lo..=hi)).collect()).collect();
        let jitter = (rng.gen_range(c.a_low.ln()..=c.a_high.ln())).exp();
        let a = if c.calibrate_technology {
            // ln A that puts the average producer at y_ref when P = rho(y_ref)
            let (mut s_mean, mut phi_mean) = (0.0, 0.0);
            for al in &alphas {
                let phi: f64 = al.iter().sum();
                let s: f64 = al.iter().zip(&prices).map(|(&a, &p)| a * (a / p).ln()).sum::<f64>() + phi * rho_ref.ln();
                s_mean += s / m as f64;
                phi_mean += phi / m as f64;
            }
            (-s_mean + (1.0 - phi_mean) * c.y_ref.ln()).exp() * jitter
        } else {
            jitter
        };
        let mut agents = Vec::with_capacity(m);
        let mut outs = Vec::with_capacity(m);
        for (i, al) in alphas.into_iter().enumerate() {
            let mut params = ProducerParams::new(a, al, 1.0).map_err(|e| numeric(k, i, e.to_string()))?;
            if c.fixed_point_prices {
                params = params.with_price(fixed_point_price(&params, &prices)?)?;
            }
            let ly = ln_output_from_prices(&params, &prices)?;
            if !(ly < 700.0) {
                return Err(numeric(k, i, "reference output overflow"));
            }
            outs.push(ly.exp());
            agents.push(Agent {
                params,
                history: VecDeque::new(),
            });
        }
        prices = outs.iter().map(|&y| 1.0 / (1.0 + y)).collect();
        layers.push(Layer {
            a,
            agents,
            kappa: vec![1.0; m],
        });
    }
    let mut econ = IslandiaEconomy {
        posted: layers.iter().map(|l| vec![1.0; l.agents.len()]).collect(),
        layers,
        config: config.clone(),
        stream_id,
    };
    if c.normalize_demand {
        let raw = quantities_to_prices(REFERENCE_Q[0], REFERENCE_Q[1], c)?;
        let pass = econ.pass(&raw)?;
        for k in 0..econ.layers.len() - 1 {
            let d = econ.demand(&pass, k);
            econ.layers[k].kappa = pass.y[k].iter().zip(&d).map(|(&y, &dk)| y / dk).collect();
        }
    }
    if c.burn_in > 0 {
        econ.settle(c.burn_in, rng)?;
    }
    Ok(econ)
}

/// Mean final output over the dataset, evaluated without learning.
pub fn compute_threshold(econ: &IslandiaEconomy, periods: &[Period]) -> Result<f64> {
    if periods.is_empty() {
        return Err(EnnError::Empty("threshold over no periods"));
    }
    let mut s = 0.0;
    for p in periods {
        s += econ.final_output(p.q_steel, p.q_brass)?;
    }
    Ok(s / periods.len() as f64)
}

pub fn predictions(econ: &IslandiaEconomy, periods: &[Period], threshold: f64) -> Result<Vec<bool>> {
    periods
        .iter()
        .map(|p| Ok(econ.final_output(p.q_steel, p.q_brass)? > threshold))
        .collect()
}

pub fn evaluate(econ: &IslandiaEconomy, periods: &[Period], threshold: f64) -> Result<f64> {
    if periods.is_empty() {
        return Err(EnnError::Empty("evaluation over no periods"));
    }
    let labels: Vec<bool> = periods.iter().map(|p| p.label).collect();
    accuracy(&predictions(econ, periods, threshold)?, &labels)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainingLog {
    pub drawn: Vec<usize>,
    pub final_output: Vec<f64>,
}

/// Rounds drawn uniformly with replacement, each a learning period.
pub fn train<R: Rng>(econ: &mut IslandiaEconomy, periods: &[Period], rounds: usize, rng: &mut R) -> Result<TrainingLog> {
    if periods.is_empty() && rounds > 0 {
        return Err(EnnError::Empty("training on no periods"));
    }
    let mut log = TrainingLog::default();
    for r in 0..rounds {
        let j = rng.gen_range(0..periods.len());
        let p = periods[j];
        let rec = econ
            .run_period(r, p.q_steel, p.q_brass, p.label, true)
            .map_err(|e| EnnError::Training {
                round: r,
                source: Box::new(e),
            })?;
        log.drawn.push(j);
        log.final_output.push(rec.final_output);
    }
    Ok(log)
}

/// 32-byte seed for one purpose of one trial, hashed from the master seed.
pub fn derive_seed(master: u64, trial: u64, purpose: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(trial.to_le_bytes());
    h.update(purpose.as_bytes());
    h.finalize().into()
}

pub fn stream_id(master: u64, trial: u64) -> u64 {
    let d = derive_seed(master, trial, "stream");
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub initial_accuracy: f64,
    pub final_accuracy: f64,
    pub threshold: f64,
}

impl TrialOutcome {
    pub fn improvement(&self) -> f64 {
        self.final_accuracy - self.initial_accuracy
    }
}

/// One independent trial: fresh dataset, fresh economy, threshold from the
/// untrained economy, training, then evaluation at that same threshold.
pub fn run_trial(kind: u8, trial: usize, master_seed: u64, periods: usize, rounds: usize, config: &MarketConfig) -> Result<TrialOutcome> {
    let t = trial as u64;
    let mut data_rng = ChaCha8Rng::from_seed(derive_seed(master_seed, t, "data"));
    let mut econ_rng = ChaCha8Rng::from_seed(derive_seed(master_seed, t, "economy"));
    let mut train_rng = ChaCha8Rng::from_seed(derive_seed(master_seed, t, "train"));
    let data = generate_with_rng(kind, periods, &mut data_rng)?;
    let mut econ = init_economy_with_rng(&mut econ_rng, stream_id(master_seed, t), config)?;
    let threshold = compute_threshold(&econ, &data)?;
    let initial_accuracy = evaluate(&econ, &data, threshold)?;
    train(&mut econ, &data, rounds, &mut train_rng)?;
    let final_accuracy = evaluate(&econ, &data, threshold)?;
    Ok(TrialOutcome {
        trial,
        initial_accuracy,
        final_accuracy,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn econ() -> IslandiaEconomy {
        init_economy(7, &MarketConfig::default()).unwrap()
    }

    #[test]
    fn shape() {
        let e = econ();
        assert_eq!(e.n_producers(), 33);
        assert_eq!(e.n_layers(), 5);
        for i in 0..WIDTH {
            assert_eq!(e.params(0, i).n_inputs(), 2);
            assert_eq!(e.params(3, i).n_inputs(), 8);
        }
        assert_eq!(e.params(4, 0).n_inputs(), 8);
    }

    #[test]
    fn construction_bounds() {
        for seed in 0..20 {
            let e = init_economy(seed, &MarketConfig::default()).unwrap();
            for k in 0..5 {
                for i in 0..e.layers[k].agents.len() {
                    let p = e.params(k, i);
                    assert!(p.phi() < 1.0 && p.alpha().iter().all(|&a| a > 0.0));
                    assert_eq!(p.a(), e.layer_technology(k));
                }
            }
        }
    }

    #[test]
    fn literal_initialization() {
        let c = MarketConfig {
            calibrate_technology: false,
            fixed_point_prices: false,
            alpha_low: 0.0,
            phi_max: 1.0 - 1e-2,
            burn_in: 0,
            ..MarketConfig::default()
        };
        let e = init_economy(3, &c).unwrap();
        for k in 0..5 {
            let a = e.layer_technology(k);
            assert!((0.5..=2.0).contains(&a));
            assert_eq!(e.params(k, 0).price(), 1.0);
        }
    }

    #[test]
    fn same_seed_same_economy() {
        let a = econ();
        let b = econ();
        for k in 0..5 {
            for i in 0..a.layers[k].agents.len() {
                assert_eq!(a.params(k, i), b.params(k, i));
            }
        }
    }

    #[test]
    fn quantity_prices() {
        let c = MarketConfig {
            scale: 50.0,
            ..MarketConfig::default()
        };
        assert_eq!(quantities_to_prices(0.0, 50.0, &c).unwrap(), [1.0, 0.5]);
        assert_relative_eq!(quantities_to_prices(100.0, 0.0, &c).unwrap()[0], 1.0 / 3.0);
        assert!(quantities_to_prices(101.0, 0.0, &c).is_err());
        assert!(quantities_to_prices(0.0, -1.0, &c).is_err());
    }

    #[test]
    fn moving_average() {
        assert_eq!(update_anticipated_price(&[1.0, 1.0, 1.0], 5).unwrap(), 1.0);
        assert_relative_eq!(update_anticipated_price(&[0.2, 0.4], 2).unwrap(), 0.3);
        let mut h = vec![0.1; 9];
        h.push(0.6);
        assert_relative_eq!(update_anticipated_price(&h, 10).unwrap(), 0.15, max_relative = 1e-12);
        assert!(update_anticipated_price(&[], 3).is_err());
    }

    #[test]
    fn exponent_update_examples() {
        let p = ProducerParams::new(3.0, vec![0.5], 1.0).unwrap();
        assert_eq!(update_exponents(&p, 0.0, &[2.25], 0.01, 1e-3, 0.999).unwrap(), p);
        let q = ProducerParams::new(1.0, vec![0.2, 0.3], 1.0).unwrap();
        assert_eq!(update_exponents(&q, 1.0, &[1.0, 1.0], 0.01, 1e-3, 0.999).unwrap(), q);
        let u = update_exponents(&p, 1.0, &[2.25], 0.01, 1e-3, 0.999).unwrap();
        assert_relative_eq!(u.alpha()[0], 0.5 - 0.01 * 4.5 * 2.25f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(u.alpha()[0], 0.4635081402702652, max_relative = 1e-12);
    }

    #[test]
    fn projection_keeps_validity() {
        let p = ProducerParams::new(1.0, vec![0.3, 0.3], 1.0).unwrap();
        let up = update_exponents(&p, -10.0, &[5.0, 0.01], 1.0, 1e-3, 0.8).unwrap();
        assert!(up.phi() <= 0.8 + 1e-12);
        assert!(up.alpha().iter().all(|&a| a > 0.0));
    }

    #[test]
    fn evaluation_does_not_mutate() {
        let mut e = econ();
        let before: Vec<u64> = (0..8).map(|i| e.fingerprint(1, i)).collect();
        let a = e.run_period(0, 30.0, 70.0, true, false).unwrap();
        let b = e.run_period(0, 30.0, 70.0, true, false).unwrap();
        assert_eq!(a, b);
        let after: Vec<u64> = (0..8).map(|i| e.fingerprint(1, i)).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn zero_error_leaves_exponents() {
        let p = ProducerParams::new(2.0, vec![0.1; 8], 0.5).unwrap();
        let x = vec![0.7; 8];
        assert_eq!(update_exponents(&p, 0.0, &x, 0.5, 1e-3, 0.8).unwrap().alpha(), p.alpha());
    }

    #[test]
    fn market_clearing_limit_is_the_forward_pass() {
        // at balance with no normalization the realized price is rho(Y)
        for y in [0.01, 1.0, 37.0] {
            assert_relative_eq!(
                realized_intermediate_price(y, y, 1.0, 1.0, f64::INFINITY),
                1.0 / (1.0 + y),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn threshold_of_single_period() {
        let e = econ();
        let p = Period {
            q_steel: 12.0,
            q_brass: 80.0,
            label: true,
        };
        let t = compute_threshold(&e, &[p]).unwrap();
        assert_eq!(t, e.final_output(12.0, 80.0).unwrap());
        assert_eq!(t, compute_threshold(&e, &[p]).unwrap());
        assert!(compute_threshold(&e, &[]).is_err());
    }

    #[test]
    fn zero_rounds_leave_economy() {
        let mut e = econ();
        let before: Vec<u64> = (0..8).map(|i| e.fingerprint(2, i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = crate::datagen::generate(1, 10, 1).unwrap();
        let log = train(&mut e, &data.periods, 0, &mut rng).unwrap();
        assert!(log.drawn.is_empty());
        assert_eq!(before, (0..8).map(|i| e.fingerprint(2, i)).collect::<Vec<_>>());
    }

    #[test]
    fn config_round_trip() {
        let c = MarketConfig::default();
        let mut d = MarketConfig {
            mu: 0.5,
            ..MarketConfig::default()
        };
        for (k, v) in c.entries() {
            d.set(k, &v).unwrap();
        }
        assert_eq!(c, d);
        assert!(d.set("nope", "1").is_err());
        assert!(d.set("mu", "x").is_err());
    }

    #[test]
    fn config_validation() {
        let ok = MarketConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            MarketConfig { mu: 0.0, ..ok.clone() },
            MarketConfig { window: 0, ..ok.clone() },
            MarketConfig { delta: 1.0, ..ok.clone() },
            MarketConfig {
                epsilon: 0.02,
                ..ok.clone()
            },
            MarketConfig { scale: -1.0, ..ok.clone() },
            MarketConfig { e_max: 0.0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
