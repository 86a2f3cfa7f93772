//! Closed-form Cobb-Douglas producer math and its neuron form.
//!
//! A producer with technology `A`, exponents `alpha` (sum `Phi < 1`) and
//! anticipated output price `P` buys inputs at prices `p` and produces
//! `Y = A * prod x_m^alpha_m`. Her profit-maximizing output, pushed through
//! the inverse demand `rho(Y) = 1/(1+Y)`, is a softplus neuron in log prices.

use num_traits::Float;

use crate::error::{EnnError, Result};

/// Smallest exponent accepted at construction.
pub const MIN_ALPHA: f64 = 1e-12;
/// Exponent sums must stay below `1 - PHI_MARGIN`.
pub const PHI_MARGIN: f64 = 1e-9;

#[inline]
pub(crate) fn lit<F: Float>(x: f64) -> F {
    F::from(x).expect("literal fits the scalar type")
}

#[inline]
pub(crate) fn to_f64<F: Float>(x: F) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProducerParams<F> {
    a: F,
    alpha: Vec<F>,
    price: F,
}

impl<F: Float> ProducerParams<F> {
    pub fn new(a: F, alpha: Vec<F>, price: F) -> Result<Self> {
        if !(a.is_finite() && a > F::zero()) {
            return Err(EnnError::InvalidParams(format!(
                "technology A must be positive and finite, got {}",
                to_f64(a)
            )));
        }
        if !(price.is_finite() && price > F::zero()) {
            return Err(EnnError::InvalidParams(format!(
                "anticipated price must be positive and finite, got {}",
                to_f64(price)
            )));
        }
        if alpha.is_empty() {
            return Err(EnnError::InvalidParams("no exponents".into()));
        }
        for (m, &am) in alpha.iter().enumerate() {
            if !(am.is_finite() && am > lit(MIN_ALPHA)) {
                return Err(EnnError::InvalidParams(format!(
                    "exponent {m} must exceed {MIN_ALPHA}, got {}",
                    to_f64(am)
                )));
            }
        }
        let phi = alpha.iter().fold(F::zero(), |s, &x| s + x);
        if !(phi < F::one() - lit(PHI_MARGIN)) {
            return Err(EnnError::InvalidParams(format!(
                "exponent sum {} violates decreasing returns",
                to_f64(phi)
            )));
        }
        Ok(Self { a, alpha, price })
    }

    pub fn a(&self) -> F {
        self.a
    }

    pub fn alpha(&self) -> &[F] {
        &self.alpha
    }

    /// Anticipated output price `P`.
    pub fn price(&self) -> F {
        self.price
    }

    pub fn n_inputs(&self) -> usize {
        self.alpha.len()
    }

    pub fn phi(&self) -> F {
        self.alpha.iter().fold(F::zero(), |s, &x| s + x)
    }

    pub fn eta(&self) -> F {
        self.phi() - self.alpha[0]
    }

    pub fn with_price(&self, price: F) -> Result<Self> {
        Self::new(self.a, self.alpha.clone(), price)
    }

    pub fn with_alpha(&self, alpha: Vec<F>) -> Result<Self> {
        Self::new(self.a, alpha, self.price)
    }
}

/// `ln(1 + e^x)`, stable for large `|x|`.
pub fn softplus<F: Float>(x: F) -> F {
    if x > F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// The reflected softplus `-ln(1 + e^x)`.
pub fn activation<F: Float>(x: F) -> F {
    -softplus(x)
}

/// `rho(Y) = 1/(1+Y)`.
pub fn inverse_demand<F: Float>(y: F) -> Result<F> {
    if !(y >= F::zero()) {
        return Err(EnnError::Domain(format!("inverse demand needs Y >= 0, got {}", to_f64(y))));
    }
    Ok(F::one() / (F::one() + y))
}

/// Quantity at which `rho` reaches `p`; prices above the maximum give 0.
pub fn inverse_demand_inverse<F: Float>(p: F) -> Result<F> {
    if !(p > F::zero()) {
        return Err(EnnError::Domain(format!(
            "inverse of inverse demand needs p > 0, got {}",
            to_f64(p)
        )));
    }
    Ok((F::one() / p - F::one()).max(F::zero()))
}

fn check_prices<F: Float>(params: &ProducerParams<F>, prices: &[F]) -> Result<()> {
    if prices.len() != params.n_inputs() {
        return Err(EnnError::Dimension {
            expected: params.n_inputs(),
            got: prices.len(),
        });
    }
    for (m, &p) in prices.iter().enumerate() {
        if !(p > F::zero() && p.is_finite()) {
            return Err(EnnError::Domain(format!(
                "input price {m} must be positive and finite, got {}",
                to_f64(p)
            )));
        }
    }
    Ok(())
}

/// Profit-maximizing input bundle from the first-order conditions.
pub fn optimal_input_bundle<F: Float>(params: &ProducerParams<F>, prices: &[F]) -> Result<Vec<F>> {
    check_prices(params, prices)?;
    let al = params.alpha();
    let phi = params.phi();
    let eta = params.eta();
    // ln of the bracket in the x_1 expression
    let mut s = -(params.price().ln() + params.a().ln()) + (F::one() - eta) * (prices[0] / al[0]).ln();
    for m in 1..al.len() {
        s = s + al[m] * (prices[m] / al[m]).ln();
    }
    let ln_x1 = s / (phi - F::one());
    let ln_ratio0 = prices[0].ln() - al[0].ln();
    Ok((0..al.len())
        .map(|m| {
            if m == 0 {
                ln_x1.exp()
            } else {
                (ln_x1 + ln_ratio0 + al[m].ln() - prices[m].ln()).exp()
            }
        })
        .collect())
}

/// Log of the optimal output written in prices alone.
pub fn ln_output_from_prices<F: Float>(params: &ProducerParams<F>, prices: &[F]) -> Result<F> {
    check_prices(params, prices)?;
    let phi = params.phi();
    let mut s = params.a().ln() + phi * params.price().ln();
    for (&am, &pm) in params.alpha().iter().zip(prices) {
        s = s + am * (am / pm).ln();
    }
    Ok(s / (F::one() - phi))
}

pub fn output_from_prices<F: Float>(params: &ProducerParams<F>, prices: &[F]) -> Result<F> {
    ln_output_from_prices(params, prices).map(Float::exp)
}

/// `A * prod x_m^alpha_m`.
pub fn output_from_inputs<F: Float>(params: &ProducerParams<F>, x: &[F]) -> Result<F> {
    if x.len() != params.n_inputs() {
        return Err(EnnError::Dimension {
            expected: params.n_inputs(),
            got: x.len(),
        });
    }
    let mut y = params.a();
    for (&am, &xm) in params.alpha().iter().zip(x) {
        if xm < F::zero() {
            return Err(EnnError::Domain(format!("negative input {}", to_f64(xm))));
        }
        y = y * xm.powf(am);
    }
    Ok(y)
}

pub fn profit<F: Float>(params: &ProducerParams<F>, prices: &[F], x: &[F], realized_price: F) -> Result<F> {
    if prices.len() != x.len() {
        return Err(EnnError::Dimension {
            expected: x.len(),
            got: prices.len(),
        });
    }
    let y = output_from_inputs(params, x)?;
    let cost = prices.iter().zip(x).fold(F::zero(), |s, (&p, &q)| s + p * q);
    Ok(realized_price * y - cost)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronCoeffs<F> {
    pub omega: Vec<F>,
    pub z: F,
}

pub fn to_neuron<F: Float>(params: &ProducerParams<F>) -> NeuronCoeffs<F> {
    let phi = params.phi();
    let omega = params.alpha().iter().map(|&am| am / (phi - F::one())).collect();
    let mut num = phi * params.price().ln() + params.a().ln();
    for &am in params.alpha() {
        num = num + am * am.ln();
    }
    NeuronCoeffs {
        omega,
        z: num / (F::one() - phi),
    }
}

/// Output log price `activation(l . omega + z)`.
pub fn neuron_forward<F: Float>(coeffs: &NeuronCoeffs<F>, l: &[F]) -> Result<F> {
    if l.len() != coeffs.omega.len() {
        return Err(EnnError::Dimension {
            expected: coeffs.omega.len(),
            got: l.len(),
        });
    }
    let s = l.iter().zip(&coeffs.omega).fold(coeffs.z, |s, (&li, &wi)| s + li * wi);
    Ok(activation(s))
}

/// `dY/d alpha_i = Y ln x_i` with the realized inputs held fixed.
pub fn output_gradient_wrt_exponents<F: Float>(y: F, x: &[F]) -> Result<Vec<F>> {
    if !(y > F::zero()) {
        return Err(EnnError::Domain(format!("gradient needs Y > 0, got {}", to_f64(y))));
    }
    x.iter()
        .map(|&xi| {
            if xi > F::zero() {
                Ok(y * xi.ln())
            } else {
                Err(EnnError::Domain(format!("gradient needs x > 0, got {}", to_f64(xi))))
            }
        })
        .collect()
}

/// Profit at the optimal bundle when the output sells at `P`.
pub fn optimal_profit<F: Float>(params: &ProducerParams<F>, prices: &[F]) -> Result<F> {
    let y = output_from_prices(params, prices)?;
    Ok((F::one() - params.phi()) * params.price() * y)
}
