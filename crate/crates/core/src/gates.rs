//! AND, NOT and NAND gates built from producers.
//!
//! Agent X is a two-input producer whose neuron form is `(-20, -20; 30)`.
//! Agent Psi can make one of two single-input products and makes whichever
//! earns more; the switch turns a rising input price into a falling output
//! price, which no single Cobb-Douglas neuron can do.

use num_traits::Float;
use serde::Serialize;

use crate::error::{EnnError, Result};
use crate::producer::{
    activation, inverse_demand, lit, neuron_forward, optimal_input_bundle, output_from_inputs, profit, to_f64, to_neuron, NeuronCoeffs,
    ProducerParams,
};

/// Logical levels fed to the gate inputs, as log prices.
pub const LOGICAL_LEVELS: [f64; 2] = [0.0, 1.0];

pub fn and_gate<F: Float>() -> (ProducerParams<F>, NeuronCoeffs<F>) {
    and_gate_with_a(and_gate_technology())
}

/// The technology `e^(30/41) / alpha^Phi` of agent X.
pub fn and_gate_technology<F: Float>() -> F {
    let al: F = lit::<F>(20.0) / lit(41.0);
    let phi = al + al;
    (lit::<F>(30.0) / lit(41.0)).exp() / al.powf(phi)
}

/// Agent X with a caller-chosen technology (used for negative controls).
pub fn and_gate_with_a<F: Float>(a: F) -> (ProducerParams<F>, NeuronCoeffs<F>) {
    let al: F = lit::<F>(20.0) / lit(41.0);
    let p = ProducerParams::new(a, vec![al, al], F::one()).expect("agent X parameters are valid");
    let c = to_neuron(&p);
    (p, c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingProducer<F> {
    pub product3: ProducerParams<F>,
    pub product4: ProducerParams<F>,
}

pub fn not_gate<F: Float>() -> SwitchingProducer<F> {
    let half: F = lit(0.5);
    let product3 = ProducerParams::new(lit(3.0), vec![half], F::one()).expect("product 3 is valid");
    // 1 - alpha_4 is formed directly to avoid cancellation
    let tail: F = lit::<F>(-10.0).exp();
    let a4 = F::one() - tail;
    let big_a4 = F::one() / (tail.powf(tail) * a4.powf(a4));
    let product4 = ProducerParams::new(big_a4, vec![a4], F::one()).expect("product 4 is valid");
    SwitchingProducer { product3, product4 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Product {
    Three,
    Four,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchOutput<F> {
    pub l3: F,
    pub l4: F,
    pub y3: F,
    pub y4: F,
    pub produced: Product,
}

/// Profit of the closed-form bundle, sold at the price its own output fetches.
fn realized_optimal_profit<F: Float>(params: &ProducerParams<F>, ln_p: F) -> Result<(F, F)> {
    let p = [ln_p.exp()];
    let x = optimal_input_bundle(params, &p)?;
    let y = output_from_inputs(params, &x)?;
    let rho = inverse_demand(y)?;
    Ok((profit(params, &p, &x, rho)?, y))
}

pub fn switching_forward<F: Float>(psi: &SwitchingProducer<F>, ln_p3: F, ln_p4: F) -> Result<SwitchOutput<F>> {
    if !(ln_p3.is_finite() && ln_p4.is_finite()) {
        return Err(EnnError::Domain("switching producer needs finite log prices".into()));
    }
    let (pi3, y3) = realized_optimal_profit(&psi.product3, ln_p3)?;
    let (pi4, y4) = realized_optimal_profit(&psi.product4, ln_p4)?;
    // ties go to product 3
    if pi3 >= pi4 || pi4.is_nan() {
        let c = to_neuron(&psi.product3);
        Ok(SwitchOutput {
            l3: activation(c.omega[0] * ln_p3 + c.z),
            l4: F::zero(),
            y3,
            y4: F::zero(),
            produced: Product::Three,
        })
    } else {
        let c = to_neuron(&psi.product4);
        Ok(SwitchOutput {
            l3: F::zero(),
            l4: activation(c.omega[0] * ln_p4 + c.z),
            y3: F::zero(),
            y4,
            produced: Product::Four,
        })
    }
}

/// Which side of a wire's threshold reads as TRUE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Polarity {
    HighIsTrue,
    LowIsTrue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WireThreshold {
    pub threshold: f64,
    pub margin: f64,
    pub polarity: Polarity,
}

impl WireThreshold {
    pub fn read(&self, v: f64) -> bool {
        match self.polarity {
            Polarity::HighIsTrue => v > self.threshold,
            Polarity::LowIsTrue => v < self.threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GateThresholds {
    /// Output of agent X (input 1 of Psi).
    pub and_wire: WireThreshold,
    /// Output `L_4` of Psi.
    pub out_wire: WireThreshold,
}

/// Threshold halfway between the values that should read TRUE and those that
/// should read FALSE. Fails unless the two groups sit on the sides that
/// `polarity` asks for.
pub fn calibrate_wire(wire: &str, values: &[f64], truth: &[bool], polarity: Polarity) -> Result<WireThreshold> {
    let fail = |reason: &str| EnnError::Calibration {
        wire: wire.to_string(),
        reason: reason.to_string(),
        values: values.to_vec(),
    };
    if values.len() != truth.len() {
        return Err(fail("values and truth differ in length"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(fail("non-finite wire value"));
    }
    let pick = |want: bool| values.iter().zip(truth).filter(move |(_, &t)| t == want).map(|(&v, _)| v);
    if pick(true).next().is_none() || pick(false).next().is_none() {
        return Err(fail("need both TRUE and FALSE rows"));
    }
    let (hi_set, lo_set) = match polarity {
        Polarity::HighIsTrue => (true, false),
        Polarity::LowIsTrue => (false, true),
    };
    let lo_max = pick(lo_set).fold(f64::NEG_INFINITY, f64::max);
    let hi_min = pick(hi_set).fold(f64::INFINITY, f64::min);
    let gap = hi_min - lo_max;
    if !(gap > 0.0) {
        return Err(fail("TRUE and FALSE values overlap"));
    }
    Ok(WireThreshold {
        threshold: 0.5 * (lo_max + hi_min),
        margin: 0.5 * gap,
        polarity,
    })
}

/// Agent X feeding the first input of Psi.
#[derive(Debug, Clone)]
pub struct NandNetwork<F> {
    pub x: ProducerParams<F>,
    pub x_coeffs: NeuronCoeffs<F>,
    pub psi: SwitchingProducer<F>,
    /// Held fixed; zero in verification.
    pub ln_p4: F,
    thresholds: Option<GateThresholds>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NandWires<F> {
    pub l3: F,
    pub switch: SwitchOutput<F>,
}

impl<F: Float> NandNetwork<F> {
    pub fn new(x: ProducerParams<F>, psi: SwitchingProducer<F>, ln_p4: F) -> Self {
        let x_coeffs = to_neuron(&x);
        Self {
            x,
            x_coeffs,
            psi,
            ln_p4,
            thresholds: None,
        }
    }

    pub fn standard() -> Self {
        Self::new(and_gate::<F>().0, not_gate(), F::zero())
    }

    pub fn wires(&self, lnp1: F, lnp2: F) -> Result<NandWires<F>> {
        let l3 = neuron_forward(&self.x_coeffs, &[lnp1, lnp2])?;
        let switch = switching_forward(&self.psi, l3, self.ln_p4)?;
        Ok(NandWires { l3, switch })
    }

    pub fn thresholds(&self) -> Option<&GateThresholds> {
        self.thresholds.as_ref()
    }

    pub fn set_thresholds(&mut self, t: GateThresholds) {
        self.thresholds = Some(t);
    }
}

/// The four logical input rows in table order.
pub fn input_rows() -> [(f64, f64); 4] {
    let [lo, hi] = LOGICAL_LEVELS;
    [(lo, lo), (lo, hi), (hi, lo), (hi, hi)]
}

pub fn calibrate_thresholds<F: Float>(network: &NandNetwork<F>) -> Result<GateThresholds> {
    let mut l3 = Vec::new();
    let mut l4 = Vec::new();
    let and_truth: Vec<bool> = input_rows().iter().map(|&(a, b)| a > 0.5 && b > 0.5).collect();
    let nand_truth: Vec<bool> = and_truth.iter().map(|t| !t).collect();
    for (a, b) in input_rows() {
        let w = network.wires(lit(a), lit(b))?;
        l3.push(to_f64(w.l3));
        l4.push(to_f64(w.switch.l4));
    }
    Ok(GateThresholds {
        // a high output price of X means TRUE
        and_wire: calibrate_wire("and", &l3, &and_truth, Polarity::HighIsTrue)?,
        // Psi's L_4 is TRUE when product 4 is made, which lowers its price below 1
        out_wire: calibrate_wire("nand", &l4, &nand_truth, Polarity::LowIsTrue)?,
    })
}

pub fn nand_network_forward<F: Float>(network: &NandNetwork<F>, lnp1: F, lnp2: F) -> Result<bool> {
    let t = network.thresholds().ok_or_else(|| EnnError::Calibration {
        wire: "nand".into(),
        reason: "thresholds not calibrated".into(),
        values: vec![],
    })?;
    let w = network.wires(lnp1, lnp2)?;
    Ok(t.out_wire.read(to_f64(w.switch.l4)))
}

#[derive(Debug, Clone, Serialize)]
pub struct GateRow {
    pub lnp1: f64,
    pub lnp2: f64,
    pub lnp3: f64,
    pub lnp4: f64,
    pub l4: f64,
    pub produced: Product,
    pub and_out: bool,
    pub nand_out: bool,
    pub and_expected: bool,
    pub nand_expected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GateReport {
    pub omega: Vec<f64>,
    pub z: f64,
    pub thresholds: GateThresholds,
    pub rows: Vec<GateRow>,
    pub and_coeffs_ok: bool,
    pub and_table_ok: bool,
    pub nand_table_ok: bool,
}

impl GateReport {
    pub fn passed(&self) -> bool {
        self.and_coeffs_ok && self.and_table_ok && self.nand_table_ok
    }
}

/// Calibrates the network and checks both truth tables and agent X's weights.
pub fn verify_gates(network: &mut NandNetwork<f64>) -> Result<GateReport> {
    let t = calibrate_thresholds(network)?;
    network.set_thresholds(t);
    let mut rows = Vec::new();
    for (a, b) in input_rows() {
        let w = network.wires(a, b)?;
        let and_expected = a > 0.5 && b > 0.5;
        rows.push(GateRow {
            lnp1: a,
            lnp2: b,
            lnp3: w.l3,
            lnp4: network.ln_p4,
            l4: w.switch.l4,
            produced: w.switch.produced,
            and_out: t.and_wire.read(w.l3),
            nand_out: nand_network_forward(network, a, b)?,
            and_expected,
            nand_expected: !and_expected,
        });
    }
    let c = &network.x_coeffs;
    let and_coeffs_ok = c.omega.len() == 2 && c.omega.iter().all(|w| (w + 20.0).abs() < 1e-9) && (c.z - 30.0).abs() < 1e-9;
    Ok(GateReport {
        omega: c.omega.clone(),
        z: c.z,
        thresholds: t,
        and_coeffs_ok,
        and_table_ok: rows.iter().all(|r| r.and_out == r.and_expected),
        nand_table_ok: rows.iter().all(|r| r.nand_out == r.nand_expected),
        rows,
    })
}
