//! Layered feed-forward producer economies and the hot-dog vendor sweeps.

use num_traits::Float;

use crate::error::{EnnError, Result};
use crate::producer::{lit, ln_output_from_prices, neuron_forward, to_f64, to_neuron, NeuronCoeffs, ProducerParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Intermediate,
    Leisure,
}

#[derive(Debug, Clone)]
pub struct Node<F> {
    params: ProducerParams<F>,
    coeffs: NeuronCoeffs<F>,
    /// Indices of previous-layer goods (or network inputs for layer 0).
    inputs: Vec<usize>,
    pub role: Option<Role>,
}

impl<F: Float> Node<F> {
    pub fn new(params: ProducerParams<F>, inputs: Vec<usize>, role: Option<Role>) -> Result<Self> {
        if inputs.len() != params.n_inputs() {
            return Err(EnnError::Dimension {
                expected: params.n_inputs(),
                got: inputs.len(),
            });
        }
        let coeffs = to_neuron(&params);
        Ok(Self {
            params,
            coeffs,
            inputs,
            role,
        })
    }

    pub fn params(&self) -> &ProducerParams<F> {
        &self.params
    }

    pub fn coeffs(&self) -> &NeuronCoeffs<F> {
        &self.coeffs
    }

    pub fn inputs(&self) -> &[usize] {
        &self.inputs
    }
}

#[derive(Debug, Clone)]
pub struct LayeredEconomy<F> {
    n_inputs: usize,
    layers: Vec<Vec<Node<F>>>,
}

impl<F: Float> LayeredEconomy<F> {
    pub fn new(n_inputs: usize, layers: Vec<Vec<Node<F>>>) -> Result<Self> {
        let mut width = n_inputs;
        for layer in &layers {
            for node in layer {
                if let Some(&bad) = node.inputs.iter().find(|&&i| i >= width) {
                    return Err(EnnError::Domain(format!("wiring index {bad} out of range for width {width}")));
                }
            }
            width = layer.len();
        }
        Ok(Self { n_inputs, layers })
    }

    pub fn layers(&self) -> &[Vec<Node<F>>] {
        &self.layers
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Replaces one producer, keeping its wiring.
    pub fn set_params(&mut self, layer: usize, idx: usize, params: ProducerParams<F>) -> Result<()> {
        let node = &self.layers[layer][idx];
        self.layers[layer][idx] = Node::new(params, node.inputs.clone(), node.role)?;
        Ok(())
    }
}

fn gather<F: Float>(src: &[F], idx: &[usize]) -> Vec<F> {
    idx.iter().map(|&i| src[i]).collect()
}

/// Output log prices of every layer.
pub fn forward<F: Float>(econ: &LayeredEconomy<F>, input_log_prices: &[F]) -> Result<Vec<Vec<F>>> {
    if input_log_prices.len() != econ.n_inputs {
        return Err(EnnError::Dimension {
            expected: econ.n_inputs,
            got: input_log_prices.len(),
        });
    }
    let mut out: Vec<Vec<F>> = Vec::with_capacity(econ.layers.len());
    let mut prev = input_log_prices.to_vec();
    for layer in &econ.layers {
        let cur = layer
            .iter()
            .map(|n| neuron_forward(&n.coeffs, &gather(&prev, &n.inputs)))
            .collect::<Result<Vec<F>>>()?;
        out.push(cur.clone());
        prev = cur;
    }
    Ok(out)
}

/// `(A, alpha)` of one single-input hidden producer.
type Hidden = (f64, f64);

struct HotdogModel {
    intermediate: &'static [Hidden],
    leisure: &'static [Hidden],
    a_out: (f64, f64),
    alpha_int: &'static [f64],
    alpha_leis: &'static [f64],
}

const MODELS: [HotdogModel; 4] = [
    HotdogModel {
        intermediate: &[(9.0, 0.675), (0.022, 0.954), (0.389, 0.964), (5066.0, 0.265), (2.2, 0.53)],
        leisure: &[(11.0, 0.53), (0.083, 0.974), (2.399, 0.964), (85.516, 0.742), (22.0, 0.53)],
        a_out: (1.684, 1.5),
        alpha_int: &[0.091, 0.091, 0.13, 0.091, 0.01],
        alpha_leis: &[0.01, 0.083, 0.091, 0.001, 0.142],
    },
    HotdogModel {
        intermediate: &[(0.002, 0.909), (50.0, 0.95), (0.383, 0.98)],
        leisure: &[(0.406, 0.968), (0.002, 0.98)],
        a_out: (1.6, 1.5),
        alpha_int: &[0.375, 0.01, 0.057],
        alpha_leis: &[0.091, 0.091],
    },
    HotdogModel {
        intermediate: &[(0.005, 0.909), (41.389, 0.909), (41.389, 0.909)],
        leisure: &[(0.439, 0.909), (34_600_299.0, 0.909)],
        a_out: (847.277, 0.1),
        alpha_int: &[0.111, 0.067, 0.067],
        alpha_leis: &[0.111, 0.067],
    },
    HotdogModel {
        intermediate: &[(47.275, 0.476), (41.389, 0.455), (2105.0, 0.417), (0.003, 0.49), (0.541, 0.484)],
        leisure: &[
            (34_600_299.0, 0.455),
            (2.707, 0.455),
            (0.002, 0.455),
            (0.383, 0.49),
            (5530.0, 0.476),
        ],
        a_out: (6.009, 1.5),
        alpha_int: &[0.01, 0.01, 0.01, 0.048, 0.038],
        alpha_leis: &[0.01, 0.02, 0.231, 0.029, 0.005],
    },
];

/// Hidden layer of single-input producers, then the Labor and Leisure
/// producers; every anticipated price is 1.
pub fn build_hotdog_model<F: Float>(model_id: usize) -> Result<LayeredEconomy<F>> {
    let spec = MODELS
        .get(model_id.wrapping_sub(1))
        .ok_or_else(|| EnnError::Domain(format!("unknown hot-dog model {model_id}")))?;
    let mut hidden = Vec::new();
    for (role, rows) in [(Role::Intermediate, spec.intermediate), (Role::Leisure, spec.leisure)] {
        for &(a, al) in rows {
            let p = ProducerParams::new(lit(a), vec![lit(al)], F::one())?;
            hidden.push(Node::new(p, vec![0], Some(role))?);
        }
    }
    let n_int = spec.intermediate.len();
    let n_leis = spec.leisure.len();
    let labor = ProducerParams::new(lit(spec.a_out.0), spec.alpha_int.iter().map(|&v| lit(v)).collect(), F::one())?;
    let leisure = ProducerParams::new(lit(spec.a_out.1), spec.alpha_leis.iter().map(|&v| lit(v)).collect(), F::one())?;
    let finals = vec![
        Node::new(labor, (0..n_int).collect(), Some(Role::Intermediate))?,
        Node::new(leisure, (n_int..n_int + n_leis).collect(), Some(Role::Leisure))?,
    ];
    LayeredEconomy::new(1, vec![hidden, finals])
}

/// `Y_labor / Y_leisure` at raw-material log price `ln_p`, with final outputs
/// taken as quantities from the optimal-output formula.
pub fn labor_leisure_ratio<F: Float>(econ: &LayeredEconomy<F>, ln_p: F) -> Result<F> {
    let layers = econ.layers();
    if layers.len() != 2 || layers[1].len() != 2 {
        return Err(EnnError::Domain("not a hot-dog shaped economy".into()));
    }
    let hidden = forward(&LayeredEconomy::new(1, vec![layers[0].clone()])?, &[ln_p])?.remove(0);
    let ln_y = |node: &Node<F>| {
        let prices: Vec<F> = node.inputs.iter().map(|&i| hidden[i].exp()).collect();
        ln_output_from_prices(&node.params, &prices)
    };
    let ln_labor = ln_y(&layers[1][0])?;
    let ln_leisure = ln_y(&layers[1][1])?;
    if !(ln_leisure > lit(1e-300f64.ln())) {
        return Err(EnnError::RatioOverflow {
            ln_p: to_f64(ln_p),
            leisure: to_f64(ln_leisure.exp()),
        });
    }
    let r = (ln_labor - ln_leisure).exp();
    if !(r.is_finite() && r > F::zero()) {
        return Err(EnnError::RatioOverflow {
            ln_p: to_f64(ln_p),
            leisure: to_f64(ln_leisure.exp()),
        });
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve<F> {
    pub grid: Vec<F>,
    pub ratio: Vec<F>,
}

pub const SWEEP_RANGE: (f64, f64) = (-10.0, 10.0);

/// Evenly spaced grid over the sweep range.
pub fn default_grid<F: Float>(points: usize) -> Vec<F> {
    let (lo, hi) = SWEEP_RANGE;
    match points {
        0 => vec![],
        1 => vec![lit(lo)],
        n => (0..n).map(|i| lit(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect(),
    }
}

pub fn sweep<F: Float>(econ: &LayeredEconomy<F>, grid: &[F]) -> Result<SweepCurve<F>> {
    let (lo, hi) = SWEEP_RANGE;
    if grid.iter().any(|&g| !(g >= lit(lo) && g <= lit(hi))) {
        return Err(EnnError::Domain("sweep grid must lie in [-10, 10]".into()));
    }
    let up = grid.windows(2).all(|w| w[0] <= w[1]);
    let down = grid.windows(2).all(|w| w[0] >= w[1]);
    if !(up || down) {
        return Err(EnnError::Domain("sweep grid must be sorted".into()));
    }
    let ratio = grid.iter().map(|&g| labor_leisure_ratio(econ, g)).collect::<Result<Vec<F>>>()?;
    Ok(SweepCurve {
        grid: grid.to_vec(),
        ratio,
    })
}

/// Number of sign flips in the first differences, zero steps skipped.
pub fn derivative_sign_changes<F: Float>(values: &[F]) -> usize {
    let mut last = 0i8;
    let mut changes = 0;
    for w in values.windows(2) {
        let d = w[1] - w[0];
        let s = if d > F::zero() {
            1
        } else if d < F::zero() {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                changes += 1;
            }
            last = s;
        }
    }
    changes
}
