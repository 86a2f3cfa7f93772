//! The six import-quantity datasets: a triangle, a disc and an annulus over
//! `[0,100]^2`, and their complements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{EnnError, Result};

pub const Q_MAX: f64 = 100.0;
pub const DEFAULT_PERIODS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Period {
    pub q_steel: f64,
    pub q_brass: f64,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingDataset {
    pub kind: u8,
    pub periods: Vec<Period>,
    pub seed: u64,
}

fn check_kind(kind: u8) -> Result<()> {
    if (1..=6).contains(&kind) {
        Ok(())
    } else {
        Err(EnnError::Domain(format!("dataset kind must be 1..6, got {kind}")))
    }
}

/// Region membership; points on a boundary are outside the odd-kind region.
pub fn label_point(kind: u8, q1: f64, q2: f64) -> Result<bool> {
    check_kind(kind)?;
    if !((0.0..=Q_MAX).contains(&q1) && (0.0..=Q_MAX).contains(&q2)) {
        return Err(EnnError::Domain(format!("quantities ({q1}, {q2}) outside [0, 100]^2")));
    }
    let r2 = (q1 - 50.0).powi(2) + (q2 - 50.0).powi(2);
    let inside = match kind {
        1 | 2 => q1 + q2 < 100.0,
        3 | 4 => r2 < 2500.0,
        _ => r2 > 625.0 && r2 < 2500.0,
    };
    Ok(if kind % 2 == 1 { inside } else { !inside })
}

pub fn generate_with_rng<R: Rng>(kind: u8, periods: usize, rng: &mut R) -> Result<Vec<Period>> {
    check_kind(kind)?;
    (0..periods)
        .map(|_| {
            let q_steel = rng.gen::<f64>() * Q_MAX;
            let q_brass = rng.gen::<f64>() * Q_MAX;
            Ok(Period {
                q_steel,
                q_brass,
                label: label_point(kind, q_steel, q_brass)?,
            })
        })
        .collect()
}

pub fn generate(kind: u8, periods: usize, seed: u64) -> Result<TrainingDataset> {
    if periods == 0 {
        return Err(EnnError::Empty("dataset needs at least one period"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(TrainingDataset {
        kind,
        periods: generate_with_rng(kind, periods, &mut rng)?,
        seed,
    })
}

/// Exact area fraction of the TRUE region.
pub fn true_fraction(kind: u8) -> Result<f64> {
    check_kind(kind)?;
    let pi = std::f64::consts::PI;
    let odd = match kind {
        1 | 2 => 0.5,
        3 | 4 => pi / 4.0,
        _ => 3.0 * pi / 16.0,
    };
    Ok(if kind % 2 == 1 { odd } else { 1.0 - odd })
}
