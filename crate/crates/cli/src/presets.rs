//! Parameter grids behind the `--table` and `--figure` shortcuts.

use clap::ValueEnum;
use rrcv::{MeasurementErrorModel, ShiftRange};

/// Defaults a preset supplies; explicit flags and config values still win.
#[derive(Debug, Clone, Default)]
pub struct Preset {
    pub n: Vec<usize>,
    pub gamma0: Vec<f64>,
    pub me: Vec<MeasurementErrorModel>,
    pub taus: Vec<f64>,
    pub ranges: Vec<ShiftRange>,
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignTable {
    /// Chart constants k_d and k_u without measurement error.
    Constants,
    /// Control limits under two measurement-error settings.
    Limits,
    /// The phase-II example: upper charts at γ₀ = 0.417, n = 5.
    Example,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvaluateTable {
    NoMe,
    Eta,
    Theta,
    Slope,
    Reps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EarlFigure {
    EtaTheta,
    Slope,
    Reps,
}

fn me(theta: f64, eta: f64, slope: f64, reps: u32) -> MeasurementErrorModel {
    MeasurementErrorModel::new(theta, eta, slope, reps).expect("preset measurement model")
}

fn steps(lo: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| ((lo + step * i as f64) * 1e9).round() / 1e9)
        .collect()
}

const ME_TAUS: [f64; 6] = [0.5, 0.7, 0.8, 1.3, 1.5, 2.0];

impl DesignTable {
    pub fn preset(self) -> Preset {
        match self {
            DesignTable::Constants => Preset {
                n: vec![5, 15],
                gamma0: vec![0.05, 0.1, 0.2],
                me: vec![MeasurementErrorModel::identity()],
                ..Preset::default()
            },
            DesignTable::Limits => Preset {
                n: vec![5, 15],
                gamma0: vec![0.05, 0.1, 0.15, 0.2],
                me: vec![me(0.01, 0.1, 1.0, 1), me(0.05, 0.28, 1.0, 1)],
                ..Preset::default()
            },
            DesignTable::Example => Preset {
                n: vec![5],
                gamma0: vec![0.417],
                me: vec![me(0.05, 0.28, 1.0, 1)],
                ..Preset::default()
            },
        }
    }
}

impl EvaluateTable {
    pub fn preset(self) -> Preset {
        let base = Preset {
            n: vec![5, 15],
            gamma0: vec![0.05, 0.1, 0.2],
            taus: ME_TAUS.to_vec(),
            force: true,
            ..Preset::default()
        };
        match self {
            EvaluateTable::NoMe => Preset {
                me: vec![MeasurementErrorModel::identity()],
                taus: vec![0.5, 0.65, 0.8, 0.9, 1.1, 1.25, 1.5, 2.0],
                force: false,
                ..base
            },
            EvaluateTable::Eta => Preset {
                me: [0.0, 0.1, 0.2, 0.3, 0.5, 1.0]
                    .iter()
                    .map(|&e| me(0.05, e, 1.0, 1))
                    .collect(),
                ..base
            },
            EvaluateTable::Theta => Preset {
                me: steps(0.0, 0.01, 6)
                    .into_iter()
                    .map(|t| me(t, 0.28, 1.0, 1))
                    .collect(),
                ..base
            },
            EvaluateTable::Slope => Preset {
                me: steps(0.8, 0.1, 5)
                    .into_iter()
                    .map(|b| me(0.05, 0.28, b, 1))
                    .collect(),
                ..base
            },
            EvaluateTable::Reps => Preset {
                me: [1, 3, 5, 7, 10]
                    .iter()
                    .map(|&m| me(0.05, 0.28, 1.0, m))
                    .collect(),
                ..base
            },
        }
    }
}

impl EarlFigure {
    pub fn preset(self) -> Preset {
        let base = Preset {
            gamma0: vec![0.05, 0.2],
            ranges: vec![ShiftRange::DECREASING, ShiftRange::INCREASING],
            force: true,
            ..Preset::default()
        };
        match self {
            EarlFigure::EtaTheta => {
                let mut models = Vec::new();
                for eta in steps(0.0, 0.1, 11) {
                    for theta in steps(0.0, 0.01, 6) {
                        models.push(me(theta, eta, 1.0, 1));
                    }
                }
                Preset {
                    n: vec![5],
                    me: models,
                    ..base
                }
            }
            EarlFigure::Slope => Preset {
                n: vec![5, 15],
                me: steps(0.8, 0.05, 9)
                    .into_iter()
                    .map(|b| me(0.05, 0.28, b, 1))
                    .collect(),
                ..base
            },
            EarlFigure::Reps => Preset {
                n: vec![5, 15],
                me: (1..=10).map(|m| me(0.05, 0.28, 1.0, m)).collect(),
                ..base
            },
        }
    }
}
