//! Named experiment setups.

use anyhow::{anyhow, Result};
use koblab::analysis::fit::log_grid;
use koblab::analysis::probe::ProbeOptions;
use koblab::analysis::sweep::{DirectionRule, LowerMethod, SweepConfig, UpperMethod};
use koblab::domain::DomainSpec;
use koblab::envelope::EnvelopeOptions;
use koblab::lower::Cone;
use koblab::models::{quartic, saddle, unit_ball, OmegaModel};
use koblab::optimize::OptimizeOptions;
use koblab::{c, CVector};

pub const NAMES: [&str; 6] = ["sharpness-c2", "omega-m2", "omega-m3", "nonpsc-witness", "psc-23", "ball-baseline"];

const SLOPE_TOL: f64 = 0.05;

/// Accepted range for a fitted slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub min: f64,
    pub max: f64,
}

impl Window {
    pub fn around(target: f64, tol: f64) -> Self {
        Window {
            min: target - tol,
            max: target + tol,
        }
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.min && s <= self.max
    }

    /// `MIN:MAX`, either side may be empty.
    pub fn parse(s: &str) -> Result<Self> {
        let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("slope window '{s}' is not MIN:MAX"))?;
        let side = |t: &str, d: f64| -> Result<f64> {
            if t.trim().is_empty() {
                Ok(d)
            } else {
                t.trim().parse().map_err(|_| anyhow!("bad slope bound '{t}'"))
            }
        };
        let w = Window {
            min: side(a, f64::NEG_INFINITY)?,
            max: side(b, f64::INFINITY)?,
        };
        if w.min > w.max {
            return Err(anyhow!("empty slope window '{s}'"));
        }
        Ok(w)
    }
}

pub struct SweepPreset {
    pub domain: DomainSpec,
    pub config: SweepConfig,
    pub lower_window: Option<Window>,
    pub upper_window: Option<Window>,
}

pub struct ProbePreset {
    pub domain: DomainSpec,
    pub options: ProbeOptions,
    pub witness_window: Window,
}

fn config(base_point: CVector, direction: DirectionRule, lower: LowerMethod, upper: UpperMethod) -> SweepConfig {
    SweepConfig {
        base_point,
        direction,
        deltas: log_grid(1e-2, 1e-5, 8),
        lower,
        upper,
        cone: Cone::default(),
        envelope: EnvelopeOptions::default(),
    }
}

fn omega(m: f64) -> Result<SweepPreset> {
    let model = OmegaModel::new(m);
    let target = -(1.0 - 1.0 / (2.0 * m));
    Ok(SweepPreset {
        domain: model.domain()?,
        config: config(
            CVector::zeros(2),
            DirectionRule::Fixed(OmegaModel::cone_direction()),
            LowerMethod::ModelTangential(model.envelope()),
            UpperMethod::QuadraticFamily { m },
        ),
        lower_window: Some(Window::around(target, SLOPE_TOL)),
        upper_window: Some(Window::around(target, SLOPE_TOL)),
    })
}

pub fn sweep_preset(name: &str) -> Result<SweepPreset> {
    match name {
        "sharpness-c2" => Ok(SweepPreset {
            domain: saddle()?,
            config: config(
                CVector::zeros(2),
                DirectionRule::Scaled {
                    tangential: CVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]),
                    exponent: 0.5,
                },
                LowerMethod::C11,
                UpperMethod::NormalFamily,
            ),
            lower_window: Some(Window::around(-0.5, SLOPE_TOL)),
            upper_window: Some(Window::around(-0.5, SLOPE_TOL)),
        }),
        "omega-m2" => omega(2.0),
        "omega-m3" => omega(3.0),
        "psc-23" => Ok(SweepPreset {
            domain: quartic()?,
            config: config(
                CVector::zeros(2),
                DirectionRule::Normal,
                LowerMethod::Pseudoconvex,
                UpperMethod::Optimize(OptimizeOptions::default()),
            ),
            lower_window: Some(Window {
                min: f64::NEG_INFINITY,
                max: -2.0 / 3.0 + SLOPE_TOL,
            }),
            upper_window: None,
        }),
        "ball-baseline" => {
            let mut cfg = config(
                CVector::unit(2, 0),
                DirectionRule::Normal,
                LowerMethod::C11,
                UpperMethod::Optimize(OptimizeOptions { degree: 1, effort: 10 }),
            );
            cfg.deltas = log_grid(1e-2, 1e-4, 5);
            // the localization factor keeps the lower slope above -1 on this grid
            Ok(SweepPreset {
                domain: unit_ball(2)?,
                config: cfg,
                lower_window: Some(Window { min: -1.0 - SLOPE_TOL, max: -0.4 }),
                upper_window: Some(Window::around(-1.0, SLOPE_TOL)),
            })
        }
        "nonpsc-witness" => Err(anyhow!("preset '{name}' belongs to the probe command")),
        _ => Err(anyhow!("unknown preset '{name}' (known: {})", NAMES.join(", "))),
    }
}

pub fn probe_preset(name: &str) -> Result<ProbePreset> {
    match name {
        "nonpsc-witness" => Ok(ProbePreset {
            domain: saddle()?,
            options: ProbeOptions::default(),
            witness_window: Window::around(-0.5, SLOPE_TOL),
        }),
        n if NAMES.contains(&n) => Err(anyhow!("preset '{n}' belongs to the sweep command")),
        _ => Err(anyhow!("unknown preset '{name}' (known: {})", NAMES.join(", "))),
    }
}

/// Built-in domains addressable by name in place of a file.
pub fn builtin_domain(name: &str) -> Option<Result<DomainSpec>> {
    let d = match name {
        "ball" => unit_ball(2),
        "saddle" => saddle(),
        "quartic" => quartic(),
        "omega-m2" => OmegaModel::new(2.0).domain(),
        "omega-m3" => OmegaModel::new(3.0).domain(),
        _ => return None,
    };
    Some(d.map_err(Into::into))
}
