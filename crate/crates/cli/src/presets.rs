//! Parameter sets of the twelve published sample panels.
//!
//! All panels use `d = 1`, a Gaussian template, Daubechies order 10,
//! truncation at `j = 10` and the window `[-25, 25]`.

use rws_core::{PriorSpec, TemplateDistribution};

pub const PANEL_ORDER: usize = 10;
pub const PANEL_J_MAX: u32 = 10;
pub const PANEL_WINDOW: (f64, f64) = (-25.0, 25.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub prior: PriorSpec,
}

fn besov(name: &'static str, alpha: f64, decay: f64) -> Preset {
    Preset {
        name,
        prior: PriorSpec::besov(alpha, decay, decay, 0.0, TemplateDistribution::Gaussian),
    }
}

fn bernoulli(name: &'static str, nu: f64, mu: f64) -> Preset {
    let prior = PriorSpec::bernoulli(-0.5, -0.5, -0.5, mu, nu, TemplateDistribution::Gaussian)
        .expect("panel parameters are valid");
    Preset { name, prior }
}

pub fn presets() -> Vec<Preset> {
    vec![
        besov("besov00", -1.0, -1.0),
        besov("besov01", -1.0, -2.0),
        besov("besov02", -1.0, -4.0),
        besov("besov10", -1.0, -1.0),
        besov("besov11", -2.0, -1.0),
        besov("besov12", -4.0, -1.0),
        bernoulli("bernoulli00", -1.0, 0.0),
        bernoulli("bernoulli01", -2.0, 0.0),
        bernoulli("bernoulli02", -4.0, 0.0),
        bernoulli("bernoulli10", 0.0, -1.0),
        bernoulli("bernoulli11", 0.0, -2.0),
        bernoulli("bernoulli12", 0.0, -4.0),
    ]
}

pub fn preset(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}
