//! Synthetic scenario generation with analytically known ground truth.
//!
//! Every estimator's oracle tests and the acceptance suite draw their data
//! here. Generation is a pure function of the spec (kind, parameters, seed):
//! identical specs produce identical bytes.

mod rng;

pub use rng::CounterRng;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Exogenous treatment, nonseparable mechanism `y = exp(u) * (1 + 0.5 x)`.
    Exogenous { n: usize, x_levels: usize },
    /// Linear IV: `x = strength*z + w`, `y = beta*x + confounding*w + e`.
    IvLinear {
        n: usize,
        beta: f64,
        strength: f64,
        confounding: f64,
    },
    /// Binary-instrument nonseparable first stage `x = z + w`, `y = x + exp(w)`.
    IvNonseparable { n: usize },
    /// Production functions `h0 = id`, `h1(u) = 2u` with `U ~ U[0,1]`,
    /// `U* ~ U[0,1/2]`: the counterfactual is exactly `U[0,1]`.
    Cic { n_per_cell: usize, effect: f64 },
    /// Linear factor model whose treated loadings are a known convex
    /// combination of control loadings.
    FactorModelSc {
        n_controls: usize,
        periods: usize,
        t_star: usize,
        noise: f64,
        effect: f64,
    },
    /// Within-unit samples whose treated distribution is a known mixture
    /// (CDF form) or quantile average (location form) of the controls.
    DscMixture {
        n_controls: usize,
        n_per_unit: usize,
        periods: usize,
        t_star: usize,
        effect: f64,
        mixture: bool,
    },
    /// Covariate matching with a no-overlap treated tail carrying bias of
    /// the opposite sign to the effect.
    MatchingOverlap {
        n_treated: usize,
        n_control: usize,
        effect: f64,
        tail_fraction: f64,
        tail_location: f64,
    },
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Exogenous { .. } => "exogenous",
            ScenarioKind::IvLinear { .. } => "iv-linear",
            ScenarioKind::IvNonseparable { .. } => "iv-nonseparable",
            ScenarioKind::Cic { .. } => "cic",
            ScenarioKind::FactorModelSc { .. } => "factor-model-sc",
            ScenarioKind::DscMixture { .. } => "dsc-mixture",
            ScenarioKind::MatchingOverlap { .. } => "matching-overlap",
        }
    }

    /// The canonical parameterization for a kind name.
    pub fn default_for(name: &str) -> Result<ScenarioKind> {
        Ok(match name {
            "exogenous" => ScenarioKind::Exogenous {
                n: 5000,
                x_levels: 2,
            },
            "iv-linear" => ScenarioKind::IvLinear {
                n: 2000,
                beta: 2.0,
                strength: 1.0,
                confounding: 0.8,
            },
            "iv-nonseparable" => ScenarioKind::IvNonseparable { n: 5000 },
            "cic" => ScenarioKind::Cic {
                n_per_cell: 5000,
                effect: 1.0,
            },
            "factor-model-sc" => ScenarioKind::FactorModelSc {
                n_controls: 4,
                periods: 12,
                t_star: 8,
                noise: 0.01,
                effect: 1.0,
            },
            "dsc-mixture" => ScenarioKind::DscMixture {
                n_controls: 3,
                n_per_unit: 2000,
                periods: 4,
                t_star: 2,
                effect: 0.5,
                mixture: true,
            },
            "matching-overlap" => ScenarioKind::MatchingOverlap {
                n_treated: 200,
                n_control: 400,
                effect: 1.0,
                tail_fraction: 0.2,
                tail_location: -4.0,
            },
            other => {
                return Err(Error::InvalidScenario(format!(
                    "unknown scenario kind '{other}'"
                )))
            }
        })
    }
}

/// Long-format rows for each module's CSV schema.
#[derive(Debug, Clone)]
pub enum Dataset {
    /// Columns `y,x[,z]`.
    Structural {
        y: Vec<f64>,
        x: Vec<f64>,
        z: Option<Vec<f64>>,
    },
    /// Columns `group,period,y1..yd` with `group` in `{C,T}` and `period` in `{0,1}`.
    CicLong { d: usize, rows: Vec<CicRow> },
    /// Columns `unit_id,period,individual_id,y`.
    Panel { rows: Vec<PanelRow> },
    /// Columns `unit_id,period,y`.
    PanelAggregate { rows: Vec<AggregateRow> },
    /// Columns `id,treated,y,x1..xd`.
    Matching { d: usize, rows: Vec<MatchingRow> },
}

#[derive(Debug, Clone)]
pub struct CicRow {
    pub group: char,
    pub period: u8,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PanelRow {
    pub unit_id: usize,
    pub period: usize,
    pub individual_id: usize,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub unit_id: usize,
    pub period: usize,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct MatchingRow {
    pub id: usize,
    pub treated: u8,
    pub y: f64,
    pub x: Vec<f64>,
}

/// The true mechanism/counterfactual/effect behind a generated dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub kind: String,
    pub seed: u64,
    pub description: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    /// Counterfactual outcome law of the treated post period, when uniform.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterfactual_uniform: Option<(f64, f64)>,
    /// First-stage latent (one value per observation) for recovery oracles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latent: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unit_effects: Option<Vec<f64>>,
    /// Population bias of the naive difference in means, when meaningful.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub naive_bias: Option<f64>,
    /// Mechanism tag with parameters for `g(x, u)` oracles.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mechanism: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub dataset: Dataset,
    pub ground_truth: GroundTruth,
}

pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    let rng = CounterRng::new(spec.seed);
    let (dataset, ground_truth) = match &spec.kind {
        ScenarioKind::Exogenous { n, x_levels } => gen_exogenous(*n, *x_levels, &rng, spec.seed)?,
        ScenarioKind::IvLinear {
            n,
            beta,
            strength,
            confounding,
        } => gen_iv_linear(*n, *beta, *strength, *confounding, &rng, spec.seed)?,
        ScenarioKind::IvNonseparable { n } => gen_iv_nonseparable(*n, &rng, spec.seed)?,
        ScenarioKind::Cic { n_per_cell, effect } => gen_cic(*n_per_cell, *effect, &rng, spec.seed)?,
        ScenarioKind::FactorModelSc {
            n_controls,
            periods,
            t_star,
            noise,
            effect,
        } => gen_factor_model(*n_controls, *periods, *t_star, *noise, *effect, &rng, spec.seed)?,
        ScenarioKind::DscMixture {
            n_controls,
            n_per_unit,
            periods,
            t_star,
            effect,
            mixture,
        } => gen_dsc_mixture(
            *n_controls,
            *n_per_unit,
            *periods,
            *t_star,
            *effect,
            *mixture,
            &rng,
            spec.seed,
        )?,
        ScenarioKind::MatchingOverlap {
            n_treated,
            n_control,
            effect,
            tail_fraction,
            tail_location,
        } => gen_matching_overlap(
            *n_treated,
            *n_control,
            *effect,
            *tail_fraction,
            *tail_location,
            &rng,
            spec.seed,
        )?,
    };
    Ok(Scenario {
        spec: spec.clone(),
        dataset,
        ground_truth,
    })
}

fn gen_exogenous(
    n: usize,
    x_levels: usize,
    rng: &CounterRng,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    if n == 0 || x_levels == 0 {
        return Err(Error::InvalidScenario(
            "exogenous scenario needs n > 0 and x_levels > 0".into(),
        ));
    }
    let mut u_stream = rng.split(1);
    let mut x_stream = rng.split(2);
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let u = u_stream.next_normal();
        let level = x_stream.next_index(x_levels) as f64;
        x.push(level);
        y.push(u.exp() * (1.0 + 0.5 * level));
    }
    Ok((
        Dataset::Structural { y, x, z: None },
        GroundTruth {
            kind: "exogenous".into(),
            seed,
            description: "y = exp(u) * (1 + 0.5 x), u standard normal, x uniform on levels"
                .into(),
            ate: None,
            effect: None,
            lambda: None,
            counterfactual_uniform: None,
            latent: None,
            unit_effects: None,
            naive_bias: None,
            mechanism: Some("scaled-exp:0.5".into()),
        },
    ))
}

fn gen_iv_linear(
    n: usize,
    beta: f64,
    strength: f64,
    confounding: f64,
    rng: &CounterRng,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    if n < 3 {
        return Err(Error::InvalidScenario("iv-linear needs n >= 3".into()));
    }
    let mut z_stream = rng.split(1);
    let mut w_stream = rng.split(2);
    let mut e_stream = rng.split(3);
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for _ in 0..n {
        let zi = z_stream.next_normal();
        let wi = w_stream.next_normal();
        let ei = e_stream.next_normal();
        let xi = strength * zi + wi;
        y.push(beta * xi + confounding * wi + ei);
        x.push(xi);
        z.push(zi);
    }
    Ok((
        Dataset::Structural { y, x, z: Some(z) },
        GroundTruth {
            kind: "iv-linear".into(),
            seed,
            description: format!(
                "x = {strength} z + w, y = {beta} x + {confounding} w + e (all errors standard normal)"
            ),
            ate: Some(beta),
            effect: Some(beta),
            lambda: None,
            counterfactual_uniform: None,
            latent: None,
            unit_effects: None,
            naive_bias: Some(confounding / (1.0 + strength * strength)),
            mechanism: None,
        },
    ))
}

fn gen_iv_nonseparable(n: usize, rng: &CounterRng, seed: u64) -> Result<(Dataset, GroundTruth)> {
    if n < 60 {
        return Err(Error::InvalidScenario(
            "iv-nonseparable needs n >= 60 (30 per instrument level)".into(),
        ));
    }
    let mut z_stream = rng.split(1);
    let mut w_stream = rng.split(2);
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut latent = Vec::with_capacity(n);
    for _ in 0..n {
        let zi = if z_stream.next_f64() < 0.5 { 0.0 } else { 1.0 };
        let wi = w_stream.next_normal();
        let xi = zi + wi;
        y.push(xi + wi.exp());
        x.push(xi);
        z.push(zi);
        latent.push(wi);
    }
    Ok((
        Dataset::Structural { y, x, z: Some(z) },
        GroundTruth {
            kind: "iv-nonseparable".into(),
            seed,
            description: "x = z + w (z binary, w standard normal), y = x + exp(w); the \
                          second-stage unobservable equals w"
                .into(),
            ate: Some(1.0),
            effect: Some(1.0),
            lambda: None,
            counterfactual_uniform: None,
            latent: Some(latent),
            unit_effects: None,
            naive_bias: None,
            mechanism: Some("additive-exp".into()),
        },
    ))
}

fn gen_cic(n_per_cell: usize, effect: f64, rng: &CounterRng, seed: u64) -> Result<(Dataset, GroundTruth)> {
    if n_per_cell == 0 {
        return Err(Error::InvalidScenario("cic needs n_per_cell > 0".into()));
    }
    let mut streams: Vec<CounterRng> = (1..=4).map(|tag| rng.split(tag)).collect();
    let mut rows = Vec::with_capacity(4 * n_per_cell);
    for _ in 0..n_per_cell {
        rows.push(CicRow {
            group: 'C',
            period: 0,
            y: vec![streams[0].next_f64()],
        });
    }
    for _ in 0..n_per_cell {
        rows.push(CicRow {
            group: 'C',
            period: 1,
            y: vec![2.0 * streams[1].next_f64()],
        });
    }
    for _ in 0..n_per_cell {
        rows.push(CicRow {
            group: 'T',
            period: 0,
            y: vec![0.5 * streams[2].next_f64()],
        });
    }
    for _ in 0..n_per_cell {
        // counterfactual draw 2 * U[0, 1/2] = U[0,1], plus the effect
        rows.push(CicRow {
            group: 'T',
            period: 1,
            y: vec![streams[3].next_f64() + effect],
        });
    }
    Ok((
        Dataset::CicLong { d: 1, rows },
        GroundTruth {
            kind: "cic".into(),
            seed,
            description: "h0 = id, h1(u) = 2u, U ~ U[0,1], U* ~ U[0,1/2]; counterfactual \
                          treated-post law is U[0,1]"
                .into(),
            ate: Some(effect),
            effect: Some(effect),
            lambda: None,
            counterfactual_uniform: Some((0.0, 1.0)),
            latent: None,
            unit_effects: None,
            naive_bias: None,
            mechanism: Some("h1(u)=2u".into()),
        },
    ))
}

fn gen_factor_model(
    n_controls: usize,
    periods: usize,
    t_star: usize,
    noise: f64,
    effect: f64,
    rng: &CounterRng,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    if n_controls < 2 {
        return Err(Error::InvalidScenario(
            "factor-model-sc needs at least two controls".into(),
        ));
    }
    if !(t_star >= 1 && t_star < periods) {
        return Err(Error::InvalidScenario(format!(
            "t_star must lie strictly inside 0..{periods}, got {t_star}"
        )));
    }
    let k = 3usize;
    let mut loading_stream = rng.split(1);
    let mut factor_stream = rng.split(2);
    let mut noise_stream = rng.split(3);
    let mut lambda_stream = rng.split(4);

    // random simplex weights for the treated loadings
    let raw: Vec<f64> = (0..n_controls).map(|_| lambda_stream.next_exp()).collect();
    let total: f64 = raw.iter().sum();
    let lambda: Vec<f64> = raw.iter().map(|r| r / total).collect();

    let loadings: Vec<Vec<f64>> = (0..n_controls)
        .map(|_| (0..k).map(|_| loading_stream.next_f64()).collect())
        .collect();
    let treated_loading: Vec<f64> = (0..k)
        .map(|f| {
            lambda
                .iter()
                .zip(loadings.iter())
                .map(|(l, mu)| l * mu[f])
                .sum()
        })
        .collect();

    let mut rows = Vec::new();
    for t in 0..periods {
        let delta = 0.5 * factor_stream.next_normal();
        let w: Vec<f64> = (0..k).map(|_| factor_stream.next_normal()).collect();
        let outcome = |mu: &[f64], noise_term: f64| -> f64 {
            delta + w.iter().zip(mu.iter()).map(|(a, b)| a * b).sum::<f64>() + noise_term
        };
        let treated_effect = if t >= t_star { effect } else { 0.0 };
        rows.push(AggregateRow {
            unit_id: 0,
            period: t,
            y: outcome(&treated_loading, noise * noise_stream.next_normal()) + treated_effect,
        });
        for (j, mu) in loadings.iter().enumerate() {
            rows.push(AggregateRow {
                unit_id: j + 1,
                period: t,
                y: outcome(mu, noise * noise_stream.next_normal()),
            });
        }
    }
    Ok((
        Dataset::PanelAggregate { rows },
        GroundTruth {
            kind: "factor-model-sc".into(),
            seed,
            description: "linear factor model with treated loadings a fixed convex combination \
                          of control loadings; zero-mean transitory shocks"
                .into(),
            ate: Some(effect),
            effect: Some(effect),
            lambda: Some(lambda),
            counterfactual_uniform: None,
            latent: None,
            unit_effects: None,
            naive_bias: None,
            mechanism: None,
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn gen_dsc_mixture(
    n_controls: usize,
    n_per_unit: usize,
    periods: usize,
    t_star: usize,
    effect: f64,
    mixture: bool,
    rng: &CounterRng,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    if n_controls < 2 || n_per_unit < 30 {
        return Err(Error::InvalidScenario(
            "dsc-mixture needs >= 2 controls and >= 30 observations per unit-period".into(),
        ));
    }
    if !(t_star >= 1 && t_star < periods) {
        return Err(Error::InvalidScenario(format!(
            "t_star must lie strictly inside 0..{periods}, got {t_star}"
        )));
    }
    let mut lambda_stream = rng.split(1);
    let raw: Vec<f64> = (0..n_controls).map(|_| lambda_stream.next_exp()).collect();
    let total: f64 = raw.iter().sum();
    let lambda: Vec<f64> = raw.iter().map(|r| r / total).collect();

    let mu: Vec<f64> = (0..n_controls)
        .map(|j| 4.0 * j as f64 / (n_controls - 1) as f64)
        .collect();
    let treated_mean: f64 = lambda.iter().zip(mu.iter()).map(|(l, m)| l * m).sum();

    let mut rows = Vec::new();
    let mut draw_stream = rng.split(2);
    let mut trend_stream = rng.split(3);
    for t in 0..periods {
        let delta = 0.3 * trend_stream.next_normal();
        // treated unit 0
        for i in 0..n_per_unit {
            let value = if mixture {
                // component draw from the mixture of control laws
                let u = draw_stream.next_f64();
                let mut acc = 0.0;
                let mut chosen = n_controls - 1;
                for (j, l) in lambda.iter().enumerate() {
                    acc += l;
                    if u < acc {
                        chosen = j;
                        break;
                    }
                }
                mu[chosen] + draw_stream.next_normal() + delta
            } else {
                treated_mean + draw_stream.next_normal() + delta
            };
            let value = if t >= t_star { value + effect } else { value };
            rows.push(PanelRow {
                unit_id: 0,
                period: t,
                individual_id: i,
                y: value,
            });
        }
        for j in 0..n_controls {
            for i in 0..n_per_unit {
                rows.push(PanelRow {
                    unit_id: j + 1,
                    period: t,
                    individual_id: i,
                    y: mu[j] + draw_stream.next_normal() + delta,
                });
            }
        }
    }
    Ok((
        Dataset::Panel { rows },
        GroundTruth {
            kind: "dsc-mixture".into(),
            seed,
            description: if mixture {
                "treated distribution is the lambda-mixture of Gaussian control laws; additive \
                 effect from t_star on"
            } else {
                "treated quantile function is the lambda-average of Gaussian control quantiles; \
                 additive effect from t_star on"
            }
            .into(),
            ate: Some(effect),
            effect: Some(effect),
            lambda: Some(lambda),
            counterfactual_uniform: None,
            latent: None,
            unit_effects: None,
            naive_bias: None,
            mechanism: None,
        },
    ))
}

fn gen_matching_overlap(
    n_treated: usize,
    n_control: usize,
    effect: f64,
    tail_fraction: f64,
    tail_location: f64,
    rng: &CounterRng,
    seed: u64,
) -> Result<(Dataset, GroundTruth)> {
    if n_treated == 0 || n_control == 0 {
        return Err(Error::InvalidScenario(
            "matching-overlap needs nonempty groups".into(),
        ));
    }
    if !(0.0..1.0).contains(&tail_fraction) {
        return Err(Error::InvalidScenario(format!(
            "tail_fraction must lie in [0,1), got {tail_fraction}"
        )));
    }
    let mut x_stream = rng.split(1);
    let mut y_stream = rng.split(2);
    let mut tail_stream = rng.split(3);
    let mut rows = Vec::with_capacity(n_treated + n_control);
    let mut unit_effects = Vec::with_capacity(n_treated);
    for i in 0..n_treated {
        let in_tail = tail_stream.next_f64() < tail_fraction;
        let x = if in_tail {
            tail_location + 0.25 * x_stream.next_normal()
        } else {
            x_stream.next_normal()
        };
        let y = x + effect + 0.25 * y_stream.next_normal();
        rows.push(MatchingRow {
            id: i,
            treated: 1,
            y,
            x: vec![x],
        });
        unit_effects.push(effect);
    }
    for i in 0..n_control {
        let x = x_stream.next_normal();
        let y = x + 0.25 * y_stream.next_normal();
        rows.push(MatchingRow {
            id: n_treated + i,
            treated: 0,
            y,
            x: vec![x],
        });
    }
    let ate = unit_effects.iter().sum::<f64>() / unit_effects.len() as f64;
    Ok((
        Dataset::Matching { d: 1, rows },
        GroundTruth {
            kind: "matching-overlap".into(),
            seed,
            description: "outcome = x + effect*treated + noise; a treated tail sits outside the \
                          control support and biases the naive difference in means by roughly \
                          tail_fraction * tail_location"
                .into(),
            ate: Some(ate),
            effect: Some(effect),
            lambda: None,
            counterfactual_uniform: None,
            latent: None,
            unit_effects: Some(unit_effects),
            naive_bias: Some(tail_fraction * tail_location),
            mechanism: None,
        },
    ))
}

impl Dataset {
    /// Writes the dataset as CSV with the module's documented header.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        match self {
            Dataset::Structural { y, x, z } => {
                if z.is_some() {
                    writeln!(w, "y,x,z")?;
                } else {
                    writeln!(w, "y,x")?;
                }
                for i in 0..y.len() {
                    match z {
                        Some(z) => writeln!(w, "{},{},{}", y[i], x[i], z[i])?,
                        None => writeln!(w, "{},{}", y[i], x[i])?,
                    }
                }
            }
            Dataset::CicLong { d, rows } => {
                let header: Vec<String> = (1..=*d).map(|k| format!("y{k}")).collect();
                writeln!(w, "group,period,{}", header.join(","))?;
                for row in rows {
                    let ys: Vec<String> = row.y.iter().map(|v| format!("{v}")).collect();
                    writeln!(w, "{},{},{}", row.group, row.period, ys.join(","))?;
                }
            }
            Dataset::Panel { rows } => {
                writeln!(w, "unit_id,period,individual_id,y")?;
                for row in rows {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        row.unit_id, row.period, row.individual_id, row.y
                    )?;
                }
            }
            Dataset::PanelAggregate { rows } => {
                writeln!(w, "unit_id,period,y")?;
                for row in rows {
                    writeln!(w, "{},{},{}", row.unit_id, row.period, row.y)?;
                }
            }
            Dataset::Matching { d, rows } => {
                let header: Vec<String> = (1..=*d).map(|k| format!("x{k}")).collect();
                writeln!(w, "id,treated,y,{}", header.join(","))?;
                for row in rows {
                    let xs: Vec<String> = row.x.iter().map(|v| format!("{v}")).collect();
                    writeln!(w, "{},{},{},{}", row.id, row.treated, row.y, xs.join(","))?;
                }
            }
        }
        Ok(())
    }
}

impl Scenario {
    /// Writes `data.csv` and `ground_truth.json` under `dir` and returns the
    /// two paths.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let data_path = dir.join("data.csv");
        let truth_path = dir.join("ground_truth.json");
        let mut buf = Vec::new();
        self.dataset.write_csv(&mut buf)?;
        std::fs::write(&data_path, buf)?;
        let truth = serde_json::to_string_pretty(&self.ground_truth)
            .expect("ground truth serializes");
        std::fs::write(&truth_path, truth + "\n")?;
        Ok((data_path, truth_path))
    }
}
