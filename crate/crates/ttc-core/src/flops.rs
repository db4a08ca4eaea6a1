//! Exchange arithmetic between pretraining compute and test-time compute.
//!
//! For a model of `n_model` parameters, pretraining costs `X = 6·N·D_pre`
//! FLOPs and greedy inference over a deployment of `D_inf` tokens costs
//! `Y = 2·N·D_inf`. Scaling the model by `M` spends `M·(X+Y)` total; the
//! small model matches that total by multiplying its inference compute by
//! `F = M + 3·(D_pre/D_inf)·(M−1)`, which satisfies `X + F·Y = M·(X+Y)`
//! exactly. The deployment regime is summarized by `R = D_inf/D_pre`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::math;
use crate::strategy::CurvePoint;

/// Deployment ratios `R` spanning inference-light (`R ≪ 1`), balanced
/// (`R ~ 1`), and inference-heavy (`R ≫ 1`) regimes.
pub const DEFAULT_R_VALUES: [f64; 3] = [0.16, 0.79, 22.0];

/// Default parameter-scale factor between the small and large model.
pub const DEFAULT_SCALE_FACTOR: f64 = 14.0;

/// Default token length assumed for one generation when converting FLOPs
/// multipliers into generation budgets.
pub const DEFAULT_TOKENS_PER_GENERATION: f64 = 512.0;

/// A small model, its pretraining and deployment token counts, and the
/// parameter multiplier of the large model it is compared against.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FlopsScenario {
    pub n_model: f64,
    pub d_pretrain: f64,
    pub d_inference: f64,
    pub m_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("scenario counts must be positive and finite, with scale factor at least 1")]
pub struct InvalidScenario;

impl FlopsScenario {
    pub fn new(
        n_model: f64,
        d_pretrain: f64,
        d_inference: f64,
        m_scale: f64,
    ) -> Result<Self, InvalidScenario> {
        let s = FlopsScenario {
            n_model,
            d_pretrain,
            d_inference,
            m_scale,
        };
        s.validate()?;
        Ok(s)
    }

    /// Build a scenario from the deployment ratio `r = d_inference /
    /// d_pretrain` instead of an explicit inference token count.
    pub fn with_ratio(
        n_model: f64,
        d_pretrain: f64,
        r: f64,
        m_scale: f64,
    ) -> Result<Self, InvalidScenario> {
        Self::new(n_model, d_pretrain, r * d_pretrain, m_scale)
    }

    pub fn validate(&self) -> Result<(), InvalidScenario> {
        let positive_finite = |x: f64| x.is_finite() && x > 0.0;
        if positive_finite(self.n_model)
            && positive_finite(self.d_pretrain)
            && positive_finite(self.d_inference)
            && self.m_scale.is_finite()
            && self.m_scale >= 1.0
        {
            Ok(())
        } else {
            Err(InvalidScenario)
        }
    }

    /// Deployment ratio `R = d_inference / d_pretrain`, always derived.
    pub fn ratio(&self) -> f64 {
        self.d_inference / self.d_pretrain
    }
}

/// Pretraining cost `X = 6·N·D_pre`.
pub fn pretrain_flops(s: &FlopsScenario) -> f64 {
    6.0 * s.n_model * s.d_pretrain
}

/// Deployment inference cost `Y = 2·N·D_inf`.
pub fn inference_flops(s: &FlopsScenario) -> f64 {
    2.0 * s.n_model * s.d_inference
}

/// The factor `F = M + 3·(D_pre/D_inf)·(M−1)` by which the small model must
/// multiply its inference compute to spend as much in total as the `M`×
/// larger model: `X + F·Y = M·(X+Y)`.
pub fn matching_inference_factor(s: &FlopsScenario) -> f64 {
    s.m_scale + 3.0 * (s.d_pretrain / s.d_inference) * (s.m_scale - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Verdict {
    #[serde(rename = "test-time preferred")]
    TestTimePreferred,
    #[serde(rename = "pretraining preferred")]
    PretrainingPreferred,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::TestTimePreferred => "test-time preferred",
            Verdict::PretrainingPreferred => "pretraining preferred",
        }
    }
}

impl core::fmt::Display for Verdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One (bin, R) comparison: the star position `matched_budget` is the
/// generation budget whose FLOPs match the larger model, and the verdict says
/// whether the small model's curve beats the large model's reference accuracy
/// there.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExchangeRow {
    pub bin: u8,
    pub r: f64,
    pub m: f64,
    pub matched_budget: f64,
    pub small_model_accuracy: f64,
    pub reference_accuracy: f64,
    pub verdict: Verdict,
}

/// Exchange verdicts for every (bin, R) pair, along with the constant used to
/// translate FLOPs multipliers into generation counts.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExchangeTable {
    pub tokens_per_generation: f64,
    pub rows: Vec<ExchangeRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no reference accuracy supplied for bin {bin}")]
pub struct MissingReference {
    pub bin: u8,
}

/// Accuracy of a budget/accuracy curve at `x`, interpolating linearly in
/// log-budget and clamping to the endpoints (the curve as plotted).
pub fn interpolate_log_budget(curve: &[CurvePoint], x: f64) -> Option<f64> {
    let first = curve.first()?;
    let last = curve.last()?;
    if x <= first.budget as f64 {
        return Some(first.accuracy);
    }
    if x >= last.budget as f64 {
        return Some(last.accuracy);
    }
    for pair in curve.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if x <= hi.budget as f64 {
            let span = math::ln(hi.budget as f64) - math::ln(lo.budget as f64);
            let t = if span == 0.0 {
                0.0
            } else {
                (math::ln(x) - math::ln(lo.budget as f64)) / span
            };
            return Some((1.0 - t) * lo.accuracy + t * hi.accuracy);
        }
    }
    Some(last.accuracy)
}

/// Compare each bin's compute-optimal curve against a larger model's
/// reference accuracy at FLOPs-matched budgets, once per configured `R`.
///
/// `base` supplies the model size, pretraining tokens, and scale factor; its
/// inference token count is re-derived per `R`. One generation is taken to be
/// `tokens_per_generation` tokens, so multiplying a one-generation baseline's
/// inference compute by `F` lands the star at budget `F`.
pub fn exchange_report(
    base: &FlopsScenario,
    r_values: &[f64],
    tokens_per_generation: f64,
    curves: &BTreeMap<u8, Vec<CurvePoint>>,
    references: &BTreeMap<u8, f64>,
) -> Result<ExchangeTable, MissingReference> {
    let mut rows = Vec::new();
    for (&bin, curve) in curves {
        let reference_accuracy = *references
            .get(&bin)
            .ok_or(MissingReference { bin })?;
        let mut curve = curve.clone();
        curve.sort_by_key(|p| p.budget);
        for &r in r_values {
            let scenario = FlopsScenario::with_ratio(
                base.n_model,
                base.d_pretrain,
                r,
                base.m_scale,
            )
            .expect("base scenario validated by caller");
            let matched_budget = matching_inference_factor(&scenario);
            let small_model_accuracy =
                interpolate_log_budget(&curve, matched_budget).unwrap_or(0.0);
            let verdict = if small_model_accuracy > reference_accuracy {
                Verdict::TestTimePreferred
            } else {
                Verdict::PretrainingPreferred
            };
            rows.push(ExchangeRow {
                bin,
                r,
                m: base.m_scale,
                matched_budget,
                small_model_accuracy,
                reference_accuracy,
                verdict,
            });
        }
    }
    Ok(ExchangeTable {
        tokens_per_generation,
        rows,
    })
}
