//! Applying post-processors and sweeping the fairness/accuracy tradeoff.
//!
//! Reported accuracy is always the expected (soft) accuracy of the
//! stochastic pipeline prediction->post-processor, computed from moments;
//! sampled hard decisions exist only as a deployment convenience
//! ([`sample_label`]).

use crate::estimators::EmpiricalMoments;
use crate::lp::{
    build_fair_lp, build_gap_lp, extract_postprocessor, solve_lp_canonical, LpError, LpStatus,
    PostProcessor,
};
use crate::rng::Rng;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("sweep grid must be sorted ascending")]
    UnsortedGrid,
    #[error("moment sets disagree in label count or happiness dimension")]
    MomentMismatch,
}

/// Applies the post-processor to one soft prediction:
/// p(yt) = sum_yhat p_hat(yhat)*v(yt|yhat,z).
pub fn apply(pp: &PostProcessor, p_hat: &[f64], z: u8) -> Vec<f64> {
    let labels = pp.label_count();
    debug_assert_eq!(p_hat.len(), labels);
    let mut out = vec![0.0; labels];
    for (yhat, &w) in p_hat.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for (yt, &v) in pp.row(yhat, z as usize).iter().enumerate() {
            out[yt] += w * v;
        }
    }
    out
}

/// Expected loss 1 - sum p_hat(yhat,y,z)*v(y|yhat,z) of the post-processed pipeline.
pub fn expected_loss(pp: &PostProcessor, m: &EmpiricalMoments) -> f64 {
    let labels = m.label_count();
    let mut acc = 0.0;
    for yhat in 0..labels {
        for y in 0..labels {
            for z in 0..2 {
                acc += m.p_yyz(yhat, y, z) * pp.prob(y, yhat, z);
            }
        }
    }
    1.0 - acc
}

/// Expected happiness of one group: sum_{yt,yhat} xi(yt,yhat,z)*v(yt|yhat,z).
pub fn group_happiness(pp: &PostProcessor, m: &EmpiricalMoments, z: usize) -> Vec<f64> {
    let labels = m.label_count();
    let mut out = vec![0.0; m.happiness_dim()];
    for yt in 0..labels {
        for yhat in 0..labels {
            let v = pp.prob(yt, yhat, z);
            if v == 0.0 {
                continue;
            }
            for (o, &xi) in out.iter_mut().zip(m.xi(yt, yhat, z)) {
                *o += v * xi;
            }
        }
    }
    out
}

/// Componentwise happiness gap between groups 0 and 1.
pub fn happiness_gap(pp: &PostProcessor, m: &EmpiricalMoments) -> Vec<f64> {
    let g0 = group_happiness(pp, m, 0);
    let g1 = group_happiness(pp, m, 1);
    g0.iter().zip(&g1).map(|(a, b)| a - b).collect()
}

/// Draws yhat from the soft prediction, then yt from the post-processor row.
/// Deterministic for a fixed seed.
pub fn sample_label(pp: &PostProcessor, p_hat: &[f64], z: u8, seed: u64) -> usize {
    let mut rng = Rng::new(seed);
    let yhat = draw_categorical(&mut rng, p_hat);
    draw_categorical(&mut rng, pp.row(yhat, z as usize))
}

fn draw_categorical(rng: &mut Rng, probs: &[f64]) -> usize {
    let u = rng.next_f64();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Epsilon,
    Alpha,
}

impl SweepMode {
    fn tag(self) -> &'static str {
        match self {
            SweepMode::Epsilon => "eps_sweep",
            SweepMode::Alpha => "alpha_sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetTag {
    Validation,
    Test,
}

impl DatasetTag {
    fn tag(self) -> &'static str {
        match self {
            DatasetTag::Validation => "validation",
            DatasetTag::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointMetrics {
    pub accuracy: f64,
    pub gap: Vec<f64>,
    pub gap_inf_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub constraint_value: f64,
    /// `None` when the LP was infeasible at this constraint value.
    pub metrics: Option<PointMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    pub mode: SweepMode,
    pub dataset_tag: DatasetTag,
    pub gap_dim: usize,
    pub points: Vec<TradeoffPoint>,
}

fn metrics(pp: &PostProcessor, m: &EmpiricalMoments) -> PointMetrics {
    let gap = happiness_gap(pp, m);
    let gap_inf_norm = gap.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
    PointMetrics { accuracy: 1.0 - expected_loss(pp, m), gap, gap_inf_norm }
}

/// Solves the LP at every grid value on `m_fit` and evaluates the resulting
/// post-processors on the validation and test moment sets.  The evaluation
/// moments may carry a different happiness than the fitted ones (constrain
/// one criterion, report another); only label counts must agree.
pub fn sweep(
    m_fit: &EmpiricalMoments,
    m_eval_val: &EmpiricalMoments,
    m_eval_test: &EmpiricalMoments,
    grid: &[f64],
    mode: SweepMode,
) -> Result<(TradeoffCurve, TradeoffCurve), SweepError> {
    if grid.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(SweepError::UnsortedGrid);
    }
    if m_eval_val.label_count() != m_fit.label_count()
        || m_eval_test.label_count() != m_fit.label_count()
        || m_eval_val.happiness_dim() != m_eval_test.happiness_dim()
    {
        return Err(SweepError::MomentMismatch);
    }

    let mut val_points = Vec::with_capacity(grid.len());
    let mut test_points = Vec::with_capacity(grid.len());
    for &value in grid {
        let lp = match mode {
            SweepMode::Epsilon => build_fair_lp(m_fit, value),
            SweepMode::Alpha => build_gap_lp(m_fit, value),
        };
        let sol = solve_lp_canonical(&lp)?;
        match sol.status {
            LpStatus::Optimal => {
                let pp = extract_postprocessor(&lp, &sol)?;
                val_points.push(TradeoffPoint {
                    constraint_value: value,
                    metrics: Some(metrics(&pp, m_eval_val)),
                });
                test_points.push(TradeoffPoint {
                    constraint_value: value,
                    metrics: Some(metrics(&pp, m_eval_test)),
                });
            }
            LpStatus::Infeasible => {
                val_points.push(TradeoffPoint { constraint_value: value, metrics: None });
                test_points.push(TradeoffPoint { constraint_value: value, metrics: None });
            }
            LpStatus::Unbounded => {
                // Both LP shapes are bounded; this is solver corruption.
                return Err(SweepError::Lp(LpError::CorruptSolution(
                    "sweep LP reported unbounded".into(),
                )));
            }
        }
    }
    let dim = m_eval_val.happiness_dim();
    Ok((
        TradeoffCurve {
            mode,
            dataset_tag: DatasetTag::Validation,
            gap_dim: dim,
            points: val_points,
        },
        TradeoffCurve { mode, dataset_tag: DatasetTag::Test, gap_dim: dim, points: test_points },
    ))
}

/// `count` log-spaced eps values from 1e-4*G to G, where G is the inf-norm
/// happiness gap of the baseline left unchanged (the identity
/// post-processor).  The baseline's own unfairness is the natural upper
/// anchor: beyond it the constraint asks for nothing the unprocessed
/// predictions do not already deliver.  Collapses to a single zero when the
/// baseline is already exactly fair.
pub fn default_epsilon_grid(m_fit: &EmpiricalMoments, count: usize) -> Vec<f64> {
    assert!(count >= 1, "grid needs at least one point");
    let identity = PostProcessor::identity(m_fit.label_count());
    let g = happiness_gap(&identity, m_fit).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if g <= f64::MIN_POSITIVE {
        return vec![0.0];
    }
    if count == 1 {
        return vec![g];
    }
    let lo = g * 1e-4;
    let ratio = (g / lo).ln();
    (0..count)
        .map(|i| lo * (ratio * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// `count` linear alpha values from chance level (best constant prediction) up
/// to the accuracy of the baseline left unchanged.  Post-processing trades
/// accuracy away from the baseline level, so alpha above it would no longer
/// describe a sacrifice; the identity keeps every grid point feasible.
pub fn default_alpha_grid(m_fit: &EmpiricalMoments, count: usize) -> Vec<f64> {
    assert!(count >= 1, "grid needs at least one point");
    let labels = m_fit.label_count();
    let chance = (0..labels)
        .map(|yt| {
            (0..labels)
                .flat_map(|yhat| (0..2).map(move |z| (yhat, z)))
                .map(|(yhat, z)| m_fit.p_yyz(yhat, yt, z))
                .sum::<f64>()
        })
        .fold(0.0f64, f64::max);
    let baseline_acc = 1.0 - expected_loss(&PostProcessor::identity(labels), m_fit);
    if count == 1 {
        return vec![chance];
    }
    (0..count)
        .map(|i| chance + (baseline_acc - chance) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Writes curves as CSV with one row per point:
/// `mode,constraint,accuracy,gap_0..gap_{n-1},gap_inf,dataset_tag,status`.
pub fn write_curves_csv<W: Write>(mut w: W, curves: &[&TradeoffCurve]) -> io::Result<()> {
    let dim = curves.first().map_or(0, |c| c.gap_dim);
    debug_assert!(curves.iter().all(|c| c.gap_dim == dim));
    write!(w, "mode,constraint,accuracy")?;
    for k in 0..dim {
        write!(w, ",gap_{k}")?;
    }
    writeln!(w, ",gap_inf,dataset_tag,status")?;
    for curve in curves {
        for point in &curve.points {
            write!(w, "{},{}", curve.mode.tag(), point.constraint_value)?;
            match &point.metrics {
                Some(m) => {
                    write!(w, ",{}", m.accuracy)?;
                    for g in &m.gap {
                        write!(w, ",{g}")?;
                    }
                    writeln!(w, ",{},{},ok", m.gap_inf_norm, curve.dataset_tag.tag())?;
                }
                None => {
                    for _ in 0..dim + 2 {
                        write!(w, ",")?;
                    }
                    writeln!(w, ",{},infeasible", curve.dataset_tag.tag())?;
                }
            }
        }
    }
    Ok(())
}
