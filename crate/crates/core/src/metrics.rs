//! Prediction-quality metrics, the topology-aware loss and batch reports.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::SampleRecord;
use crate::error::{Error, Result};
use crate::fea::{solve_system, DensityField, GridDomain, LoadCase, MaterialModel};
use crate::persistence::{
    betti_at_threshold, bottleneck_with_penalty, compute_diagram, PersistenceDiagram,
    DEFAULT_ESSENTIAL_PENALTY,
};

/// Weight of the topological term in [`total_loss`].
pub const DEFAULT_LAMBDA: f64 = 0.1;
/// Probabilities are clamped to `[BCE_EPS, 1 - BCE_EPS]` before the logs.
pub const BCE_EPS: f64 = 1e-7;
/// Threshold used for the Betti-number columns of a report.
pub const BETTI_THRESHOLD: f64 = 0.5;

/// Rounds to the nearest of {0, 1}; exactly 0.5 goes to 1.
#[inline]
pub fn round_binary(v: f64) -> f64 {
    if v >= 0.5 {
        1.0
    } else {
        0.0
    }
}

pub fn rounded(field: &DensityField) -> DensityField {
    let values = field.values().iter().map(|&v| round_binary(v)).collect();
    DensityField::new(field.nelx(), field.nely(), values).expect("rounded values stay in [0, 1]")
}

pub fn mse(pred: &DensityField, truth: &DensityField) -> Result<f64> {
    truth.check_same_shape(pred)?;
    let sum: f64 = pred
        .values()
        .iter()
        .zip(truth.values())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// `(TP + TN) / N` after rounding both fields.
pub fn binary_accuracy(pred: &DensityField, truth: &DensityField) -> Result<f64> {
    truth.check_same_shape(pred)?;
    let hits = pred
        .values()
        .iter()
        .zip(truth.values())
        .filter(|(&p, &t)| round_binary(p) == round_binary(t))
        .count();
    Ok(hits as f64 / pred.len() as f64)
}

pub fn binary_cross_entropy(pred: &DensityField, truth: &DensityField) -> Result<f64> {
    truth.check_same_shape(pred)?;
    let sum: f64 = pred
        .values()
        .iter()
        .zip(truth.values())
        .map(|(&p, &y)| {
            let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Result of a compliance comparison. A prediction whose structure cannot
/// carry the load is reported as `Unstable`, never silently dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ComplianceOutcome {
    Value { error: f64 },
    Unstable { reason: String },
}

impl ComplianceOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            ComplianceOutcome::Value { error } => Some(*error),
            ComplianceOutcome::Unstable { .. } => None,
        }
    }
}

/// `|sum(c_pred - c_true)| / sum(c_true)` over per-element compliances, both
/// fields analysed with the SIMP modulus under the same load case. A field
/// whose solve fails (load carried only by void) gives `Unstable`.
pub fn compliance_error(
    pred: &DensityField,
    truth: &DensityField,
    grid: &GridDomain,
    mat: &MaterialModel,
    lc: &LoadCase,
) -> Result<ComplianceOutcome> {
    truth.check_same_shape(pred)?;
    pred.check_grid(grid)?;
    let c_true = match solve_system(grid, truth, mat, lc) {
        Ok(sol) => sol.compliance_per_element,
        Err(Error::Solve(reason)) => {
            return Ok(ComplianceOutcome::Unstable {
                reason: format!("reference: {reason}"),
            })
        }
        Err(e) => return Err(e),
    };
    let c_pred = match solve_system(grid, pred, mat, lc) {
        Ok(sol) => sol.compliance_per_element,
        Err(Error::Solve(reason)) => return Ok(ComplianceOutcome::Unstable { reason }),
        Err(e) => return Err(e),
    };
    let total_true: f64 = c_true.iter().sum();
    let diff: f64 = c_pred.iter().zip(&c_true).map(|(p, t)| p - t).sum();
    if !(total_true > 0.0) {
        return Ok(ComplianceOutcome::Unstable {
            reason: "reference compliance is zero".into(),
        });
    }
    let error = diff.abs() / total_true;
    if !error.is_finite() {
        return Ok(ComplianceOutcome::Unstable {
            reason: "compliance error is not finite".into(),
        });
    }
    Ok(ComplianceOutcome::Value { error })
}

/// Bottleneck distances in dimensions 0 and 1 between the diagrams of two
/// fields, each with the essential-class `penalty`.
pub fn topology_distances(
    pred: &PersistenceDiagram,
    truth: &PersistenceDiagram,
    penalty: f64,
) -> Result<[f64; 2]> {
    Ok([
        bottleneck_with_penalty(pred, truth, 0, penalty)?,
        bottleneck_with_penalty(pred, truth, 1, penalty)?,
    ])
}

pub fn topological_loss(pred: &DensityField, truth: &DensityField) -> Result<f64> {
    truth.check_same_shape(pred)?;
    let [d0, d1] = topology_distances(
        &compute_diagram(pred)?,
        &compute_diagram(truth)?,
        DEFAULT_ESSENTIAL_PENALTY,
    )?;
    Ok(d0 + d1)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::param(format!("lambda {lambda} outside [0, 1]")))
    }
}

/// `BCE + lambda * (bottleneck_0 + bottleneck_1)`.
pub fn total_loss(pred: &DensityField, truth: &DensityField, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(binary_cross_entropy(pred, truth)? + lambda * topological_loss(pred, truth)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub lambda: f64,
    /// Round predictions to {0, 1} before MSE and compliance.
    pub round_before_metrics: bool,
    pub essential_penalty: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            round_before_metrics: false,
            essential_penalty: DEFAULT_ESSENTIAL_PENALTY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub index: usize,
    pub mse: f64,
    pub binary_accuracy: f64,
    pub compliance: ComplianceOutcome,
    pub bce: f64,
    pub bottleneck_dim0: f64,
    pub bottleneck_dim1: f64,
    pub l_topology: f64,
    pub total_loss: f64,
    pub betti0_error: usize,
    pub betti1_error: usize,
}

/// All per-sample metrics for one prediction/ground-truth pair.
pub fn evaluate_sample(
    index: usize,
    pred: &DensityField,
    truth: &DensityField,
    mat: &MaterialModel,
    lc: &LoadCase,
    opts: &EvalOptions,
) -> Result<SampleMetrics> {
    check_lambda(opts.lambda)?;
    truth.check_same_shape(pred)?;
    let grid = GridDomain::new(truth.nelx(), truth.nely())?;
    let scored = if opts.round_before_metrics {
        rounded(pred)
    } else {
        pred.clone()
    };
    let bce = binary_cross_entropy(pred, truth)?;
    let (dp, dt) = (compute_diagram(pred)?, compute_diagram(truth)?);
    let [b0, b1] = topology_distances(&dp, &dt, opts.essential_penalty)?;
    let l_topology = b0 + b1;
    let (bp, bt) = (
        betti_at_threshold(&dp, BETTI_THRESHOLD)?,
        betti_at_threshold(&dt, BETTI_THRESHOLD)?,
    );
    Ok(SampleMetrics {
        index,
        mse: mse(&scored, truth)?,
        binary_accuracy: binary_accuracy(pred, truth)?,
        compliance: compliance_error(&scored, truth, &grid, mat, lc)?,
        bce,
        bottleneck_dim0: b0,
        bottleneck_dim1: b1,
        l_topology,
        total_loss: bce + opts.lambda * l_topology,
        betti0_error: bp.b0.abs_diff(bt.b0),
        betti1_error: bp.b1.abs_diff(bt.b1),
    })
}

/// Running mean and population variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            (self.m2 / self.n as f64).sqrt()
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub resolution: String,
    pub n_cases: usize,
    /// Samples whose compliance could not be evaluated; excluded from the
    /// compliance columns.
    pub n_unstable: usize,
    pub mse: f64,
    pub binary_accuracy: f64,
    pub compliance_error: f64,
    /// Population standard deviation of the per-sample compliance error.
    pub compliance_error_std: f64,
    pub bce: f64,
    pub bottleneck_dim0: f64,
    pub bottleneck_dim1: f64,
    pub l_topology: f64,
    pub total_loss: f64,
    pub betti0_error: f64,
    pub betti1_error: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub aggregate: AggregateMetrics,
    pub samples: Vec<SampleMetrics>,
}

impl MetricsReport {
    pub fn from_samples(
        nelx: usize,
        nely: usize,
        lambda: f64,
        samples: Vec<SampleMetrics>,
    ) -> Self {
        let mut compliance = Moments::default();
        for s in &samples {
            if let Some(e) = s.compliance.value() {
                compliance.push(e);
            }
        }
        let col = |f: fn(&SampleMetrics) -> f64| mean(samples.iter().map(f));
        let aggregate = AggregateMetrics {
            resolution: format!("{nely}x{nelx}"),
            n_cases: samples.len(),
            n_unstable: samples.len() - compliance.n,
            mse: col(|s| s.mse),
            binary_accuracy: col(|s| s.binary_accuracy),
            compliance_error: if compliance.n == 0 {
                f64::NAN
            } else {
                compliance.mean
            },
            compliance_error_std: compliance.std(),
            bce: col(|s| s.bce),
            bottleneck_dim0: col(|s| s.bottleneck_dim0),
            bottleneck_dim1: col(|s| s.bottleneck_dim1),
            l_topology: col(|s| s.l_topology),
            total_loss: col(|s| s.total_loss),
            betti0_error: col(|s| s.betti0_error as f64),
            betti1_error: col(|s| s.betti1_error as f64),
            lambda,
        };
        Self { aggregate, samples }
    }

    pub const SAMPLE_CSV_HEADER: &'static str = "index,mse,binary_accuracy,compliance_error,compliance_status,bce,bottleneck_dim0,bottleneck_dim1,l_topology,total_loss,betti0_error,betti1_error";

    /// Per-sample rows. Unstable compliance prints as an empty field.
    pub fn samples_csv(&self) -> String {
        let mut out = format!("{}\n", Self::SAMPLE_CSV_HEADER);
        for s in &self.samples {
            let (ce, status) = match &s.compliance {
                ComplianceOutcome::Value { error } => (error.to_string(), "ok"),
                ComplianceOutcome::Unstable { .. } => (String::new(), "unstable"),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                s.index,
                s.mse,
                s.binary_accuracy,
                ce,
                status,
                s.bce,
                s.bottleneck_dim0,
                s.bottleneck_dim1,
                s.l_topology,
                s.total_loss,
                s.betti0_error,
                s.betti1_error
            );
        }
        out
    }

    /// One-row summary with the columns of the published result tables.
    pub fn summary_csv(&self) -> String {
        let a = &self.aggregate;
        format!(
            "resolution,n_cases,mse,binary_accuracy,compliance_error,compliance_error_std\n{},{},{},{},{},{}\n",
            a.resolution, a.n_cases, a.mse, a.binary_accuracy, a.compliance_error, a.compliance_error_std
        )
    }
}

/// Scores `preds[i]` against sample `i` of a dataset. Runs on up to `jobs`
/// threads; the report is identical for any thread count.
pub fn evaluate_batch(
    preds: &[DensityField],
    samples: &[SampleRecord],
    mat: &MaterialModel,
    opts: &EvalOptions,
    jobs: usize,
) -> Result<MetricsReport> {
    check_lambda(opts.lambda)?;
    if preds.len() != samples.len() {
        return Err(Error::format(
            Some(preds.len().min(samples.len())),
            format!("{} predictions for {} samples", preds.len(), samples.len()),
        ));
    }
    let (nelx, nely) = samples.first().map(|s| (s.nelx, s.nely)).unwrap_or((0, 0));
    let score = |i: usize| -> Result<SampleMetrics> {
        let s = &samples[i];
        let truth = s
            .target_field()
            .map_err(|e| Error::format(Some(i), e.to_string()))?;
        if !preds[i].matches(&s.grid()?) {
            return Err(Error::format(
                Some(i),
                format!(
                    "prediction is {}x{}, sample is {}x{}",
                    preds[i].nely(),
                    preds[i].nelx(),
                    s.nely,
                    s.nelx
                ),
            ));
        }
        evaluate_sample(i, &preds[i], &truth, mat, &s.meta.load_case(), opts)
    };
    let rows: Vec<Result<SampleMetrics>> = if jobs <= 1 {
        (0..samples.len()).map(score).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::param(format!("cannot build thread pool: {e}")))?;
        pool.install(|| (0..samples.len()).into_par_iter().map(score).collect())
    };
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport::from_samples(nelx, nely, opts.lambda, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(values: &[f64]) -> DensityField {
        DensityField::new(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn mse_and_accuracy_basics() {
        let t = field(&[0.0, 1.0, 1.0, 0.0]);
        let c = field(&[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(mse(&t, &t).unwrap(), 0.0);
        assert_eq!(mse(&c, &t).unwrap(), 1.0);
        assert_eq!(binary_accuracy(&t, &t).unwrap(), 1.0);
        assert_eq!(binary_accuracy(&c, &t).unwrap(), 0.0);
        let mut v = vec![0.0; 100];
        let truth = DensityField::new(10, 10, v.clone()).unwrap();
        v[37] = 1.0;
        let pred = DensityField::new(10, 10, v).unwrap();
        assert_eq!(binary_accuracy(&pred, &truth).unwrap(), 0.99);
        let almost = DensityField::new(10, 10, vec![0.49; 100]).unwrap();
        assert_eq!(binary_accuracy(&almost, &truth).unwrap(), 1.0);
        assert_eq!(round_binary(0.5), 1.0);
    }

    #[test]
    fn bce_reference_values() {
        let t = field(&[0.0, 1.0, 1.0]);
        assert!(binary_cross_entropy(&t, &t).unwrap() <= 1e-6);
        let half = field(&[0.5, 0.5, 0.5]);
        for truth in [field(&[0.0, 0.0, 0.0]), t.clone()] {
            assert!(
                (binary_cross_entropy(&half, &truth).unwrap() - std::f64::consts::LN_2).abs()
                    < 1e-15
            );
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = field(&[0.0, 1.0]);
        let b = field(&[0.0, 1.0, 1.0]);
        assert!(matches!(mse(&a, &b), Err(Error::Shape { .. })));
        assert!(binary_accuracy(&a, &b).is_err());
        assert!(binary_cross_entropy(&a, &b).is_err());
    }

    #[test]
    fn lambda_out_of_range() {
        let a = field(&[0.0, 1.0]);
        assert!(total_loss(&a, &a, 1.5).is_err());
        assert!(total_loss(&a, &a, -0.1).is_err());
    }

    #[test]
    fn two_sample_aggregation() {
        let mk = |i, e| SampleMetrics {
            index: i,
            mse: 0.0,
            binary_accuracy: 1.0,
            compliance: ComplianceOutcome::Value { error: e },
            bce: 0.0,
            bottleneck_dim0: 0.0,
            bottleneck_dim1: 0.0,
            l_topology: 0.0,
            total_loss: 0.0,
            betti0_error: 0,
            betti1_error: 0,
        };
        let (e1, e2) = (0.1, 0.4);
        let r = MetricsReport::from_samples(4, 2, 0.1, vec![mk(0, e1), mk(1, e2)]);
        assert!((r.aggregate.compliance_error - (e1 + e2) / 2.0).abs() < 1e-15);
        assert!((r.aggregate.compliance_error_std - (e1 - e2).abs() / 2.0).abs() < 1e-15);
        assert_eq!(r.aggregate.n_unstable, 0);
    }

    #[test]
    fn unstable_rows_excluded_but_counted() {
        let mut s = vec![];
        for (i, c) in [
            ComplianceOutcome::Value { error: 0.2 },
            ComplianceOutcome::Unstable { reason: "x".into() },
        ]
        .into_iter()
        .enumerate()
        {
            s.push(SampleMetrics {
                index: i,
                mse: 0.5,
                binary_accuracy: 0.5,
                compliance: c,
                bce: 0.0,
                bottleneck_dim0: 0.0,
                bottleneck_dim1: 0.0,
                l_topology: 0.0,
                total_loss: 0.0,
                betti0_error: 0,
                betti1_error: 0,
            });
        }
        let r = MetricsReport::from_samples(2, 1, 0.1, s);
        assert_eq!(r.aggregate.n_cases, 2);
        assert_eq!(r.aggregate.n_unstable, 1);
        assert_eq!(r.aggregate.compliance_error, 0.2);
        assert!(r
            .samples_csv()
            .lines()
            .nth(2)
            .unwrap()
            .contains(",,unstable,"));
    }
}
