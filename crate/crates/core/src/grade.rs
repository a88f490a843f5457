//! Grade-by-grade training and the single-network baseline.
//!
//! Grade `l` trains a fresh shallow network on the features
//! `x^l = H_{l-1} ∘ … ∘ H_1 (x)`, where `H_k` is the hidden stack (every
//! layer but the output layer) of the network frozen in grade `k`, against
//! the residue `e^l = y − g_1(x) − … − g_{l−1}(x)`. The learned predictor
//! is the sum of the grade outputs.
//!
//! Features are cached per grade boundary: `x^{l+1}` is computed from the
//! stored `x^l` with a single pass through grade `l`'s hidden stack.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nn::{
    self, fit, hidden_features, predict_batch, xavier_init, EpochLoss, MlpParams, MlpSpec,
    Supervised, TrainConfig,
};
use crate::rng;

/// Trainable network of one grade plus its optimization schedule.
///
/// The seed inside `train` is ignored; grades derive their seed from the
/// run seed (see [`rng::grade_seed`]).
#[derive(Debug, Clone, PartialEq)]
pub struct GradeSpec {
    pub network: MlpSpec,
    pub train: TrainConfig,
}

impl GradeSpec {
    pub fn new(network: MlpSpec, train: TrainConfig) -> Result<Self> {
        if network.depth() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a grade needs at least one hidden layer (depth {} < 2)",
                network.depth()
            )));
        }
        train.validate()?;
        Ok(GradeSpec { network, train })
    }
}

/// One trained, frozen grade.
///
/// Its feature prefix is the hidden stacks of every grade before it in the
/// owning [`ComposedModel`]; grade 1's prefix is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct GradeRecord {
    /// One-based grade index.
    pub index: usize,
    pub spec: MlpSpec,
    pub params: MlpParams,
    pub best_epoch: usize,
    pub history: Vec<EpochLoss>,
    /// `‖e^{l+1}‖` over the training set after this grade.
    pub train_residue_norm: f64,
    pub val_residue_norm: Option<f64>,
    /// `‖g_l‖` over the training set.
    pub output_norm: f64,
}

/// Ordered grades realizing `Σ_l g_l`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComposedModel {
    grades: Vec<GradeRecord>,
}

impl ComposedModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a model from existing records, checking that the widths chain.
    pub fn from_grades(grades: Vec<GradeRecord>) -> Result<Self> {
        let mut model = ComposedModel::new();
        for g in grades {
            model.push(g)?;
        }
        Ok(model)
    }

    pub fn grades(&self) -> &[GradeRecord] {
        &self.grades
    }

    pub fn len(&self) -> usize {
        self.grades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }

    /// Width of the features the next grade must accept, if any grade exists.
    pub fn next_input_dim(&self) -> Option<usize> {
        self.grades.last().map(|g| g.spec.feature_dim())
    }

    pub fn input_dim(&self) -> Option<usize> {
        self.grades.first().map(|g| g.spec.input_dim())
    }

    pub fn push(&mut self, record: GradeRecord) -> Result<()> {
        record.params.conforms_to(&record.spec)?;
        if let Some(expected) = self.next_input_dim() {
            if record.spec.input_dim() != expected {
                return Err(Error::DimensionMismatch {
                    context: "grade input width vs previous grade's last hidden width",
                    expected,
                    found: record.spec.input_dim(),
                });
            }
        }
        if let Some(first) = self.grades.first() {
            if record.spec.output_dim() != first.spec.output_dim() {
                return Err(Error::DimensionMismatch {
                    context: "grade output width",
                    expected: first.spec.output_dim(),
                    found: record.spec.output_dim(),
                });
            }
        }
        self.grades.push(record);
        Ok(())
    }

    /// Features `x^{L+1}` fed to the grade that would follow the last one.
    /// With no grades these are the raw inputs.
    pub fn compute_features(&self, inputs: &Matrix) -> Result<Matrix> {
        let mut feats = inputs.clone();
        for g in &self.grades {
            feats = hidden_features(&g.spec, &g.params, &feats)?;
        }
        Ok(feats)
    }

    /// Per-grade outputs `g_1(x), …, g_L(x)`.
    pub fn grade_outputs(&self, inputs: &Matrix) -> Result<Vec<Matrix>> {
        let mut outputs = Vec::with_capacity(self.grades.len());
        let mut feats = inputs.clone();
        for (k, g) in self.grades.iter().enumerate() {
            let trace = nn::forward_batch(&g.spec, &g.params, &feats)?;
            outputs.push(trace.output);
            if k + 1 < self.grades.len() {
                feats = match trace.hidden.into_iter().last() {
                    Some(h) => h,
                    None => feats,
                };
            }
        }
        Ok(outputs)
    }

    /// Predictions of the first `1, 2, …, L` grades summed.
    pub fn cumulative_predictions(&self, inputs: &Matrix) -> Result<Vec<Matrix>> {
        let mut out: Vec<Matrix> = Vec::with_capacity(self.grades.len());
        for g in self.grade_outputs(inputs)? {
            let next = match out.last() {
                Some(prev) => {
                    let mut acc = prev.clone();
                    acc.add_assign(&g)?;
                    acc
                }
                None => g,
            };
            out.push(next);
        }
        Ok(out)
    }

    /// `Σ_l g_l(x)` for every row of `inputs`.
    pub fn predict(&self, inputs: &Matrix) -> Result<Matrix> {
        let mut outputs = self.grade_outputs(inputs)?.into_iter();
        let mut acc = outputs.next().ok_or(Error::Empty("composed model"))?;
        for g in outputs {
            acc.add_assign(&g)?;
        }
        Ok(acc)
    }
}

/// Residual targets of the current grade on the training and validation splits.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidueSet {
    pub train: Matrix,
    pub val: Option<Matrix>,
}

impl ResidueSet {
    /// Grade-1 residues: the raw targets.
    pub fn from_targets(train: &Matrix, val: Option<&Matrix>) -> Self {
        ResidueSet {
            train: train.clone(),
            val: val.cloned(),
        }
    }

    /// `e^{l+1} = e^l − g_l(x)` on both splits.
    pub fn update(&self, train_outputs: &Matrix, val_outputs: Option<&Matrix>) -> Result<ResidueSet> {
        let train = self.train.sub(train_outputs)?;
        let val = match (&self.val, val_outputs) {
            (Some(v), Some(o)) => Some(v.sub(o)?),
            (None, None) => None,
            _ => {
                return Err(Error::InvalidArgument(
                    "validation residues and outputs must both be present or both absent".into(),
                ))
            }
        };
        Ok(ResidueSet { train, val })
    }
}

/// Inputs of one grade: the cached features of each split.
#[derive(Debug, Clone, Copy)]
pub struct GradeFeatures<'a> {
    pub train: &'a Matrix,
    pub val: Option<&'a Matrix>,
}

/// Training and validation data of a run.
#[derive(Debug, Clone, Copy)]
pub struct RegressionData<'a> {
    pub train: Supervised<'a>,
    pub val: Option<Supervised<'a>>,
}

/// Inputs on which the composed model is evaluated every `every` epochs
/// while training (spectrum evolution).
#[derive(Debug, Clone)]
pub struct Probe {
    pub inputs: Matrix,
    pub every: usize,
}

/// Composed-model outputs on the probe inputs during training.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub grade: usize,
    /// Epochs completed within the grade.
    pub epoch: usize,
    /// Epochs completed across all grades so far.
    pub global_epoch: usize,
    pub outputs: &'a Matrix,
}

/// Progress hooks. Every method has an empty default.
pub trait Observer {
    fn on_grade_start(&mut self, _grade: usize) {}
    fn on_epoch(&mut self, _grade: usize, _loss: &EpochLoss) {}
    fn on_snapshot(&mut self, _snapshot: &Snapshot<'_>) {}
    fn on_grade_end(&mut self, _record: &GradeRecord) {}
}

impl Observer for () {}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn on_grade_start(&mut self, grade: usize) {
        (**self).on_grade_start(grade)
    }
    fn on_epoch(&mut self, grade: usize, loss: &EpochLoss) {
        (**self).on_epoch(grade, loss)
    }
    fn on_snapshot(&mut self, snapshot: &Snapshot<'_>) {
        (**self).on_snapshot(snapshot)
    }
    fn on_grade_end(&mut self, record: &GradeRecord) {
        (**self).on_grade_end(record)
    }
}

struct ProbeState<'a> {
    probe: &'a Probe,
    /// Sum of the frozen grades' outputs on the probe.
    base: Option<Matrix>,
    features: Matrix,
}

/// Fits one grade's network to `residues` on the cached `features`.
///
/// The returned record holds the epoch snapshot with the lowest validation
/// loss. Residue norms in the record are filled in from that snapshot.
pub fn train_grade(
    residues: &ResidueSet,
    features: GradeFeatures<'_>,
    spec: &GradeSpec,
    seed: u64,
    index: usize,
    observer: &mut dyn Observer,
) -> Result<GradeRecord> {
    train_grade_inner(residues, features, spec, seed, index, 0, None, observer)
}

#[allow(clippy::too_many_arguments)]
fn train_grade_inner(
    residues: &ResidueSet,
    features: GradeFeatures<'_>,
    spec: &GradeSpec,
    seed: u64,
    index: usize,
    epoch_offset: usize,
    mut probe: Option<&mut ProbeState<'_>>,
    observer: &mut dyn Observer,
) -> Result<GradeRecord> {
    let train = Supervised::new(features.train, &residues.train)?;
    let val = match (features.val, &residues.val) {
        (Some(x), Some(e)) => Some(Supervised::new(x, e)?),
        (None, None) => None,
        _ => {
            return Err(Error::InvalidArgument(
                "validation features and residues must both be present or both absent".into(),
            ))
        }
    };
    let network = &spec.network;
    if features.train.cols() != network.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "grade input width vs cached features",
            expected: network.input_dim(),
            found: features.train.cols(),
        });
    }
    let mut cfg = spec.train.clone();
    cfg.seed = seed;

    observer.on_grade_start(index);
    let mut snapshot_error = None;
    let result = fit(
        network,
        xavier_init(network, seed),
        train,
        val,
        &cfg,
        |loss, params| {
            observer.on_epoch(index, loss);
            if let Some(state) = probe.as_deref_mut() {
                let global = epoch_offset + loss.epoch + 1;
                if global.is_multiple_of(state.probe.every) && snapshot_error.is_none() {
                    match probe_outputs(state, network, params) {
                        Ok(outputs) => observer.on_snapshot(&Snapshot {
                            grade: index,
                            epoch: loss.epoch + 1,
                            global_epoch: global,
                            outputs: &outputs,
                        }),
                        Err(e) => snapshot_error = Some(e),
                    }
                }
            }
        },
    )
    .map_err(|e| match e {
        Error::Divergence { epoch, detail, .. } => Error::Divergence {
            grade: index,
            epoch,
            detail,
        },
        other => other,
    })?;
    if let Some(e) = snapshot_error {
        return Err(e);
    }

    let train_out = predict_batch(network, &result.params, features.train)?;
    let next_train = residues.train.sub(&train_out)?;
    let val_residue_norm = match (features.val, &residues.val) {
        (Some(x), Some(e)) => Some(e.sub(&predict_batch(network, &result.params, x)?)?.norm()),
        _ => None,
    };
    let record = GradeRecord {
        index,
        spec: network.clone(),
        params: result.params,
        best_epoch: result.best_epoch,
        history: result.history,
        train_residue_norm: next_train.norm(),
        val_residue_norm,
        output_norm: train_out.norm(),
    };
    observer.on_grade_end(&record);
    Ok(record)
}

fn probe_outputs(state: &ProbeState<'_>, network: &MlpSpec, params: &MlpParams) -> Result<Matrix> {
    let mut out = predict_batch(network, params, &state.features)?;
    if let Some(base) = &state.base {
        out.add_assign(base)?;
    }
    Ok(out)
}

/// Outcome of check_residual_monotonic for one consecutive pair of norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicViolation {
    /// Position of the later norm in the history.
    pub position: usize,
    pub before: f64,
    pub after: f64,
    pub function_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MonotonicReport {
    pub violations: Vec<MonotonicViolation>,
}

impl MonotonicReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Norm of a learned function below which it counts as the zero function.
pub const ZERO_FUNCTION_NORM: f64 = 1e-10;
/// Relative slack on the strict decrease.
pub const MONOTONIC_REL_TOL: f64 = 1e-12;

/// Checks that residual norms strictly decrease unless the grade in
/// between learned the zero function.
///
/// `norms[i]` is the residual norm after `i` steps and `function_norms[i]`
/// the norm of the function learned between `norms[i]` and `norms[i + 1]`.
pub fn check_residual_monotonic(norms: &[f64], function_norms: &[f64]) -> Result<MonotonicReport> {
    if norms.len() < 2 {
        return Err(Error::InvalidArgument(
            "monotonicity needs at least two residual norms".into(),
        ));
    }
    if function_norms.len() != norms.len() - 1 {
        return Err(Error::DimensionMismatch {
            context: "learned function norms",
            expected: norms.len() - 1,
            found: function_norms.len(),
        });
    }
    let violations = norms
        .windows(2)
        .zip(function_norms)
        .enumerate()
        .filter_map(|(i, (pair, &f))| {
            let decreased = pair[1] < pair[0] * (1.0 + MONOTONIC_REL_TOL);
            let zero_function = f <= ZERO_FUNCTION_NORM;
            (!(decreased || zero_function)).then_some(MonotonicViolation {
                position: i + 1,
                before: pair[0],
                after: pair[1],
                function_norm: f,
            })
        })
        .collect();
    Ok(MonotonicReport { violations })
}

/// Result of a multi-grade run.
#[derive(Debug, Clone)]
pub struct MgdlOutcome {
    pub model: ComposedModel,
    /// `‖y‖, ‖e^2‖, …, ‖e^{L+1}‖` over the training set.
    pub residue_norms: Vec<f64>,
    pub monotonic: MonotonicReport,
    pub residues: ResidueSet,
}

/// Trains `grades` in sequence.
///
/// Grade `l` (zero-based `l − 1`) uses seed [`rng::grade_seed`]`(seed, l − 1)`.
/// A monotonicity failure is reported in the outcome, not raised.
pub fn run_mgdl(
    data: RegressionData<'_>,
    grades: &[GradeSpec],
    seed: u64,
    probe: Option<&Probe>,
    observer: &mut dyn Observer,
) -> Result<MgdlOutcome> {
    if grades.is_empty() {
        return Err(Error::InvalidConfig("at least one grade is required".into()));
    }
    if let Some(p) = probe {
        if p.every == 0 {
            return Err(Error::InvalidConfig("probe interval must be positive".into()));
        }
    }
    let mut expected_in = data.train.inputs.cols();
    for g in grades {
        if g.network.input_dim() != expected_in {
            return Err(Error::DimensionMismatch {
                context: "grade input width",
                expected: expected_in,
                found: g.network.input_dim(),
            });
        }
        if g.network.output_dim() != data.train.targets.cols() {
            return Err(Error::DimensionMismatch {
                context: "grade output width vs target width",
                expected: data.train.targets.cols(),
                found: g.network.output_dim(),
            });
        }
        expected_in = g.network.feature_dim();
    }

    let mut residues = ResidueSet::from_targets(data.train.targets, data.val.map(|v| v.targets));
    let mut train_feats = data.train.inputs.clone();
    let mut val_feats = data.val.map(|v| v.inputs.clone());
    let mut probe_state = probe.map(|p| ProbeState {
        probe: p,
        base: None,
        features: p.inputs.clone(),
    });

    let mut model = ComposedModel::new();
    let mut norms = Vec::with_capacity(grades.len() + 1);
    let mut function_norms = Vec::with_capacity(grades.len());
    norms.push(residues.train.norm());
    let mut epoch_offset = 0;

    for (k, spec) in grades.iter().enumerate() {
        let record = train_grade_inner(
            &residues,
            GradeFeatures {
                train: &train_feats,
                val: val_feats.as_ref(),
            },
            spec,
            rng::grade_seed(seed, k),
            k + 1,
            epoch_offset,
            probe_state.as_mut(),
            observer,
        )?;
        epoch_offset += spec.train.epochs;

        let net = &record.spec;
        let p = &record.params;
        let train_trace = nn::forward_batch(net, p, &train_feats)?;
        let val_trace = match &val_feats {
            Some(v) => Some(nn::forward_batch(net, p, v)?),
            None => None,
        };
        residues = residues.update(&train_trace.output, val_trace.as_ref().map(|t| &t.output))?;
        norms.push(residues.train.norm());
        function_norms.push(train_trace.output.norm());

        if k + 1 < grades.len() {
            train_feats = last_hidden(train_trace);
            val_feats = val_trace.map(last_hidden);
            if let Some(state) = probe_state.as_mut() {
                let trace = nn::forward_batch(net, p, &state.features)?;
                match state.base.as_mut() {
                    Some(b) => b.add_assign(&trace.output)?,
                    None => state.base = Some(trace.output.clone()),
                }
                state.features = last_hidden(trace);
            }
        }
        model.push(record)?;
    }

    let monotonic = check_residual_monotonic(&norms, &function_norms)?;
    Ok(MgdlOutcome {
        model,
        residue_norms: norms,
        monotonic,
        residues,
    })
}

fn last_hidden(trace: nn::BatchTrace) -> Matrix {
    trace
        .hidden
        .into_iter()
        .last()
        .expect("grade networks have at least one hidden layer")
}

/// Result of end-to-end training of one network.
#[derive(Debug, Clone)]
pub struct SgdlOutcome {
    pub spec: MlpSpec,
    pub params: MlpParams,
    pub best_epoch: usize,
    pub history: Vec<EpochLoss>,
    /// `‖y‖` and `‖y − N(x)‖` over the training set.
    pub residue_norms: Vec<f64>,
}

/// Trains `network` end to end with the same loop, seeding and logging as a
/// single grade, reporting to the observer as grade 1.
pub fn run_sgdl(
    data: RegressionData<'_>,
    network: &MlpSpec,
    train: &TrainConfig,
    seed: u64,
    probe: Option<&Probe>,
    observer: &mut dyn Observer,
) -> Result<SgdlOutcome> {
    train.validate()?;
    if let Some(p) = probe {
        if p.every == 0 {
            return Err(Error::InvalidConfig("probe interval must be positive".into()));
        }
    }
    let spec = GradeSpec {
        network: network.clone(),
        train: train.clone(),
    };
    let residues = ResidueSet::from_targets(data.train.targets, data.val.map(|v| v.targets));
    let mut probe_state = probe.map(|p| ProbeState {
        probe: p,
        base: None,
        features: p.inputs.clone(),
    });
    let record = train_grade_inner(
        &residues,
        GradeFeatures {
            train: data.train.inputs,
            val: data.val.map(|v| v.inputs),
        },
        &spec,
        rng::grade_seed(seed, 0),
        1,
        0,
        probe_state.as_mut(),
        observer,
    )?;
    Ok(SgdlOutcome {
        spec: record.spec,
        params: record.params,
        best_epoch: record.best_epoch,
        history: record.history,
        residue_norms: alloc::vec![residues.train.norm(), record.train_residue_norm],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::BatchSize;
    use alloc::vec;

    fn cfg(epochs: usize) -> TrainConfig {
        TrainConfig::new(1e-2, 1e-3, epochs, BatchSize::Full, 0).unwrap()
    }

    #[test]
    fn grade_spec_requires_hidden_layer() {
        let affine = MlpSpec::new(vec![1, 1]).unwrap();
        assert!(GradeSpec::new(affine, cfg(1)).is_err());
    }

    #[test]
    fn monotonic_examples() {
        assert!(check_residual_monotonic(&[1.0, 0.3, 0.05], &[0.7, 0.25]).unwrap().passed());
        let r = check_residual_monotonic(&[1.0, 1.5], &[0.5]).unwrap();
        assert!(!r.passed());
        assert_eq!(r.violations[0].before, 1.0);
        assert_eq!(r.violations[0].after, 1.5);
        assert!(check_residual_monotonic(&[1.0, 1.0], &[0.0]).unwrap().passed());
        assert!(check_residual_monotonic(&[1.0], &[]).is_err());
        assert!(check_residual_monotonic(&[1.0, 0.5], &[]).is_err());
    }

    #[test]
    fn residue_update_is_subtraction() {
        let y = Matrix::column(vec![1.0, 2.0, 3.0]).unwrap();
        let set = ResidueSet::from_targets(&y, Some(&y));
        let zeros = Matrix::zeros(3, 1);
        assert_eq!(set.update(&zeros, Some(&zeros)).unwrap(), set);
        let next = set.update(&y, Some(&y)).unwrap();
        assert_eq!(next.train.as_slice(), &[0.0; 3]);
        assert_eq!(next.val.unwrap().as_slice(), &[0.0; 3]);
        assert!(set.update(&y, None).is_err());
    }

    #[test]
    fn empty_model_features_are_inputs() {
        let x = Matrix::column(vec![0.1, 0.2]).unwrap();
        assert_eq!(ComposedModel::new().compute_features(&x).unwrap(), x);
        assert!(ComposedModel::new().predict(&x).is_err());
    }

    #[test]
    fn push_checks_width_chain() {
        let s1 = MlpSpec::new(vec![1, 4, 1]).unwrap();
        let s2 = MlpSpec::new(vec![3, 4, 1]).unwrap();
        let rec = |spec: &MlpSpec, index| GradeRecord {
            index,
            spec: spec.clone(),
            params: MlpParams::zeros(spec),
            best_epoch: 0,
            history: vec![],
            train_residue_norm: 0.0,
            val_residue_norm: None,
            output_norm: 0.0,
        };
        let mut m = ComposedModel::new();
        m.push(rec(&s1, 1)).unwrap();
        assert!(matches!(m.push(rec(&s2, 2)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn run_mgdl_rejects_empty_and_misaligned_grades() {
        let x = Matrix::column(vec![0.0, 1.0]).unwrap();
        let data = RegressionData {
            train: Supervised::new(&x, &x).unwrap(),
            val: None,
        };
        assert!(run_mgdl(data, &[], 0, None, &mut ()).is_err());
        let g1 = GradeSpec::new(MlpSpec::new(vec![1, 4, 1]).unwrap(), cfg(2)).unwrap();
        let g2 = GradeSpec::new(MlpSpec::new(vec![5, 4, 1]).unwrap(), cfg(2)).unwrap();
        assert!(matches!(
            run_mgdl(data, &[g1, g2], 0, None, &mut ()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
