use chrono::Duration;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::EtaError;
use crate::geo::{route_remaining_nm, LatLon};
use crate::grid::{Channel, EtaLabel};
use crate::model::{Timestamp, Voyage};

use crate::Tensor;

pub const KINEMATIC_ID: &str = "kinematic";
pub const RIDGE_ID: &str = "ridge-grid";
pub const PREDICTOR_IDS: [&str; 2] = [KINEMATIC_ID, RIDGE_ID];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaPrediction {
    pub eta: Timestamp,
    pub predictor_id: String,
    pub uncertainty_minutes: Option<f64>,
}

/// Distance-over-speed summary of the vessel's current state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicSummary {
    pub remaining_nm: f64,
    /// knots
    pub recent_sog: f64,
}

impl KinematicSummary {
    pub fn minutes(&self) -> Result<f64, EtaError> {
        if self.remaining_nm <= 0.0 {
            return Ok(0.0);
        }
        if !(self.recent_sog > 0.0) {
            return Err(EtaError::ZeroSpeed);
        }
        Ok(self.remaining_nm / self.recent_sog * 60.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorInput {
    pub tensor: Tensor,
    pub summary: KinematicSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub input: PredictorInput,
    pub label: EtaLabel,
}

/// Maps an input to remaining minutes until arrival.
pub trait EtaPredictor: Send + Sync {
    fn id(&self) -> &str;

    fn fit(&mut self, samples: &[TrainingSample]) -> Result<(), EtaError>;

    /// Raw prediction; may be negative for poorly fitted models.
    fn predict_minutes(&self, input: &PredictorInput) -> Result<f64, EtaError>;
}

pub fn make_predictor(id: &str) -> Result<Box<dyn EtaPredictor>, EtaError> {
    match id {
        KINEMATIC_ID => Ok(Box::new(KinematicPredictor)),
        RIDGE_ID => Ok(Box::new(RidgeGridPredictor::default())),
        other => Err(EtaError::UnknownPredictor {
            id: other.to_string(),
            available: PREDICTOR_IDS.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

fn add_minutes(t: Timestamp, minutes: f64) -> Timestamp {
    t + Duration::microseconds((minutes * 6.0e7).round() as i64)
}

/// `now + remaining / recent_sog`.
pub fn predict_eta_kinematic(
    pos: LatLon<f64>,
    now: Timestamp,
    voyage: &Voyage,
    recent_sog: f64,
) -> Result<EtaPrediction, EtaError> {
    if !(recent_sog > 0.0) {
        return Err(EtaError::ZeroSpeed);
    }
    let summary = KinematicSummary {
        remaining_nm: route_remaining_nm(&voyage.route, pos)?,
        recent_sog,
    };
    Ok(EtaPrediction {
        eta: add_minutes(now, summary.minutes()?),
        predictor_id: KINEMATIC_ID.to_string(),
        uncertainty_minutes: None,
    })
}

/// ETA from a fitted predictor, never earlier than `now`.
pub fn predict_eta_model(
    predictor: &dyn EtaPredictor,
    input: &PredictorInput,
    now: Timestamp,
) -> Result<EtaPrediction, EtaError> {
    let minutes = predictor.predict_minutes(input)?;
    Ok(EtaPrediction {
        eta: add_minutes(now, minutes.max(0.0)),
        predictor_id: predictor.id().to_string(),
        uncertainty_minutes: None,
    })
}

/// Baseline: remaining distance over the latest speed over ground.
#[derive(Debug, Clone, Copy, Default)]
pub struct KinematicPredictor;

impl EtaPredictor for KinematicPredictor {
    fn id(&self) -> &str {
        KINEMATIC_ID
    }

    fn fit(&mut self, _samples: &[TrainingSample]) -> Result<(), EtaError> {
        Ok(())
    }

    fn predict_minutes(&self, input: &PredictorInput) -> Result<f64, EtaError> {
        input.summary.minutes()
    }
}

/// Fitted coefficients of [`RidgeGridPredictor`], serialisable as a versioned blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeState {
    pub format_version: u32,
    pub predictor_id: String,
    pub shape: [usize; 4],
    pub lambda: f64,
    /// Positions, among the tensor's weather channels, of those kept by selection.
    pub channels: Vec<usize>,
    /// Training mean of every weather channel, subtracted before interaction.
    pub weather_centre: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

const RIDGE_FORMAT_VERSION: u32 = 1;
const CV_FOLDS: usize = 5;
/// Relative cross-validation gain a channel must bring to be kept.
const MIN_GAIN: f64 = 0.02;

/// Ridge regression of the ratio between true remaining time and the
/// kinematic estimate `k`, on per-step weather.
///
/// With `h = k / 1000` and `w[s][c]` the mean of weather channel `c` over the
/// cells the vessel occupied during step `s` (the centre cell when the step
/// has no samples on the grid) minus that channel's training mean, the
/// features are `h`, `h^2` and `h^p * w[s][c]` for `p` in 1..=4. Prediction
/// is `k` times the fitted ratio. Features are standardised and the intercept
/// is unpenalised.
///
/// Channels are added greedily while they lower the blocked k-fold error, and
/// the penalty is picked from `lambdas` the same way.
#[derive(Debug, Clone)]
pub struct RidgeGridPredictor {
    pub lambdas: Vec<f64>,
    state: Option<RidgeState>,
}

impl Default for RidgeGridPredictor {
    fn default() -> Self {
        Self::new((-6..=1).map(|e| 10f64.powi(e)).collect())
    }
}

/// Sufficient statistics of one cross-validation fold, on the design
/// augmented with a leading intercept column.
#[derive(Clone)]
struct FoldStats {
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    n: usize,
}

impl FoldStats {
    fn zeros(d: usize) -> Self {
        Self {
            gram: DMatrix::zeros(d + 1, d + 1),
            xty: DVector::zeros(d + 1),
            yty: 0.0,
            n: 0,
        }
    }

    fn add(&mut self, other: &FoldStats) {
        self.gram += &other.gram;
        self.xty += &other.xty;
        self.yty += other.yty;
        self.n += other.n;
    }

    /// Intercept first, then coefficients; the intercept is not penalised.
    fn solve(&self, lambda: f64) -> Result<DVector<f64>, EtaError> {
        let mut g = self.gram.clone();
        for j in 1..g.ncols() {
            g[(j, j)] += lambda * self.n as f64;
        }
        Ok(g.cholesky().ok_or(EtaError::Singular)?.solve(&self.xty))
    }

    fn sse(&self, beta: &DVector<f64>) -> f64 {
        self.yty - 2.0 * beta.dot(&self.xty) + beta.dot(&(&self.gram * beta))
    }
}

/// Standardised design with its column statistics and per-fold sums.
struct Design {
    mean: Vec<f64>,
    scale: Vec<f64>,
    folds: Vec<FoldStats>,
}

impl Design {
    fn new(rows: &[Vec<f64>], y: &[f64]) -> Self {
        let n = rows.len();
        let d = rows[0].len();
        let nf = n as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / nf;
            }
        }
        let mut scale = vec![0.0; d];
        for r in rows {
            for j in 0..d {
                scale[j] += (r[j] - mean[j]).powi(2) / nf;
            }
        }
        for s in scale.iter_mut() {
            *s = if *s > 1e-18 { s.sqrt() } else { 1.0 };
        }
        // contiguous blocks keep samples that share a weather history together
        let folds = (0..CV_FOLDS.min(n))
            .map(|f| {
                let idx: Vec<usize> = (0..n).filter(|i| i * CV_FOLDS.min(n) / n == f).collect();
                let x = DMatrix::from_fn(idx.len(), d + 1, |i, j| {
                    if j == 0 {
                        1.0
                    } else {
                        (rows[idx[i]][j - 1] - mean[j - 1]) / scale[j - 1]
                    }
                });
                let yv = DVector::from_iterator(idx.len(), idx.iter().map(|&i| y[i]));
                FoldStats {
                    gram: x.transpose() * &x,
                    xty: x.transpose() * &yv,
                    yty: yv.norm_squared(),
                    n: idx.len(),
                }
            })
            .collect();
        Self { mean, scale, folds }
    }

    fn total(&self) -> FoldStats {
        let mut t = FoldStats::zeros(self.mean.len());
        for f in &self.folds {
            t.add(f);
        }
        t
    }

    fn cv_error(&self, lambda: f64) -> Result<f64, EtaError> {
        if self.folds.len() < 2 {
            return Ok(0.0);
        }
        let total = self.total();
        let mut sse = 0.0;
        for held in &self.folds {
            let mut kept = FoldStats::zeros(self.mean.len());
            for f in self.folds.iter().filter(|f| !std::ptr::eq(*f, held)) {
                kept.add(f);
            }
            debug_assert_eq!(kept.n + held.n, total.n);
            sse += held.sse(&kept.solve(lambda)?);
        }
        Ok(sse)
    }

    /// Lowest cross-validation error over `lambdas`, and the penalty reaching it.
    fn best_lambda(&self, lambdas: &[f64]) -> Result<(f64, f64), EtaError> {
        let mut best = (f64::INFINITY, lambdas[0]);
        for &l in lambdas {
            let e = self.cv_error(l)?;
            if e < best.0 {
                best = (e, l);
            }
        }
        Ok(best)
    }
}

impl RidgeGridPredictor {
    /// Candidate penalties, relative to the sample count.
    pub fn new(lambdas: Vec<f64>) -> Self {
        Self { lambdas, state: None }
    }

    pub fn with_lambda(lambda: f64) -> Self {
        Self::new(vec![lambda])
    }

    pub fn state(&self) -> Option<&RidgeState> {
        self.state.as_ref()
    }

    pub fn from_state(state: RidgeState) -> Result<Self, EtaError> {
        if state.format_version != RIDGE_FORMAT_VERSION {
            return Err(EtaError::State(format!(
                "unsupported format version {}",
                state.format_version
            )));
        }
        let d = state.coefficients.len();
        if state.feature_mean.len() != d || state.feature_scale.len() != d {
            return Err(EtaError::State("coefficient vectors disagree in length".into()));
        }
        if d != 2 + 4 * state.shape[0] * state.channels.len() {
            return Err(EtaError::State("coefficient count does not match shape".into()));
        }
        if state.channels.iter().any(|&c| c >= state.weather_centre.len()) {
            return Err(EtaError::State("selected channel out of range".into()));
        }
        Ok(Self {
            lambdas: vec![state.lambda],
            state: Some(state),
        })
    }

    pub fn to_json(&self) -> Result<String, EtaError> {
        let state = self.state.as_ref().ok_or(EtaError::NotFitted)?;
        serde_json::to_string_pretty(state).map_err(|e| EtaError::State(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, EtaError> {
        let state: RidgeState = serde_json::from_str(text).map_err(|e| EtaError::State(e.to_string()))?;
        Self::from_state(state)
    }
}

/// Kinematic minutes and the per-step occupied-cell weather means, step-major.
fn raw_inputs(input: &PredictorInput) -> Result<(f64, Vec<f64>), EtaError> {
    Ok((input.summary.minutes()?, occupied_weather_means(&input.tensor)))
}

fn features(k: f64, means: &[f64], centre: &[f64], channels: &[usize]) -> Vec<f64> {
    let nc = centre.len();
    let steps = means.len().checked_div(nc).unwrap_or(0);
    let w: Vec<f64> = channels
        .iter()
        .flat_map(|&c| (0..steps).map(move |s| means[s * nc + c] - centre[c]))
        .collect();
    let h = k / 1000.0;
    let mut x = Vec::with_capacity(2 + 3 * w.len());
    x.push(h);
    x.push(h * h);
    for p in 1..=4 {
        let hp = h.powi(p);
        x.extend(w.iter().map(|v| hp * v));
    }
    x
}

/// Per step and weather channel (all leads), the mean over occupied cells.
fn occupied_weather_means(t: &Tensor) -> Vec<f64> {
    let [steps, h, w, _] = t.shape;
    let weather: Vec<usize> = weather_channels(t);
    let mut out = Vec::with_capacity(steps * weather.len());
    for s in 0..steps {
        let mut cells = Vec::new();
        for r in 0..h {
            for c in 0..w {
                if t.get(s, r, c, 0) > 0.0 {
                    cells.push((r, c));
                }
            }
        }
        if cells.is_empty() {
            cells.push((h / 2, w / 2));
        }
        let n = cells.len() as f64;
        for &ch in &weather {
            let sum: f64 = cells.iter().map(|&(r, c)| t.get(s, r, c, ch)).sum();
            out.push(sum / n);
        }
    }
    out
}

fn weather_channels(t: &Tensor) -> Vec<usize> {
    t.channels
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c, Channel::Weather { .. }))
        .map(|(i, _)| i)
        .collect()
}

impl EtaPredictor for RidgeGridPredictor {
    fn id(&self) -> &str {
        RIDGE_ID
    }

    fn fit(&mut self, samples: &[TrainingSample]) -> Result<(), EtaError> {
        if self.lambdas.is_empty() {
            return Err(EtaError::State("no candidate penalties".into()));
        }
        let first = samples.first().ok_or(EtaError::NoTrainingData)?;
        let shape = first.input.tensor.shape;
        let nc = weather_channels(&first.input.tensor).len();
        let mut raw = Vec::with_capacity(samples.len());
        for s in samples {
            if s.input.tensor.shape != shape {
                return Err(EtaError::ShapeMismatch {
                    expected: shape,
                    found: s.input.tensor.shape,
                });
            }
            let (k, means) = raw_inputs(&s.input)?;
            // already at the destination; nothing to learn
            if k > 0.0 {
                raw.push((k, means, s.label.remaining_minutes));
            }
        }
        if raw.is_empty() {
            return Err(EtaError::NoTrainingData);
        }
        let mut centre = vec![0.0; nc];
        let mut count = 0usize;
        for (_, means, _) in &raw {
            for (i, m) in means.iter().enumerate() {
                centre[i % nc] += m;
            }
            count += means.len() / nc.max(1);
        }
        for c in centre.iter_mut() {
            *c /= count.max(1) as f64;
        }
        let y: Vec<f64> = raw.iter().map(|(k, _, y)| y / k).collect();
        let design_for = |channels: &[usize]| {
            let rows: Vec<Vec<f64>> = raw
                .iter()
                .map(|(k, m, _)| features(*k, m, &centre, channels))
                .collect();
            Design::new(&rows, &y)
        };

        let mut channels = Vec::new();
        let mut design = design_for(&channels);
        let (mut err, mut lambda) = design.best_lambda(&self.lambdas)?;
        loop {
            let mut best: Option<(f64, f64, usize, Design)> = None;
            for c in (0..nc).filter(|c| !channels.contains(c)) {
                let mut trial = channels.clone();
                trial.push(c);
                let d = design_for(&trial);
                let (e, l) = d.best_lambda(&self.lambdas)?;
                if best.as_ref().is_none_or(|b| e < b.0) {
                    best = Some((e, l, c, d));
                }
            }
            match best {
                Some((e, l, c, d)) if e < err * (1.0 - MIN_GAIN) => {
                    channels.push(c);
                    err = e;
                    lambda = l;
                    design = d;
                }
                _ => break,
            }
        }

        let beta = design.total().solve(lambda)?;
        self.state = Some(RidgeState {
            format_version: RIDGE_FORMAT_VERSION,
            predictor_id: RIDGE_ID.to_string(),
            shape,
            lambda,
            channels,
            weather_centre: centre,
            feature_mean: design.mean,
            feature_scale: design.scale,
            intercept: beta[0],
            coefficients: beta.iter().skip(1).copied().collect(),
        });
        Ok(())
    }

    fn predict_minutes(&self, input: &PredictorInput) -> Result<f64, EtaError> {
        let st = self.state.as_ref().ok_or(EtaError::NotFitted)?;
        if input.tensor.shape != st.shape {
            return Err(EtaError::ShapeMismatch {
                expected: st.shape,
                found: input.tensor.shape,
            });
        }
        let (k, means) = raw_inputs(input)?;
        if k <= 0.0 {
            return Ok(0.0);
        }
        let x = features(k, &means, &st.weather_centre, &st.channels);
        let ratio = st.intercept
            + x.iter()
                .zip(&st.coefficients)
                .zip(st.feature_mean.iter().zip(&st.feature_scale))
                .map(|((v, b), (m, s))| (v - m) / s * b)
                .sum::<f64>();
        Ok(k * ratio)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridTensor;
    use crate::model::parse_timestamp;
    use crate::weather::WeatherChannel;

    fn input(shape: [usize; 4], remaining_nm: f64, sog: f64) -> PredictorInput {
        let channels = std::iter::once(Channel::Occupancy)
            .chain(WeatherChannel::ALL.iter().take(shape[3] - 1).map(|&variable| Channel::Weather {
                variable,
                lead: 0,
            }))
            .collect();
        PredictorInput {
            tensor: GridTensor::zeros(shape, channels),
            summary: KinematicSummary { remaining_nm, recent_sog: sog },
        }
    }

    struct Negative;
    impl EtaPredictor for Negative {
        fn id(&self) -> &str {
            "negative"
        }
        fn fit(&mut self, _: &[TrainingSample]) -> Result<(), EtaError> {
            Ok(())
        }
        fn predict_minutes(&self, _: &PredictorInput) -> Result<f64, EtaError> {
            Ok(-42.0)
        }
    }

    #[test]
    fn negative_prediction_clamps_to_now() {
        let now = parse_timestamp("2021-01-01T00:00:00Z").unwrap();
        let p = predict_eta_model(&Negative, &input([1, 3, 3, 2], 10.0, 10.0), now).unwrap();
        assert_eq!(p.eta, now);
    }

    #[test]
    fn kinematic_arithmetic() {
        let inp = input([1, 3, 3, 2], 50.0, 10.0);
        assert_eq!(KinematicPredictor.predict_minutes(&inp).unwrap(), 300.0);
        let zero = input([1, 3, 3, 2], 0.0, 10.0);
        assert_eq!(KinematicPredictor.predict_minutes(&zero).unwrap(), 0.0);
        let stopped = input([1, 3, 3, 2], 5.0, 0.0);
        assert_eq!(KinematicPredictor.predict_minutes(&stopped), Err(EtaError::ZeroSpeed));
    }

    #[test]
    fn ridge_requires_fit_and_matching_shape() {
        let mut r = RidgeGridPredictor::default();
        let inp = input([2, 3, 3, 3], 50.0, 10.0);
        assert_eq!(r.predict_minutes(&inp), Err(EtaError::NotFitted));
        let samples: Vec<TrainingSample> = (1..40)
            .map(|i| {
                let inp = input([2, 3, 3, 3], i as f64 * 5.0, 12.0);
                let y = inp.summary.minutes().unwrap();
                TrainingSample {
                    input: inp,
                    label: EtaLabel { remaining_minutes: y },
                }
            })
            .collect();
        r.fit(&samples).unwrap();
        let pred = r.predict_minutes(&input([2, 3, 3, 3], 60.0, 12.0)).unwrap();
        assert!((pred - 300.0).abs() < 1.0, "{pred}");
        assert!(matches!(
            r.predict_minutes(&input([2, 5, 5, 3], 60.0, 12.0)),
            Err(EtaError::ShapeMismatch { .. })
        ));
        let restored = RidgeGridPredictor::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(
            restored.predict_minutes(&input([2, 3, 3, 3], 60.0, 12.0)).unwrap(),
            pred
        );
    }

    #[test]
    fn registry() {
        assert_eq!(make_predictor("kinematic").unwrap().id(), KINEMATIC_ID);
        match make_predictor("convlstm") {
            Err(EtaError::UnknownPredictor { available, .. }) => {
                assert_eq!(available, vec!["kinematic", "ridge-grid"])
            }
            _ => panic!(),
        }
    }
}
