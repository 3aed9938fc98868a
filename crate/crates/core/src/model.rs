//! Domain types for the offer-first matching model.
//!
//! An [`Instance`] is `n` patients and `m` providers with a match-quality
//! matrix `theta` in `[0,1]`, per-provider capacities, and a choice model
//! describing how a patient reacts to a menu of available providers. Policies
//! produce an [`Assortment`] (a binary offer matrix) up front; simulation then
//! walks a [`ResponseOrder`], maintaining an [`AvailabilityState`] and
//! recording one [`SelectionOutcome`] per patient.

use serde::de::DeserializeOwned;
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{as_f64, real, Scalar};

/// Only instance-file layout this build reads and writes.
pub const INSTANCE_FORMAT_VERSION: u32 = 1;

/// How a single patient chooses from the available part of their menu.
///
/// Every model receives the element-wise product of the patient's offered row
/// and the availability mask; a patient never selects a provider that is
/// either unoffered or out of capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChoiceModelSpec<T> {
    /// With probability `p` select the highest-quality available offer
    /// (lowest index on ties), otherwise abstain.
    Uniform { p: T },
    /// As `Uniform`, but abstain outright when the best available offer has
    /// quality below `alpha` (a best offer exactly at `alpha` is accepted).
    Threshold { p: T, alpha: T },
    /// Multinomial logit: provider `j` is selected with probability
    /// `e^{theta_j} / (e^{gamma} + sum_k e^{theta_k})` over available offers
    /// `k`, and the patient abstains with the remaining mass.
    Mnl { gamma: T },
}

impl<T: Scalar> ChoiceModelSpec<T> {
    /// Stable lowercase name used in files and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            ChoiceModelSpec::Uniform { .. } => "uniform",
            ChoiceModelSpec::Threshold { .. } => "threshold",
            ChoiceModelSpec::Mnl { .. } => "mnl",
        }
    }

    fn validate(&self) -> Result<(), InstanceError> {
        let check_p = |p: T| -> Result<(), InstanceError> {
            let p = as_f64(p);
            if !(p > 0.0 && p <= 1.0) {
                return Err(InstanceError::BadChoiceParam {
                    param: "p",
                    value: p,
                    expected: "in (0, 1]",
                });
            }
            Ok(())
        };
        match self {
            ChoiceModelSpec::Uniform { p } => check_p(*p),
            ChoiceModelSpec::Threshold { p, alpha } => {
                check_p(*p)?;
                let a = as_f64(*alpha);
                if !(0.0..=1.0).contains(&a) {
                    return Err(InstanceError::BadChoiceParam {
                        param: "alpha",
                        value: a,
                        expected: "in [0, 1]",
                    });
                }
                Ok(())
            }
            ChoiceModelSpec::Mnl { gamma } => {
                let g = as_f64(*gamma);
                // e^gamma must stay finite and non-zero relative to e^theta.
                if !g.is_finite() || g.abs() > 500.0 {
                    return Err(InstanceError::BadChoiceParam {
                        param: "gamma",
                        value: g,
                        expected: "finite with |gamma| <= 500",
                    });
                }
                Ok(())
            }
        }
    }
}

/// One matching problem: patients, providers, qualities, capacities, and the
/// choice model patients respond with.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    /// Number of patients (rows of `theta`).
    pub n: usize,
    /// Number of providers (columns of `theta`).
    pub m: usize,
    /// Match quality per (patient, provider), each in `[0, 1]`.
    pub theta: Vec<Vec<T>>,
    /// Providers accept up to this many patients; all ones in the base model.
    pub capacities: Vec<u32>,
    /// Choice model patients respond with.
    pub choice: ChoiceModelSpec<T>,
}

impl<T: Scalar> Instance<T> {
    /// Builds a unit-capacity instance from a quality matrix.
    pub fn new(theta: Vec<Vec<T>>, choice: ChoiceModelSpec<T>) -> Self {
        let n = theta.len();
        let m = theta.first().map_or(0, Vec::len);
        Instance {
            n,
            m,
            theta,
            capacities: vec![1; m],
            choice,
        }
    }

    /// Same instance with a different choice model.
    pub fn with_choice(mut self, choice: ChoiceModelSpec<T>) -> Self {
        self.choice = choice;
        self
    }

    /// Same instance with every provider capacity set to `c`.
    pub fn with_uniform_capacity(mut self, c: u32) -> Self {
        self.capacities = vec![c; self.m];
        self
    }

    /// Mean quality of each patient's row; used by popularity-weighted
    /// response orders.
    pub fn mean_theta_rows(&self) -> Vec<T> {
        let m = real::<T>(self.m.max(1) as f64);
        self.theta
            .iter()
            .map(|row| row.iter().copied().sum::<T>() / m)
            .collect()
    }
}

/// Checks the structural invariants of an instance: consistent dimensions,
/// qualities in `[0,1]`, positive capacities, and valid choice parameters.
pub fn validate_instance<T: Scalar>(inst: &Instance<T>) -> Result<(), InstanceError> {
    if inst.n == 0 || inst.m == 0 {
        return Err(InstanceError::EmptyDimension { n: inst.n, m: inst.m });
    }
    if inst.theta.len() != inst.n {
        return Err(InstanceError::DimensionMismatch {
            what: "theta row count",
            got: inst.theta.len(),
            want: inst.n,
        });
    }
    for (i, row) in inst.theta.iter().enumerate() {
        if row.len() != inst.m {
            return Err(InstanceError::DimensionMismatch {
                what: "theta row length",
                got: row.len(),
                want: inst.m,
            });
        }
        for (j, &v) in row.iter().enumerate() {
            let v = as_f64(v);
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(InstanceError::ThetaOutOfRange { i, j, value: v });
            }
        }
    }
    if inst.capacities.len() != inst.m {
        return Err(InstanceError::DimensionMismatch {
            what: "capacities length",
            got: inst.capacities.len(),
            want: inst.m,
        });
    }
    if let Some(j) = inst.capacities.iter().position(|&c| c == 0) {
        return Err(InstanceError::BadCapacity { j });
    }
    inst.choice.validate()
}

/// Structural problems detected by [`validate_instance`] or file loading.
#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("instance must have at least one patient and one provider (n={n}, m={m})")]
    EmptyDimension { n: usize, m: usize },
    #[error("{what} is {got}, expected {want}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("theta[{i}][{j}] = {value} is outside [0, 1]")]
    ThetaOutOfRange { i: usize, j: usize, value: f64 },
    #[error("capacities[{j}] must be at least 1")]
    BadCapacity { j: usize },
    #[error("choice parameter {param} = {value} invalid: expected {expected}")]
    BadChoiceParam {
        param: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("unsupported instance format version {found} (this build reads version {})", INSTANCE_FORMAT_VERSION)]
    UnsupportedVersion { found: u32 },
    #[error("choice model \"{kind}\" requires parameter \"{param}\"")]
    MissingChoiceParam { kind: String, param: &'static str },
    #[error("unknown choice model type \"{kind}\" (expected uniform, threshold, or mnl)")]
    UnknownChoiceKind { kind: String },
    #[error("choice parameter \"{param}\" does not apply to choice model \"{kind}\"")]
    UnexpectedChoiceParam { kind: &'static str, param: &'static str },
}

/// Binary offer matrix: `offered(i, j)` says patient `i` sees provider `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assortment {
    rows: Vec<Vec<bool>>,
}

impl Assortment {
    /// All-zero matrix.
    pub fn empty(n: usize, m: usize) -> Self {
        Assortment {
            rows: vec![vec![false; m]; n],
        }
    }

    /// All-one matrix (every provider offered to every patient).
    pub fn full(n: usize, m: usize) -> Self {
        Assortment {
            rows: vec![vec![true; m]; n],
        }
    }

    /// Builds from explicit rows. All rows must share one length.
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Self {
        let m = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == m),
            "assortment rows must have equal length"
        );
        Assortment { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    #[inline]
    pub fn offered(&self, i: usize, j: usize) -> bool {
        self.rows[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, offered: bool) {
        self.rows[i][j] = offered;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[bool] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    /// Number of offers in row `i` (the patient's menu size).
    pub fn row_size(&self, i: usize) -> usize {
        self.rows[i].iter().filter(|&&b| b).count()
    }

    /// Number of patients provider `j` is offered to.
    pub fn column_size(&self, j: usize) -> usize {
        self.rows.iter().filter(|r| r[j]).count()
    }

    /// Continuous copy (`0.0`/`1.0`) for relaxation-based scoring.
    pub fn to_continuous<T: Scalar>(&self) -> Vec<Vec<T>> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&b| if b { T::one() } else { T::zero() })
                    .collect()
            })
            .collect()
    }
}

// Assortments are stored on disk as 0/1 matrices under an "x" key; bools are
// also accepted on input for hand-written files.
impl Serialize for Assortment {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        struct Matrix<'a>(&'a [Vec<bool>]);
        impl Serialize for Matrix<'_> {
            fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
                let mut seq = ser.serialize_seq(Some(self.0.len()))?;
                for row in self.0 {
                    let ints: Vec<u8> = row.iter().map(|&b| u8::from(b)).collect();
                    seq.serialize_element(&ints)?;
                }
                seq.end()
            }
        }
        let mut map = ser.serialize_map(Some(1))?;
        map.serialize_entry("x", &Matrix(&self.rows))?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for Assortment {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            x: Vec<Vec<Cell>>,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Cell {
            Int(u8),
            Bool(bool),
        }
        let raw = Raw::deserialize(de)?;
        let m = raw.x.first().map_or(0, Vec::len);
        let mut rows = Vec::with_capacity(raw.x.len());
        for row in raw.x {
            if row.len() != m {
                return Err(serde::de::Error::custom("assortment rows must have equal length"));
            }
            let mut out = Vec::with_capacity(row.len());
            for cell in row {
                out.push(match cell {
                    Cell::Int(0) => false,
                    Cell::Int(1) => true,
                    Cell::Int(v) => {
                        return Err(serde::de::Error::custom(format!(
                            "assortment entries must be 0 or 1, got {v}"
                        )))
                    }
                    Cell::Bool(b) => b,
                });
            }
            rows.push(out);
        }
        Ok(Assortment { rows })
    }
}

/// A realized response order: `order[t]` is the patient responding at step `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseOrder(pub Vec<usize>);

impl ResponseOrder {
    /// Patients in index order (the identity schedule).
    pub fn identity(n: usize) -> Self {
        ResponseOrder((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Position of each patient in the order (inverse permutation).
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.0.len()];
        for (t, &i) in self.0.iter().enumerate() {
            pos[i] = t;
        }
        pos
    }
}

/// Remaining provider capacity during a simulated (or enumerated) run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvailabilityState {
    remaining: Vec<u32>,
}

impl AvailabilityState {
    /// Fresh state with every provider at full capacity.
    pub fn new(capacities: &[u32]) -> Self {
        AvailabilityState {
            remaining: capacities.to_vec(),
        }
    }

    #[inline]
    pub fn available(&self, j: usize) -> bool {
        self.remaining[j] > 0
    }

    pub fn remaining(&self) -> &[u32] {
        &self.remaining
    }

    /// Consumes one slot of provider `j`.
    ///
    /// Panics if the provider is already exhausted; callers must only commit
    /// selections drawn from available providers.
    pub fn take(&mut self, j: usize) {
        assert!(self.remaining[j] > 0, "provider {j} is already at capacity");
        self.remaining[j] -= 1;
    }
}

/// What a single patient did when their turn came.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionOutcome {
    /// Selected (and permanently occupies one slot of) this provider.
    Matched(usize),
    /// Declined every available offer.
    Abstained,
}

impl SelectionOutcome {
    pub fn provider(&self) -> Option<usize> {
        match self {
            SelectionOutcome::Matched(j) => Some(*j),
            SelectionOutcome::Abstained => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Instance file format (JSON)
// ---------------------------------------------------------------------------
//
//   {
//     "n": 2, "m": 2,
//     "theta": [[0.3, 0.9], [0.5, 0.1]],
//     "capacities": [1, 1],
//     "choice": {"type": "uniform", "p": 0.5}
//   }
//
// "capacities" may be omitted (defaults to all ones); an optional "version"
// key must equal 1 when present; unknown keys are rejected.

#[derive(Deserialize)]
#[serde(deny_unknown_fields, bound = "T: DeserializeOwned")]
pub(crate) struct RawInstance<T> {
    #[serde(default)]
    version: Option<u32>,
    n: usize,
    m: usize,
    theta: Vec<Vec<T>>,
    #[serde(default)]
    capacities: Option<Vec<u32>>,
    choice: RawChoice<T>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, bound = "T: DeserializeOwned")]
pub(crate) struct RawChoice<T> {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    p: Option<T>,
    #[serde(default)]
    alpha: Option<T>,
    #[serde(default)]
    gamma: Option<T>,
}

impl<T: Scalar> TryFrom<RawChoice<T>> for ChoiceModelSpec<T> {
    type Error = InstanceError;

    fn try_from(raw: RawChoice<T>) -> Result<Self, InstanceError> {
        let need = |kind: &'static str, param: &'static str, v: Option<T>| {
            v.ok_or(InstanceError::MissingChoiceParam {
                kind: kind.to_string(),
                param,
            })
        };
        let reject = |kind: &'static str, param: &'static str, v: &Option<T>| {
            if v.is_some() {
                Err(InstanceError::UnexpectedChoiceParam { kind, param })
            } else {
                Ok(())
            }
        };
        let spec = match raw.kind.as_str() {
            "uniform" => {
                reject("uniform", "alpha", &raw.alpha)?;
                reject("uniform", "gamma", &raw.gamma)?;
                ChoiceModelSpec::Uniform {
                    p: need("uniform", "p", raw.p)?,
                }
            }
            "threshold" => {
                reject("threshold", "gamma", &raw.gamma)?;
                ChoiceModelSpec::Threshold {
                    p: need("threshold", "p", raw.p)?,
                    alpha: need("threshold", "alpha", raw.alpha)?,
                }
            }
            "mnl" => {
                reject("mnl", "p", &raw.p)?;
                reject("mnl", "alpha", &raw.alpha)?;
                ChoiceModelSpec::Mnl {
                    gamma: need("mnl", "gamma", raw.gamma)?,
                }
            }
            other => {
                return Err(InstanceError::UnknownChoiceKind {
                    kind: other.to_string(),
                })
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl<T: Scalar> TryFrom<RawInstance<T>> for Instance<T> {
    type Error = InstanceError;

    fn try_from(raw: RawInstance<T>) -> Result<Self, InstanceError> {
        if let Some(v) = raw.version {
            if v != INSTANCE_FORMAT_VERSION {
                return Err(InstanceError::UnsupportedVersion { found: v });
            }
        }
        let inst = Instance {
            n: raw.n,
            m: raw.m,
            theta: raw.theta,
            capacities: raw.capacities.unwrap_or_else(|| vec![1; raw.m]),
            choice: raw.choice.try_into()?,
        };
        validate_instance(&inst)?;
        Ok(inst)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Instance<T> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let raw = RawInstance::<T>::deserialize(de)?;
        Instance::try_from(raw).map_err(serde::de::Error::custom)
    }
}

impl<T: Scalar> Serialize for ChoiceModelSpec<T> {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut map = ser.serialize_map(None)?;
        map.serialize_entry("type", self.kind())?;
        match self {
            ChoiceModelSpec::Uniform { p } => map.serialize_entry("p", p)?,
            ChoiceModelSpec::Threshold { p, alpha } => {
                map.serialize_entry("p", p)?;
                map.serialize_entry("alpha", alpha)?;
            }
            ChoiceModelSpec::Mnl { gamma } => map.serialize_entry("gamma", gamma)?,
        }
        map.end()
    }
}

impl<T: Scalar> Serialize for Instance<T> {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut map = ser.serialize_map(Some(5))?;
        map.serialize_entry("n", &self.n)?;
        map.serialize_entry("m", &self.m)?;
        map.serialize_entry("theta", &self.theta)?;
        map.serialize_entry("capacities", &self.capacities)?;
        map.serialize_entry("choice", &self.choice)?;
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_inst() -> Instance<f64> {
        Instance::new(
            vec![vec![0.5, 0.6], vec![0.7, 0.2]],
            ChoiceModelSpec::Uniform { p: 0.5 },
        )
    }

    #[test]
    fn validate_accepts_well_formed_instance() {
        assert!(validate_instance(&uniform_inst()).is_ok());
    }

    #[test]
    fn validate_rejects_quality_outside_unit_interval() {
        let mut inst = uniform_inst();
        inst.theta[1][0] = 1.5;
        let err = validate_instance(&inst).unwrap_err();
        assert!(matches!(err, InstanceError::ThetaOutOfRange { i: 1, j: 0, .. }));
    }

    #[test]
    fn validate_rejects_zero_capacity() {
        let mut inst = uniform_inst();
        inst.capacities[1] = 0;
        assert!(matches!(
            validate_instance(&inst).unwrap_err(),
            InstanceError::BadCapacity { j: 1 }
        ));
    }

    #[test]
    fn validate_rejects_bad_choice_parameters() {
        let inst = uniform_inst().with_choice(ChoiceModelSpec::Uniform { p: 0.0 });
        assert!(matches!(
            validate_instance(&inst).unwrap_err(),
            InstanceError::BadChoiceParam { param: "p", .. }
        ));
        let inst = uniform_inst().with_choice(ChoiceModelSpec::Threshold { p: 0.5, alpha: 1.2 });
        assert!(matches!(
            validate_instance(&inst).unwrap_err(),
            InstanceError::BadChoiceParam { param: "alpha", .. }
        ));
    }

    #[test]
    fn instance_json_round_trips_bit_exactly() {
        let inst = uniform_inst();
        let text = serde_json::to_string(&inst).unwrap();
        let back: Instance<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(inst, back);
    }

    #[test]
    fn instance_json_rejects_unknown_keys() {
        let text = r#"{"n":1,"m":1,"theta":[[0.5]],"choice":{"type":"uniform","p":0.5},"bogus":3}"#;
        let err = serde_json::from_str::<Instance<f64>>(text).unwrap_err();
        assert!(err.to_string().contains("bogus"), "error was: {err}");
    }

    #[test]
    fn instance_json_rejects_unknown_choice_keys() {
        let text = r#"{"n":1,"m":1,"theta":[[0.5]],"choice":{"type":"uniform","p":0.5,"q":1}}"#;
        let err = serde_json::from_str::<Instance<f64>>(text).unwrap_err();
        assert!(err.to_string().contains('q'), "error was: {err}");
    }

    #[test]
    fn instance_json_reports_missing_theta_by_name() {
        let text = r#"{"n":1,"m":1,"choice":{"type":"uniform","p":0.5}}"#;
        let err = serde_json::from_str::<Instance<f64>>(text).unwrap_err();
        assert!(err.to_string().contains("theta"), "error was: {err}");
    }

    #[test]
    fn instance_json_rejects_future_version() {
        let text =
            r#"{"version":2,"n":1,"m":1,"theta":[[0.5]],"choice":{"type":"uniform","p":0.5}}"#;
        let err = serde_json::from_str::<Instance<f64>>(text).unwrap_err();
        assert!(err.to_string().contains("version 2"), "error was: {err}");
    }

    #[test]
    fn instance_json_requires_choice_params_by_model() {
        let text = r#"{"n":1,"m":1,"theta":[[0.5]],"choice":{"type":"threshold","p":0.5}}"#;
        let err = serde_json::from_str::<Instance<f64>>(text).unwrap_err();
        assert!(err.to_string().contains("alpha"), "error was: {err}");
        let text = r#"{"n":1,"m":1,"theta":[[0.5]],"choice":{"type":"mnl","p":0.5}}"#;
        let err = serde_json::from_str::<Instance<f64>>(text).unwrap_err();
        assert!(err.to_string().contains("does not apply"), "error was: {err}");
    }

    #[test]
    fn missing_capacities_default_to_ones() {
        let text = r#"{"n":2,"m":3,"theta":[[0.1,0.2,0.3],[0.4,0.5,0.6]],"choice":{"type":"mnl","gamma":0.25}}"#;
        let inst: Instance<f64> = serde_json::from_str(text).unwrap();
        assert_eq!(inst.capacities, vec![1, 1, 1]);
    }

    #[test]
    fn assortment_round_trips_as_zero_one_matrix() {
        let a = Assortment::from_rows(vec![vec![true, false], vec![false, true]]);
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(text, r#"{"x":[[1,0],[0,1]]}"#);
        let back: Assortment = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn response_order_positions_invert_the_order() {
        let order = ResponseOrder(vec![2, 0, 1]);
        assert_eq!(order.positions(), vec![1, 2, 0]);
    }

    #[test]
    fn availability_tracks_capacity() {
        let mut st = AvailabilityState::new(&[2, 1]);
        assert!(st.available(0) && st.available(1));
        st.take(0);
        st.take(1);
        assert!(st.available(0));
        assert!(!st.available(1));
    }
}
