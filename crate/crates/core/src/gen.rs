//! Instance generators and instance file I/O.
//!
//! Synthetic quality matrices come in two flavors (i.i.d. uniform, and
//! per-provider normal with controllable heterogeneity); the semi-synthetic
//! generator builds a geographic instance — patients and providers placed on
//! region centroids, quality decaying with travel distance and boosted by
//! comorbidity-specialty alignment. Misspecification helpers produce paired
//! true/observed instances for robustness studies.

use std::fs;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::Normal;
use serde::de::DeserializeOwned;
use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    validate_instance, ChoiceModelSpec, Instance, InstanceError, RawChoice,
    INSTANCE_FORMAT_VERSION,
};
use crate::scalar::{as_f64, real, Scalar};

/// Earth radius in miles for great-circle distances.
const EARTH_RADIUS_MILES: f64 = 3958.8;

/// Distances shorter than this (miles) are floored before entering the
/// quality formula, so coincident centroids don't blow up the 1/d term.
pub const MIN_DISTANCE_MILES: f64 = 0.1;

/// An i.i.d. U(0,1) quality matrix, drawn row-major.
pub fn gen_uniform_theta<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    m: usize,
    rng: &mut R,
) -> Vec<Vec<T>> {
    (0..n)
        .map(|_| (0..m).map(|_| real::<T>(rng.gen::<f64>())).collect())
        .collect()
}

/// Per-provider normal qualities: each provider draws a mean level
/// `mu_j ~ U(0,1)`, then `theta_ij ~ Normal(mu_j, s^2)` clipped to `[0,1]`.
/// `s` controls patient heterogeneity; `s = 0` makes every column constant.
pub fn gen_normal_theta<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    m: usize,
    s: f64,
    rng: &mut R,
) -> Vec<Vec<T>> {
    assert!(s >= 0.0, "spread must be nonnegative");
    let mus: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    if s == 0.0 {
        return (0..n)
            .map(|_| mus.iter().map(|&mu| real::<T>(mu)).collect())
            .collect();
    }
    let noise = Normal::new(0.0, s).expect("finite spread");
    (0..n)
        .map(|_| {
            mus.iter()
                .map(|&mu| real::<T>((mu + noise.sample(rng)).clamp(0.0, 1.0)))
                .collect()
        })
        .collect()
}

/// A named location patients and providers can be drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    /// Relative share of patients drawn from this region.
    pub population_weight: f64,
    /// Relative share of providers placed in this region.
    pub provider_weight: f64,
}

/// The bundled synthetic region table: a few provider-dense "metro" centroids
/// and many provider-sparse "town" ones, spread so travel distances range
/// from a couple of miles to about a hundred.
pub fn default_regions() -> Vec<Region> {
    serde_json::from_str(include_str!("../data/regions.json"))
        .expect("bundled region table parses")
}

fn default_comorbidity_rate() -> f64 {
    0.3
}

fn default_specialty_rate() -> f64 {
    0.5
}

fn default_delta() -> f64 {
    0.5
}

fn default_alpha_floor() -> f64 {
    0.5
}

fn default_d_bar() -> f64 {
    20.2
}

fn default_p() -> f64 {
    0.75
}

/// Configuration of the geographic generator.
///
/// Quality combines a travel-distance term against the tolerance `d_bar`
/// with a comorbidity-specialty alignment bonus, mixed by `delta` on top of
/// the floor `alpha_floor`; patients respond under a threshold model with
/// acceptance probability `p` and threshold `alpha_floor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoConfig {
    pub n_patients: usize,
    pub n_providers: usize,
    #[serde(default = "default_regions")]
    pub regions: Vec<Region>,
    /// Probability a patient carries the comorbidity (ignored when an
    /// explicit `comorbidities` table is given).
    #[serde(default = "default_comorbidity_rate")]
    pub comorbidity_rate: f64,
    /// Probability a provider covers the specialty (ignored when an explicit
    /// `specialties` table is given).
    #[serde(default = "default_specialty_rate")]
    pub specialty_rate: f64,
    /// Explicit per-patient comorbidity flags; with `specialties`, alignment
    /// becomes deterministic instead of sampled per pair.
    #[serde(default)]
    pub comorbidities: Option<Vec<bool>>,
    /// Explicit per-provider specialty flags.
    #[serde(default)]
    pub specialties: Option<Vec<bool>>,
    /// Weight of the alignment bonus against the distance term.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Quality floor; also the threshold of the choice model.
    #[serde(default = "default_alpha_floor")]
    pub alpha_floor: f64,
    /// Travel tolerance in miles: at this distance (unaligned) quality is
    /// exactly the floor.
    #[serde(default = "default_d_bar")]
    pub d_bar: f64,
    /// Acceptance probability of the threshold choice model.
    #[serde(default = "default_p")]
    pub p: f64,
}

/// A generated geographic instance: the plain instance plus everything
/// needed to audit it (locations, region tags, alignment matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct GeoInstance<T> {
    pub instance: Instance<T>,
    /// Region id each patient was drawn from.
    pub patient_regions: Vec<String>,
    pub provider_regions: Vec<String>,
    /// `(lat, lon)` per patient (the sampled region's centroid).
    pub patient_coords: Vec<(f64, f64)>,
    pub provider_coords: Vec<(f64, f64)>,
    /// Comorbidity-specialty alignment per pair.
    pub beta: Vec<Vec<bool>>,
}

/// Generator input problems.
#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("region list is empty")]
    EmptyRegions,
    #[error("no region has a positive {role} weight")]
    NoPositiveWeight { role: &'static str },
    #[error("{param} = {value} is invalid: expected {expected}")]
    BadParam {
        param: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("{what} has {got} entries, expected {want}")]
    TableSize {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("{op} does not apply to the {kind} choice model")]
    UnsupportedChoice {
        op: &'static str,
        kind: &'static str,
    },
}

/// Great-circle distance in miles between two `(lat, lon)` points.
pub fn haversine_miles(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_MILES * h.sqrt().asin()
}

/// Quality of a pair at floored distance `d` miles: the floor, plus the
/// mixed alignment/proximity surplus, clipped into [0,1]. Proximity is
/// positive inside the tolerance (`d < d_bar`) and negative beyond it.
fn geo_quality(alpha: f64, delta: f64, aligned: bool, d_bar: f64, d: f64) -> f64 {
    let beta = if aligned { 1.0 } else { 0.0 };
    let proximity = d_bar / d - 1.0;
    (alpha + (1.0 - alpha) * (delta * beta + (1.0 - delta) * proximity)).clamp(0.0, 1.0)
}

fn validate_geo_config(cfg: &GeoConfig) -> Result<(), GenError> {
    if cfg.regions.is_empty() {
        return Err(GenError::EmptyRegions);
    }
    let population: Vec<f64> = cfg.regions.iter().map(|r| r.population_weight).collect();
    let providers: Vec<f64> = cfg.regions.iter().map(|r| r.provider_weight).collect();
    for (role, weights) in [("population", &population), ("provider", &providers)] {
        for &w in weights {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(GenError::BadParam {
                    param: "region weight",
                    value: w,
                    expected: "finite and nonnegative",
                });
            }
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(GenError::NoPositiveWeight { role });
        }
    }
    let unit = |param: &'static str, v: f64| -> Result<(), GenError> {
        if (0.0..=1.0).contains(&v) {
            Ok(())
        } else {
            Err(GenError::BadParam { param, value: v, expected: "within [0, 1]" })
        }
    };
    unit("comorbidity_rate", cfg.comorbidity_rate)?;
    unit("specialty_rate", cfg.specialty_rate)?;
    unit("delta", cfg.delta)?;
    unit("alpha_floor", cfg.alpha_floor)?;
    if !(cfg.d_bar > 0.0 && cfg.d_bar.is_finite()) {
        return Err(GenError::BadParam { param: "d_bar", value: cfg.d_bar, expected: "positive" });
    }
    if !(cfg.p > 0.0 && cfg.p <= 1.0) {
        return Err(GenError::BadParam { param: "p", value: cfg.p, expected: "within (0, 1]" });
    }
    for (what, table, want) in [
        ("comorbidities", &cfg.comorbidities, cfg.n_patients),
        ("specialties", &cfg.specialties, cfg.n_providers),
    ] {
        if let Some(t) = table {
            if t.len() != want {
                return Err(GenError::TableSize { what, got: t.len(), want });
            }
        }
    }
    Ok(())
}

/// Generates a geographic instance.
///
/// Draw order (fixed, so a seed fully determines the result): patient
/// regions, then provider regions, then — without explicit
/// comorbidity/specialty tables — one alignment coin per pair, row-major,
/// with success probability `comorbidity_rate * specialty_rate`.
pub fn gen_geo_instance<T: Scalar, R: Rng + ?Sized>(
    cfg: &GeoConfig,
    rng: &mut R,
) -> Result<GeoInstance<T>, GenError> {
    validate_geo_config(cfg)?;
    let place = |weights: Vec<f64>, count: usize, rng: &mut R| {
        let dist = WeightedIndex::new(&weights).expect("validated weights");
        (0..count).map(|_| dist.sample(rng)).collect::<Vec<usize>>()
    };
    let patient_region_idx = place(
        cfg.regions.iter().map(|r| r.population_weight).collect(),
        cfg.n_patients,
        rng,
    );
    let provider_region_idx = place(
        cfg.regions.iter().map(|r| r.provider_weight).collect(),
        cfg.n_providers,
        rng,
    );

    let beta: Vec<Vec<bool>> = match (&cfg.comorbidities, &cfg.specialties) {
        (Some(com), Some(spec)) => com
            .iter()
            .map(|&c| spec.iter().map(|&s| c && s).collect())
            .collect(),
        _ => {
            let rate = cfg.comorbidity_rate * cfg.specialty_rate;
            (0..cfg.n_patients)
                .map(|_| (0..cfg.n_providers).map(|_| rng.gen::<f64>() < rate).collect())
                .collect()
        }
    };

    let coords = |idx: &[usize]| -> Vec<(f64, f64)> {
        idx.iter().map(|&r| (cfg.regions[r].lat, cfg.regions[r].lon)).collect()
    };
    let patient_coords = coords(&patient_region_idx);
    let provider_coords = coords(&provider_region_idx);

    let theta: Vec<Vec<T>> = (0..cfg.n_patients)
        .map(|i| {
            (0..cfg.n_providers)
                .map(|j| {
                    let d = haversine_miles(patient_coords[i], provider_coords[j])
                        .max(MIN_DISTANCE_MILES);
                    real::<T>(geo_quality(cfg.alpha_floor, cfg.delta, beta[i][j], cfg.d_bar, d))
                })
                .collect()
        })
        .collect();

    let instance = Instance::new(
        theta,
        ChoiceModelSpec::Threshold { p: real::<T>(cfg.p), alpha: real::<T>(cfg.alpha_floor) },
    );
    let tag = |idx: &[usize]| idx.iter().map(|&r| cfg.regions[r].id.clone()).collect();
    Ok(GeoInstance {
        instance,
        patient_regions: tag(&patient_region_idx),
        provider_regions: tag(&provider_region_idx),
        patient_coords,
        provider_coords,
        beta,
    })
}

/// Copy of an instance whose acceptance probability is replaced by the
/// (mis)observed `p_hat`: policies plan with the copy while trials run on
/// the original. Fails for the logit model, which has no such parameter.
pub fn perturb_p<T: Scalar>(inst: &Instance<T>, p_hat: T) -> Result<Instance<T>, GenError> {
    if !(p_hat > T::zero() && p_hat <= T::one()) {
        return Err(GenError::BadParam {
            param: "p_hat",
            value: as_f64(p_hat),
            expected: "within (0, 1]",
        });
    }
    let choice = match inst.choice {
        ChoiceModelSpec::Uniform { .. } => ChoiceModelSpec::Uniform { p: p_hat },
        ChoiceModelSpec::Threshold { alpha, .. } => ChoiceModelSpec::Threshold { p: p_hat, alpha },
        ChoiceModelSpec::Mnl { .. } => {
            return Err(GenError::UnsupportedChoice { op: "acceptance misspecification", kind: "mnl" })
        }
    };
    Ok(inst.clone().with_choice(choice))
}

/// Pairs an instance with a noisy observation of it: the returned instances
/// are (true, observed), where observed qualities add `Normal(0, s^2)` noise
/// (drawn row-major) and are clipped back into `[0,1]`. `s = 0` returns an
/// identical copy.
pub fn perturb_theta<T: Scalar, R: Rng + ?Sized>(
    inst: &Instance<T>,
    s: f64,
    rng: &mut R,
) -> (Instance<T>, Instance<T>) {
    assert!(s >= 0.0, "noise scale must be nonnegative");
    if s == 0.0 {
        return (inst.clone(), inst.clone());
    }
    let noise = Normal::new(0.0, s).expect("finite noise scale");
    let observed_theta: Vec<Vec<T>> = inst
        .theta
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| real::<T>((as_f64(v) + noise.sample(rng)).clamp(0.0, 1.0)))
                .collect()
        })
        .collect();
    let mut observed = inst.clone();
    observed.theta = observed_theta;
    (inst.clone(), observed)
}

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------
//
// Plain instances use the schema documented in the model module. Geographic
// instances extend it with three keys:
//
//   "coords":  {"patients": [[lat, lon], ...], "providers": [[lat, lon], ...]}
//   "regions": {"patients": ["metro-1", ...], "providers": [...]}
//   "beta":    [[0, 1, ...], ...]
//
// A loader sniffs for "beta" to decide which schema applies.

/// Instance file problems, with the offending path attached.
#[derive(Debug, Error)]
pub enum InstanceFileError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
}

/// Either flavor of instance file.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedInstance<T> {
    Plain(Instance<T>),
    Geo(GeoInstance<T>),
}

impl<T: Scalar> LoadedInstance<T> {
    /// The plain instance either way.
    pub fn instance(&self) -> &Instance<T> {
        match self {
            LoadedInstance::Plain(inst) => inst,
            LoadedInstance::Geo(geo) => &geo.instance,
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> InstanceFileError {
    InstanceFileError::Io { path: path.display().to_string(), source }
}

fn parse_err(path: &Path, source: serde_json::Error) -> InstanceFileError {
    InstanceFileError::Parse { path: path.display().to_string(), source }
}

/// Writes a plain instance as pretty-printed JSON.
pub fn save_instance<T: Scalar>(path: &Path, inst: &Instance<T>) -> Result<(), InstanceFileError> {
    let text = serde_json::to_string_pretty(inst).expect("instances serialize");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Writes a geographic instance (plain schema plus coords/regions/beta).
pub fn save_geo_instance<T: Scalar>(
    path: &Path,
    geo: &GeoInstance<T>,
) -> Result<(), InstanceFileError> {
    let text = serde_json::to_string_pretty(geo).expect("instances serialize");
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Loads either instance flavor, sniffing the schema by the "beta" key.
/// Parse failures carry serde's line/column diagnostics plus the path.
pub fn load_instance<T: Scalar>(path: &Path) -> Result<LoadedInstance<T>, InstanceFileError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let probe: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    if probe.get("beta").is_some() {
        let geo = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
        Ok(LoadedInstance::Geo(geo))
    } else {
        let inst = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
        Ok(LoadedInstance::Plain(inst))
    }
}

impl<T: Scalar> Serialize for GeoInstance<T> {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        // Two parallel lists with fixed key order keep the output stable.
        struct Pair<'a, V: Serialize> {
            patients: &'a [V],
            providers: &'a [V],
        }
        impl<V: Serialize> Serialize for Pair<'_, V> {
            fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
                let mut map = ser.serialize_map(Some(2))?;
                map.serialize_entry("patients", self.patients)?;
                map.serialize_entry("providers", self.providers)?;
                map.end()
            }
        }
        let beta_ints: Vec<Vec<u8>> = self
            .beta
            .iter()
            .map(|row| row.iter().map(|&b| u8::from(b)).collect())
            .collect();
        let mut st = ser.serialize_struct("GeoInstance", 8)?;
        st.serialize_field("n", &self.instance.n)?;
        st.serialize_field("m", &self.instance.m)?;
        st.serialize_field("theta", &self.instance.theta)?;
        st.serialize_field("capacities", &self.instance.capacities)?;
        st.serialize_field("choice", &self.instance.choice)?;
        st.serialize_field(
            "coords",
            &Pair { patients: &self.patient_coords, providers: &self.provider_coords },
        )?;
        st.serialize_field(
            "regions",
            &Pair { patients: &self.patient_regions, providers: &self.provider_regions },
        )?;
        st.serialize_field("beta", &beta_ints)?;
        st.end()
    }
}

impl<'de, T: Scalar> Deserialize<'de> for GeoInstance<T> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields, bound = "T: DeserializeOwned")]
        struct RawGeo<T> {
            #[serde(default)]
            version: Option<u32>,
            n: usize,
            m: usize,
            theta: Vec<Vec<T>>,
            #[serde(default)]
            capacities: Option<Vec<u32>>,
            choice: RawChoice<T>,
            coords: RawPair<(f64, f64)>,
            regions: RawPair<String>,
            beta: Vec<Vec<u8>>,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawPair<V> {
            patients: Vec<V>,
            providers: Vec<V>,
        }

        let raw = RawGeo::<T>::deserialize(de)?;
        if let Some(v) = raw.version {
            if v != INSTANCE_FORMAT_VERSION {
                return Err(serde::de::Error::custom(InstanceError::UnsupportedVersion {
                    found: v,
                }));
            }
        }
        let instance = Instance {
            n: raw.n,
            m: raw.m,
            theta: raw.theta,
            capacities: raw.capacities.unwrap_or_else(|| vec![1; raw.m]),
            choice: raw
                .choice
                .try_into()
                .map_err(serde::de::Error::custom)?,
        };
        validate_instance(&instance).map_err(serde::de::Error::custom)?;

        let check = |what: &str, got: usize, want: usize| -> Result<(), D::Error> {
            if got == want {
                Ok(())
            } else {
                Err(serde::de::Error::custom(format!(
                    "{what} has {got} entries, expected {want}"
                )))
            }
        };
        check("coords.patients", raw.coords.patients.len(), instance.n)?;
        check("coords.providers", raw.coords.providers.len(), instance.m)?;
        check("regions.patients", raw.regions.patients.len(), instance.n)?;
        check("regions.providers", raw.regions.providers.len(), instance.m)?;
        check("beta", raw.beta.len(), instance.n)?;
        let mut beta = Vec::with_capacity(raw.beta.len());
        for row in &raw.beta {
            check("beta row", row.len(), instance.m)?;
            let mut out = Vec::with_capacity(row.len());
            for &cell in row {
                if cell > 1 {
                    return Err(serde::de::Error::custom(format!(
                        "beta entries must be 0 or 1, got {cell}"
                    )));
                }
                out.push(cell == 1);
            }
            beta.push(out);
        }
        Ok(GeoInstance {
            instance,
            patient_regions: raw.regions.patients,
            provider_regions: raw.regions.providers,
            patient_coords: raw.coords.patients,
            provider_coords: raw.coords.providers,
            beta,
        })
    }
}
