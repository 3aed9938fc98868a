//! Patient choice behavior: exact selection distributions and sampling.
//!
//! Both the simulator and the exact expectation oracle go through
//! [`selection_probabilities`], so sampled frequencies and enumerated
//! expectations agree by construction. Sampling consumes exactly one uniform
//! draw per response event, which keeps RNG streams aligned across policies
//! that are replayed on the same trial seeds.

use rand::Rng;

use crate::model::{ChoiceModelSpec, SelectionOutcome};
use crate::scalar::{as_f64, Scalar};

/// Exact outcome distribution for one patient facing one masked menu.
///
/// `provider[j]` is the probability of selecting provider `j` (zero wherever
/// the mask is false), and `abstain` is the remaining mass; together they sum
/// to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDistribution<T> {
    pub provider: Vec<T>,
    pub abstain: T,
}

impl<T: Scalar> SelectionDistribution<T> {
    /// The always-abstain distribution over `m` providers.
    pub fn abstain_surely(m: usize) -> Self {
        SelectionDistribution {
            provider: vec![T::zero(); m],
            abstain: T::one(),
        }
    }

    /// Providers with positive selection probability.
    pub fn support(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.provider
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, p)| p > T::zero())
    }
}

/// Index of the best masked quality, lowest index on ties; `None` if the mask
/// is empty.
fn masked_argmax<T: Scalar>(theta_row: &[T], mask: &[bool]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (j, (&v, &ok)) in theta_row.iter().zip(mask).enumerate() {
        if ok && best.is_none_or(|(_, bv)| v > bv) {
            best = Some((j, v));
        }
    }
    best.map(|(j, _)| j)
}

/// Exact selection distribution of one patient over a masked menu.
///
/// `mask[j]` must already combine "offered" with "still available"; masked-out
/// providers get probability zero. An all-false mask yields certain
/// abstention under every model.
pub fn selection_probabilities<T: Scalar>(
    spec: &ChoiceModelSpec<T>,
    theta_row: &[T],
    mask: &[bool],
) -> SelectionDistribution<T> {
    debug_assert_eq!(theta_row.len(), mask.len(), "mask must cover every provider");
    let m = theta_row.len();
    match *spec {
        ChoiceModelSpec::Uniform { p } => match masked_argmax(theta_row, mask) {
            Some(j) => {
                let mut provider = vec![T::zero(); m];
                provider[j] = p;
                SelectionDistribution {
                    provider,
                    abstain: T::one() - p,
                }
            }
            None => SelectionDistribution::abstain_surely(m),
        },
        ChoiceModelSpec::Threshold { p, alpha } => match masked_argmax(theta_row, mask) {
            Some(j) if theta_row[j] >= alpha => {
                let mut provider = vec![T::zero(); m];
                provider[j] = p;
                SelectionDistribution {
                    provider,
                    abstain: T::one() - p,
                }
            }
            _ => SelectionDistribution::abstain_surely(m),
        },
        ChoiceModelSpec::Mnl { gamma } => {
            let mut provider = vec![T::zero(); m];
            let mut denom = gamma.exp();
            for (j, (&v, &ok)) in theta_row.iter().zip(mask).enumerate() {
                if ok {
                    let w = v.exp();
                    provider[j] = w;
                    denom += w;
                }
            }
            for w in provider.iter_mut() {
                *w /= denom;
            }
            SelectionDistribution {
                provider,
                abstain: gamma.exp() / denom,
            }
        }
    }
}

/// Samples one response event from the choice model.
///
/// Consumes exactly one uniform draw regardless of model and menu: the draw is
/// inverted through the selection distribution with providers in index order
/// followed by abstention.
pub fn sample_selection<T: Scalar, R: Rng + ?Sized>(
    spec: &ChoiceModelSpec<T>,
    theta_row: &[T],
    mask: &[bool],
    rng: &mut R,
) -> SelectionOutcome {
    let u: f64 = rng.gen::<f64>();
    match *spec {
        // Single-support models: mass p on the masked argmax.
        ChoiceModelSpec::Uniform { p } => match masked_argmax(theta_row, mask) {
            Some(j) if u < as_f64(p) => SelectionOutcome::Matched(j),
            _ => SelectionOutcome::Abstained,
        },
        ChoiceModelSpec::Threshold { p, alpha } => match masked_argmax(theta_row, mask) {
            Some(j) if theta_row[j] >= alpha && u < as_f64(p) => SelectionOutcome::Matched(j),
            _ => SelectionOutcome::Abstained,
        },
        ChoiceModelSpec::Mnl { .. } => {
            let dist = selection_probabilities(spec, theta_row, mask);
            let mut acc = 0.0;
            for (j, pj) in dist.support() {
                acc += as_f64(pj);
                if u < acc {
                    return SelectionOutcome::Matched(j);
                }
            }
            SelectionOutcome::Abstained
        }
    }
}
