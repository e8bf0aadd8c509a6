//! Missing-value strategies. Each one is a dataset transform fitted on the
//! training set plus a routing mode for splits on missing values.

mod dbi;
mod surrogate;
mod transform;

use std::fmt;
use std::str::FromStr;

pub use dbi::{dbi_predict, dbi_route_fit};
pub use surrogate::{build_surrogates, Surrogate};
pub use transform::{
    best_transform, pvi_transform, sc_transform, svi_transform, FittedTransform, PviModel,
    MISSING_CATEGORY,
};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::policy::AvailabilityPolicy;
use crate::tree::{FitOptions, Routing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyTag {
    Dbi,
    Svi,
    Pvi,
    Sc,
    Surrogate,
    Best,
}

impl StrategyTag {
    /// Report order.
    pub const ALL: [StrategyTag; 6] = [
        StrategyTag::Dbi,
        StrategyTag::Svi,
        StrategyTag::Pvi,
        StrategyTag::Sc,
        StrategyTag::Surrogate,
        StrategyTag::Best,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyTag::Dbi => "dbi",
            StrategyTag::Svi => "svi",
            StrategyTag::Pvi => "pvi",
            StrategyTag::Sc => "sc",
            StrategyTag::Surrogate => "surrogate",
            StrategyTag::Best => "best",
        }
    }

    /// Upper-case label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            StrategyTag::Dbi => "DBI",
            StrategyTag::Svi => "SVI",
            StrategyTag::Pvi => "PVI",
            StrategyTag::Sc => "SC",
            StrategyTag::Surrogate => "Surrogate",
            StrategyTag::Best => "BEST",
        }
    }
}

impl fmt::Display for StrategyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyTag::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub tag: StrategyTag,
    pub pvi_iterations: usize,
    pub max_surrogates: usize,
}

/// Training data after a strategy's transform, with the policy to fit it
/// under and the transform to replay on new data.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub data: Dataset,
    pub policy: AvailabilityPolicy,
    pub transform: FittedTransform,
}

impl Strategy {
    pub fn new(tag: StrategyTag) -> Self {
        Strategy {
            tag,
            pvi_iterations: 5,
            max_surrogates: 5,
        }
    }

    pub fn routing(&self) -> Routing {
        match self.tag {
            StrategyTag::Dbi => Routing::Distribute,
            StrategyTag::Surrogate => Routing::Surrogate {
                max: self.max_surrogates,
            },
            _ => Routing::Exclude,
        }
    }

    /// Tree options for this strategy with the given growth parameters.
    pub fn fit_options(&self, base: &FitOptions) -> FitOptions {
        FitOptions {
            routing: self.routing(),
            strategy: self.tag,
            ..base.clone()
        }
    }

    /// Fits the strategy's transform on `train`.
    ///
    /// Only BEST honours `user_policy`; the other strategies split freely on
    /// every predictor.
    pub fn prepare(&self, train: &Dataset, user_policy: &AvailabilityPolicy) -> Result<Prepared> {
        let (data, transform) = match self.tag {
            StrategyTag::Dbi | StrategyTag::Surrogate => (train.clone(), FittedTransform::Identity),
            StrategyTag::Svi => svi_transform(train)?,
            StrategyTag::Pvi => pvi_transform(train, self.pvi_iterations)?,
            StrategyTag::Sc => sc_transform(train)?,
            StrategyTag::Best => {
                let (data, policy, transform) = best_transform(train, user_policy)?;
                return Ok(Prepared {
                    data,
                    policy,
                    transform,
                });
            }
        };
        Ok(Prepared {
            policy: AvailabilityPolicy::permissive(data.schema()),
            data,
            transform,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for t in StrategyTag::ALL {
            assert_eq!(t.as_str().parse::<StrategyTag>().unwrap(), t);
        }
        assert!("mia".parse::<StrategyTag>().is_err());
    }

    #[test]
    fn routing_per_tag() {
        assert_eq!(Strategy::new(StrategyTag::Dbi).routing(), Routing::Distribute);
        assert_eq!(
            Strategy::new(StrategyTag::Surrogate).routing(),
            Routing::Surrogate { max: 5 }
        );
        assert_eq!(Strategy::new(StrategyTag::Best).routing(), Routing::Exclude);
    }
}
