//! JSON configuration files.
//!
//! ```json
//! {
//!   "K": 3,
//!   "groups": [{"size": 1, "r": 2}, {"size": 1, "r": 1}],
//!   "popularity": ["153/200", 0.235],
//!   "strategy": "beta"
//! }
//! ```
//!
//! `popularity` lists one probability per file, files numbered group by
//! group; it defaults to uniform. Numbers may be JSON numbers (read exactly
//! as written) or strings such as `"153/200"`. For `"beta"` each `r` is the
//! integer replication of its group and the values must not increase; for
//! `"alpha"` it is the group's replication degree, possibly fractional.

use std::path::Path;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::combinatorics::RVector;
use crate::error::{Error, Result};
use crate::exact::{exact_to_frac, ExactNumber, Frac};
use crate::placement::{
    place_alpha, place_beta, CacheExport, CacheState, Layout, PlacementConfig, SharedPlacement,
};
use crate::rates::Placed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementStrategy {
    #[default]
    Beta,
    Alpha,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub size: u32,
    pub r: ExactNumber,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(rename = "K")]
    pub users: u32,
    pub groups: Vec<GroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub popularity: Option<Vec<ExactNumber>>,
    #[serde(default)]
    pub strategy: PlacementStrategy,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)
            .map_err(|e| Error::validation(format!("invalid config: {e}")))?;
        cfg.layout()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn group_sizes(&self) -> Vec<u32> {
        self.groups.iter().map(|g| g.size).collect()
    }

    pub fn layout(&self) -> Result<Layout> {
        let sizes = self.group_sizes();
        match &self.popularity {
            None => Layout::uniform(self.users, &sizes),
            Some(p) => Layout::new(self.users, &sizes, p.iter().map(|x| x.0.clone()).collect()),
        }
    }

    /// Integer r-vector for the nonuniform placement.
    pub fn r_vector(&self) -> Result<RVector> {
        let r = self
            .groups
            .iter()
            .map(|g| {
                g.r.is_integer()
                    .then(|| g.r.0.to_integer().to_u32())
                    .flatten()
                    .ok_or_else(|| {
                        Error::validation(format!("r = {} is not a non-negative integer", g.r))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        RVector::new(r)
    }

    pub fn placement_config(&self) -> Result<PlacementConfig> {
        PlacementConfig::new(self.layout()?, self.r_vector()?)
    }

    /// Per-group replication degrees for the grouping baseline.
    pub fn alpha_split(&self) -> Result<Vec<Frac>> {
        self.groups.iter().map(|g| exact_to_frac(&g.r.0)).collect()
    }

    /// Cache size per user in files, `sum_l N_l r_l / K`.
    pub fn memory(&self) -> Result<Frac> {
        let k = i64::from(self.users);
        let mut m = Frac::from_integer(0);
        for (g, t) in self.groups.iter().zip(self.alpha_split()?) {
            m += t * Frac::new(i64::from(g.size), k);
        }
        Ok(m)
    }
}

/// Cache contents built from a config.
#[derive(Clone, Debug, PartialEq)]
pub enum Placement {
    Beta(CacheState),
    Alpha(SharedPlacement),
}

impl Placement {
    pub fn placed(&self) -> &dyn Placed {
        match self {
            Placement::Beta(c) => c,
            Placement::Alpha(s) => s,
        }
    }

    /// JSON view of the caches; alpha placements list one entry per part.
    pub fn export(&self) -> PlacementExport {
        match self {
            Placement::Beta(c) => PlacementExport::Beta(c.export()),
            Placement::Alpha(s) => PlacementExport::Alpha {
                parts: s
                    .parts()
                    .iter()
                    .map(|p| PartExport {
                        group: p.group,
                        weight: p.weight,
                        replication: p.replication,
                        cache: p.cache.export(),
                    })
                    .collect(),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum PlacementExport {
    Beta(CacheExport),
    Alpha { parts: Vec<PartExport> },
}

#[derive(Clone, Debug, Serialize)]
pub struct PartExport {
    pub group: usize,
    #[serde(serialize_with = "crate::rates::serialize_frac")]
    pub weight: Frac,
    pub replication: u32,
    pub cache: CacheExport,
}

impl Config {
    pub fn place(&self) -> Result<Placement> {
        Ok(match self.strategy {
            PlacementStrategy::Beta => Placement::Beta(place_beta(&self.placement_config()?)?),
            PlacementStrategy::Alpha => {
                Placement::Alpha(place_alpha(&self.layout()?, &self.alpha_split()?)?)
            }
        })
    }
}
