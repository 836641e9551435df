//! Per-category cost profiles and the linear estimator.
//!
//! Profiles store nanojoules and nanoseconds, matching the magnitudes the
//! calibration produces. Storing scaled SI values instead would make
//! save/load lossy: multiplying by 1e-9 and back is not an f64 identity.
//! SI accessors derive joules/seconds on demand.

use crate::isa::Category;
use crate::simulator::CategoryCounts;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// How a profile entry got its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Override {
    /// Produced by calibration (or the built-in defaults).
    #[default]
    None,
    /// Edited by hand.
    Manual,
    /// Flagged by a calibration consistency check; needs review before the
    /// profile should be trusted.
    Pending,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryCost {
    pub t_ns: f64,
    pub e_nj: f64,
    pub overridden: Override,
}

impl CategoryCost {
    pub fn new(t_ns: f64, e_nj: f64) -> CategoryCost {
        CategoryCost {
            t_ns,
            e_nj,
            overridden: Override::None,
        }
    }

    pub fn time_s(&self) -> f64 {
        self.t_ns * 1e-9
    }

    pub fn energy_j(&self) -> f64 {
        self.e_nj * 1e-9
    }
}

#[derive(Debug, Clone, Error)]
pub enum ProfileError {
    #[error("profile JSON: {0}")]
    Json(String),
    #[error("profile lists unknown category `{0}`")]
    UnknownCategory(String),
    #[error("profile is missing category `{0}`")]
    MissingCategory(&'static str),
    #[error("profile lists category `{0}` more than once")]
    DuplicateCategory(String),
    #[error("category `{category}` has negative {field} ({value}) without a pending flag")]
    NegativeCost {
        category: &'static str,
        field: &'static str,
        value: f64,
    },
    #[error("reading profile: {0}")]
    Io(String),
}

/// A complete cost table: time and energy per instruction for every
/// category.
#[derive(Debug, Clone, PartialEq)]
pub struct CostProfile {
    pub platform: String,
    pub hardware_config: String,
    costs: [CategoryCost; Category::COUNT],
}

#[derive(Serialize, Deserialize)]
struct ProfileJson {
    platform: String,
    hardware_config: String,
    categories: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    name: String,
    t_ns: f64,
    #[serde(rename = "e_nJ")]
    e_nj: f64,
    #[serde(default)]
    overridden: Override,
}

impl CostProfile {
    /// Measured costs for the reference soft-core platform.
    pub fn builtin() -> CostProfile {
        use Category::*;
        let mut p = CostProfile {
            platform: "leon3".into(),
            hardware_config: "leon3-fpu".into(),
            costs: [CategoryCost::new(0.0, 0.0); Category::COUNT],
        };
        for (cat, t_ns, e_nj) in [
            (IntegerArithmetic, 45.0, 15.0),
            (Jump, 238.0, 76.0),
            (MemoryLoad, 700.0, 229.0),
            (MemoryStore, 376.0, 166.0),
            (Nop, 46.0, 13.0),
            (Other, 41.0, 13.0),
            (FpuArithmetic, 46.0, 14.0),
            (FpuDivide, 431.0, 431.0),
            (FpuSqrt, 612.0, 88.0),
        ] {
            p.costs[cat.index()] = CategoryCost::new(t_ns, e_nj);
        }
        p
    }

    pub fn get(&self, cat: Category) -> &CategoryCost {
        &self.costs[cat.index()]
    }

    pub fn set(&mut self, cat: Category, cost: CategoryCost) {
        self.costs[cat.index()] = cost;
    }

    /// True if every entry is non-negative and nothing is pending review.
    pub fn is_settled(&self) -> bool {
        self.costs
            .iter()
            .all(|c| c.t_ns >= 0.0 && c.e_nj >= 0.0 && c.overridden != Override::Pending)
    }

    pub fn pending_categories(&self) -> Vec<Category> {
        Category::ALL
            .iter()
            .copied()
            .filter(|&c| self.get(c).overridden == Override::Pending)
            .collect()
    }

    pub fn to_json(&self) -> String {
        let json = ProfileJson {
            platform: self.platform.clone(),
            hardware_config: self.hardware_config.clone(),
            categories: Category::ALL
                .iter()
                .map(|&cat| {
                    let c = self.get(cat);
                    EntryJson {
                        name: cat.name().into(),
                        t_ns: c.t_ns,
                        e_nj: c.e_nj,
                        overridden: c.overridden,
                    }
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&json).unwrap();
        s.push('\n');
        s
    }

    /// Parses a profile. Every category must appear exactly once. Negative
    /// values are accepted only on entries flagged `pending`, so a suspect
    /// calibration can be saved for review but never silently used.
    pub fn from_json(json: &str) -> Result<CostProfile, ProfileError> {
        let raw: ProfileJson =
            serde_json::from_str(json).map_err(|e| ProfileError::Json(e.to_string()))?;
        let mut costs = [None::<CategoryCost>; Category::COUNT];
        for entry in &raw.categories {
            let cat = Category::ALL
                .iter()
                .copied()
                .find(|c| c.name() == entry.name)
                .ok_or_else(|| ProfileError::UnknownCategory(entry.name.clone()))?;
            if costs[cat.index()].is_some() {
                return Err(ProfileError::DuplicateCategory(entry.name.clone()));
            }
            if entry.overridden != Override::Pending {
                for (field, value) in [("t_ns", entry.t_ns), ("e_nJ", entry.e_nj)] {
                    if value < 0.0 || !value.is_finite() {
                        return Err(ProfileError::NegativeCost {
                            category: cat.name(),
                            field,
                            value,
                        });
                    }
                }
            }
            costs[cat.index()] = Some(CategoryCost {
                t_ns: entry.t_ns,
                e_nj: entry.e_nj,
                overridden: entry.overridden,
            });
        }
        let mut table = [CategoryCost::new(0.0, 0.0); Category::COUNT];
        for (i, slot) in costs.iter().enumerate() {
            table[i] = slot.ok_or(ProfileError::MissingCategory(Category::ALL[i].name()))?;
        }
        Ok(CostProfile {
            platform: raw.platform,
            hardware_config: raw.hardware_config,
            costs: table,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ProfileError> {
        std::fs::write(path, self.to_json()).map_err(|e| ProfileError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<CostProfile, ProfileError> {
        let json = std::fs::read_to_string(path).map_err(|e| ProfileError::Io(e.to_string()))?;
        CostProfile::from_json(&json)
    }
}

/// One category's share of an estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryContribution {
    pub category: Category,
    pub count: u64,
    #[serde(rename = "energy_nJ")]
    pub energy_nj: f64,
    pub time_ns: f64,
}

/// Result of the linear model: totals plus the per-category breakdown.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(rename = "energy_nJ")]
    pub energy_nj: f64,
    pub time_ns: f64,
    /// Optional on input: totals alone are enough for error metrics.
    #[serde(default)]
    pub per_category: Vec<CategoryContribution>,
}

impl Estimate {
    pub fn energy_j(&self) -> f64 {
        self.energy_nj * 1e-9
    }

    pub fn time_s(&self) -> f64 {
        self.time_ns * 1e-9
    }
}

/// Energy and time as the count-weighted sum of per-category costs. The sum
/// runs in canonical category order, so identical inputs give bit-identical
/// outputs. The caller is responsible for passing a settled profile; pending
/// or negative entries are used as stored.
pub fn estimate(counts: &CategoryCounts, profile: &CostProfile) -> Estimate {
    let mut per_category = Vec::with_capacity(Category::COUNT);
    let mut energy_nj = 0.0;
    let mut time_ns = 0.0;
    for (cat, n) in counts.iter() {
        let cost = profile.get(cat);
        let e = cost.e_nj * n as f64;
        let t = cost.t_ns * n as f64;
        energy_nj += e;
        time_ns += t;
        per_category.push(CategoryContribution {
            category: cat,
            count: n,
            energy_nj: e,
            time_ns: t,
        });
    }
    Estimate {
        energy_nj,
        time_ns,
        per_category,
    }
}
