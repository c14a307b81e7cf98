//! Run configuration: everything a command needs, serializable so that a
//! run can be repeated exactly from its JSON.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use hamcap::capacity::{self, HamiltonianFamily, LevelSet};
use hamcap::dynamics::MIN_STEPS;
use hamcap::geometry::{Chart, HomotopyClass};
use hamcap::hamiltonian::{Hamiltonian, Preset, TrigTerm};
use hamcap::orbits::SearchConfig;

/// Which member of the squeezing pair a command works with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMember {
    H0,
    H1,
}

/// Build the squeezing pair of the configured Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub r: i64,
    #[serde(rename = "R")]
    pub big_r: f64,
    #[serde(default)]
    pub tau: Option<f64>,
    pub search: PairMember,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// `X = {p = 0}`, `Y = {p = R}` on the unit annulus.
    Annulus {
        r: i64,
        #[serde(rename = "R")]
        big_r: f64,
    },
    /// `X = {p = 0}`, `Y = ∅`.
    AnnulusBps {
        r: i64,
        #[serde(rename = "R")]
        big_r: f64,
    },
    Lagrangian { w: Vec<f64>, alpha: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySpec {
    pub family: FamilySpec,
    pub bracket: (f64, f64),
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub chart: Chart,
    pub preset: Preset,
    pub class: Vec<i64>,
    pub grid: usize,
    pub steps: usize,
    pub tol: f64,
    /// Tie-breaking seed for the orbit search.
    pub seed: u64,
    #[serde(default)]
    pub p_range: Option<(f64, f64)>,
    #[serde(default)]
    pub pair: Option<PairSpec>,
    #[serde(default)]
    pub capacity: Option<CapacitySpec>,
    /// Radius `R` of `Y = {|p| = R}`: report the round-torus hypotheses
    /// alongside the orbit search (measured, not asserted).
    #[serde(default)]
    pub round_torus: Option<f64>,
    /// The orbit search is expected to come back empty.
    #[serde(default)]
    pub expect_empty: bool,
    pub out: PathBuf,
}

pub const PRESETS: &[&str] = &[
    "annulus",
    "annulus-r2",
    "annulus-r3",
    "annulus-bps",
    "counterexample",
    "torus",
    "torus-unperturbed",
    "torus-gk",
    "lagrangian",
    "round-torus",
];

fn torus(perturbed: bool) -> Preset {
    let mut terms = vec![TrigTerm { coef: 0.5, kq: vec![], kp: vec![1], kt: 0, phase: 0.0 }];
    if perturbed {
        terms.push(TrigTerm { coef: 0.01, kq: vec![1], kp: vec![], kt: 1, phase: 0.0 });
    }
    Preset::Trig { terms }
}

impl RunConfig {
    fn base(name: &str, chart: Chart, preset: Preset, class: Vec<i64>) -> Self {
        let search = SearchConfig::default();
        RunConfig {
            name: name.to_string(),
            chart,
            preset,
            class,
            grid: search.grid,
            steps: search.steps,
            tol: search.tol,
            seed: search.seed,
            p_range: None,
            pair: None,
            capacity: None,
            round_torus: None,
            expect_empty: false,
            out: PathBuf::from("out"),
        }
    }

    fn annulus(name: &str, r: i64) -> Self {
        let rf = r as f64;
        RunConfig {
            p_range: Some((0.0, 0.6)),
            pair: Some(PairSpec { r, big_r: 0.6, tau: None, search: PairMember::H1 }),
            capacity: Some(CapacitySpec {
                family: FamilySpec::Annulus { r, big_r: 0.6 },
                bracket: (0.45 * rf, 0.95 * rf),
                tol: 0.01,
            }),
            ..Self::base(name, Chart::annulus(1.0), Preset::g(0.0, rf, 0.2), vec![-r])
        }
    }

    pub fn preset(name: &str) -> anyhow::Result<Self> {
        Ok(match name {
            "annulus" => Self::annulus(name, 1),
            "annulus-r2" => Self::annulus(name, 2),
            "annulus-r3" => Self::annulus(name, 3),
            "annulus-bps" => RunConfig {
                capacity: Some(CapacitySpec {
                    family: FamilySpec::AnnulusBps { r: 1, big_r: 0.6 },
                    bracket: (0.3, 0.9),
                    tol: 0.01,
                }),
                ..Self::annulus(name, 1)
            },
            "counterexample" => RunConfig {
                expect_empty: true,
                ..Self::base(
                    name,
                    Chart::annulus(1.0),
                    Preset::CounterexampleAnnulus { c: 0.6, delta: 0.05, r: 1, tau: 0.15 },
                    vec![-1],
                )
            },
            "torus" => RunConfig {
                grid: 32,
                ..Self::base(name, Chart::Torus2, torus(true), vec![-1, 0])
            },
            "torus-unperturbed" => RunConfig {
                grid: 32,
                ..Self::base(name, Chart::Torus2, torus(false), vec![-1, 0])
            },
            "torus-gk" => RunConfig {
                grid: 32,
                p_range: Some((-3.0, 3.0)),
                ..Self::base(
                    name,
                    Chart::Strip { half_width: Some(4.0) },
                    Preset::Gk { k: 2, base: Box::new(torus(true)) },
                    vec![-1],
                )
            },
            "lagrangian" => RunConfig {
                grid: 8,
                expect_empty: true,
                capacity: Some(CapacitySpec {
                    family: FamilySpec::Lagrangian { w: vec![0.5, 0.0], alpha: vec![1, 1] },
                    bracket: (1.0, 8.0),
                    tol: 0.5,
                }),
                ..Self::base(
                    name,
                    Chart::ProductTorus { n: 2 },
                    Preset::CounterexampleLagrangian { w: vec![0.5, 0.0], k: 2.0, alpha: vec![1, 1], beta: None },
                    vec![1, 1, 0, 0],
                )
            },
            "round-torus" => RunConfig {
                grid: 16,
                round_torus: Some(0.3),
                ..Self::base(
                    name,
                    Chart::ProductTorus { n: 2 },
                    Preset::Radial { m: 0.0, s: 0.5, eps: 0.3 },
                    vec![1, 1, 0, 0],
                )
            },
            other => bail!("unknown preset {other:?}; known presets: {}", PRESETS.join(", ")),
        })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Reject settings no command can run with.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.grid == 0 {
            bail!("grid must be at least 1");
        }
        if self.steps < MIN_STEPS {
            bail!("steps must be at least {MIN_STEPS}, got {}", self.steps);
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            bail!("tol must be positive, got {}", self.tol);
        }
        if self.class.len() != self.chart.class_dim() {
            bail!(
                "class {:?} has {} components; the chart needs {}",
                self.class,
                self.class.len(),
                self.chart.class_dim()
            );
        }
        if let Some((lo, hi)) = self.p_range {
            if !(lo < hi) {
                bail!("p_range ({lo}, {hi}) is empty");
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    pub fn hamiltonian(&self) -> hamcap::Result<Hamiltonian> {
        Hamiltonian::new(self.preset.clone(), self.chart.dof())
    }

    pub fn class(&self) -> HomotopyClass {
        HomotopyClass::new(self.class.clone())
    }

    pub fn search(&self) -> SearchConfig {
        SearchConfig {
            grid: self.grid,
            steps: self.steps,
            tol: self.tol,
            seed: self.seed,
            p_range: self.p_range,
            ..SearchConfig::default()
        }
    }

    pub fn family(&self) -> anyhow::Result<Option<(HamiltonianFamily, &CapacitySpec)>> {
        let Some(spec) = &self.capacity else { return Ok(None) };
        let mut fam = match &spec.family {
            FamilySpec::Annulus { r, big_r } => capacity::annulus_family(*r, *big_r)?,
            FamilySpec::AnnulusBps { r, big_r } => capacity::annulus_bps_family(*r, *big_r, LevelSet::level(0.0))?,
            FamilySpec::Lagrangian { w, alpha } => capacity::lagrangian_family(w.clone(), alpha.clone())?,
        };
        // the family's own seed range stays; density and accuracy follow the run
        fam.search = SearchConfig {
            grid: self.grid,
            steps: self.steps,
            tol: self.tol,
            seed: self.seed,
            ..fam.search
        };
        Ok(Some((fam, spec)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let cfg = RunConfig::preset(name).unwrap();
            let back: RunConfig = serde_json::from_str(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg);
            cfg.hamiltonian().unwrap();
            cfg.validate().unwrap();
        }
        assert!(RunConfig::preset("nope").is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&RunConfig::preset("torus").unwrap().to_json()).unwrap();
        v["gird"] = 3.into();
        assert!(serde_json::from_value::<RunConfig>(v).is_err());
    }

    #[test]
    fn validation_catches_unusable_settings() {
        let good = RunConfig::preset("annulus").unwrap();
        for bad in [
            RunConfig { grid: 0, ..good.clone() },
            RunConfig { tol: 0.0, ..good.clone() },
            RunConfig { class: vec![-1, 0], ..good.clone() },
            RunConfig { p_range: Some((0.5, 0.5)), ..good.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
