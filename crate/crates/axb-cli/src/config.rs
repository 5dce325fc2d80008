//! Scenario configuration: a TOML file with one section per module.
//! Every key is optional; see docs/config.md for the schema.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use qaxb::deformation::Deformation;
use qaxb::linalg::LatticeLine;
use qaxb::pairs::StandardModel;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeformationSection {
    pub k: i64,
}

impl Default for DeformationSection {
    fn default() -> Self {
        DeformationSection { k: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    /// Lattice sizes of a convergence sweep, ascending powers of two.
    pub n: Vec<usize>,
    /// Left end of the position grid; centred when absent.
    pub q0: Option<f64>,
    /// Position spacing; must be ħ/m for an integer m. Balanced when absent.
    pub dq: Option<f64>,
    /// Largest state vector (complex entries) any scenario may allocate.
    pub max_state: usize,
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection { n: vec![128, 256], q0: None, dq: None, max_state: 1 << 24 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketSection {
    pub probes: usize,
    /// Gaussian width of the probe packets; lattice-dependent default when absent.
    pub width: Option<f64>,
}

impl Default for PacketSection {
    fn default() -> Self {
        PacketSection { probes: 6, width: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub vtheta: f64,
    pub oracle: f64,
    pub negative_branch: f64,
    pub exact: f64,
    pub zakrzewski: f64,
    pub lemma1: f64,
    pub delta: f64,
    pub rep_residual: f64,
    pub unitarity: f64,
    pub spectrum: f64,
    pub pairing: f64,
    /// Required shrink factor per doubling of N.
    pub factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            vtheta: 1e-9,
            oracle: 1e-8,
            negative_branch: 1e-8,
            exact: 1e-10,
            zakrzewski: 1e-2,
            lemma1: 5e-3,
            delta: 1e-2,
            rep_residual: 1e-1,
            unitarity: 1e-10,
            spectrum: 1e-2,
            pairing: 1e-8,
            factor: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PentagonSection {
    pub n: Vec<usize>,
    pub probes: usize,
}

impl Default for PentagonSection {
    fn default() -> Self {
        PentagonSection { n: vec![16, 32], probes: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepSection {
    /// Diagonal of log c; its length is dim 𝒦.
    pub log_c: Vec<f64>,
    /// One 2×2 block of (d, δ) per entry; remaining dimensions form ker d.
    pub taus: Vec<f64>,
    pub negative_control: bool,
}

impl Default for RepSection {
    fn default() -> Self {
        RepSection { log_c: vec![0.5, -0.3], taus: vec![], negative_control: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub scenario: Option<String>,
    pub out: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 7, scenario: None, out: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub deformation: DeformationSection,
    pub lattice: LatticeSection,
    pub packets: PacketSection,
    pub tolerances: Tolerances,
    pub pentagon: PentagonSection,
    pub rep: RepSection,
    pub run: RunSection,
}

fn bad(key: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {why}"))
}

fn check_sizes(key: &str, ns: &[usize]) -> Result<(), CliError> {
    if ns.is_empty() {
        return Err(bad(key, "needs at least one lattice size"));
    }
    if let Some(n) = ns.iter().find(|n| **n < 4 || !n.is_power_of_two()) {
        return Err(bad(key, format!("{n} is not a power of two >= 4")));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(bad(key, "sizes must be strictly ascending"));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    /// Re-checks every module precondition the scenarios rely on.
    pub fn validate(&self) -> Result<(), CliError> {
        self.deformation()?;
        check_sizes("lattice.n", &self.lattice.n)?;
        check_sizes("pentagon.n", &self.pentagon.n)?;
        for &n in &self.lattice.n {
            self.model(n)?;
        }
        if self.packets.probes == 0 {
            return Err(bad("packets.probes", "must be at least 1"));
        }
        if self.pentagon.probes == 0 {
            return Err(bad("pentagon.probes", "must be at least 1"));
        }
        let t = &self.tolerances;
        let named = [
            ("vtheta", t.vtheta),
            ("oracle", t.oracle),
            ("negative_branch", t.negative_branch),
            ("exact", t.exact),
            ("zakrzewski", t.zakrzewski),
            ("lemma1", t.lemma1),
            ("delta", t.delta),
            ("rep_residual", t.rep_residual),
            ("unitarity", t.unitarity),
            ("spectrum", t.spectrum),
            ("pairing", t.pairing),
        ];
        for (k, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(&format!("tolerances.{k}"), format!("{v} is not a positive number")));
            }
        }
        if !(t.factor >= 1.0 && t.factor.is_finite()) {
            return Err(bad("tolerances.factor", "must be at least 1"));
        }
        if self.rep.log_c.is_empty() || self.rep.log_c.len() < 2 * self.rep.taus.len() {
            return Err(bad("rep.log_c", "needs at least 2 entries per tau"));
        }
        if let Some(t) = self.rep.taus.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
            return Err(bad("rep.taus", format!("{t} is not a non-negative number")));
        }
        if self.rep.log_c.iter().any(|x| !x.is_finite()) {
            return Err(bad("rep.log_c", "entries must be finite"));
        }
        Ok(())
    }

    pub fn deformation(&self) -> Result<Deformation, CliError> {
        Deformation::new(self.deformation.k).map_err(|e| bad("deformation.k", e))
    }

    /// The standard model on N sites with the configured lattice and packets.
    pub fn model(&self, n: usize) -> Result<Arc<StandardModel>, CliError> {
        let def = self.deformation()?;
        let base = LatticeLine::balanced(n, def.hbar).map_err(|e| bad("lattice.n", e))?;
        let dq = self.lattice.dq.unwrap_or(base.dq());
        let q0 = self.lattice.q0.unwrap_or(-(n as f64) / 2.0 * dq);
        let lat = LatticeLine::new(n, q0, dq, def.hbar).map_err(|e| bad("lattice.dq", e))?;
        let mut m = StandardModel::new(lat, def).map_err(|e| bad("lattice.dq", e))?;
        if let Some(w) = self.packets.width {
            m = m.with_probe_width(w).map_err(|e| bad("packets.width", e))?;
        }
        Ok(Arc::new(m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(ScenarioConfig::parse("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn diagnostics_name_the_key() {
        let e = ScenarioConfig::parse("[lattice]\nn = [128, 100]\n").unwrap_err().to_string();
        assert!(e.contains("lattice.n") && e.contains("100"), "{e}");
        let e = ScenarioConfig::parse("[lattice]\nnn = 3\n").unwrap_err().to_string();
        assert!(e.contains("nn") && e.contains("line 2"), "{e}");
        let e = ScenarioConfig::parse("[deformation]\nk = -1\n").unwrap_err().to_string();
        assert!(e.contains("deformation.k"), "{e}");
        let e = ScenarioConfig::parse("[lattice]\ndq = 0.1\n").unwrap_err().to_string();
        assert!(e.contains("lattice.dq"), "{e}");
    }

    #[test]
    fn echo_round_trips() {
        let mut c = ScenarioConfig::default();
        c.lattice.q0 = Some(-10.0);
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ScenarioConfig::parse(&text).unwrap(), c);
    }

    #[test]
    fn shipped_docs_cover_every_key() {
        ScenarioConfig::parse(include_str!("../../../docs/example.toml")).unwrap();
        let doc = include_str!("../../../docs/config.md");
        let mut c = ScenarioConfig::default();
        c.lattice.q0 = Some(0.0);
        c.lattice.dq = Some(1.0);
        c.packets.width = Some(1.0);
        c.run.scenario = Some(String::new());
        c.run.out = Some(PathBuf::new());
        let v = toml::Value::try_from(&c).unwrap();
        for (section, keys) in v.as_table().unwrap() {
            assert!(doc.contains(&format!("## [{section}]")), "{section}");
            for key in keys.as_table().unwrap().keys() {
                assert!(doc.contains(&format!("| `{key}` |")), "{section}.{key}");
            }
        }
    }
}
