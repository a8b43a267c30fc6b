//! Experiment configuration: a TOML file, then environment, then flags.
//!
//! Overrides are applied to the raw table before deserialization, so unknown keys and
//! type errors are reported the same way whichever source they came from.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use skdv_core::counterexamples::Family;
use skdv_core::evolution::{EvolveMode, SmoothingComponent};
use skdv_core::spectral::{DealiasRule, Regularity, Taper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Evolve,
    Fre,
    Counterexample,
    Smoothing,
    Bourgain,
    Catalog,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Fre => "fre",
            Command::Counterexample => "counterexample",
            Command::Smoothing => "smoothing",
            Command::Bourgain => "bourgain",
            Command::Catalog => "catalog",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    /// Gaussians and a sech^2 bump
    #[default]
    Smooth,
    /// random data of Sobolev regularity `(k, s)`
    Random,
    /// KdV soliton of speed `soliton_speed`, no Schrodinger component
    Soliton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FreMode {
    /// exponent fit over dyadic `(alpha, M)`
    #[default]
    Scaling,
    /// growth of the normalized sup with the frequency cutoff
    Divergence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularityBlock {
    pub k: f64,
    pub s: f64,
    pub eps: f64,
    pub b: f64,
    pub b_prime: f64,
    pub eta_plus: f64,
}

impl Default for RegularityBlock {
    fn default() -> Self {
        let r = Regularity::default();
        RegularityBlock { k: r.k, s: r.s, eps: r.eps, b: r.b, b_prime: r.b_prime, eta_plus: r.eta_plus }
    }
}

impl RegularityBlock {
    pub fn to_regularity(&self) -> Regularity {
        Regularity { k: self.k, s: self.s, b: self.b, b_prime: self.b_prime, eps: self.eps, eta_plus: self.eta_plus }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionsBlock {
    pub delta_u: f64,
    pub delta_v: f64,
}

impl Default for RegionsBlock {
    fn default() -> Self {
        RegionsBlock { delta_u: 0.05, delta_v: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveBlock {
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub mode: EvolveMode,
    pub data: InitialData,
    pub amplitude: f64,
    pub soliton_speed: f64,
    pub record_stride: usize,
    pub dealias: DealiasRule,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub stability_c: f64,
    /// write every recorded state in the binary field format
    pub dump_states: bool,
}

impl Default for EvolveBlock {
    fn default() -> Self {
        EvolveBlock {
            n: 256,
            length: 20.0,
            dt: 1e-3,
            t_end: 1.0,
            mode: EvolveMode::Classical,
            data: InitialData::Smooth,
            amplitude: 1.0,
            soliton_speed: 1.0,
            record_stride: 10,
            dealias: DealiasRule::TwoThirds,
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
            stability_c: 1.0,
            dump_states: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FreBlock {
    pub id: String,
    pub mode: FreMode,
    /// `alpha` runs over `2^alpha_exp[0] ..= 2^alpha_exp[1]`
    pub alpha_exp: [i32; 2],
    pub m_exp: [i32; 2],
    pub cutoff: f64,
    pub per_octave: usize,
    pub rays_per_decade: usize,
    pub check_refinement: bool,
    pub divergence_cutoffs: Vec<f64>,
    pub divergence_m: f64,
}

impl Default for FreBlock {
    fn default() -> Self {
        FreBlock {
            id: "lem:probU".into(),
            mode: FreMode::Scaling,
            alpha_exp: [6, 14],
            m_exp: [4, 10],
            cutoff: 16384.0,
            per_octave: 12,
            rays_per_decade: 8,
            check_refinement: true,
            divergence_cutoffs: vec![1024.0, 2048.0, 4096.0],
            divergence_m: 16.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleBlock {
    pub family: Family,
    /// when set, `k = s + kminus_s`
    pub kminus_s: Option<f64>,
    /// dyadic exponents of `N`; the family default when absent
    pub n_exp: Option<[i32; 2]>,
    pub c_time: f64,
    /// repeat the sweep at each `c` in {0.05, 0.1, 0.2}
    pub c_sweep: bool,
    pub rho: Option<f64>,
    pub order: usize,
}

impl Default for CounterexampleBlock {
    fn default() -> Self {
        CounterexampleBlock { family: Family::Cor41, kminus_s: None, n_exp: None, c_time: 0.1, c_sweep: false, rho: None, order: 8 }
    }
}

impl CounterexampleBlock {
    pub fn n_exponents(&self) -> [i32; 2] {
        self.n_exp.unwrap_or(match self.family {
            Family::Cor41 | Family::Cor42 => [4, 10],
            Family::Sec6U => [3, 9],
            Family::Sec6V => [4, 12],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingBlock {
    /// component name, or the catalog id of the estimate it probes
    pub component: String,
    pub seeds: usize,
    pub amplitude: f64,
    pub t: f64,
    /// grid override; the component default when absent
    pub n: Option<usize>,
    pub length: Option<f64>,
}

impl Default for SmoothingBlock {
    fn default() -> Self {
        SmoothingBlock { component: "duhamel_u_cubic".into(), seeds: 10, amplitude: 1.0, t: 1.0, n: None, length: None }
    }
}

impl SmoothingBlock {
    pub fn parsed_component(&self) -> Result<SmoothingComponent, String> {
        let name = match self.component.as_str() {
            "lem:smooth_nls" => "duhamel_u_cubic",
            "lem:bdryHs-u" => "boundary_u",
            "lem:bdryHs-v" => "boundary_v",
            other => other,
        };
        SmoothingComponent::from_str(name).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BourgainBlock {
    pub taper: Taper,
}

impl Default for BourgainBlock {
    fn default() -> Self {
        BourgainBlock { taper: Taper::Bump }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogBlock {
    /// `k - s` band of the admissible-region reconstruction
    pub band: [f64; 2],
}

impl Default for CatalogBlock {
    fn default() -> Self {
        CatalogBlock { band: [-3.0, 4.0] }
    }
}

/// Pass/fail tolerances. The defaults are the acceptance tolerances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// allowed excess of a fitted FRE exponent over the claimed one
    pub exponent_excess: f64,
    /// largest share of flagged sweep points
    pub max_flagged_fraction: f64,
    pub slope_dualized: f64,
    pub slope_iterate: f64,
    pub smoothing_excess: f64,
    pub mass_drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exponent_excess: 0.05,
            max_flagged_fraction: 0.0,
            slope_dualized: 0.1,
            slope_iterate: 0.15,
            smoothing_excess: 0.1,
            mass_drift: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// worker-pool size hint; the rayon default when absent
    #[serde(default)]
    pub threads: Option<usize>,
    /// run the kernels without the worker pool
    #[serde(default)]
    pub sequential: bool,
    #[serde(default)]
    pub regularity: RegularityBlock,
    #[serde(default)]
    pub regions: RegionsBlock,
    #[serde(default)]
    pub evolve: EvolveBlock,
    #[serde(default)]
    pub fre: FreBlock,
    #[serde(default)]
    pub counterexample: CounterexampleBlock,
    #[serde(default)]
    pub smoothing: SmoothingBlock,
    #[serde(default)]
    pub bourgain: BourgainBlock,
    #[serde(default)]
    pub catalog: CatalogBlock,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("skdv-out")
}

fn default_seed() -> u64 {
    1
}

/// A dotted key and its new value, e.g. `evolve.dt = 0.01`.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub key: String,
    pub value: toml::Value,
}

impl Override {
    pub fn new(key: impl Into<String>, value: impl Into<toml::Value>) -> Self {
        Override { key: key.into(), value: value.into() }
    }

    /// `key=value` with `value` read as a TOML literal, or as a bare string when it is not one.
    pub fn parse(s: &str) -> Result<Self> {
        let (k, v) = s.split_once('=').with_context(|| format!("override `{s}` is not key=value"))?;
        let k = k.trim();
        if k.is_empty() {
            bail!("override `{s}` has an empty key");
        }
        let v = v.trim();
        let value = toml::from_str::<toml::Table>(&format!("x = {v}"))
            .ok()
            .and_then(|mut t| t.remove("x"))
            .unwrap_or_else(|| toml::Value::String(v.to_string()));
        Ok(Override { key: k.to_string(), value })
    }
}

fn apply(table: &mut toml::Table, o: &Override) -> Result<()> {
    let parts: Vec<&str> = o.key.split('.').collect();
    let mut t = table;
    for p in &parts[..parts.len() - 1] {
        let entry = t.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = match entry {
            toml::Value::Table(inner) => inner,
            _ => bail!("`{}` is not a table (while setting `{}`)", p, o.key),
        };
    }
    t.insert(parts[parts.len() - 1].to_string(), o.value.clone());
    Ok(())
}

/// Merge file, environment and flag overrides for `command`, then validate.
///
/// Precedence: flags over `SKDV_OUT_DIR` / `SKDV_THREADS` over the file over defaults.
pub fn parse_config(command: Command, file: Option<&Path>, env: &[(String, String)], flags: &[Override]) -> Result<ExperimentConfig> {
    let mut table = match file {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str::<toml::Table>(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => toml::Table::new(),
    };
    if let Some(c) = table.get("command") {
        if c.as_str() != Some(command.name()) {
            bail!("config key `command` = {c} does not match the subcommand `{command}`");
        }
    }
    table.insert("command".into(), toml::Value::String(command.name().into()));
    for (k, v) in env {
        let o = match k.as_str() {
            "SKDV_OUT_DIR" => Override::new("out_dir", v.clone()),
            "SKDV_THREADS" => {
                let n: i64 = v.trim().parse().with_context(|| format!("SKDV_THREADS = `{v}` is not an integer"))?;
                Override::new("threads", n)
            }
            _ => continue,
        };
        apply(&mut table, &o)?;
    }
    for o in flags {
        apply(&mut table, o)?;
    }
    // re-serialize so that the error message quotes the offending line
    let text = toml::to_string(&table).context("serializing merged config")?;
    let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
    cfg.validate()?;
    Ok(cfg)
}

fn positive(key: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        bail!("invalid value for `{key}`: {x} must be positive and finite");
    }
    Ok(())
}

fn finite(key: &str, x: f64) -> Result<()> {
    if !x.is_finite() {
        bail!("invalid value for `{key}`: {x} must be finite");
    }
    Ok(())
}

fn exp_range(key: &str, r: [i32; 2]) -> Result<()> {
    if r[0] > r[1] || r[0] < -30 || r[1] > 60 {
        bail!("invalid value for `{key}`: [{}, {}] must be an increasing pair of exponents", r[0], r[1]);
    }
    Ok(())
}

impl ExperimentConfig {
    /// Check every numeric field the selected command reads.
    pub fn validate(&self) -> Result<()> {
        if self.threads == Some(0) {
            bail!("invalid value for `threads`: must be at least 1");
        }
        let r = &self.regularity;
        for (key, x) in [("regularity.k", r.k), ("regularity.s", r.s), ("regularity.eps", r.eps)] {
            finite(key, x)?;
        }
        if !(r.eps >= 0.0) {
            bail!("invalid value for `regularity.eps`: {} must be nonnegative", r.eps);
        }
        positive("regularity.eta_plus", r.eta_plus)?;
        if !(r.b > 0.5 && r.b <= 0.6) {
            bail!("invalid value for `regularity.b`: {} outside (1/2, 3/5]", r.b);
        }
        if !(r.b_prime >= r.b - 1.0 - 1e-12 && r.b_prime <= -0.4) {
            bail!("invalid value for `regularity.b_prime`: {} outside [b - 1, -2/5]", r.b_prime);
        }
        positive("regions.delta_u", self.regions.delta_u)?;
        positive("regions.delta_v", self.regions.delta_v)?;
        let t = &self.tolerances;
        for (key, x) in [
            ("tolerances.exponent_excess", t.exponent_excess),
            ("tolerances.slope_dualized", t.slope_dualized),
            ("tolerances.slope_iterate", t.slope_iterate),
            ("tolerances.smoothing_excess", t.smoothing_excess),
            ("tolerances.mass_drift", t.mass_drift),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                bail!("invalid value for `{key}`: {x} must be nonnegative");
            }
        }
        if !(0.0..=1.0).contains(&t.max_flagged_fraction) {
            bail!("invalid value for `tolerances.max_flagged_fraction`: {} outside [0, 1]", t.max_flagged_fraction);
        }
        match self.command {
            Command::Evolve | Command::Bourgain => self.validate_evolve(),
            Command::Fre => self.validate_fre(),
            Command::Counterexample => self.validate_counterexample(),
            Command::Smoothing => self.validate_smoothing(),
            Command::Catalog => {
                let b = self.catalog.band;
                if !(b[0] < b[1] && b[0].is_finite() && b[1].is_finite()) {
                    bail!("invalid value for `catalog.band`: [{}, {}] must be increasing", b[0], b[1]);
                }
                Ok(())
            }
        }
    }

    fn validate_evolve(&self) -> Result<()> {
        let e = &self.evolve;
        if e.n < 8 || !e.n.is_power_of_two() {
            bail!("invalid value for `evolve.n`: {} must be a power of two >= 8", e.n);
        }
        positive("evolve.length", e.length)?;
        positive("evolve.dt", e.dt)?;
        positive("evolve.t_end", e.t_end)?;
        positive("evolve.stability_c", e.stability_c)?;
        finite("evolve.amplitude", e.amplitude)?;
        positive("evolve.soliton_speed", e.soliton_speed)?;
        if e.record_stride == 0 {
            bail!("invalid value for `evolve.record_stride`: must be at least 1");
        }
        for (key, x) in [("evolve.alpha", e.alpha), ("evolve.beta", e.beta), ("evolve.gamma", e.gamma)] {
            finite(key, x)?;
        }
        if e.alpha == 0.0 {
            bail!("invalid value for `evolve.alpha`: must be nonzero");
        }
        if e.gamma == 0.0 {
            bail!("invalid value for `evolve.gamma`: must be nonzero");
        }
        Ok(())
    }

    fn validate_fre(&self) -> Result<()> {
        let f = &self.fre;
        skdv_core::fre::catalog_lookup(&f.id).map_err(|e| anyhow::anyhow!("invalid value for `fre.id`: {e}"))?;
        exp_range("fre.alpha_exp", f.alpha_exp)?;
        exp_range("fre.m_exp", f.m_exp)?;
        positive("fre.cutoff", f.cutoff)?;
        if f.per_octave == 0 {
            bail!("invalid value for `fre.per_octave`: must be at least 1");
        }
        if f.rays_per_decade == 0 {
            bail!("invalid value for `fre.rays_per_decade`: must be at least 1");
        }
        positive("fre.divergence_m", f.divergence_m)?;
        if f.divergence_cutoffs.len() < 2 || f.divergence_cutoffs.windows(2).any(|w| !(w[1] > w[0])) {
            bail!("invalid value for `fre.divergence_cutoffs`: need at least two increasing values");
        }
        for &x in &f.divergence_cutoffs {
            positive("fre.divergence_cutoffs", x)?;
        }
        Ok(())
    }

    fn validate_counterexample(&self) -> Result<()> {
        let c = &self.counterexample;
        if let Some(d) = c.kminus_s {
            finite("counterexample.kminus_s", d)?;
        }
        exp_range("counterexample.n_exp", c.n_exponents())?;
        if !(c.c_time > 0.0 && c.c_time < 1.0) {
            bail!("invalid value for `counterexample.c_time`: {} outside (0, 1)", c.c_time);
        }
        if c.order < 2 {
            bail!("invalid value for `counterexample.order`: must be at least 2");
        }
        if let Some(rho) = c.rho {
            finite("counterexample.rho", rho)?;
        }
        self.growth_experiment().map_err(|e| anyhow::anyhow!("invalid counterexample parameters: {e}"))?;
        Ok(())
    }

    fn validate_smoothing(&self) -> Result<()> {
        let s = &self.smoothing;
        s.parsed_component().map_err(|e| anyhow::anyhow!("invalid value for `smoothing.component`: {e}"))?;
        if s.seeds == 0 {
            bail!("invalid value for `smoothing.seeds`: must be at least 1");
        }
        finite("smoothing.amplitude", s.amplitude)?;
        positive("smoothing.t", s.t)?;
        if let Some(n) = s.n {
            if n < 16 || !n.is_power_of_two() {
                bail!("invalid value for `smoothing.n`: {n} must be a power of two >= 16");
            }
        }
        if let Some(l) = s.length {
            positive("smoothing.length", l)?;
        }
        Ok(())
    }

    /// Regularity with `k = s + kminus_s` applied for counterexample runs.
    pub fn effective_regularity(&self) -> Regularity {
        let mut r = self.regularity.to_regularity();
        if self.command == Command::Counterexample {
            if let Some(d) = self.counterexample.kminus_s {
                r.k = r.s + d;
            }
        }
        r
    }

    pub fn growth_experiment(&self) -> Result<skdv_core::counterexamples::GrowthExperiment, skdv_core::counterexamples::CounterexampleError> {
        use skdv_core::counterexamples::{dyadic, GrowthExperiment, Quadrature};
        let c = &self.counterexample;
        let [lo, hi] = c.n_exponents();
        let mut e = GrowthExperiment::new(c.family, dyadic(lo, hi), self.effective_regularity(), c.c_time, c.rho)?;
        e.quadrature = Quadrature { order: c.order };
        e.validate()?;
        Ok(e)
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let r = self.effective_regularity();
        if matches!(self.command, Command::Evolve | Command::Bourgain) && !self.evolve.mode.matches_regime(r.k - r.s) {
            w.push(format!(
                "advisory: mode {:?} is not the formulation for k - s = {}; the run proceeds but the regime table selects another mode",
                self.evolve.mode,
                r.k - r.s
            ));
        }
        if self.command == Command::Fre {
            if let Ok(spec) = skdv_core::fre::catalog_lookup(&self.fre.id) {
                if !spec.in_range(&r) {
                    w.push(format!("advisory: (k, s, eps) = ({}, {}, {}) is outside the range of {}", r.k, r.s, r.eps, spec.id));
                }
            }
        }
        w
    }
}
