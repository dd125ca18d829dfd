//! Run configuration: TOML files with per-case defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use demto::cases::HoleRadius;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    Bridge2d,
    Beam2d,
    Bridge3d,
    UnitcellShear,
    Custom,
}

impl CaseKind {
    pub fn parse(name: &str) -> Option<CaseKind> {
        match name {
            "bridge2d" => Some(CaseKind::Bridge2d),
            "beam2d" => Some(CaseKind::Beam2d),
            "bridge3d" => Some(CaseKind::Bridge3d),
            "unitcell_shear" => Some(CaseKind::UnitcellShear),
            "custom" => Some(CaseKind::Custom),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseKind::Bridge2d => "bridge2d",
            CaseKind::Beam2d => "beam2d",
            CaseKind::Bridge3d => "bridge3d",
            CaseKind::UnitcellShear => "unitcell_shear",
            CaseKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardMode {
    Dem,
    Fem,
    Both,
}

impl ForwardMode {
    pub fn parse(s: &str) -> Option<ForwardMode> {
        match s {
            "dem" => Some(ForwardMode::Dem),
            "fem" => Some(ForwardMode::Fem),
            "both" => Some(ForwardMode::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hole {
    Quarter,
    Tenth,
    Twentieth,
}

impl From<Hole> for HoleRadius {
    fn from(h: Hole) -> Self {
        match h {
            Hole::Quarter => HoleRadius::Quarter,
            Hole::Tenth => HoleRadius::Tenth,
            Hole::Twentieth => HoleRadius::Twentieth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSettings {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub simp_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationSettings {
    pub volume_fraction: f64,
    pub iterations: usize,
    pub filter_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSettings {
    pub learning_rate: f64,
    /// L-BFGS iterations per optimizer step.
    pub max_iterations: usize,
    pub max_steps: usize,
    pub eps_tol: f64,
    pub history_size: usize,
    pub hidden_layers: usize,
    pub neurons: usize,
    pub rff_features: usize,
    pub sigma_mlp: f64,
    pub sigma_rff: f64,
}

/// A traction patch on the boundary, for custom cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchSettings {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub traction: Vec<f64>,
}

/// Fully resolved run description; also written to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub case: CaseKind,
    pub forward: ForwardMode,
    pub seed: u64,
    pub deterministic: bool,
    pub output: PathBuf,
    pub extents: Vec<f64>,
    pub counts: Vec<usize>,
    /// Traction magnitude for bridges, total force for the beam.
    pub load: f64,
    pub hole: Hole,
    pub applied_shear: f64,
    /// Periodic penalty weight; Young's modulus when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty_weight: Option<f64>,
    /// Faces clamped in custom cases, e.g. "x-".
    pub clamped_faces: Vec<String>,
    pub patches: Vec<PatchSettings>,
    /// Write every n-th density snapshot.
    pub snapshot_every: usize,
    pub material: MaterialSettings,
    pub optimization: OptimizationSettings,
    pub training: TrainingSettings,
}

/// Partial configuration as read from a file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    case: String,
    forward: Option<String>,
    seed: Option<u64>,
    deterministic: Option<bool>,
    output: Option<PathBuf>,
    snapshot_every: Option<usize>,
    grid: Option<GridFile>,
    load: Option<LoadFile>,
    material: Option<MaterialFile>,
    optimization: Option<OptimizationFile>,
    training: Option<TrainingFile>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    extents: Option<Vec<f64>>,
    counts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadFile {
    magnitude: Option<f64>,
    hole: Option<Hole>,
    applied_shear: Option<f64>,
    penalty_weight: Option<f64>,
    clamped_faces: Option<Vec<String>>,
    patches: Option<Vec<PatchSettings>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialFile {
    youngs_modulus: Option<f64>,
    poisson_ratio: Option<f64>,
    simp_exponent: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizationFile {
    volume_fraction: Option<f64>,
    iterations: Option<usize>,
    filter_radius: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainingFile {
    learning_rate: Option<f64>,
    max_iterations: Option<usize>,
    max_steps: Option<usize>,
    eps_tol: Option<f64>,
    history_size: Option<usize>,
    hidden_layers: Option<usize>,
    neurons: Option<usize>,
    rff_features: Option<usize>,
    sigma_mlp: Option<f64>,
    sigma_rff: Option<f64>,
}

fn default_training(case: CaseKind) -> TrainingSettings {
    TrainingSettings {
        learning_rate: 1.735,
        max_iterations: 100,
        max_steps: 20,
        eps_tol: if case == CaseKind::Bridge3d { 5e-5 } else { 5e-6 },
        history_size: 10,
        hidden_layers: 5,
        neurons: 68,
        rff_features: 128,
        sigma_mlp: 0.0622,
        sigma_rff: 0.1192,
    }
}

impl RunConfig {
    /// Default settings for a named case.
    pub fn for_case(case: CaseKind) -> RunConfig {
        let (extents, counts): (Vec<f64>, Vec<usize>) = match case {
            CaseKind::Bridge2d => (vec![12.0, 2.0], vec![121, 31]),
            CaseKind::Beam2d => (vec![10.0, 5.0], vec![91, 46]),
            CaseKind::Bridge3d => (vec![12.0, 2.0, 2.0], vec![121, 25, 25]),
            CaseKind::UnitcellShear => (vec![10.0, 10.0], vec![81, 81]),
            CaseKind::Custom => (vec![1.0, 1.0], vec![21, 21]),
        };
        RunConfig {
            case,
            forward: ForwardMode::Dem,
            seed: 0,
            deterministic: false,
            output: PathBuf::from("out").join(case.name()),
            extents,
            counts,
            load: 1.0,
            hole: Hole::Tenth,
            applied_shear: 0.01,
            penalty_weight: None,
            clamped_faces: Vec::new(),
            patches: Vec::new(),
            snapshot_every: 1,
            material: MaterialSettings {
                youngs_modulus: 200.0,
                poisson_ratio: 0.3,
                simp_exponent: 3.0,
            },
            optimization: OptimizationSettings {
                volume_fraction: 0.4,
                iterations: 80,
                filter_radius: 0.25,
            },
            training: default_training(case),
        }
    }

    /// Parses TOML text. Unknown keys and type errors are reported with
    /// their line and column.
    pub fn from_toml(text: &str) -> Result<RunConfig, CliError> {
        let file: FileConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let case = CaseKind::parse(&file.case).ok_or_else(|| {
            CliError::Config(format!(
                "unknown case `{}` (expected bridge2d, beam2d, bridge3d, unitcell_shear or custom)",
                file.case
            ))
        })?;
        let mut c = RunConfig::for_case(case);
        if let Some(f) = file.forward {
            c.forward = ForwardMode::parse(&f).ok_or_else(|| CliError::Config(format!("unknown forward solver `{f}`")))?;
        }
        set(&mut c.seed, file.seed);
        set(&mut c.deterministic, file.deterministic);
        set(&mut c.output, file.output);
        set(&mut c.snapshot_every, file.snapshot_every);
        if let Some(g) = file.grid {
            set(&mut c.extents, g.extents);
            set(&mut c.counts, g.counts);
        }
        if let Some(l) = file.load {
            set(&mut c.load, l.magnitude);
            set(&mut c.hole, l.hole);
            set(&mut c.applied_shear, l.applied_shear);
            c.penalty_weight = l.penalty_weight.or(c.penalty_weight);
            set(&mut c.clamped_faces, l.clamped_faces);
            set(&mut c.patches, l.patches);
        }
        if let Some(m) = file.material {
            set(&mut c.material.youngs_modulus, m.youngs_modulus);
            set(&mut c.material.poisson_ratio, m.poisson_ratio);
            set(&mut c.material.simp_exponent, m.simp_exponent);
        }
        if let Some(o) = file.optimization {
            set(&mut c.optimization.volume_fraction, o.volume_fraction);
            set(&mut c.optimization.iterations, o.iterations);
            set(&mut c.optimization.filter_radius, o.filter_radius);
        }
        if let Some(t) = file.training {
            let s = &mut c.training;
            set(&mut s.learning_rate, t.learning_rate);
            set(&mut s.max_iterations, t.max_iterations);
            set(&mut s.max_steps, t.max_steps);
            set(&mut s.eps_tol, t.eps_tol);
            set(&mut s.history_size, t.history_size);
            set(&mut s.hidden_layers, t.hidden_layers);
            set(&mut s.neurons, t.neurons);
            set(&mut s.rff_features, t.rff_features);
            set(&mut s.sigma_mlp, t.sigma_mlp);
            set(&mut s.sigma_rff, t.sigma_rff);
        }
        c.validate()?;
        Ok(c)
    }

    /// Reads a config file, or the manifest of an earlier run.
    pub fn from_path(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let parsed = if text.lines().any(|l| l.trim() == "[config]") {
            RunConfig::from_manifest(&text)
        } else {
            RunConfig::from_toml(&text)
        };
        parsed.map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks everything that can be checked before a solve starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let o = &self.optimization;
        if !(o.volume_fraction > 0.0 && o.volume_fraction < 1.0) {
            return bad(format!("volume_fraction {} must lie strictly between 0 and 1", o.volume_fraction));
        }
        if o.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if !(o.filter_radius > 0.0) {
            return bad(format!("filter_radius {} must be positive", o.filter_radius));
        }
        let m = &self.material;
        if !(m.youngs_modulus > 0.0) || !(0.0..0.5).contains(&m.poisson_ratio) || !(m.simp_exponent >= 1.0) {
            return bad("material needs E > 0, 0 <= nu < 0.5 and p >= 1".into());
        }
        let t = &self.training;
        if !(t.learning_rate > 0.0) || t.max_iterations == 0 || !(t.eps_tol > 0.0) || t.history_size == 0 {
            return bad("training needs learning_rate > 0, max_iterations >= 1, eps_tol > 0, history_size >= 1".into());
        }
        if !(t.sigma_mlp > 0.0) || !(t.sigma_rff > 0.0) || t.rff_features == 0 {
            return bad("network needs positive sigma_mlp, sigma_rff and rff_features".into());
        }
        let dim = self.counts.len();
        if !(2..=3).contains(&dim) || self.extents.len() != dim {
            return bad("grid needs 2 or 3 extents and matching counts".into());
        }
        if self.counts.iter().any(|&n| n < 2) || self.extents.iter().any(|&e| !(e > 0.0)) {
            return bad("grid counts must be >= 2 and extents positive".into());
        }
        if self.case != CaseKind::Custom {
            let defaults = RunConfig::for_case(self.case);
            if self.extents != defaults.extents {
                return bad(format!("{} has fixed extents {:?}; use a custom case to change them", self.case.name(), defaults.extents));
            }
            if self.counts.len() != defaults.counts.len() {
                return bad(format!("{} needs {} grid counts", self.case.name(), defaults.counts.len()));
            }
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1".into());
        }
        if !self.load.is_finite() {
            return bad("load must be finite".into());
        }
        if self.penalty_weight.is_some_and(|w| !(w > 0.0)) {
            return bad("penalty_weight must be positive".into());
        }
        if self.case == CaseKind::Custom {
            for f in &self.clamped_faces {
                let ok = f.len() == 2
                    && ["x", "y", "z"][..dim].contains(&&f[..1])
                    && (f.ends_with('-') || f.ends_with('+'));
                if !ok {
                    return bad(format!("unknown face `{f}`"));
                }
            }
            if self.clamped_faces.is_empty() {
                return bad("custom cases need at least one clamped face".into());
            }
            for p in &self.patches {
                if p.lo.len() != dim || p.hi.len() != dim || p.traction.len() != dim {
                    return bad("patch lo, hi and traction need one entry per axis".into());
                }
            }
        }
        Ok(())
    }

    /// The config echoed in a run manifest.
    pub fn from_manifest(text: &str) -> Result<RunConfig, CliError> {
        #[derive(Deserialize)]
        struct Manifest {
            config: RunConfig,
        }
        let m: Manifest = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        m.config.validate()?;
        Ok(m.config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
