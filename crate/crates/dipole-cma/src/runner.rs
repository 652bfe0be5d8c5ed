//! Scenario configuration, execution, and report emission.
//!
//! A scenario is one dipole/ground/excitation tuple; `run` drives the whole
//! pipeline (mesh, image fit, assembly, direct solve, requested mode
//! formulations, expansions, coupling predictions, error metrics,
//! efficiency, field cuts) and emits CSV reports plus a JSON manifest that
//! records every numeric knob. `sweep` repeats a scenario along one axis
//! with a bounded worker pool and concatenates the per-value results into
//! long-format CSVs.
//!
//! Output files are deterministic: fixed iteration order, 9-significant-
//! digit scientific formatting, no timestamps.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::wavelength;
use crate::coupling::{
    coupled_modes, first_order_pair, interaction_powers, prediction_as_mode_set, CoupledPrediction,
    FirstOrderB,
};
use crate::error::{Error, Result};
use crate::fields::{near_fields, orthogonality_report, FieldCut, OrthogonalityReport};
use crate::greens::{
    fit_complex_images, ComplexImageSet, HalfSpace, DEFAULT_IMAGE_COUNT, DEFAULT_PATH_SAMPLES,
    DEFAULT_PATH_T0,
};
use crate::metrics::{compare_mode_sets, ground_efficiency, EfficiencyReport, ModeErrorReport};
use crate::modal::{modal_weights, solve_modes, Formulation, ModalExpansion, ModeSet};
use crate::mom::{assemble, solve_direct, ImpedanceSystem, KernelChoice};
use crate::wire::{delta_gap_excitation, segment_dipole, DipoleSpec, WireMesh};

/// Dipole geometry in the configuration file. Lengths in metres; a missing
/// radius defaults to λ/1000.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleConfig {
    pub length_m: f64,
    pub height_m: f64,
    #[serde(default)]
    pub radius_m: Option<f64>,
    pub frequency_hz: f64,
    #[serde(default = "default_segments")]
    pub segments: usize,
}

fn default_segments() -> usize {
    41
}

impl DipoleConfig {
    pub fn to_spec(&self) -> DipoleSpec {
        DipoleSpec {
            length: self.length_m,
            height: self.height_m,
            radius: self
                .radius_m
                .unwrap_or(wavelength(self.frequency_hz) / 1000.0),
            frequency: self.frequency_hz,
            segments: self.segments,
        }
    }
}

/// Ground model under the dipole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroundConfig {
    None,
    Pec,
    Lossy { eps_re: f64, eps_im: f64 },
}

/// Complex-image fit controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageFitConfig {
    pub count: usize,
    pub path_t0: f64,
    pub samples: usize,
}

impl Default for ImageFitConfig {
    fn default() -> Self {
        ImageFitConfig {
            count: DEFAULT_IMAGE_COUNT,
            path_t0: DEFAULT_PATH_T0,
            samples: DEFAULT_PATH_SAMPLES,
        }
    }
}

/// Which isolated modes feed the coupling prediction: either the keyword
/// "full" or a list of 1-based mode indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingSubset {
    Keyword(String),
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    /// One prediction per entry, e.g. [[1, 2], [1, 2, 3, 4], "full"].
    pub subsets: Vec<CouplingSubset>,
    #[serde(default)]
    pub first_order_b: FirstOrderB,
}

/// A straight observation line with evenly spaced samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldCutConfig {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub points: usize,
    /// How many dominant modes the modal field superposition keeps.
    #[serde(default = "default_cut_modes")]
    pub modes: usize,
}

fn default_cut_modes() -> usize {
    5
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationConfig {
    pub voltage_re: f64,
    pub voltage_im: f64,
}

impl Default for ExcitationConfig {
    fn default() -> Self {
        ExcitationConfig {
            voltage_re: 1.0,
            voltage_im: 0.0,
        }
    }
}

/// Runtime numeric assertions; violations abort the scenario.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub matrix_symmetry: f64,
    pub direct_residual: f64,
    pub eigen_residual: f64,
    pub orthogonality: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            matrix_symmetry: 1e-12,
            direct_residual: 1e-10,
            eigen_residual: 1e-9,
            orthogonality: 1e-8,
        }
    }
}

/// Far-field grid and the number of modes in the orthogonality report.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarFieldConfig {
    pub theta_nodes: usize,
    pub phi_nodes: usize,
    pub report_modes: usize,
}

impl Default for FarFieldConfig {
    fn default() -> Self {
        FarFieldConfig {
            theta_nodes: 64,
            phi_nodes: 128,
            report_modes: 5,
        }
    }
}

/// One complete scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dipole: DipoleConfig,
    pub ground: GroundConfig,
    #[serde(default)]
    pub images: ImageFitConfig,
    /// Formulations to solve in addition to the isolated reference.
    #[serde(default)]
    pub formulations: Vec<Formulation>,
    #[serde(default)]
    pub coupling: Option<CouplingConfig>,
    #[serde(default)]
    pub field_cuts: Vec<FieldCutConfig>,
    #[serde(default)]
    pub excitation: ExcitationConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub far_field: FarFieldConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.dipole
            .to_spec()
            .validate()
            .map_err(|e| Error::Config(format!("dipole: {e}")))?;
        if let GroundConfig::Lossy { eps_re, eps_im } = self.ground {
            if eps_im > 0.0 {
                return Err(Error::Config(format!(
                    "ground.eps_im must be <= 0 for a passive medium (got {eps_im})"
                )));
            }
            if (Complex64::new(eps_re, eps_im) + 1.0).norm() < 1e-12 {
                return Err(Error::Config(
                    "ground permittivity -1 sits on the quasi-static pole".into(),
                ));
            }
            if self.images.samples < 2 * self.images.count.max(1) {
                return Err(Error::Config(format!(
                    "images.samples = {} cannot resolve images.count = {} (need at least 2M)",
                    self.images.samples, self.images.count
                )));
            }
            if self.images.path_t0 <= 0.0 {
                return Err(Error::Config("images.path_t0 must be positive".into()));
            }
        }
        for f in &self.formulations {
            let ok = matches!(
                (self.ground, f),
                (_, Formulation::Isolated)
                    | (GroundConfig::Pec, Formulation::PecGround)
                    | (
                        GroundConfig::Lossy { .. },
                        Formulation::LossyConventional | Formulation::LossyRadiation,
                    )
            );
            if !ok {
                return Err(Error::Config(format!(
                    "formulation {f} is incompatible with ground {:?}",
                    self.ground
                )));
            }
        }
        if let Some(c) = &self.coupling {
            if !matches!(self.ground, GroundConfig::Lossy { .. }) {
                return Err(Error::Config(
                    "coupling predictions need a lossy ground".into(),
                ));
            }
            if c.subsets.is_empty() {
                return Err(Error::Config("coupling.subsets is empty".into()));
            }
            for subset in &c.subsets {
                match subset {
                    CouplingSubset::Keyword(k) if k == "full" => {}
                    CouplingSubset::Keyword(k) => {
                        return Err(Error::Config(format!(
                            "coupling subset keyword must be \"full\", got {k:?}"
                        )));
                    }
                    CouplingSubset::Indices(idx) => {
                        if idx.is_empty() {
                            return Err(Error::Config("a coupling subset is empty".into()));
                        }
                        for &i in idx {
                            if i == 0 || i > self.dipole.segments {
                                return Err(Error::Config(format!(
                                    "coupling subset index {i} out of range 1..={}",
                                    self.dipole.segments
                                )));
                            }
                        }
                    }
                }
            }
        }
        for (i, cut) in self.field_cuts.iter().enumerate() {
            if cut.points < 2 {
                return Err(Error::Config(format!(
                    "field_cuts[{i}].points must be at least 2"
                )));
            }
            if cut.modes == 0 {
                return Err(Error::Config(format!(
                    "field_cuts[{i}].modes must be at least 1"
                )));
            }
            // the half-space kernels describe the upper region only
            if !matches!(self.ground, GroundConfig::None)
                && (cut.start[2] <= 0.0 || cut.end[2] <= 0.0)
            {
                return Err(Error::Config(format!(
                    "field_cuts[{i}] dips to or below the interface; fields are only \
                     evaluated above the ground (z > 0)"
                )));
            }
        }
        if self.far_field.theta_nodes < 2 || self.far_field.phi_nodes < 1 {
            return Err(Error::Config("far_field grid too small".into()));
        }
        if self.far_field.report_modes == 0 {
            return Err(Error::Config("far_field.report_modes must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn eps_r(&self) -> Option<Complex64> {
        match self.ground {
            GroundConfig::Lossy { eps_re, eps_im } => Some(Complex64::new(eps_re, eps_im)),
            _ => None,
        }
    }
}

/// Everything one scenario produced, kept in memory for callers and mirrored
/// to disk when an output directory is given.
pub struct RunReport {
    pub config: ScenarioConfig,
    pub mesh: WireMesh,
    pub images: Option<ComplexImageSet>,
    pub isolated_system: ImpedanceSystem,
    pub scenario_system: Option<ImpedanceSystem>,
    pub isolated_current: DVector<Complex64>,
    pub direct_current: DVector<Complex64>,
    pub mode_sets: Vec<ModeSet>,
    pub expansions: Vec<(Formulation, ModalExpansion)>,
    pub mode_errors: Vec<ModeErrorReport>,
    pub orthogonality: Vec<OrthogonalityReport>,
    pub coupling: Vec<CoupledPrediction>,
    pub coupling_errors: Vec<(String, ModeErrorReport)>,
    pub efficiency: Option<EfficiencyReport>,
    /// (direct-current fields, dominant-mode fields) per configured cut.
    pub field_cuts: Vec<(FieldCut, FieldCut)>,
    pub written: Vec<PathBuf>,
}

impl RunReport {
    pub fn mode_set(&self, f: Formulation) -> Option<&ModeSet> {
        self.mode_sets.iter().find(|m| m.formulation == f)
    }
}

/// Execute one scenario; when `out_dir` is set, reports are written there.
pub fn run(config: &ScenarioConfig, out_dir: Option<&Path>) -> Result<RunReport> {
    config.validate()?;
    let spec = config.dipole.to_spec();
    let mesh = segment_dipole(&spec)?;
    let voltage = Complex64::new(config.excitation.voltage_re, config.excitation.voltage_im);
    let excitation = delta_gap_excitation(&mesh, voltage);

    let images = match config.eps_r() {
        Some(eps) => Some(fit_complex_images(
            spec.wavenumber(),
            HalfSpace::new(eps),
            config.images.count,
            config.images.path_t0,
            config.images.samples,
        )?),
        None => None,
    };

    // free-space reference always, plus the scenario kernel
    let mut isolated_system = assemble(&mesh, KernelChoice::FreeSpace)?;
    isolated_system.set_excitation(&excitation);
    check_symmetry(&isolated_system, config.tolerances.matrix_symmetry)?;

    let mut scenario_system = match config.ground {
        GroundConfig::None => None,
        GroundConfig::Pec => Some(assemble(&mesh, KernelChoice::PecGround)?),
        GroundConfig::Lossy { .. } => Some(assemble(
            &mesh,
            KernelChoice::LossyGround(images.as_ref().ok_or(Error::FitMissing)?),
        )?),
    };
    if let Some(sys) = scenario_system.as_mut() {
        sys.set_excitation(&excitation);
        check_symmetry(sys, config.tolerances.matrix_symmetry)?;
    }

    let isolated_current = solve_direct(&isolated_system)?;
    let direct_current = match scenario_system.as_ref() {
        Some(sys) => solve_direct(sys)?,
        None => isolated_current.clone(),
    };
    check_direct_residual(&isolated_system, &isolated_current, &config.tolerances)?;
    if let Some(sys) = scenario_system.as_ref() {
        check_direct_residual(sys, &direct_current, &config.tolerances)?;
    }

    // modes: isolated reference first, then the requested formulations
    let mut mode_sets = vec![solve_modes(&isolated_system, Formulation::Isolated)?];
    for f in &config.formulations {
        if *f == Formulation::Isolated {
            continue;
        }
        let sys = scenario_system
            .as_ref()
            .expect("validated: ground formulations need a ground");
        mode_sets.push(solve_modes(sys, *f)?);
    }
    for set in &mode_sets {
        let sys = match set.formulation {
            Formulation::Isolated => &isolated_system,
            _ => scenario_system.as_ref().unwrap(),
        };
        check_mode_set(sys, set, &config.tolerances, config.far_field.report_modes)?;
    }

    // expansions where the power-matrix route applies
    let mut expansions = Vec::new();
    for set in &mode_sets {
        if matches!(
            set.formulation,
            Formulation::Isolated | Formulation::LossyRadiation
        ) {
            let sys = match set.formulation {
                Formulation::Isolated => &isolated_system,
                _ => scenario_system.as_ref().unwrap(),
            };
            expansions.push((set.formulation, modal_weights(set, sys)?));
        }
    }

    // error reports against the isolated reference
    let reference = mode_sets[0].clone();
    let report_k = config.far_field.report_modes.min(reference.resolved);
    let mut mode_errors = Vec::new();
    for set in mode_sets.iter().skip(1) {
        mode_errors.push(compare_mode_sets(&reference, set, report_k)?);
    }

    // orthogonality diagnostics per solved set
    let mut orthogonality = Vec::new();
    for set in &mode_sets {
        let sys = match set.formulation {
            Formulation::Isolated => &isolated_system,
            _ => scenario_system.as_ref().unwrap(),
        };
        orthogonality.push(orthogonality_report(
            set,
            sys,
            report_k,
            config.far_field.theta_nodes,
            config.far_field.phi_nodes,
        )?);
    }

    // coupling predictions (lossy ground only)
    let mut coupling = Vec::new();
    let mut coupling_errors = Vec::new();
    if let Some(cconf) = &config.coupling {
        let sys = scenario_system.as_ref().unwrap();
        let cs = interaction_powers(&mode_sets[0], sys)?;
        let radiation_modes = match mode_sets
            .iter()
            .find(|m| m.formulation == Formulation::LossyRadiation)
        {
            Some(m) => m.clone(),
            None => solve_modes(sys, Formulation::LossyRadiation)?,
        };
        for subset_conf in &cconf.subsets {
            let subset: Vec<usize> = match subset_conf {
                CouplingSubset::Keyword(_) => (0..mesh.num_basis()).collect(),
                CouplingSubset::Indices(idx) => idx.iter().map(|i| i - 1).collect(),
            };
            if subset.len() == 2 {
                let pair = first_order_pair(&cs, subset[0], subset[1], cconf.first_order_b)?;
                let report =
                    compare_mode_sets(&radiation_modes, &prediction_as_mode_set(&pair), 2)?;
                coupling_errors.push(("first_order".to_string(), report));
                coupling.push(pair);
            }
            let pred = coupled_modes(&cs, &subset)?;
            let k_cmp = subset.len().min(report_k);
            let report =
                compare_mode_sets(&radiation_modes, &prediction_as_mode_set(&pred), k_cmp)?;
            coupling_errors.push((format!("K{}", subset.len()), report));
            coupling.push(pred);
        }
    }

    // efficiency (lossy vs isolated, identical excitation)
    let efficiency = match (&config.ground, scenario_system.as_ref()) {
        (GroundConfig::Lossy { .. }, Some(sys)) => Some(ground_efficiency(
            &isolated_system,
            &isolated_current,
            sys,
            &direct_current,
        )?),
        _ => None,
    };

    // field cuts: direct current and the dominant-mode superposition
    let mut field_cuts = Vec::new();
    for cut in &config.field_cuts {
        let points: Vec<[f64; 3]> = (0..cut.points)
            .map(|i| {
                let t = i as f64 / (cut.points - 1) as f64;
                [
                    cut.start[0] + t * (cut.end[0] - cut.start[0]),
                    cut.start[1] + t * (cut.end[1] - cut.start[1]),
                    cut.start[2] + t * (cut.end[2] - cut.start[2]),
                ]
            })
            .collect();
        let kernel = match (&config.ground, images.as_ref()) {
            (GroundConfig::None, _) => KernelChoice::FreeSpace,
            (GroundConfig::Pec, _) => KernelChoice::PecGround,
            (GroundConfig::Lossy { .. }, Some(im)) => KernelChoice::LossyGround(im),
            (GroundConfig::Lossy { .. }, None) => return Err(Error::FitMissing),
        };
        let direct = near_fields(&direct_current, &mesh, kernel, &points)?;
        let wanted = if matches!(config.ground, GroundConfig::None) {
            Formulation::Isolated
        } else {
            Formulation::LossyRadiation
        };
        let modal_current = match expansions.iter().find(|(f, _)| *f == wanted) {
            Some((f, exp)) => {
                let set = mode_sets.iter().find(|m| m.formulation == *f).unwrap();
                let keep = cut.modes.min(set.n());
                let mut j = DVector::<Complex64>::zeros(mesh.num_basis());
                for k in 0..keep {
                    let jk = set.mode(k);
                    for r in 0..mesh.num_basis() {
                        j[r] += exp.coefficients[k] * jk[r];
                    }
                }
                j
            }
            None => direct_current.clone(),
        };
        let modal = near_fields(&modal_current, &mesh, kernel, &points)?;
        field_cuts.push((direct, modal));
    }

    let mut report = RunReport {
        config: config.clone(),
        mesh,
        images,
        isolated_system,
        scenario_system,
        isolated_current,
        direct_current,
        mode_sets,
        expansions,
        mode_errors,
        orthogonality,
        coupling,
        coupling_errors,
        efficiency,
        field_cuts,
        written: Vec::new(),
    };

    if let Some(dir) = out_dir.map(Path::to_path_buf).or(config.output_dir.clone()) {
        write_reports(&mut report, &dir)?;
    }
    Ok(report)
}

fn check_symmetry(sys: &ImpedanceSystem, tol: f64) -> Result<()> {
    let z = sys.z();
    let zmax = z.iter().fold(0.0, |a: f64, c| a.max(c.norm()));
    for i in 0..z.nrows() {
        for j in (i + 1)..z.ncols() {
            if (z[(i, j)] - z[(j, i)]).norm() > tol * zmax {
                return Err(Error::NumericAssertion(format!(
                    "assembled {} matrix violates Galerkin symmetry at ({i}, {j})",
                    sys.kernel
                )));
            }
        }
    }
    Ok(())
}

fn check_direct_residual(
    sys: &ImpedanceSystem,
    current: &DVector<Complex64>,
    tol: &ToleranceConfig,
) -> Result<()> {
    let v_norm = sys.v.norm();
    if v_norm == 0.0 {
        return Ok(());
    }
    let residual = (sys.z() * current - &sys.v).norm() / v_norm;
    if residual > tol.direct_residual {
        return Err(Error::NumericAssertion(format!(
            "direct solve residual {residual:.3e} exceeds {}",
            tol.direct_residual
        )));
    }
    Ok(())
}

/// Runtime checks on a solved mode set against the configured tolerances:
/// pencil residuals and pairwise weight-orthogonality of the reported
/// dominant modes (deeper modes sit at the weight matrix's resolution
/// boundary, where pairwise orthogonality is not defined at working
/// precision).
fn check_mode_set(
    sys: &ImpedanceSystem,
    set: &ModeSet,
    tol: &ToleranceConfig,
    k_check: usize,
) -> Result<()> {
    let (a, b) = match set.formulation {
        Formulation::Isolated => (sys.x_o.clone(), sys.r_o.clone()),
        Formulation::PecGround | Formulation::LossyConventional => (sys.x_total(), sys.r_total()),
        Formulation::LossyRadiation => (sys.x_total(), sys.r_o.clone()),
    };
    let (a_norm, b_norm) = (a.norm(), b.norm());
    let k = k_check.min(set.resolved);
    for i in 0..k {
        let u = set.mode(i);
        let u = &u / u.norm();
        let lam = set.eigenvalues[i];
        let res = (&a * &u - lam * (&b * &u)).norm();
        let bound = tol.eigen_residual * (a_norm + lam.abs() * b_norm);
        if res > bound {
            return Err(Error::NumericAssertion(format!(
                "{} mode {}: pencil residual {res:.3e} exceeds {bound:.3e}",
                set.formulation,
                i + 1
            )));
        }
    }
    for m in 0..k {
        let jm = set.mode(m);
        let pm = jm.dot(&(&b * &jm));
        for nref in 0..m {
            let jn = set.mode(nref);
            let pn = jn.dot(&(&b * &jn));
            let cross = jn.dot(&(&b * &jm)).abs() / (pm * pn).abs().sqrt();
            if cross > tol.orthogonality {
                return Err(Error::NumericAssertion(format!(
                    "{} modes ({}, {}): weight-orthogonality residual {cross:.3e} exceeds {}",
                    set.formulation,
                    m + 1,
                    nref + 1,
                    tol.orthogonality
                )));
            }
        }
    }
    Ok(())
}

fn write_reports(report: &mut RunReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    // merged eigenvalue table across formulations
    let path = dir.join("eigenvalues.csv");
    {
        let mut out = String::from("mode");
        for set in &report.mode_sets {
            out.push_str(&format!(",{}", set.formulation));
        }
        out.push('\n');
        for m in 0..report.mesh.num_basis() {
            out.push_str(&format!("{}", m + 1));
            for set in &report.mode_sets {
                out.push_str(&format!(",{:.8e}", set.eigenvalues[m]));
            }
            out.push('\n');
        }
        std::fs::File::create(&path)?.write_all(out.as_bytes())?;
    }
    written.push(path);

    for set in &report.mode_sets {
        let path = dir.join(format!("modes_{}.csv", set.formulation));
        set.write_csv(&path)?;
        written.push(path);
    }
    for rep in &report.mode_errors {
        let path = dir.join(format!("mode_errors_{}.csv", rep.candidate));
        rep.write_csv(&path)?;
        written.push(path);
    }
    for (set, rep) in report.mode_sets.iter().zip(&report.orthogonality) {
        let path = dir.join(format!("orthogonality_{}.csv", set.formulation));
        rep.write_csv(&path)?;
        written.push(path);
    }
    for pred in &report.coupling {
        let path = dir.join(format!("coupling_K{}.csv", pred.subset.len()));
        pred.write_csv(&path)?;
        written.push(path);
    }
    for (tag, rep) in &report.coupling_errors {
        let path = dir.join(format!("coupling_errors_{tag}.csv"));
        rep.write_csv(&path)?;
        written.push(path);
    }
    if let Some(eff) = &report.efficiency {
        let path = dir.join("efficiency.csv");
        let mut out =
            String::from("eta,p_r_iso_w,p_r_lg_w,p_in_iso_w,p_in_lg_w,r_rad_o_ohm,r_rad_lg_ohm\n");
        out.push_str(&format!(
            "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
            eff.eta, eff.p_r_iso, eff.p_r_lg, eff.p_in_iso, eff.p_in_lg, eff.r_rad_o, eff.r_rad_lg
        ));
        std::fs::File::create(&path)?.write_all(out.as_bytes())?;
        written.push(path);
    }
    for (i, (direct, modal)) in report.field_cuts.iter().enumerate() {
        let p1 = dir.join(format!("fieldcut_{i}_direct.csv"));
        direct.write_csv(&p1)?;
        written.push(p1);
        let p2 = dir.join(format!("fieldcut_{i}_modal.csv"));
        modal.write_csv(&p2)?;
        written.push(p2);
    }
    if let Some(images) = &report.images {
        let path = dir.join("images.json");
        let text = serde_json::to_string_pretty(&images.to_json())?;
        std::fs::File::create(&path)?.write_all(text.as_bytes())?;
        written.push(path);
    }

    // manifest: the resolved configuration plus the compiled-in numerics
    let path = dir.join("manifest.json");
    let manifest = serde_json::json!({
        "library": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": report.config,
        "fit_residual": report.images.as_ref().map(|i| i.fit_residual),
        "fixed_numerics": {
            "segment_gauss_points": 8,
            "static_extraction": "analytic inner integral on |m-n| <= 2 entries",
            "reduced_kernel_offset": "wire radius for all entries",
            "dcim_path": "k_z0(t) = k0[(1 - t/T0) - j t]",
            "sommerfeld_rel_tolerance": 1e-10,
        },
        "files": written
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect::<Vec<_>>(),
    });
    std::fs::File::create(&path)?
        .write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    written.push(path);

    report.written.append(&mut written);
    Ok(())
}

/// Sweep axis for repeated scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Dipole height above the interface (metres).
    Height,
    /// Real part of the ground permittivity (imaginary part kept).
    EpsReal,
    /// Operating frequency (hertz); the geometry stays fixed.
    Frequency,
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepAxis::Height => write!(f, "height_m"),
            SweepAxis::EpsReal => write!(f, "eps_re"),
            SweepAxis::Frequency => write!(f, "frequency_hz"),
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "height" => Ok(SweepAxis::Height),
            "eps-real" => Ok(SweepAxis::EpsReal),
            "frequency" => Ok(SweepAxis::Frequency),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?}; expected height, eps-real or frequency"
            ))),
        }
    }
}

pub struct SweepReport {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub runs: Vec<RunReport>,
    pub written: Vec<PathBuf>,
}

/// Run the scenario once per axis value, at most `config.workers` at a time,
/// and concatenate long-format summaries keyed by the axis.
pub fn sweep(
    config: &ScenarioConfig,
    axis: SweepAxis,
    values: &[f64],
    out_dir: Option<&Path>,
) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let monotone =
        values.windows(2).all(|w| w[0] < w[1]) || values.windows(2).all(|w| w[0] > w[1]);
    if values.len() > 1 && !monotone {
        return Err(Error::Config("sweep values must be monotone".into()));
    }

    let mut configs = Vec::with_capacity(values.len());
    for &v in values {
        let mut c = config.clone();
        c.output_dir = None;
        match axis {
            SweepAxis::Height => c.dipole.height_m = v,
            SweepAxis::Frequency => c.dipole.frequency_hz = v,
            SweepAxis::EpsReal => match &mut c.ground {
                GroundConfig::Lossy { eps_re, .. } => *eps_re = v,
                _ => {
                    return Err(Error::Config("eps-real sweep needs a lossy ground".into()));
                }
            },
        }
        c.validate()
            .map_err(|e| Error::Config(format!("{axis} = {v}: {e}")))?;
        configs.push(c);
    }

    let workers = config.workers.max(1).min(configs.len());
    let results: Vec<Result<RunReport>> = if workers == 1 {
        configs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let sub = out_dir.map(|d| d.join(format!("{axis}_{i:03}")));
                run(c, sub.as_deref())
            })
            .collect()
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<Option<Result<RunReport>>>> =
            (0..configs.len()).map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= configs.len() {
                        break;
                    }
                    let sub = out_dir.map(|d| d.join(format!("{axis}_{i:03}")));
                    let result = run(&configs[i], sub.as_deref());
                    *slots[i].lock().unwrap() = Some(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().unwrap().expect("worker filled every slot"))
            .collect()
    };

    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }

    let mut written = Vec::new();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        // modes associated across the sweep by their |λ| rank
        let path = dir.join("sweep_eigenvalues.csv");
        let mut out = format!("{axis},formulation,mode,eigenvalue\n");
        for (v, rep) in values.iter().zip(&runs) {
            for set in &rep.mode_sets {
                let k = set.resolved.min(rep.config.far_field.report_modes);
                for m in 0..k {
                    out.push_str(&format!(
                        "{:.8e},{},{},{:.8e}\n",
                        v,
                        set.formulation,
                        m + 1,
                        set.eigenvalues[m]
                    ));
                }
            }
        }
        std::fs::File::create(&path)?.write_all(out.as_bytes())?;
        written.push(path);

        if runs.iter().any(|r| r.efficiency.is_some()) {
            let path = dir.join("sweep_efficiency.csv");
            let mut out = format!("{axis},eta,p_r_iso_w,p_r_lg_w,p_in_iso_w,p_in_lg_w\n");
            for (v, rep) in values.iter().zip(&runs) {
                if let Some(e) = &rep.efficiency {
                    out.push_str(&format!(
                        "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}\n",
                        v, e.eta, e.p_r_iso, e.p_r_lg, e.p_in_iso, e.p_in_lg
                    ));
                }
            }
            std::fs::File::create(&path)?.write_all(out.as_bytes())?;
            written.push(path);
        }
    }

    Ok(SweepReport {
        axis,
        values: values.to_vec(),
        runs,
        written,
    })
}

/// Built-in scenario presets reproducing the study layouts.
pub fn preset(name: &str, frequency_hz: f64) -> Result<ScenarioConfig> {
    let lambda = wavelength(frequency_hz);
    let base_dipole = DipoleConfig {
        length_m: 0.5 * lambda,
        height_m: 0.25 * lambda,
        radius_m: None,
        frequency_hz,
        segments: 41,
    };
    let lossy = GroundConfig::Lossy {
        eps_re: 16.0,
        eps_im: -16.0,
    };
    let base = ScenarioConfig {
        dipole: base_dipole,
        ground: lossy,
        images: ImageFitConfig::default(),
        formulations: vec![],
        coupling: None,
        field_cuts: vec![],
        excitation: ExcitationConfig::default(),
        tolerances: ToleranceConfig::default(),
        far_field: FarFieldConfig::default(),
        output_dir: None,
        workers: 1,
    };
    let cfg = match name {
        // three-case eigenvalue comparison at h = λ/4
        "table1" => ScenarioConfig {
            formulations: vec![Formulation::LossyConventional, Formulation::LossyRadiation],
            ..base
        },
        // coupling predictions against the direct solve; pair with the
        // height sweep from `preset_sweep`
        "coupling-sweep" => ScenarioConfig {
            dipole: DipoleConfig {
                height_m: 0.3 * lambda,
                ..base.dipole
            },
            formulations: vec![Formulation::LossyRadiation],
            coupling: Some(CouplingConfig {
                subsets: vec![
                    CouplingSubset::Indices(vec![1, 2]),
                    CouplingSubset::Indices(vec![1, 2, 3, 4]),
                    CouplingSubset::Keyword("full".into()),
                ],
                first_order_b: FirstOrderB::Consistent,
            }),
            ..base
        },
        // ground efficiency vs height
        "efficiency" => ScenarioConfig {
            dipole: DipoleConfig {
                height_m: 0.3 * lambda,
                ..base.dipole
            },
            formulations: vec![Formulation::LossyRadiation],
            ..base
        },
        // near-field cut along x at 0.2λ above the interface
        "fields" => ScenarioConfig {
            formulations: vec![Formulation::LossyConventional, Formulation::LossyRadiation],
            field_cuts: vec![FieldCutConfig {
                start: [0.1 * lambda, 0.0, 0.2 * lambda],
                end: [2.0 * lambda, 0.0, 0.2 * lambda],
                points: 101,
                modes: 5,
            }],
            ..base
        },
        // free-space dipole for frequency sweeps across its resonance
        "frequency" => ScenarioConfig {
            ground: GroundConfig::None,
            ..base
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; available: table1, coupling-sweep, efficiency, \
                 fields, frequency"
            )));
        }
    };
    Ok(cfg)
}

/// The sweep a preset is normally paired with.
pub fn preset_sweep(name: &str, frequency_hz: f64) -> Option<(SweepAxis, Vec<f64>)> {
    let lambda = wavelength(frequency_hz);
    match name {
        "coupling-sweep" => Some((
            SweepAxis::Height,
            vec![0.3 * lambda, 1.0 * lambda, 10.0 * lambda],
        )),
        "efficiency" => Some((
            SweepAxis::Height,
            vec![0.3 * lambda, 1.0 * lambda, 10.0 * lambda, 300.0 * lambda],
        )),
        "frequency" => Some((
            SweepAxis::Frequency,
            (0..=16).map(|i| 0.8e9 + 0.4e9 * i as f64 / 16.0).collect(),
        )),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ScenarioConfig {
        let mut cfg = preset("table1", 1e9).unwrap();
        cfg.dipole.segments = 11;
        cfg.far_field = FarFieldConfig {
            theta_nodes: 16,
            phi_nodes: 8,
            report_modes: 3,
        };
        cfg
    }

    #[test]
    fn empty_config_reports_missing_fields() {
        let err = ScenarioConfig::from_json("{}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dipole"), "unhelpful message: {msg}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut value = serde_json::to_value(small_config()).unwrap();
        value["surprise"] = serde_json::json!(1);
        let text = serde_json::to_string(&value).unwrap();
        assert!(ScenarioConfig::from_json(&text).is_err());
    }

    #[test]
    fn incompatible_formulation_rejected() {
        let mut cfg = small_config();
        cfg.ground = GroundConfig::Pec;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("incompatible"));
    }

    #[test]
    fn field_cut_below_interface_rejected() {
        let mut cfg = small_config();
        cfg.field_cuts = vec![FieldCutConfig {
            start: [0.1, 0.0, 0.05],
            end: [0.5, 0.0, -0.05],
            points: 11,
            modes: 3,
        }];
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("interface"));
    }

    #[test]
    fn bad_subset_rejected() {
        let mut cfg = small_config();
        cfg.coupling = Some(CouplingConfig {
            subsets: vec![CouplingSubset::Indices(vec![0])],
            first_order_b: FirstOrderB::Consistent,
        });
        assert!(cfg.validate().is_err());
        cfg.coupling = Some(CouplingConfig {
            subsets: vec![CouplingSubset::Keyword("everything".into())],
            first_order_b: FirstOrderB::Consistent,
        });
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn run_produces_mode_sets_and_reports() {
        let cfg = small_config();
        let report = run(&cfg, None).unwrap();
        assert_eq!(report.mode_sets.len(), 3); // isolated + two lossy forms
        assert!(report.efficiency.is_some());
        assert_eq!(report.mode_errors.len(), 2);
        assert!(report.images.is_some());
    }

    #[test]
    fn single_value_sweep_equals_run() {
        let cfg = small_config();
        let single = sweep(&cfg, SweepAxis::Height, &[cfg.dipole.height_m], None).unwrap();
        let direct = run(&cfg, None).unwrap();
        assert_eq!(single.runs.len(), 1);
        assert_eq!(
            single.runs[0].mode_sets[0].eigenvalues,
            direct.mode_sets[0].eigenvalues
        );
    }

    #[test]
    fn non_monotone_sweep_rejected() {
        let cfg = small_config();
        assert!(sweep(&cfg, SweepAxis::Height, &[0.1, 0.3, 0.2], None).is_err());
        assert!(sweep(&cfg, SweepAxis::Height, &[], None).is_err());
    }

    #[test]
    fn unknown_preset_lists_options() {
        let err = preset("tableau", 1e9).unwrap_err();
        assert!(err.to_string().contains("table1"));
    }
}
