//! Scenario files: one flat TOML table per concern, presets referenced by name.
//!
//! ```toml
//! name = "perturbed"
//! seed = 7
//!
//! [grid]
//! half_width = 6.0
//! points = 33
//!
//! [coefficients]
//! kind = "radial_decay"
//! epsilon = 0.05
//! power = 1.0
//!
//! [potentials]
//! magnetic = "rotating_gaussian"
//! magnetic_strength = 1.0
//! electric = "gaussian"
//! electric_strength = 0.1
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fields::{datum, GridSpec, ScalarField, C64};
use crate::flows::{eigenmodes, EigenOptions, RunOptions, SobolevOptions, SolverOptions};
use crate::multipliers::{varphi_from, AuxMultiplier, HardyWeight, RadialProfile};
use crate::operators::{
    CoefficientField, DecayProfile, ElectricPreset, Hamiltonian, MagneticPreset, Potentials, RadialScalar,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; `0` uses every core, `1` runs sequentially.
    #[serde(default = "one_usize")]
    pub threads: usize,
    pub grid: GridSection,
    #[serde(default)]
    pub coefficients: CoefficientSection,
    #[serde(default)]
    pub potentials: PotentialSection,
    #[serde(default)]
    pub datum: DatumSection,
    #[serde(default)]
    pub multiplier: MultiplierSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub norms: NormSection,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub points: usize,
    /// Grids of the refinement study; empty means `points` and two refinements by 3/2 and 2.
    #[serde(default)]
    pub refinement: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    Identity,
    /// `a = (1 + ε⟨x⟩^{−p}) Id`
    RadialDecay,
    /// `a = (1 + ε) Id`, a perturbation that does not decay.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientSection {
    pub kind: CoefficientKind,
    pub epsilon: f64,
    pub power: f64,
    pub declared_c: f64,
}

impl Default for CoefficientSection {
    fn default() -> Self {
        Self { kind: CoefficientKind::Identity, epsilon: 0.0, power: 1.0, declared_c: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagneticKind {
    Zero,
    Rotating,
    RotatingGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElectricKind {
    Zero,
    Gaussian,
    InverseSquare,
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    pub magnetic: MagneticKind,
    pub magnetic_strength: f64,
    pub electric: ElectricKind,
    pub electric_strength: f64,
    /// Core radius of `inverse_square`.
    pub electric_core: f64,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self {
            magnetic: MagneticKind::Zero,
            magnetic_strength: 1.0,
            electric: ElectricKind::Zero,
            electric_strength: 0.0,
            electric_core: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatumKind {
    Gaussian,
    /// Eigenvector `index` of the scenario Hamiltonian, lowest first.
    Eigenmode,
    RandomBandlimited,
    /// `(−Δ)^order` of a centred Gaussian.
    LaplacianGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatumSection {
    pub kind: DatumKind,
    pub width: f64,
    pub center: [f64; 3],
    pub momentum: [f64; 3],
    pub index: usize,
    pub order: usize,
    /// Seed of `random_bandlimited`; defaults to the scenario seed.
    pub seed: Option<u64>,
    pub amplitude: f64,
}

impl Default for DatumSection {
    fn default() -> Self {
        Self {
            kind: DatumKind::Gaussian,
            width: 1.0,
            center: [0.0; 3],
            momentum: [0.0; 3],
            index: 0,
            order: 1,
            seed: None,
            amplitude: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKind {
    Classical,
    Smoothing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiKind {
    Zero,
    /// `ψ = Δφ / 4`
    QuarterLaplacian,
    GaussianBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxKind {
    None,
    GaussianBump,
    /// `ϕ = −εÃφ` from the coefficient perturbation.
    Coefficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiplierSection {
    pub phi: PhiKind,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "M")]
    pub inner_slope: f64,
    pub psi: PsiKind,
    pub psi_amp: f64,
    pub psi_width: f64,
    pub aux: AuxKind,
    pub aux_amp: f64,
    pub aux_width: f64,
    /// `one` or `inv_bracket(s)`.
    pub hardy_weight: String,
}

impl Default for MultiplierSection {
    fn default() -> Self {
        Self {
            phi: PhiKind::Classical,
            radius: 1.0,
            inner_slope: 0.5,
            psi: PsiKind::Zero,
            psi_amp: 0.5,
            psi_width: 1.5,
            aux: AuxKind::None,
            aux_amp: 1.0,
            aux_width: 1.5,
            hardy_weight: "one".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    /// Fixed step; when absent, `dt_over_h · h`.
    pub dt: Option<f64>,
    pub dt_over_h: f64,
    pub t_final: f64,
    pub snapshot_every: usize,
    /// Time at which the virial audits evaluate `Θ̈`.
    pub audit_time: f64,
    /// Horizons of the smoothing sweep; the first is the reference.
    pub horizons: Vec<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: None, dt_over_h: 0.1, t_final: 0.5, snapshot_every: 10, audit_time: 0.2, horizons: vec![1.0, 2.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub solver: f64,
    pub max_iter: usize,
    pub eigen: f64,
    pub sobolev: f64,
    pub tail_guard: f64,
    pub tail_margin: f64,
    pub step_l2: f64,
    pub hs_half: f64,
    /// Required order of the scheme-exact residuals.
    pub order: f64,
    /// Required order of the expanded identity when no gap is isolated.
    pub expanded_order: f64,
    /// Single-grid pass: residual within this multiple of the extrapolated discretization error.
    pub residual_factor: f64,
    pub hardy_trials: u64,
    pub smoothing_stability: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            solver: 1e-12,
            max_iter: 5000,
            eigen: 1e-9,
            sobolev: 1e-10,
            tail_guard: 1e-8,
            tail_margin: 0.1,
            step_l2: 1e-9,
            hs_half: 1e-6,
            order: 1.8,
            expanded_order: 1.0,
            residual_factor: 5.0,
            hardy_trials: 100,
            smoothing_stability: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormSection {
    /// Morrey exponent applied to `|datum|²`.
    pub alpha: f64,
    pub sobolev_orders: Vec<f64>,
    /// `[b_norm, v_norm]` for the certificate; measured from the potentials when absent.
    pub certificate_sizes: Option<[f64; 2]>,
}

impl Default for NormSection {
    fn default() -> Self {
        Self { alpha: 2.0, sobolev_orders: vec![0.5, 1.0], certificate_sizes: None }
    }
}

impl Scenario {
    /// Parse and validate; every message names the offending field.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(LabError::Config("empty configuration".into()));
        }
        let s: Scenario = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        let problems = s.problems();
        if problems.is_empty() {
            Ok(s)
        } else {
            Err(LabError::Config(problems.join("\n")))
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |ok: bool, field: &str, msg: &str| {
            if !ok {
                out.push(format!("{field}: {msg}"));
            }
        };
        need(!self.name.trim().is_empty() && !self.name.contains(['/', '\\']), "name", "must be a non-empty path segment");
        need(self.grid.half_width > 0.0 && self.grid.half_width.is_finite(), "grid.half_width", "must be > 0");
        for (k, &n) in std::iter::once(&self.grid.points).chain(&self.grid.refinement).enumerate() {
            let field = if k == 0 { "grid.points".to_string() } else { format!("grid.refinement[{}]", k - 1) };
            need(n >= 5 && n % 2 == 1, &field, "must be odd and at least 5");
        }
        let c = &self.coefficients;
        need(c.epsilon.is_finite() && c.epsilon.abs() < 1.0, "coefficients.epsilon", "must satisfy |ε| < 1");
        need(c.power > 0.0, "coefficients.power", "must be > 0");
        need(c.declared_c >= 1.0, "coefficients.declared_c", "must be ≥ 1");
        let p = &self.potentials;
        need(p.magnetic_strength.is_finite(), "potentials.magnetic_strength", "must be finite");
        need(p.electric_strength.is_finite(), "potentials.electric_strength", "must be finite");
        need(p.electric_core > 0.0, "potentials.electric_core", "must be > 0");
        let d = &self.datum;
        need(d.width > 0.0, "datum.width", "must be > 0");
        need(d.amplitude.is_finite() && d.amplitude != 0.0, "datum.amplitude", "must be finite and nonzero");
        let m = &self.multiplier;
        need(m.radius > 0.0, "multiplier.R", "must be > 0");
        need(m.inner_slope > 0.0, "multiplier.M", "must be > 0");
        need(m.psi_width > 0.0, "multiplier.psi_width", "must be > 0");
        need(m.aux_width > 0.0, "multiplier.aux_width", "must be > 0");
        need(HardyWeight::preset(&m.hardy_weight).is_ok(), "multiplier.hardy_weight", "expected `one` or `inv_bracket(s)`");
        let t = &self.time;
        need(t.dt.is_none_or(|v| v > 0.0), "time.dt", "must be > 0");
        need(t.dt_over_h > 0.0, "time.dt_over_h", "must be > 0");
        need(t.t_final >= 0.0, "time.t_final", "must be ≥ 0");
        need(t.snapshot_every >= 1, "time.snapshot_every", "must be ≥ 1");
        need(t.audit_time > 0.0, "time.audit_time", "must be > 0");
        need(!t.horizons.is_empty() && t.horizons.iter().all(|&h| h > 0.0), "time.horizons", "must be non-empty and positive");
        let tol = &self.tolerances;
        for (v, f) in [
            (tol.solver, "tolerances.solver"),
            (tol.eigen, "tolerances.eigen"),
            (tol.sobolev, "tolerances.sobolev"),
            (tol.tail_guard, "tolerances.tail_guard"),
            (tol.step_l2, "tolerances.step_l2"),
            (tol.hs_half, "tolerances.hs_half"),
            (tol.residual_factor, "tolerances.residual_factor"),
            (tol.smoothing_stability, "tolerances.smoothing_stability"),
        ] {
            need(v > 0.0 && v.is_finite(), f, "must be > 0");
        }
        need(tol.tail_margin > 0.0 && tol.tail_margin < 1.0, "tolerances.tail_margin", "must lie in (0, 1)");
        need(tol.max_iter >= 1, "tolerances.max_iter", "must be ≥ 1");
        need(self.norms.alpha >= 0.0, "norms.alpha", "must be ≥ 0");
        out
    }

    /// Grid at `points` nodes per axis.
    pub fn grid_at(&self, points: usize) -> Result<GridSpec> {
        GridSpec::new(self.grid.half_width, points)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        self.grid_at(self.grid.points)
    }

    /// Refinement grids; the default triple keeps the box and scales `h` by 2/3 and 1/2.
    pub fn refinement(&self) -> Vec<usize> {
        if !self.grid.refinement.is_empty() {
            return self.grid.refinement.clone();
        }
        let n = self.grid.points;
        vec![n, 3 * (n - 1) / 2 + 1, 2 * (n - 1) + 1]
    }

    /// Replace the grid by a single `points` grid.
    pub fn with_points(&self, points: usize) -> Self {
        let mut s = self.clone();
        s.grid.points = points;
        s.grid.refinement = vec![points];
        s
    }

    pub fn dt(&self, grid: &GridSpec) -> f64 {
        self.time.dt.unwrap_or(self.time.dt_over_h * grid.h())
    }

    /// Step for a run to `horizon`: a fixed `dt` as given, otherwise the
    /// largest step not above `dt_over_h · h` that divides the horizon.
    pub fn dt_for(&self, grid: &GridSpec, horizon: f64) -> f64 {
        match self.time.dt {
            Some(dt) => dt,
            None if horizon > 0.0 => horizon / (horizon / self.dt(grid)).ceil(),
            None => self.dt(grid),
        }
    }

    pub fn coefficients(&self, grid: GridSpec) -> Result<CoefficientField> {
        let c = &self.coefficients;
        let profile = match c.kind {
            CoefficientKind::Identity => return Ok(CoefficientField::identity(grid)),
            CoefficientKind::RadialDecay => DecayProfile::InvBracket(c.power),
            CoefficientKind::Constant => DecayProfile::Constant,
        };
        CoefficientField::radial(grid, RadialScalar { epsilon: c.epsilon, profile }, c.declared_c)
    }

    pub fn potentials(&self, grid: GridSpec) -> Potentials {
        let p = &self.potentials;
        let b = match p.magnetic {
            MagneticKind::Zero => MagneticPreset::Zero,
            MagneticKind::Rotating => MagneticPreset::Rotating { strength: p.magnetic_strength },
            MagneticKind::RotatingGaussian => MagneticPreset::RotatingGaussian { strength: p.magnetic_strength },
        };
        let v = match p.electric {
            ElectricKind::Zero => ElectricPreset::Zero,
            ElectricKind::Gaussian => ElectricPreset::Gaussian { amp: p.electric_strength },
            ElectricKind::InverseSquare => ElectricPreset::InverseSquare { c: p.electric_strength, core: p.electric_core },
            ElectricKind::Harmonic => ElectricPreset::Harmonic { k: p.electric_strength },
        };
        Potentials::from_presets(grid, b, v)
    }

    pub fn hamiltonian(&self, grid: GridSpec) -> Result<Hamiltonian> {
        Hamiltonian::new(self.coefficients(grid)?, self.potentials(grid))
    }

    /// Initial datum, with its eigenvalue for `eigenmode`.
    pub fn datum(&self, h: &Hamiltonian) -> Result<(ScalarField, Option<f64>)> {
        let g = *h.grid();
        let d = &self.datum;
        let (f, lambda) = match d.kind {
            DatumKind::Gaussian => (datum::gaussian(g, d.width, d.center, d.momentum), None),
            DatumKind::RandomBandlimited => (datum::random_bandlimited(g, d.seed.unwrap_or(self.seed)), None),
            DatumKind::LaplacianGaussian => (datum::laplacian_gaussian(g, d.width, d.order), None),
            DatumKind::Eigenmode => {
                let opts = EigenOptions { tol: self.tolerances.eigen, seed: self.seed, ..EigenOptions::default() };
                let mut modes = eigenmodes(h, d.index + 1, opts)?;
                let e = modes.swap_remove(d.index);
                (e.vector, Some(e.value))
            }
        };
        Ok((if d.amplitude == 1.0 { f } else { f.scaled(C64::new(d.amplitude, 0.0)) }, lambda))
    }

    pub fn phi(&self) -> Result<RadialProfile> {
        match self.multiplier.phi {
            PhiKind::Classical => Ok(RadialProfile::classical()),
            PhiKind::Smoothing => RadialProfile::smoothing(self.multiplier.radius, self.multiplier.inner_slope),
        }
    }

    pub fn psi(&self) -> Result<RadialProfile> {
        let m = &self.multiplier;
        Ok(match m.psi {
            PsiKind::Zero => RadialProfile::zero(),
            PsiKind::QuarterLaplacian => RadialProfile::ScaledLaplacian { base: Box::new(self.phi()?), factor: 0.25 },
            PsiKind::GaussianBump => RadialProfile::GaussianBump { amp: m.psi_amp, width: m.psi_width },
        })
    }

    pub fn aux(&self, h: &Hamiltonian) -> Result<Option<AuxMultiplier>> {
        let m = &self.multiplier;
        let g = *h.grid();
        Ok(match m.aux {
            AuxKind::None => None,
            AuxKind::GaussianBump => {
                Some(AuxMultiplier::from_profile(g, &RadialProfile::GaussianBump { amp: m.aux_amp, width: m.aux_width }))
            }
            AuxKind::Coefficient => Some(varphi_from(h.coefficients(), &self.phi()?, 1.0, 0.0)?.field),
        })
    }

    pub fn hardy_weight(&self) -> Result<HardyWeight> {
        HardyWeight::preset(&self.multiplier.hardy_weight)
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions { tol: self.tolerances.solver, max_iter: self.tolerances.max_iter }
    }

    pub fn sobolev(&self) -> SobolevOptions {
        SobolevOptions { tol: self.tolerances.sobolev, ..SobolevOptions::default() }
    }

    pub fn run_options(&self, grid: &GridSpec) -> RunOptions {
        RunOptions {
            dt: self.dt_for(grid, self.time.t_final),
            t_final: self.time.t_final,
            snapshot_every: self.time.snapshot_every,
            solver: self.solver(),
            sobolev: self.sobolev(),
            record_hs_half: true,
            keep_states: false,
            tail_margin: self.tolerances.tail_margin,
            tail_guard: self.tolerances.tail_guard,
        }
    }

    /// Steps from zero to the audit time.
    pub fn audit_steps(&self, grid: &GridSpec) -> usize {
        ((self.time.audit_time / self.dt(grid)).round() as usize).max(1)
    }
}
