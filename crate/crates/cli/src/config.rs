//! Run configuration: a TOML document, validated in full before any
//! computation starts. Unknown keys are rejected at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};
use torwalk::kernels::{JumpKernel, DENSITY_NAMES};
use torwalk::wrapped::TorusKernel;
use torwalk::{KernelDensity, QuadratureSpec, TorusSpec};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Laplace,
    Uniformity,
    Beta0,
    Simulate,
    Coalesce,
    Conditions,
    Audit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Laplace => "laplace",
            Command::Uniformity => "uniformity",
            Command::Beta0 => "beta0",
            Command::Simulate => "simulate",
            Command::Coalesce => "coalesce",
            Command::Conditions => "conditions",
            Command::Audit => "audit",
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; when present it must name the command being run.
    pub command: Option<String>,
    pub kernel: Option<KernelBlock>,
    pub torus: Option<TorusBlock>,
    pub scale: Option<ScaleBlock>,
    pub mc: Option<McBlock>,
    pub conditions: Option<ConditionsBlock>,
    pub audit: Option<AuditBlock>,
    pub quadrature: Option<QuadratureBlock>,
    pub output: Option<OutputBlock>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    /// `uniform`, `density`, `mixture` or `meanfield`.
    pub family: String,
    /// Fixed range.
    pub m: Option<usize>,
    /// `M = ceil(L^p)`, rounded up to even.
    pub m_power: Option<f64>,
    /// `M = (log L)^p`, rounded to the nearest even integer (at least 2).
    pub m_log_power: Option<f64>,
    /// Long-range weight of a mixture.
    pub c: Option<f64>,
    /// Density name for the `density` family.
    pub density: Option<String>,
    /// Short-range part of a mixture (fixed range).
    pub q0: Option<Box<KernelBlock>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusBlock {
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSetting {
    Finite(f64),
    Named(RhoName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhoName {
    Infinite,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleBlock {
    pub lambdas: Option<Vec<f64>>,
    /// `"infinite"` or a finite `rho >= 0`.
    pub rho: Option<RhoSetting>,
    pub alpha: Option<f64>,
    /// `v_L = (log L)^k`.
    pub v_log_power: Option<f64>,
    /// Multiples `k` of `max(L^2 / M^2, log L)`.
    pub t_multiples: Option<Vec<f64>>,
    /// Scaled coalescent times `s`.
    pub s_values: Option<Vec<f64>>,
    /// Mixture weights for `beta0`.
    pub c_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartSetting {
    Site([i64; 2]),
    Named(StartName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartName {
    Uniform,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub replicates: usize,
    pub seed: Option<u64>,
    pub lineages: Option<usize>,
    pub step_cap: Option<u64>,
    pub start: Option<StartSetting>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsBlock {
    pub m_values: Vec<usize>,
    pub delta: f64,
    pub delta_prime: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditBlock {
    /// Random `(K, theta)` draws for the character-sum bounds.
    pub draws: usize,
    pub k_max: usize,
    /// Shell parameter `J`; draws with `K <= J` skip the shell sum.
    pub j: usize,
    /// Random nonzero sites per torus size for the orthogonality check.
    pub orthogonality_points: usize,
    /// `K` for the logarithmic-sum limits.
    pub ratio_k: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureBlock {
    pub base_per_axis: usize,
    pub max_per_axis: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<String>,
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn require<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T, CliError> {
    v.as_ref().ok_or_else(|| config_err(format!("missing `{what}`")))
}

fn nonempty<'a, T>(v: &'a Option<Vec<T>>, what: &str) -> Result<&'a [T], CliError> {
    match v {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(config_err(format!("`{what}` must be a non-empty list"))),
    }
}

fn finite_all(values: &[f64], what: &str, ok: impl Fn(f64) -> bool) -> Result<(), CliError> {
    match values.iter().find(|&&v| !(v.is_finite() && ok(v))) {
        Some(v) => Err(config_err(format!("invalid value {v} in `{what}`"))),
        None => Ok(()),
    }
}

/// Smallest even integer `>= x` (at least 2).
pub fn even_ceil(x: f64) -> usize {
    let n = x.ceil().max(2.0) as usize;
    n + n % 2
}

/// Nearest even integer to `x` (at least 2; ties round up).
pub fn even_nearest(x: f64) -> usize {
    ((2.0 * (x / 2.0 + 0.5).floor()) as usize).max(2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RangeRule {
    Fixed(usize),
    Power(f64),
    LogPower(f64),
}

impl RangeRule {
    fn resolve(self, l: usize) -> usize {
        match self {
            RangeRule::Fixed(m) => m,
            RangeRule::Power(p) => even_ceil((l as f64).powf(p)),
            RangeRule::LogPower(p) => even_nearest((l as f64).ln().powf(p)),
        }
    }
}

#[derive(Debug, Clone)]
enum Family {
    Uniform,
    Density(String),
    Mixture { c: f64, q0: usize },
    Meanfield,
}

/// A validated kernel block that can be instantiated for any torus side.
#[derive(Debug, Clone)]
pub struct KernelPlan {
    family: Family,
    rule: Option<RangeRule>,
}

impl KernelPlan {
    pub fn from_block(block: &KernelBlock) -> Result<Self, CliError> {
        let given =
            [block.m.is_some(), block.m_power.is_some(), block.m_log_power.is_some()].iter().filter(|&&b| b).count();
        let rule = match (block.m, block.m_power, block.m_log_power) {
            _ if given > 1 => {
                return Err(config_err("give at most one of `kernel.m`, `kernel.m_power`, `kernel.m_log_power`"))
            }
            (Some(m), _, _) => {
                if m == 0 || m % 2 != 0 {
                    return Err(config_err(format!("kernel range M = {m} must be a positive even integer")));
                }
                Some(RangeRule::Fixed(m))
            }
            (_, Some(p), _) if p.is_finite() && p > 0.0 => Some(RangeRule::Power(p)),
            (_, _, Some(p)) if p.is_finite() && p > 0.0 => Some(RangeRule::LogPower(p)),
            (None, None, None) => None,
            _ => return Err(config_err("range exponents must be finite and positive")),
        };
        let unexpected = |field: &str, present: bool| {
            if present {
                Err(config_err(format!("`kernel.{field}` does not apply to family `{}`", block.family)))
            } else {
                Ok(())
            }
        };
        let family = match block.family.as_str() {
            "uniform" => {
                unexpected("c", block.c.is_some())?;
                unexpected("density", block.density.is_some())?;
                unexpected("q0", block.q0.is_some())?;
                Family::Uniform
            }
            "density" => {
                unexpected("c", block.c.is_some())?;
                unexpected("q0", block.q0.is_some())?;
                let name = require(&block.density, "kernel.density")?;
                if !DENSITY_NAMES.contains(&name.as_str()) {
                    return Err(config_err(format!("unknown density `{name}` (known: {})", DENSITY_NAMES.join(", "))));
                }
                Family::Density(name.clone())
            }
            "mixture" => {
                unexpected("density", block.density.is_some())?;
                let c = *require(&block.c, "kernel.c")?;
                if !(c > 0.0 && c < 1.0) {
                    return Err(config_err(format!("mixture weight c = {c} must lie in (0, 1)")));
                }
                let q0 = require(&block.q0, "kernel.q0")?;
                Family::Mixture { c, q0: Self::short_range(q0)? }
            }
            "meanfield" => {
                if given > 0 || block.c.is_some() || block.density.is_some() || block.q0.is_some() {
                    return Err(config_err("the meanfield kernel takes no parameters"));
                }
                Family::Meanfield
            }
            other => return Err(config_err(format!("unknown kernel family `{other}`"))),
        };
        Ok(KernelPlan { family, rule })
    }

    /// The `q0` block of a mixture: uniform with fixed range.
    fn short_range(block: &KernelBlock) -> Result<usize, CliError> {
        if block.family != "uniform" {
            return Err(config_err("`kernel.q0` must be a uniform kernel"));
        }
        match (block.m, block.m_power, block.m_log_power, &block.q0) {
            (Some(m), None, None, None) if m > 0 && m % 2 == 0 => Ok(m),
            _ => Err(config_err("`kernel.q0` needs a fixed even range `m` and nothing else")),
        }
    }

    pub fn is_meanfield(&self) -> bool {
        matches!(self.family, Family::Meanfield)
    }

    pub fn has_range_rule(&self) -> bool {
        self.rule.is_some()
    }

    pub fn mixture_parts(&self) -> Option<(f64, usize)> {
        match self.family {
            Family::Mixture { c, q0 } => Some((c, q0)),
            _ => None,
        }
    }

    /// `M` on a torus of side `l` (`L` for the meanfield kernel).
    pub fn range_for(&self, l: usize) -> Result<usize, CliError> {
        if self.is_meanfield() {
            return Ok(l);
        }
        let rule = self.rule.ok_or_else(|| config_err("kernel range missing: set `m`, `m_power` or `m_log_power`"))?;
        Ok(rule.resolve(l))
    }

    /// Checks `M` even and `M < L` for every side.
    pub fn check_sides(&self, sides: &[usize]) -> Result<(), CliError> {
        for &l in sides {
            let m = self.range_for(l)?;
            if !self.is_meanfield() && m >= l {
                return Err(config_err(format!("kernel range M = {m} must be smaller than L = {l}")));
            }
            if let Family::Mixture { q0, .. } = self.family {
                if q0 > m {
                    return Err(config_err(format!("q0 range {q0} exceeds M = {m} at L = {l}")));
                }
            }
        }
        Ok(())
    }

    /// The plane kernel of range `m`; `None` for the meanfield family.
    pub fn kernel(&self, m: usize, quad: &QuadratureSpec) -> Result<Option<JumpKernel<f64>>, CliError> {
        let k = match &self.family {
            Family::Uniform => JumpKernel::uniform(m)?,
            Family::Density(name) => JumpKernel::from_density_with(m, &KernelDensity::by_name(name)?, quad)?,
            Family::Mixture { c, q0 } => JumpKernel::mixture(*c, m, &JumpKernel::uniform(*q0)?)?,
            Family::Meanfield => return Ok(None),
        };
        Ok(Some(k))
    }

    pub fn torus_kernel(&self, spec: TorusSpec, quad: &QuadratureSpec) -> Result<TorusKernel<f64>, CliError> {
        let m = self.range_for(spec.side())?;
        match self.kernel(m, quad)? {
            Some(k) => Ok(TorusKernel::from_kernel(&k, spec).map_err(|e| config_err(e.to_string()))?),
            None => Ok(TorusKernel::meanfield(spec)),
        }
    }
}

pub fn torus_sides(cfg: &RunConfig) -> Result<Vec<(usize, TorusSpec)>, CliError> {
    let block = require(&cfg.torus, "torus")?;
    if block.sizes.is_empty() {
        return Err(config_err("`torus.sizes` must be a non-empty list"));
    }
    block.sizes.iter().map(|&l| TorusSpec::new(l).map(|s| (l, s)).map_err(|e| config_err(e.to_string()))).collect()
}

pub fn quadrature(cfg: &RunConfig) -> Result<QuadratureSpec, CliError> {
    let spec = match &cfg.quadrature {
        Some(q) => {
            QuadratureSpec { base_per_axis: q.base_per_axis, max_per_axis: q.max_per_axis, tolerance: q.tolerance }
        }
        None => QuadratureSpec::default(),
    };
    spec.validate().map_err(|e| config_err(e.to_string()))?;
    Ok(spec)
}

pub fn kernel_plan(cfg: &RunConfig) -> Result<KernelPlan, CliError> {
    KernelPlan::from_block(require(&cfg.kernel, "kernel")?)
}

pub fn scale(cfg: &RunConfig) -> Result<&ScaleBlock, CliError> {
    require(&cfg.scale, "scale")
}

pub fn lambdas(cfg: &RunConfig, allow_zero: bool) -> Result<Vec<f64>, CliError> {
    let l = nonempty(&scale(cfg)?.lambdas, "scale.lambdas")?;
    finite_all(l, "scale.lambdas", |v| if allow_zero { v >= 0.0 } else { v > 0.0 })?;
    Ok(l.to_vec())
}

pub fn t_multiples(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let t = nonempty(&scale(cfg)?.t_multiples, "scale.t_multiples")?;
    finite_all(t, "scale.t_multiples", |v| v >= 0.0)?;
    Ok(t.to_vec())
}

pub fn s_values(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let s = nonempty(&scale(cfg)?.s_values, "scale.s_values")?;
    finite_all(s, "scale.s_values", |v| v >= 0.0)?;
    Ok(s.to_vec())
}

pub fn c_values(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let c = nonempty(&scale(cfg)?.c_values, "scale.c_values")?;
    finite_all(c, "scale.c_values", |v| v > 0.0 && v <= 1.0)?;
    Ok(c.to_vec())
}

/// Regime of the `laplace` command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaplaceMode {
    Infinite,
    Finite { rho: f64, alpha: f64, v_log_power: f64 },
}

pub fn laplace_mode(cfg: &RunConfig) -> Result<LaplaceMode, CliError> {
    let s = scale(cfg)?;
    match require(&s.rho, "scale.rho")? {
        RhoSetting::Named(RhoName::Infinite) => {
            if s.alpha.is_some() || s.v_log_power.is_some() {
                return Err(config_err("`scale.alpha` and `scale.v_log_power` only apply when rho is finite"));
            }
            Ok(LaplaceMode::Infinite)
        }
        &RhoSetting::Finite(rho) => {
            if !(rho.is_finite() && rho >= 0.0) {
                return Err(config_err(format!("rho = {rho} must be finite and >= 0, or \"infinite\"")));
            }
            let alpha = *require(&s.alpha, "scale.alpha")?;
            if !(0.0..=1.0).contains(&alpha) {
                return Err(config_err(format!("alpha = {alpha} must lie in [0, 1]")));
            }
            let k = *require(&s.v_log_power, "scale.v_log_power")?;
            if !(k.is_finite() && k > 0.0) {
                return Err(config_err(format!("v_log_power = {k} must be finite and positive")));
            }
            Ok(LaplaceMode::Finite { rho, alpha, v_log_power: k })
        }
    }
}

pub fn mc(cfg: &RunConfig) -> Result<&McBlock, CliError> {
    let mc = require(&cfg.mc, "mc")?;
    if mc.step_cap == Some(0) {
        return Err(config_err("`mc.step_cap` must be positive"));
    }
    Ok(mc)
}

pub fn check_command(cfg: &RunConfig, command: Command) -> Result<(), CliError> {
    match &cfg.command {
        Some(name) if name != command.name() => {
            Err(config_err(format!("config is for command `{name}`, not `{}`", command.name())))
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_rounding() {
        assert_eq!(even_ceil(64f64.powf(0.8)), 28); // 27.86
        assert_eq!(even_ceil(4.0), 4);
        assert_eq!(even_ceil(4.01), 6);
        assert_eq!(even_ceil(0.3), 2);
        assert_eq!(even_nearest(64f64.ln().sqrt()), 2); // 2.04
        assert_eq!(even_nearest(3.0), 4);
        assert_eq!(even_nearest(2.9), 2);
        assert_eq!(even_nearest(0.1), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("[torus]\nsizes = [8]\nsides = [4]\n").is_err());
        assert!(parse("[kernel]\nfamily = \"uniform\"\nm = 2\nM = 4\n").is_err());
        assert!(parse("bogus = 1\n").is_err());
        assert!(parse("[torus]\nsizes = [8]\n").is_ok());
    }

    #[test]
    fn kernel_blocks() {
        let plan = |s: &str| KernelPlan::from_block(parse(s).unwrap().kernel.as_ref().unwrap());
        assert!(plan("[kernel]\nfamily = \"uniform\"\nm = 3\n").is_err());
        assert!(plan("[kernel]\nfamily = \"uniform\"\nm = 4\nm_power = 0.8\n").is_err());
        assert!(plan("[kernel]\nfamily = \"uniform\"\nm = 4\nc = 0.5\n").is_err());
        assert!(plan("[kernel]\nfamily = \"density\"\nm = 4\ndensity = \"nope\"\n").is_err());
        assert!(
            plan("[kernel]\nfamily = \"mixture\"\nm = 4\nc = 1.5\n[kernel.q0]\nfamily = \"uniform\"\nm = 2\n").is_err()
        );
        assert!(plan("[kernel]\nfamily = \"meanfield\"\nm = 4\n").is_err());
        assert!(plan("[kernel]\nfamily = \"levy\"\n").is_err());

        let p = plan("[kernel]\nfamily = \"uniform\"\nm_power = 0.8\n").unwrap();
        assert_eq!(p.range_for(64).unwrap(), 28);
        assert!(p.check_sides(&[64, 128]).is_ok());
        let p = plan("[kernel]\nfamily = \"uniform\"\nm = 8\n").unwrap();
        assert!(p.check_sides(&[8]).is_err());
        let p =
            plan("[kernel]\nfamily = \"mixture\"\nm = 4\nc = 0.5\n[kernel.q0]\nfamily = \"uniform\"\nm = 6\n").unwrap();
        assert!(p.check_sides(&[16]).is_err());
        let p = plan("[kernel]\nfamily = \"meanfield\"\n").unwrap();
        assert_eq!(p.range_for(8).unwrap(), 8);
        assert!(p.check_sides(&[8]).is_ok());
    }

    #[test]
    fn laplace_modes() {
        let mode = |s: &str| laplace_mode(&parse(s).unwrap());
        assert_eq!(mode("[scale]\nrho = \"infinite\"\n").unwrap(), LaplaceMode::Infinite);
        assert!(mode("[scale]\nrho = \"infinite\"\nalpha = 0.5\n").is_err());
        assert!(parse("[scale]\nrho = \"huge\"\n").is_err());
        assert!(mode("[scale]\nrho = 0.0\nalpha = 0.5\n").is_err());
        assert_eq!(
            mode("[scale]\nrho = 0.0\nalpha = 0.5\nv_log_power = 1.0\n").unwrap(),
            LaplaceMode::Finite { rho: 0.0, alpha: 0.5, v_log_power: 1.0 }
        );
        assert!(mode("[scale]\nrho = -1.0\nalpha = 0.5\nv_log_power = 1.0\n").is_err());
    }

    #[test]
    fn command_name_must_match() {
        let cfg = parse("command = \"laplace\"\n").unwrap();
        assert!(check_command(&cfg, Command::Laplace).is_ok());
        assert!(check_command(&cfg, Command::Audit).is_err());
    }

    #[test]
    fn start_settings() {
        let cfg = parse("[mc]\nreplicates = 10\nstart = [1, 2]\n").unwrap();
        assert_eq!(cfg.mc.unwrap().start, Some(StartSetting::Site([1, 2])));
        let cfg = parse("[mc]\nreplicates = 10\nstart = \"uniform\"\n").unwrap();
        assert_eq!(cfg.mc.unwrap().start, Some(StartSetting::Named(StartName::Uniform)));
        assert!(parse("[mc]\nreplicates = 10\nstart = \"corner\"\n").is_err());
    }
}
