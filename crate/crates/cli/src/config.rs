//! Run configuration, read from a TOML file.
//!
//! Relative paths resolve against the file's directory. Secrets never live
//! here: the live backend reads its key from the environment.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use kgau_core::bench::BenchConfig;
use kgau_core::llm::{LiveConfig, ModelProfile, SamplingConfig};
use kgau_core::promptkit::PromptMode;
use kgau_core::routine::Routine;
use kgau_core::sandbox::{BuildRecipe, ExecLimits, IntWidth};
use kgau_core::testgen::SizeProfile;
use kgau_core::verifier::{ErrorModel, VerifyOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Live,
    Mock(PathBuf),
    Replay(PathBuf),
}

impl Backend {
    /// `live`, `mock:<corpus dir>` or `replay:<store dir>`.
    pub fn parse(s: &str) -> Result<Backend, String> {
        let s = s.trim();
        if s == "live" {
            return Ok(Backend::Live);
        }
        match s.split_once(':') {
            Some(("mock", p)) if !p.is_empty() => Ok(Backend::Mock(p.into())),
            Some(("replay", p)) if !p.is_empty() => Ok(Backend::Replay(p.into())),
            _ => Err(format!("backend must be live, mock:<dir> or replay:<dir>, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildSection {
    pub compiler: String,
    pub arch_flag: String,
    pub opt_flags: Vec<String>,
    pub extra_libs: Vec<String>,
    /// `int` or `long long`.
    pub int_type: String,
    pub shim_source: Option<PathBuf>,
}

impl Default for BuildSection {
    fn default() -> Self {
        let r = BuildRecipe::default();
        BuildSection {
            compiler: r.compiler,
            arch_flag: r.arch_flag,
            opt_flags: r.opt_flags,
            extra_libs: r.extra_libs,
            int_type: "int".into(),
            shim_source: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// `default` or `small`.
    pub sizes: String,
    pub tol_multiplier: f64,
    pub arg_check: bool,
    pub strict_arg_check: bool,
    pub case_budget_ms: u64,
    /// Candidates verified at once.
    pub jobs: usize,
    pub keep_failed_builds: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            sizes: "default".into(),
            tol_multiplier: ErrorModel::default().tol_multiplier,
            arg_check: true,
            strict_arg_check: false,
            case_budget_ms: 10_000,
            jobs: std::thread::available_parallelism().map(|n| n.get().min(8)).unwrap_or(1),
            keep_failed_builds: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchSection {
    pub enabled: bool,
    #[serde(flatten)]
    pub cfg: BenchConfig,
    /// Wall-clock budget for one benchmark row.
    pub budget_secs: u64,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection { enabled: false, cfg: BenchConfig::default(), budget_secs: 600 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    output_dir: PathBuf,
    backend: String,
    #[serde(default)]
    routines: Option<Vec<String>>,
    #[serde(default)]
    modes: Option<Vec<String>>,
    #[serde(default)]
    models: Option<Vec<String>>,
    #[serde(default)]
    profiles: Vec<ModelProfile>,
    #[serde(default)]
    fortran_src_dir: Option<PathBuf>,
    #[serde(default)]
    salvage_fences: bool,
    #[serde(default)]
    sampling: SamplingConfig,
    #[serde(default)]
    live: LiveConfig,
    #[serde(default)]
    build: BuildSection,
    #[serde(default)]
    verify: VerifySection,
    #[serde(default)]
    bench: BenchSection,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub backend: Backend,
    pub routines: Vec<Routine>,
    pub modes: Vec<PromptMode>,
    pub models: Vec<ModelProfile>,
    pub fortran_src_dir: Option<PathBuf>,
    pub salvage_fences: bool,
    pub sampling: SamplingConfig,
    pub live: LiveConfig,
    pub build: BuildSection,
    pub verify: VerifySection,
    pub bench: BenchSection,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunConfig::parse(&text, base).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str, base: &Path) -> Result<RunConfig, String> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        let routines = match raw.routines {
            None => Routine::ALL.to_vec(),
            Some(v) => v.iter().map(|s| s.parse::<Routine>().map_err(|_| format!("unknown routine `{s}`"))).collect::<Result<_, _>>()?,
        };
        let modes = match raw.modes {
            None => PromptMode::ALL.to_vec(),
            Some(v) => v.iter().map(|s| s.parse::<PromptMode>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?,
        };
        let mut known = ModelProfile::builtin();
        for p in raw.profiles {
            p.validate()?;
            known.retain(|k| k.model_id != p.model_id);
            known.push(p);
        }
        let model_ids = raw.models.unwrap_or_else(|| vec!["gpt-4.1".into(), "o4-mini".into()]);
        let models = model_ids
            .iter()
            .map(|id| known.iter().find(|p| &p.model_id == id).cloned().ok_or_else(|| format!("unknown model `{id}`; add a [[profiles]] entry")))
            .collect::<Result<Vec<_>, _>>()?;
        let backend = match Backend::parse(&raw.backend)? {
            Backend::Mock(p) => Backend::Mock(resolve(base, &p)),
            Backend::Replay(p) => Backend::Replay(resolve(base, &p)),
            Backend::Live => Backend::Live,
        };
        let mut build = raw.build;
        build.shim_source = build.shim_source.map(|p| resolve(base, &p));
        let cfg = RunConfig {
            output_dir: resolve(base, &raw.output_dir),
            backend,
            routines,
            modes,
            models,
            fortran_src_dir: raw.fortran_src_dir.map(|p| resolve(base, &p)),
            salvage_fences: raw.salvage_fences,
            sampling: raw.sampling,
            live: raw.live,
            build,
            verify: raw.verify,
            bench: raw.bench,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.routines.is_empty() || self.modes.is_empty() || self.models.is_empty() {
            return Err("routines, modes and models must not be empty".into());
        }
        self.sampling.validate()?;
        if self.modes.contains(&PromptMode::FrtcodeToOptCcode) {
            let dir = self.fortran_src_dir.as_ref().ok_or("mode FrtcodeToOptCcode needs fortran_src_dir")?;
            for r in &self.routines {
                let f = dir.join(format!("{}.f", r.name()));
                if !f.is_file() {
                    return Err(format!("mode FrtcodeToOptCcode: missing {}", f.display()));
                }
            }
        }
        self.int_width()?;
        self.size_profile()?;
        if !(self.verify.tol_multiplier > 0.0) {
            return Err("verify.tol_multiplier must be positive".into());
        }
        if self.verify.jobs == 0 || self.verify.case_budget_ms == 0 {
            return Err("verify.jobs and verify.case_budget_ms must be positive".into());
        }
        self.bench.cfg.validate()?;
        Ok(())
    }

    pub fn int_width(&self) -> Result<IntWidth, String> {
        parse_int_type(&self.build.int_type)
    }

    pub fn size_profile(&self) -> Result<SizeProfile, String> {
        parse_sizes(&self.verify.sizes)
    }

    pub fn recipe(&self) -> BuildRecipe {
        BuildRecipe {
            compiler: self.build.compiler.clone(),
            arch_flag: self.build.arch_flag.clone(),
            opt_flags: self.build.opt_flags.clone(),
            extra_libs: self.build.extra_libs.clone(),
            int_width: self.int_width().unwrap_or_default(),
            shim_source: self.build.shim_source.clone(),
        }
    }

    pub fn verify_options(&self) -> VerifyOptions {
        VerifyOptions {
            error_model: ErrorModel { tol_multiplier: self.verify.tol_multiplier },
            arg_check: self.verify.arg_check,
            strict_arg_check: self.verify.strict_arg_check,
            ..VerifyOptions::default()
        }
    }

    pub fn case_limits(&self) -> ExecLimits {
        ExecLimits { case_budget: Duration::from_millis(self.verify.case_budget_ms), ..ExecLimits::default() }
    }

    pub fn bench_limits(&self) -> ExecLimits {
        ExecLimits {
            case_budget: Duration::from_secs(self.bench.budget_secs),
            threads: Some(self.bench.cfg.threads),
            ..ExecLimits::default()
        }
    }

    pub fn candidates_dir(&self) -> PathBuf {
        self.output_dir.join("candidates")
    }

    pub fn ledger_path(&self) -> PathBuf {
        self.output_dir.join("ledger.jsonl")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.output_dir.join("reports")
    }

    pub fn scratch_dir(&self) -> PathBuf {
        self.output_dir.join("scratch")
    }
}

pub fn parse_int_type(s: &str) -> Result<IntWidth, String> {
    match s.trim() {
        "int" | "i32" => Ok(IntWidth::I32),
        "long long" | "i64" => Ok(IntWidth::I64),
        other => Err(format!("build.int_type must be `int` or `long long`, got `{other}`")),
    }
}

pub fn parse_sizes(s: &str) -> Result<SizeProfile, String> {
    match s {
        "default" => Ok(SizeProfile::default()),
        "small" => Ok(SizeProfile::small()),
        other => Err(format!("verify.sizes must be `default` or `small`, got `{other}`")),
    }
}
