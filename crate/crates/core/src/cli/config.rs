//! Run configuration: flat `key = value` text with dotted keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::adapt::{AdaptSettings, PoolKind};
use crate::error::{Error, Result};
use crate::hea::{HeaConfig, InitDistribution, OptimizerConfig, Rotation};
use crate::integrals::{parse_key_values, EmbedConfig, EmbedOccupied, FockPrefactor};
use crate::oracle::EntropyConvention;

/// Prefix of environment variables overriding config keys: `adapt.grad_threshold` is
/// overridden by `MRPS_ADAPT_GRAD_THRESHOLD`.
pub const ENV_PREFIX: &str = "MRPS_";

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "method",
    "scan.method",
    "integrals",
    "rotation",
    "partition.fragments",
    "partition.electrons",
    "hea.layers",
    "hea.entangler",
    "hea.sequence",
    "hea.final_rotation",
    "fragment.number_penalty",
    "optimizer.gtol",
    "optimizer.max_evals",
    "optimizer.restarts",
    "optimizer.seed",
    "optimizer.init_low",
    "optimizer.init_high",
    "optimizer.bounds",
    "optimizer.memory",
    "adapt.pool",
    "adapt.grad_threshold",
    "adapt.max_depth",
    "embed.occ",
    "embed.prefactor",
    "oracle.sector",
    "entropy.convention",
    "output.dir",
    "run.jobs",
];

pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "_").to_ascii_uppercase())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FragmentVqe,
    Mrps,
    MrpsAdapt,
    HfAdapt,
    MrpsUccgsd,
    HfUccgsd,
    Exact,
    Scan,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::FragmentVqe,
        Method::Mrps,
        Method::MrpsAdapt,
        Method::HfAdapt,
        Method::MrpsUccgsd,
        Method::HfUccgsd,
        Method::Exact,
        Method::Scan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::FragmentVqe => "fragment-vqe",
            Method::Mrps => "mrps",
            Method::MrpsAdapt => "mrps-adapt",
            Method::HfAdapt => "hf-adapt",
            Method::MrpsUccgsd => "mrps-uccgsd",
            Method::HfUccgsd => "hf-uccgsd",
            Method::Exact => "exact",
            Method::Scan => "scan",
        }
    }

    /// Whether the method needs optimized fragment states.
    pub fn needs_mrps(self) -> bool {
        matches!(self, Method::FragmentVqe | Method::Mrps | Method::MrpsAdapt | Method::MrpsUccgsd)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("method: unknown value '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    /// Method evaluated at every point of a scan.
    pub scan_method: Method,
    pub integrals: Vec<PathBuf>,
    pub rotation: Option<PathBuf>,
    /// `(orbitals, electrons)`, e.g. `("0,2;1,3", "2,2")`; read from sidecars when absent.
    pub partition: Option<(String, String)>,
    pub hea: HeaConfig,
    pub optimizer: OptimizerConfig,
    pub adapt: AdaptSettings,
    pub pool: PoolKind,
    pub embed: EmbedConfig,
    /// Restrict the exact reference to the integrals' electron number.
    pub sector: bool,
    pub entropy: EntropyConvention,
    pub out: PathBuf,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::Exact,
            scan_method: Method::MrpsAdapt,
            integrals: Vec::new(),
            rotation: None,
            partition: None,
            hea: HeaConfig::default(),
            optimizer: OptimizerConfig::default(),
            adapt: AdaptSettings::default(),
            pool: PoolKind::QubitInter,
            embed: EmbedConfig::default(),
            sector: true,
            entropy: EntropyConvention::SpinTraced,
            out: PathBuf::from("out"),
            jobs: None,
        }
    }
}

fn field<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got '{value}'"))),
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p.trim());
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Builds a config from parsed keys; relative paths resolve against `base`.
    pub fn from_map(kv: &BTreeMap<String, String>, base: &Path) -> Result<Self> {
        if let Some(bad) = kv.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("{bad}: unknown key")));
        }
        let mut c = RunConfig::default();
        let mut init_low = None;
        let mut init_high = None;
        for (k, v) in kv {
            let key = k.as_str();
            match key {
                "method" => c.method = v.parse()?,
                "scan.method" => c.scan_method = v.parse()?,
                "integrals" => {
                    c.integrals = v.split(',').filter(|s| !s.trim().is_empty()).map(|s| resolve(base, s)).collect()
                }
                "rotation" => c.rotation = Some(resolve(base, v)),
                "partition.fragments" => {
                    let e = kv.get("partition.electrons").ok_or_else(|| {
                        Error::Config("partition.electrons: required with partition.fragments".into())
                    })?;
                    c.partition = Some((v.clone(), e.clone()));
                }
                "partition.electrons" => {
                    if !kv.contains_key("partition.fragments") {
                        return Err(Error::Config("partition.fragments: required with partition.electrons".into()));
                    }
                }
                "hea.layers" => c.hea.layers = field(key, v)?,
                "hea.entangler" => c.hea.entangler = field(key, v)?,
                "hea.sequence" => {
                    c.hea.sequence = v.split(',').map(|s| field::<Rotation>(key, s)).collect::<Result<_>>()?
                }
                "hea.final_rotation" => c.hea.final_rotation = boolean(key, v)?,
                "fragment.number_penalty" => c.hea.number_penalty = field(key, v)?,
                "optimizer.gtol" => c.optimizer.gtol = field(key, v)?,
                "optimizer.max_evals" => c.optimizer.max_evals = field(key, v)?,
                "optimizer.restarts" => c.optimizer.restarts = field(key, v)?,
                "optimizer.seed" => c.optimizer.seed = field(key, v)?,
                "optimizer.init_low" => init_low = Some(field::<f64>(key, v)?),
                "optimizer.init_high" => init_high = Some(field::<f64>(key, v)?),
                "optimizer.bounds" => {
                    c.optimizer.bounds = match v.trim() {
                        "" | "none" => None,
                        s => {
                            let (lo, hi) = s
                                .split_once(',')
                                .ok_or_else(|| Error::Config(format!("{key}: expected 'low,high'")))?;
                            Some((field(key, lo)?, field(key, hi)?))
                        }
                    }
                }
                "optimizer.memory" => c.optimizer.memory = field(key, v)?,
                "adapt.pool" => c.pool = v.parse().map_err(|_| Error::Config(format!("{key}: unknown pool '{v}'")))?,
                "adapt.grad_threshold" => c.adapt.grad_threshold = field(key, v)?,
                "adapt.max_depth" => c.adapt.max_depth = field(key, v)?,
                "embed.occ" => {
                    c.embed.occupied = match v.trim() {
                        "all_occ" => EmbedOccupied::AllOcc,
                        "env_occ" => EmbedOccupied::EnvOcc,
                        _ => return Err(Error::Config(format!("{key}: expected all_occ or env_occ, got '{v}'"))),
                    }
                }
                "embed.prefactor" => {
                    c.embed.prefactor = match v.trim() {
                        "half" | "0.5" => FockPrefactor::Half,
                        "one" | "1" => FockPrefactor::One,
                        _ => return Err(Error::Config(format!("{key}: expected half or one, got '{v}'"))),
                    }
                }
                "oracle.sector" => c.sector = boolean(key, v)?,
                "entropy.convention" => {
                    c.entropy = match v.trim() {
                        "spin_traced" => EntropyConvention::SpinTraced,
                        "halved" => EntropyConvention::Halved,
                        _ => return Err(Error::Config(format!("{key}: expected spin_traced or halved, got '{v}'"))),
                    }
                }
                "output.dir" => c.out = resolve(base, v),
                "run.jobs" => c.jobs = Some(field(key, v)?),
                _ => unreachable!("key list checked above"),
            }
        }
        if init_low.is_some() || init_high.is_some() {
            let InitDistribution::Uniform { low, high } = c.optimizer.init;
            c.optimizer.init = InitDistribution::Uniform { low: init_low.unwrap_or(low), high: init_high.unwrap_or(high) };
        }
        c.validate()?;
        Ok(c)
    }

    /// Parses config text, then applies `MRPS_*` overrides from `env`.
    pub fn from_text<I>(text: &str, base: &Path, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut kv = parse_key_values(text)?;
        let env: BTreeMap<String, String> = env.into_iter().collect();
        for key in KEYS {
            if let Some(v) = env.get(&env_name(key)) {
                kv.insert(key.to_string(), v.clone());
            }
        }
        Self::from_map(&kv, base)
    }

    /// Reads a config file against the process environment; paths resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_text(&text, base, std::env::vars())
    }

    pub fn validate(&self) -> Result<()> {
        self.hea.validate()?;
        self.optimizer.validate()?;
        if !(self.adapt.grad_threshold > 0.0) {
            return Err(Error::Config("adapt.grad_threshold: must be positive".into()));
        }
        if self.scan_method == Method::Scan {
            return Err(Error::Config("scan.method: cannot be scan".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("run.jobs: must be at least 1".into()));
        }
        if self.integrals.is_empty() {
            return Err(Error::Config("integrals: required".into()));
        }
        if self.method == Method::Scan && self.integrals.len() < 2 {
            return Err(Error::Config("integrals: scan needs at least two files".into()));
        }
        if self.method != Method::Scan && self.integrals.len() != 1 {
            return Err(Error::Config(format!("integrals: {} needs exactly one file", self.method)));
        }
        for p in self.integrals.iter().chain(&self.rotation) {
            if !p.is_file() {
                return Err(Error::Config(format!("{}: no such file", p.display())));
            }
        }
        Ok(())
    }

    /// The method evaluated at each geometry.
    pub fn point_method(&self) -> Method {
        if self.method == Method::Scan {
            self.scan_method
        } else {
            self.method
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixtures() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
    }

    #[test]
    fn sections_and_overrides() {
        let text = "method = mrps-adapt\nintegrals = h2_sto3g_r0.7414.fcidump\n[adapt]\npool = fermionic\ngrad_threshold = 1e-6\n";
        let env = vec![(env_name("adapt.grad_threshold"), "1e-5".to_string())];
        let c = RunConfig::from_text(text, &fixtures(), env).unwrap();
        assert_eq!(c.method, Method::MrpsAdapt);
        assert_eq!(c.pool, PoolKind::FermionicGsdInter);
        assert_eq!(c.adapt.grad_threshold, 1e-5);
        assert_eq!(env_name("adapt.grad_threshold"), "MRPS_ADAPT_GRAD_THRESHOLD");
    }

    #[test]
    fn field_level_errors() {
        let base = fixtures();
        let err = |t: &str| RunConfig::from_text(t, &base, Vec::new()).unwrap_err().to_string();
        assert!(err("integrals = h2_sto3g_r0.7414.fcidump\nhea.layers = x").contains("hea.layers"));
        assert!(err("integrals = h2_sto3g_r0.7414.fcidump\nbogus = 1").contains("bogus"));
        assert!(err("integrals = missing.fcidump").contains("missing.fcidump"));
        assert!(err("method = scan\nintegrals = h2_sto3g_r0.7414.fcidump").contains("integrals"));
        assert!(err("integrals = h2_sto3g_r0.7414.fcidump\npartition.fragments = 0;1").contains("partition.electrons"));
    }
}
