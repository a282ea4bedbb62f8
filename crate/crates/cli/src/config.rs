//! The run configuration: one JSON document, validated before any work.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hitchin_core::hyperbolic::{FuchsianSpec, FuchsianSurface};
use hitchin_core::invariants::TripleRatioIndex;
use hitchin_core::params::{BoundarySlot, HitchinParams, InternalParams, PantsDecomposition, PantsInvariants};
use hitchin_core::scalar::parse_scalar;
use hitchin_core::{Backend, Scalar, WeylChamberPoint};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// A number in the config: a JSON integer or float, or a string such as
/// "3/7", "-2" or "0.125". Floats are read through their decimal text, so 0.1
/// means 1/10 in exact mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

/// Scalars that can travel through the config format.
pub trait ConfigScalar: Scalar {
    fn read(n: &Num) -> CliResult<Self> {
        let text = match n {
            Num::Int(i) => i.to_string(),
            Num::Float(f) => format!("{f:?}"),
            Num::Text(t) => t.clone(),
        };
        parse_scalar(&text).ok_or_else(|| CliError::Input(format!("cannot read {text:?} as a number")))
    }
    fn write(&self) -> Num;
}

impl ConfigScalar for f64 {
    fn write(&self) -> Num {
        Num::Float(*self)
    }
}

impl ConfigScalar for BigRational {
    /// Always text, so exact files have one spelling per value.
    fn write(&self) -> Num {
        Num::Text(self.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendName {
    Exact,
    Float64,
}

impl From<BackendName> for Backend {
    fn from(b: BackendName) -> Self {
        match b {
            BackendName::Exact => Backend::Exact,
            BackendName::Float64 => Backend::Float64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    #[serde(default = "two")]
    pub genus: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Pants incidence table; the standard decomposition if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<Vec<[SlotEntry; 3]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameters: Option<ParametersSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracer: Option<TracerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

fn two() -> usize {
    2
}

/// One boundary slot: the curve and whether the slot agrees with the curve's
/// orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotEntry {
    pub curve: usize,
    pub agrees: bool,
}

/// Genus-2 Fuchsian surface: explicit pants-curve lengths, or `t` for three
/// equal lengths 2·arccosh(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<[Num; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twists: Option<[Num; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParametersSection {
    /// Triangle and shear invariants, one block per pants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariants: Option<Vec<InvariantsBlock>>,
    /// Sorted traceless boundary invariant per curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<Vec<Num>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal: Option<Vec<InternalBlock>>,
    /// n−1 gluing values per curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gluing: Option<Vec<Vec<Num>>>,
}

/// Keys of `tau` and `tau_prime` are "x,y,z".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantsBlock {
    pub tau: BTreeMap<String, Num>,
    pub tau_prime: BTreeMap<String, Num>,
    pub sigma_ab: Vec<Num>,
    pub sigma_ac: Vec<Num>,
    pub sigma_bc: Vec<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InternalBlock {
    pub tau: BTreeMap<String, Num>,
    pub tau_prime: BTreeMap<String, Num>,
    pub sigma_ab: Vec<Num>,
}

/// "triangle" moves every τ by one per step, "zero" stays put; otherwise one
/// explicit vector per pants in internal-coordinate order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Direction {
    Named(String),
    Explicit(Vec<Vec<Num>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub direction: Direction,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Largest accepted residual of a float equality.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

/// Default float residual tolerance.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// A parsed config together with the hash of its source text.
pub struct Loaded {
    pub config: RunConfig,
    pub sha256: String,
}

pub fn load(path: &Path) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    config.validate()?;
    let sha256 = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    Ok(Loaded { config, sha256 })
}

fn shape(what: &str, expected: usize, got: usize) -> CliResult<()> {
    if expected == got {
        Ok(())
    } else {
        Err(CliError::Input(format!("{what}: expected {expected} entries, got {got}")))
    }
}

impl RunConfig {
    /// Checks that need no arithmetic: ranges and the shapes of every block.
    pub fn validate(&self) -> CliResult<()> {
        if !(2..=8).contains(&self.n) {
            return Err(CliError::Input(format!("n must lie in 2..=8, got {}", self.n)));
        }
        if self.genus < 2 {
            return Err(CliError::Input(format!("genus must be at least 2, got {}", self.genus)));
        }
        let d = self.decomposition()?;
        let n = self.n;
        let triangles = TripleRatioIndex::all(n).len();
        if let Some(p) = &self.parameters {
            if let Some(inv) = &p.invariants {
                shape("parameters.invariants", d.num_pants(), inv.len())?;
                for b in inv {
                    shape("tau", triangles, b.tau.len())?;
                    shape("tau_prime", triangles, b.tau_prime.len())?;
                    for s in [&b.sigma_ab, &b.sigma_ac, &b.sigma_bc] {
                        shape("sigma", n - 1, s.len())?;
                    }
                }
            }
            if let Some(b) = &p.boundary {
                shape("parameters.boundary", d.num_curves(), b.len())?;
                for v in b {
                    shape("boundary invariant", n, v.len())?;
                }
            }
            if let Some(i) = &p.internal {
                shape("parameters.internal", d.num_pants(), i.len())?;
            }
            if let Some(g) = &p.gluing {
                shape("parameters.gluing", d.num_curves(), g.len())?;
                for v in g {
                    shape("gluing", n - 1, v.len())?;
                }
            }
        }
        if let Some(s) = &self.surface {
            if self.genus != 2 {
                return Err(CliError::Input("a Fuchsian surface is only available in genus 2".into()));
            }
            if s.lengths.is_some() == s.t.is_some() {
                return Err(CliError::Input("surface needs exactly one of lengths and t".into()));
            }
        }
        if let Some(ScanSection { direction: Direction::Named(name), .. }) = &self.scan {
            if name != "triangle" && name != "zero" {
                return Err(CliError::Input(format!("unknown scan direction {name:?}")));
            }
        }
        Ok(())
    }

    pub fn decomposition(&self) -> CliResult<PantsDecomposition> {
        match &self.decomposition {
            None => Ok(PantsDecomposition::standard(self.genus)?),
            Some(table) => {
                let pants = table
                    .iter()
                    .map(|row| row.map(|s| BoundarySlot { curve: s.curve, agrees: s.agrees }))
                    .collect();
                PantsDecomposition::new(self.genus, pants).map_err(|e| CliError::Input(e.to_string()))
            }
        }
    }

    pub fn parameters(&self) -> CliResult<&ParametersSection> {
        self.parameters.as_ref().ok_or_else(|| CliError::Input("config has no parameters section".into()))
    }

    pub fn residual_tol(&self) -> f64 {
        self.tolerances.as_ref().and_then(|t| t.residual).unwrap_or(RESIDUAL_TOL)
    }

    pub fn surface(&self) -> CliResult<FuchsianSurface> {
        let s = self.surface.as_ref().ok_or_else(|| CliError::Input("config has no surface section".into()))?;
        let lengths = match (&s.lengths, &s.t) {
            (Some(l), _) => [f64::read(&l[0])?, f64::read(&l[1])?, f64::read(&l[2])?],
            (None, Some(t)) => {
                let t = f64::read(t)?;
                if !(t > 1.0) {
                    return Err(CliError::Input(format!("surface t must exceed 1, got {t}")));
                }
                [2.0 * t.acosh(); 3]
            }
            (None, None) => return Err(CliError::Input("surface needs lengths or t".into())),
        };
        let twists = match &s.twists {
            Some(t) => [f64::read(&t[0])?, f64::read(&t[1])?, f64::read(&t[2])?],
            None => [0.0; 3],
        };
        Ok(FuchsianSurface::genus_two(FuchsianSpec { lengths, twists })?)
    }
}

fn index(key: &str, n: usize) -> CliResult<TripleRatioIndex> {
    let parts: Vec<usize> = key
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("bad triple-ratio key {key:?}")))?;
    match parts[..] {
        [x, y, z] => TripleRatioIndex::new(x, y, z, n).map_err(|e| CliError::Input(format!("key {key:?}: {e}"))),
        _ => Err(CliError::Input(format!("bad triple-ratio key {key:?}"))),
    }
}

fn key(i: &TripleRatioIndex) -> String {
    format!("{},{},{}", i.x, i.y, i.z)
}

fn read_map<S: ConfigScalar>(m: &BTreeMap<String, Num>, n: usize) -> CliResult<BTreeMap<TripleRatioIndex, S>> {
    m.iter().map(|(k, v)| Ok((index(k, n)?, S::read(v)?))).collect()
}

fn write_map<S: ConfigScalar>(m: &BTreeMap<TripleRatioIndex, S>) -> BTreeMap<String, Num> {
    m.iter().map(|(k, v)| (key(k), v.write())).collect()
}

pub fn read_vec<S: ConfigScalar>(v: &[Num]) -> CliResult<Vec<S>> {
    v.iter().map(S::read).collect()
}

pub fn write_vec<S: ConfigScalar>(v: &[S]) -> Vec<Num> {
    v.iter().map(|x| x.write()).collect()
}

impl InvariantsBlock {
    pub fn read<S: ConfigScalar>(&self, n: usize) -> CliResult<PantsInvariants<S>> {
        let inv = PantsInvariants {
            n,
            tau: read_map(&self.tau, n)?,
            tau_prime: read_map(&self.tau_prime, n)?,
            sigma_ab: read_vec(&self.sigma_ab)?,
            sigma_ac: read_vec(&self.sigma_ac)?,
            sigma_bc: read_vec(&self.sigma_bc)?,
        };
        inv.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(inv)
    }

    pub fn write<S: ConfigScalar>(inv: &PantsInvariants<S>) -> Self {
        Self {
            tau: write_map(&inv.tau),
            tau_prime: write_map(&inv.tau_prime),
            sigma_ab: write_vec(&inv.sigma_ab),
            sigma_ac: write_vec(&inv.sigma_ac),
            sigma_bc: write_vec(&inv.sigma_bc),
        }
    }
}

impl InternalBlock {
    pub fn read<S: ConfigScalar>(&self, n: usize) -> CliResult<InternalParams<S>> {
        let p = InternalParams {
            tau: read_map(&self.tau, n)?,
            tau_prime: read_map(&self.tau_prime, n)?,
            sigma_ab: read_vec(&self.sigma_ab)?,
        };
        p.validate(n).map_err(|e| CliError::Input(e.to_string()))?;
        Ok(p)
    }

    pub fn write<S: ConfigScalar>(p: &InternalParams<S>) -> Self {
        Self {
            tau: write_map(&p.tau),
            tau_prime: write_map(&p.tau_prime),
            sigma_ab: write_vec(&p.sigma_ab),
        }
    }
}

impl ParametersSection {
    pub fn invariants<S: ConfigScalar>(&self, n: usize) -> CliResult<Vec<PantsInvariants<S>>> {
        let blocks = self
            .invariants
            .as_ref()
            .ok_or_else(|| CliError::Input("parameters.invariants is missing".into()))?;
        blocks.iter().map(|b| b.read(n)).collect()
    }

    pub fn boundary<S: ConfigScalar>(&self) -> CliResult<Option<Vec<WeylChamberPoint<S>>>> {
        let Some(b) = &self.boundary else { return Ok(None) };
        b.iter()
            .map(|v| WeylChamberPoint::new(read_vec(v)?).map_err(|e| CliError::Input(format!("boundary invariant: {e}"))))
            .collect::<CliResult<Vec<_>>>()
            .map(Some)
    }

    /// Gluing values, zero when absent.
    pub fn gluing<S: ConfigScalar>(&self, n: usize, curves: usize) -> CliResult<Vec<Vec<S>>> {
        match &self.gluing {
            Some(g) => g.iter().map(|v| read_vec(v)).collect(),
            None => Ok(vec![vec![S::zero(); n - 1]; curves]),
        }
    }

    /// Coordinates from the boundary, internal and gluing blocks.
    pub fn coordinates<S: ConfigScalar>(&self, config: &RunConfig) -> CliResult<HitchinParams<S>> {
        let d = config.decomposition()?;
        let boundary = self
            .boundary()?
            .ok_or_else(|| CliError::Input("parameters.boundary is missing".into()))?;
        let internal = self
            .internal
            .as_ref()
            .ok_or_else(|| CliError::Input("parameters.internal is missing".into()))?
            .iter()
            .map(|b| b.read(config.n))
            .collect::<CliResult<_>>()?;
        Ok(HitchinParams {
            n: config.n,
            boundary,
            internal,
            gluing: self.gluing(config.n, d.num_curves())?,
            decomposition: d,
        })
    }

    pub fn from_coordinates<S: ConfigScalar>(p: &HitchinParams<S>) -> Self {
        Self {
            invariants: None,
            boundary: Some(p.boundary.iter().map(|b| write_vec(b.entries())).collect()),
            internal: Some(p.internal.iter().map(InternalBlock::write).collect()),
            gluing: Some(p.gluing.iter().map(|g| write_vec(g)).collect()),
        }
    }

    pub fn from_invariants<S: ConfigScalar>(
        inv: &[PantsInvariants<S>],
        boundary: Option<&[WeylChamberPoint<S>]>,
        gluing: &[Vec<S>],
    ) -> Self {
        Self {
            invariants: Some(inv.iter().map(InvariantsBlock::write).collect()),
            boundary: boundary.map(|b| b.iter().map(|p| write_vec(p.entries())).collect()),
            internal: None,
            gluing: Some(gluing.iter().map(|g| write_vec(g)).collect()),
        }
    }
}
