//! A content-addressed directory of verified codes, specs and density
//! descriptions. Each entry is one JSON document named after its id; entries
//! re-verify and re-hash on load.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complement::{
    verify_complement, CandidateRange, CodeCatalog, CoverCertificate, CoverInstance, Method,
    Optimality,
};
use crate::density::{verify_rational_encoding, DensityParams};
use crate::error::{Error, Result};
use crate::fractal::{build_uniform_spec, FractalSpec, SpecKind, Stage};
use crate::ternary::{BlockCode, PatternSet};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the catalog directory.
pub const CATALOG_ENV: &str = "COMPLEMENT_FORGE_CATALOG";

pub const DEFAULT_CATALOG_DIR: &str = ".complement-forge";

pub const SOLVER_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Block sets listed in the literature, MSB-first.
pub const SEED_CODES: [&[&str]; 5] = [
    &["0", "1"],
    &["00", "02", "11"],
    &["000", "002", "021", "110", "112"],
    &[
        "0000", "0002", "0011", "0200", "0202", "0211", "1100", "1102", "1111",
    ],
    &[
        "00000", "00002", "00021", "00112", "00210", "01221", "02012", "02110", "02201", "10212",
        "11010", "11101", "11120", "11122",
    ],
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Paper,
    Solver,
    User,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Source,
    pub solver_version: String,
    pub budget_nodes: Option<u64>,
    pub budget_secs: Option<u64>,
    /// Seconds since the Unix epoch; absent for seed entries.
    pub timestamp: Option<u64>,
}

impl Provenance {
    pub fn paper() -> Self {
        Self {
            source: Source::Paper,
            solver_version: SOLVER_VERSION.into(),
            budget_nodes: None,
            budget_secs: None,
            timestamp: None,
        }
    }

    pub fn solver(budget_nodes: Option<u64>, budget_secs: Option<u64>) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
        Self {
            source: Source::Solver,
            solver_version: SOLVER_VERSION.into(),
            budget_nodes,
            budget_secs,
            timestamp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// `allowed[j]` constrains the `3^j` digit.
    pub pattern: Vec<Vec<u8>>,
    pub code: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Payload {
    Complement {
        k: u32,
        range: CandidateRange,
        code: Vec<i64>,
        method: Method,
        optimal: Optimality,
        gamma: f64,
    },
    Spec {
        spec_kind: SpecKind,
        stages: Vec<StageRecord>,
    },
    Density {
        alpha: String,
        n: u64,
        r: u64,
        s: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub schema: u32,
    pub id: String,
    pub label: Option<String>,
    #[serde(flatten)]
    pub payload: Payload,
    pub provenance: Provenance,
    /// SHA-256 of the re-verified certificate.
    pub digest: String,
}

impl CatalogEntry {
    pub fn complement(cert: &CoverCertificate, provenance: Provenance) -> Result<Self> {
        let inst = cert.instance();
        if inst.base_set() != CoverInstance::half_cantor(inst.k())?.base_set() {
            return Err(Error::InvalidInput(
                "catalog stores complements of the digits-{0,1} blocks".into(),
            ));
        }
        let k = inst.k();
        let payload = Payload::Complement {
            k,
            range: inst.range(),
            code: cert.solution().values().to_vec(),
            method: cert.method(),
            optimal: cert.optimal(),
            gamma: (cert.size() as f64).ln() / (k as f64 * 3f64.ln()),
        };
        Self::sealed(payload, provenance)
    }

    pub fn spec(spec: &FractalSpec, provenance: Provenance) -> Result<Self> {
        let stages = spec
            .stages()
            .iter()
            .map(|st| StageRecord {
                pattern: st.pattern().allowed().to_vec(),
                code: st.code().values().to_vec(),
            })
            .collect();
        Self::sealed(
            Payload::Spec {
                spec_kind: spec.kind(),
                stages,
            },
            provenance,
        )
    }

    pub fn density(alpha: &str, n: u64, r: u64, s: u64, provenance: Provenance) -> Result<Self> {
        Self::sealed(
            Payload::Density {
                alpha: alpha.into(),
                n,
                r,
                s,
            },
            provenance,
        )
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.into());
        self
    }

    fn sealed(payload: Payload, provenance: Provenance) -> Result<Self> {
        let digest = certify(&payload)?;
        Ok(Self {
            schema: SCHEMA_VERSION,
            id: digest[..16].to_string(),
            label: None,
            payload,
            provenance,
            digest,
        })
    }

    /// Re-verifies the payload and compares digests.
    pub fn check(&self) -> Result<()> {
        let tampered = |reason: String| Error::Tampered {
            id: self.id.clone(),
            reason,
        };
        if self.schema != SCHEMA_VERSION {
            return Err(tampered(format!("schema {} is not {SCHEMA_VERSION}", self.schema)));
        }
        let digest = certify(&self.payload).map_err(|e| tampered(e.to_string()))?;
        if digest != self.digest {
            return Err(tampered("digest mismatch".into()));
        }
        if !self.digest.starts_with(&self.id) {
            return Err(tampered("id does not match digest".into()));
        }
        Ok(())
    }

    /// The verified certificate of a complement entry.
    pub fn certificate(&self) -> Result<CoverCertificate> {
        match &self.payload {
            Payload::Complement {
                k,
                range,
                code,
                method,
                optimal,
                ..
            } => Ok(verify_entry_code(*k, *range, code)?.with_status(*method, *optimal)),
            _ => Err(Error::InvalidInput(format!("{} is not a complement entry", self.id))),
        }
    }

    /// The fractal spec of a spec entry, or the uniform spec of a complement.
    pub fn fractal_spec(&self) -> Result<FractalSpec> {
        match &self.payload {
            Payload::Complement { .. } => build_uniform_spec(&self.certificate()?),
            Payload::Spec { spec_kind, stages } => rebuild_spec(*spec_kind, stages),
            Payload::Density { .. } => {
                Err(Error::InvalidInput(format!("{} is a density entry", self.id)))
            }
        }
    }
}

fn verify_entry_code(k: u32, range: CandidateRange, code: &[i64]) -> Result<CoverCertificate> {
    let base = CoverInstance::half_cantor(k)?.base_set().clone();
    let inst = CoverInstance::new(base, range)?;
    verify_complement(&inst, &BlockCode::new(k, code.to_vec())?)?.into_result()
}

fn rebuild_spec(kind: SpecKind, stages: &[StageRecord]) -> Result<FractalSpec> {
    let built: Vec<Stage> = stages
        .iter()
        .map(|s| {
            let p = PatternSet::new(s.pattern.clone())?;
            Stage::new(p.clone(), &BlockCode::new(p.k(), s.code.clone())?)
        })
        .collect::<Result<_>>()?;
    FractalSpec::from_stages(kind, built)
}

/// Re-verifies a payload and hashes its canonical certificate.
fn certify(payload: &Payload) -> Result<String> {
    let mut h = Sha256::new();
    h.update(format!("schema:{SCHEMA_VERSION}\n"));
    match payload {
        Payload::Complement {
            k,
            range,
            code,
            method,
            optimal,
            ..
        } => {
            let cert = verify_entry_code(*k, *range, code)?;
            h.update(format!("complement:{k}:{range:?}:{code:?}:{method}:{optimal}\n"));
            h.update(serde_json::to_vec(cert.witnesses())?);
        }
        Payload::Spec { spec_kind, stages } => {
            let spec = rebuild_spec(*spec_kind, stages)?;
            h.update(format!("spec:{spec_kind:?}\n"));
            for st in spec.stages() {
                h.update(format!("{:?}:{:?}\n", st.pattern().allowed(), st.code().values()));
                h.update(serde_json::to_vec(st.certificate().witnesses())?);
            }
        }
        Payload::Density { alpha, n, r, s } => {
            let params = DensityParams::from_alpha_str(alpha)?;
            let check = verify_rational_encoding(&params, *r, *s, *n)?;
            if !check.passed {
                return Err(Error::InvalidInput(format!(
                    "⌊{r}y/{s}⌋ disagrees with A at y = {}",
                    check.counterexamples[0].0
                )));
            }
            h.update(format!("density:{alpha}:{n}:{r}:{s}\n"));
        }
    }
    Ok(hex::encode(h.finalize()))
}

/// Limits and defaults for a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub precision_cap_bits: u32,
    pub budget_nodes: Option<u64>,
    pub budget_secs: Option<u64>,
    pub enumeration_cap: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            precision_cap_bits: crate::density::DEFAULT_PRECISION_CAP,
            budget_nodes: None,
            budget_secs: Some(600),
            enumeration_cap: crate::ternary::DEFAULT_ENUMERATION_CAP,
            seed: 0,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.precision_cap_bits == 0
            || self.enumeration_cap == 0
            || self.budget_nodes == Some(0)
            || self.budget_secs == Some(0)
        {
            return Err(Error::InvalidInput("all caps must be positive".into()));
        }
        Ok(())
    }

    pub fn budget(&self) -> crate::complement::Budget {
        crate::complement::Budget {
            max_nodes: self.budget_nodes,
            max_time: self.budget_secs.map(std::time::Duration::from_secs),
        }
    }
}

/// A directory of entries.
#[derive(Clone, Debug)]
pub struct Catalog {
    dir: PathBuf,
}

impl Catalog {
    /// `$COMPLEMENT_FORGE_CATALOG`, else `./.complement-forge`.
    pub fn default_dir() -> PathBuf {
        std::env::var_os(CATALOG_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CATALOG_DIR))
    }

    /// Opens (creating if needed) and installs the seed codes.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let cat = Self {
            dir: dir.as_ref().to_path_buf(),
        };
        fs::create_dir_all(&cat.dir)?;
        for (i, blocks) in SEED_CODES.iter().enumerate() {
            let entry = seed_entry(i as u32 + 1, blocks)?;
            if !cat.path_of(&entry.id).exists() {
                cat.save(&entry)?;
            }
        }
        Ok(cat)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_of(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    /// Writes to a temporary file in the same directory, then renames.
    /// Writes atomically. A label already stored under the same id is kept.
    pub fn save(&self, entry: &CatalogEntry) -> Result<()> {
        entry.check()?;
        let final_path = self.path_of(&entry.id);
        if entry.label.is_none() {
            if let Ok(old) = self.read(&final_path) {
                if let Some(label) = &old.label {
                    return self.save(&entry.clone().with_label(label));
                }
            }
        }
        let tmp = self.dir.join(format!(".{}.{}.tmp", entry.id, std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&serde_json::to_vec_pretty(entry)?)?;
            f.write_all(b"\n")?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &final_path)?;
        Ok(())
    }

    fn read(&self, path: &Path) -> Result<CatalogEntry> {
        let entry: CatalogEntry = serde_json::from_slice(&fs::read(path)?)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        if stem != entry.id {
            return Err(Error::Tampered {
                id: stem.into(),
                reason: "file name does not match id".into(),
            });
        }
        entry.check()?;
        Ok(entry)
    }

    /// Looks up by id, label, or digest prefix.
    pub fn load(&self, key: &str) -> Result<CatalogEntry> {
        let direct = self.path_of(key);
        if direct.exists() {
            return self.read(&direct);
        }
        let matches: Vec<CatalogEntry> = self
            .list()?
            .into_iter()
            .filter(|e| e.label.as_deref() == Some(key) || e.digest.starts_with(key))
            .collect();
        match matches.len() {
            0 => Err(Error::MissingEntry(key.into())),
            1 => Ok(matches.into_iter().next().expect("one match")),
            _ => Err(Error::InvalidInput(format!("{key} is ambiguous"))),
        }
    }

    /// Every entry, verified, sorted by id.
    pub fn list(&self) -> Result<Vec<CatalogEntry>> {
        let mut out = Vec::new();
        for item in fs::read_dir(&self.dir)? {
            let path = item?.path();
            let is_entry = path.extension().is_some_and(|e| e == "json")
                && !path
                    .file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with('.'));
            if is_entry {
                out.push(self.read(&path)?);
            }
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    /// Smallest stored non-negative complement for `k`; proven optima win ties.
    pub fn best_complement(&self, k: u32) -> Result<Option<CatalogEntry>> {
        let mut best: Option<(usize, bool, CatalogEntry)> = None;
        for e in self.list()? {
            if let Payload::Complement {
                k: ek,
                range: CandidateRange::Nonneg,
                code,
                optimal,
                ..
            } = &e.payload
            {
                if *ek != k {
                    continue;
                }
                let key = (code.len(), *optimal != Optimality::ProvenOptimal);
                if best.as_ref().is_none_or(|b| key < (b.0, b.1)) {
                    best = Some((key.0, key.1, e.clone()));
                }
            }
        }
        Ok(best.map(|b| b.2))
    }

    /// Resolves `uniform-k3` to the spec of the best complement for `k = 3`,
    /// otherwise loads a stored entry.
    pub fn resolve_spec(&self, key: &str) -> Result<FractalSpec> {
        if let Some(k) = key.strip_prefix("uniform-k").and_then(|k| k.parse::<u32>().ok()) {
            return self
                .best_complement(k)?
                .ok_or_else(|| Error::MissingEntry(key.into()))?
                .fractal_spec();
        }
        self.load(key)?.fractal_spec()
    }
}

impl CodeCatalog for Catalog {
    fn best_for(&self, k: u32) -> Option<(BlockCode, Optimality)> {
        let e = self.best_complement(k).ok()??;
        let cert = e.certificate().ok()?;
        Some((cert.solution().clone(), cert.optimal()))
    }
}

fn seed_entry(k: u32, blocks: &[&str]) -> Result<CatalogEntry> {
    let inst = CoverInstance::half_cantor(k)?;
    let cert = verify_complement(&inst, &BlockCode::parse(blocks)?)?
        .into_result()?
        .with_status(Method::External, Optimality::ProvenOptimal);
    Ok(CatalogEntry::complement(&cert, Provenance::paper())?.with_label(&format!("B{k}")))
}

/// The five literature codes as verified seed entries.
pub fn seed_entries() -> Result<Vec<CatalogEntry>> {
    SEED_CODES
        .iter()
        .enumerate()
        .map(|(i, b)| seed_entry(i as u32 + 1, b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complement::greedy_complement;

    #[test]
    fn seeds_verify() {
        let seeds = seed_entries().unwrap();
        let sizes: Vec<usize> = seeds.iter().map(|e| e.certificate().unwrap().size()).collect();
        assert_eq!(sizes, vec![2, 3, 5, 9, 14]);
        for e in &seeds {
            e.check().unwrap();
            assert_eq!(e.provenance.source, Source::Paper);
        }
    }

    #[test]
    fn round_trip_and_tamper() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path()).unwrap();
        assert_eq!(cat.list().unwrap().len(), 5);
        let b3 = cat.load("B3").unwrap();
        assert_eq!(cat.load(&b3.id).unwrap(), b3);
        assert_eq!(cat.load(&b3.digest[..20]).unwrap(), b3);

        let g = greedy_complement(&CoverInstance::half_cantor(6).unwrap()).unwrap();
        let e = CatalogEntry::complement(&g, Provenance::solver(None, Some(5))).unwrap();
        cat.save(&e).unwrap();
        assert_eq!(cat.load(&e.id).unwrap(), e);
        assert_eq!(cat.best_complement(3).unwrap().unwrap().label.as_deref(), Some("B3"));

        // Drop one element from B3 on disk.
        let path = cat.dir().join(format!("{}.json", b3.id));
        let text = std::fs::read_to_string(&path).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["code"].as_array_mut().unwrap().pop();
        std::fs::write(&path, serde_json::to_vec(&v).unwrap()).unwrap();
        assert!(matches!(cat.load(&b3.id), Err(Error::Tampered { .. })));

        // A different but valid code under the old digest is also caught.
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["code"] = serde_json::json!([0, 1, 2, 5, 7, 9, 12, 14]);
        std::fs::write(&path, serde_json::to_vec(&v).unwrap()).unwrap();
        assert!(matches!(cat.load(&b3.id), Err(Error::Tampered { .. })));
    }

    #[test]
    fn resolves_uniform_specs() {
        let dir = tempfile::tempdir().unwrap();
        let cat = Catalog::open(dir.path()).unwrap();
        let spec = cat.resolve_spec("uniform-k3").unwrap();
        assert_eq!(spec.stages()[0].code().len(), 5);
        assert!(cat.resolve_spec("uniform-k9").is_err());
        let entry = CatalogEntry::spec(&spec, Provenance::paper()).unwrap();
        cat.save(&entry).unwrap();
        assert_eq!(cat.resolve_spec(&entry.id).unwrap().stages()[0].code(), spec.stages()[0].code());
        assert_eq!(cat.best_for(5).unwrap().0.len(), 14);
    }

    #[test]
    fn density_entries() {
        // 16/5 > 1/D: ⌊16·5/5⌋ = 16 but ⌊5/D⌋ = 15.
        assert!(CatalogEntry::density("0.8", 100, 16, 5, Provenance::paper()).is_err());
        let p = DensityParams::from_alpha_str("0.8").unwrap();
        let (r, s) = crate::density::best_rational(&p, 100).unwrap();
        CatalogEntry::density("0.8", 100, r, s, Provenance::paper()).unwrap().check().unwrap();
    }

    #[test]
    fn run_config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = RunConfig {
            budget_nodes: Some(0),
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
