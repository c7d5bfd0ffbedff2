use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{check_layout, discriminator_layout, generator_layout, init_discriminator, init_generator};
use super::{DiscriminatorConfig, GeneratorConfig, ModelProfile, SeganError};
use crate::tensorgrad::{Parameter, Tensor};

pub const MAGIC: &[u8; 4] = b"SGCK";
pub const FORMAT_VERSION: u32 = 1;
const DTYPE_F32: u8 = 0;
const OPT_PREFIX: &str = "opt.";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub epochs_completed: usize,
    pub steps_completed: usize,
    pub seed: u64,
    pub corpus_fingerprint: String,
    pub init_mode: String,
    pub base_fingerprint: Option<String>,
}

/// Generator and discriminator weights with their RMSprop state.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCheckpoint {
    pub format_version: u32,
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
    pub g_params: Vec<Parameter>,
    pub d_params: Vec<Parameter>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    generator: GeneratorConfig,
    discriminator: DiscriminatorConfig,
    provenance: Provenance,
    records: usize,
}

impl ModelCheckpoint {
    /// Freshly initialized networks.
    pub fn init(profile: &ModelProfile, seed: u64) -> Result<Self, SeganError> {
        profile.validate()?;
        Ok(Self {
            format_version: FORMAT_VERSION,
            generator: profile.generator.clone(),
            discriminator: profile.discriminator.clone(),
            g_params: init_generator(&profile.generator, seed)?,
            d_params: init_discriminator(&profile.discriminator, seed)?,
            provenance: Provenance { seed, init_mode: "scratch".into(), ..Default::default() },
        })
    }

    pub fn profile(&self) -> ModelProfile {
        ModelProfile { generator: self.generator.clone(), discriminator: self.discriminator.clone() }
    }

    pub fn validate(&self) -> Result<(), SeganError> {
        self.profile().validate()?;
        check_layout(&self.g_params, &generator_layout(&self.generator))?;
        check_layout(&self.d_params, &discriminator_layout(&self.discriminator))?;
        for p in self.g_params.iter().chain(&self.d_params) {
            if p.mean_square.len() != p.tensor.len() {
                return Err(SeganError::Architecture(format!("optimizer state of {} has wrong length", p.name)));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, SeganError> {
        self.validate()?;
        let params: Vec<&Parameter> = self.g_params.iter().chain(&self.d_params).collect();
        let header = Header {
            format_version: self.format_version,
            generator: self.generator.clone(),
            discriminator: self.discriminator.clone(),
            provenance: self.provenance.clone(),
            records: 2 * params.len(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| SeganError::Config(e.to_string()))?;
        let mut out = Vec::with_capacity(64 + json.len() + params.iter().map(|p| 8 * p.tensor.len() + 64).sum::<usize>());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.format_version.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        let mut record = |name: &str, shape: &[usize], data: &[f32]| {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(DTYPE_F32);
            out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
            for &d in shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        };
        for p in &params {
            record(&p.name, p.shape(), p.tensor.data());
        }
        for p in &params {
            record(&format!("{OPT_PREFIX}{}", p.name), p.shape(), &p.mean_square);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self, SeganError> {
        let corrupt = |detail: String| SeganError::Corrupt { path: origin.to_string(), detail };
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4).ok_or_else(|| corrupt("truncated before magic".into()))?;
        if magic != MAGIC {
            return Err(corrupt(format!("bad magic {magic:?}")));
        }
        let version = r.u32().ok_or_else(|| corrupt("truncated in version".into()))?;
        if version != FORMAT_VERSION {
            return Err(SeganError::Version { path: origin.to_string(), found: version, supported: FORMAT_VERSION });
        }
        let hlen = r.u32().ok_or_else(|| corrupt("truncated in header length".into()))? as usize;
        let hbytes = r.take(hlen).ok_or_else(|| corrupt("truncated config block".into()))?;
        let header: Header = serde_json::from_slice(hbytes).map_err(|e| corrupt(format!("config block: {e}")))?;
        if header.format_version != version {
            return Err(corrupt("config block version disagrees with header".into()));
        }
        let profile = ModelProfile { generator: header.generator.clone(), discriminator: header.discriminator.clone() };
        profile.validate()?;
        let g_layout = generator_layout(&header.generator);
        let d_layout = discriminator_layout(&header.discriminator);
        let expected: Vec<(String, Vec<usize>)> = g_layout
            .iter()
            .chain(&d_layout)
            .cloned()
            .chain(g_layout.iter().chain(&d_layout).map(|(n, s)| (format!("{OPT_PREFIX}{n}"), s.clone())))
            .collect();
        if header.records != expected.len() {
            return Err(corrupt(format!("{} records declared, architecture needs {}", header.records, expected.len())));
        }
        let mut values = Vec::with_capacity(expected.len());
        for (i, (name, shape)) in expected.iter().enumerate() {
            let trunc = || corrupt(format!("truncated in record {i}"));
            let nlen = r.u32().ok_or_else(trunc)? as usize;
            let got = r.take(nlen).ok_or_else(trunc)?;
            if got != name.as_bytes() {
                return Err(corrupt(format!("record {i} is '{}', expected '{name}'", String::from_utf8_lossy(got))));
            }
            let dtype = r.take(1).ok_or_else(trunc)?[0];
            if dtype != DTYPE_F32 {
                return Err(corrupt(format!("record {name}: unknown dtype tag {dtype}")));
            }
            let rank = r.u32().ok_or_else(trunc)? as usize;
            if rank > 8 {
                return Err(corrupt(format!("record {name}: rank {rank}")));
            }
            let dims: Vec<usize> = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Option<_>>().ok_or_else(trunc)?;
            if &dims != shape {
                return Err(corrupt(format!("record {name}: shape {dims:?}, expected {shape:?}")));
            }
            let n: usize = dims.iter().product();
            let payload = r.take(4 * n).ok_or_else(trunc)?;
            values.push(payload.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect::<Vec<f32>>());
        }
        if r.pos != bytes.len() {
            return Err(corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let n_params = g_layout.len() + d_layout.len();
        let mut states = values.split_off(n_params).into_iter();
        let mut params = values
            .into_iter()
            .zip(g_layout.iter().chain(&d_layout))
            .map(|(data, (name, shape))| {
                let mut p = Parameter::new(name.clone(), Tensor::new(shape.clone(), data).expect("shape checked"));
                p.mean_square = states.next().expect("state per parameter");
                p
            })
            .collect::<Vec<_>>();
        let d_params = params.split_off(g_layout.len());
        Ok(Self {
            format_version: version,
            generator: header.generator,
            discriminator: header.discriminator,
            g_params: params,
            d_params,
            provenance: header.provenance,
        })
    }

    /// sha256 of the serialized form, hex encoded.
    pub fn fingerprint(&self) -> Result<String, SeganError> {
        Ok(hex::encode(Sha256::digest(self.to_bytes()?)))
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn save_checkpoint(ckpt: &ModelCheckpoint, path: &Path) -> Result<(), SeganError> {
    let bytes = ckpt.to_bytes()?;
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint, SeganError> {
    let bytes = std::fs::read(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    ModelCheckpoint::from_bytes(&bytes, &path.display().to_string())
}
