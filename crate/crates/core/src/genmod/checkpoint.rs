//! EAGM model container, little-endian:
//!
//! ```text
//! "EAGM" | u16 version | u8 kind tag | u8 reserved (0) | u64 seed
//! u32 n_meta    then n_meta × (str key, str value)
//! u32 n_tensors then n_tensors × (str name, u32 rows, u32 cols, f32 × rows·cols)
//! u32 n_stats   then n_stats × (str name, u32 len, f64 × len)
//! ```
//! `str` is a u32 byte length followed by UTF-8.

use std::collections::BTreeMap;
use std::path::Path;

use super::mlp::InitScheme;
use super::model::{Architecture, GenerativeModel, ModelKind};
use super::GenError;
use crate::dataio::Normalizer;
use crate::diffcore::{ParamSet, Tensor};
use crate::featx::FeatureKind;
use crate::Scalar;

pub const EAGM_MAGIC: &[u8; 4] = b"EAGM";
pub const EAGM_VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelTag {
    Vae = 1,
    Cvae = 2,
    Wgan = 3,
    Cwgan = 4,
    Svm = 16,
    Dnn = 17,
}

impl ModelTag {
    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            1 => ModelTag::Vae,
            2 => ModelTag::Cvae,
            3 => ModelTag::Wgan,
            4 => ModelTag::Cwgan,
            16 => ModelTag::Svm,
            17 => ModelTag::Dnn,
            _ => return None,
        })
    }

    pub fn is_conditional(self) -> bool {
        matches!(self, ModelTag::Cvae | ModelTag::Cwgan)
    }

    pub fn generator_kind(self) -> Option<ModelKind> {
        Some(match self {
            ModelTag::Vae => ModelKind::Vae,
            ModelTag::Cvae => ModelKind::Cvae,
            ModelTag::Wgan => ModelKind::Wgan,
            ModelTag::Cwgan => ModelKind::Cwgan,
            _ => return None,
        })
    }
}

impl From<ModelKind> for ModelTag {
    fn from(k: ModelKind) -> Self {
        match k {
            ModelKind::Vae => ModelTag::Vae,
            ModelKind::Cvae => ModelTag::Cvae,
            ModelKind::Wgan => ModelTag::Wgan,
            ModelKind::Cwgan => ModelTag::Cwgan,
        }
    }
}

/// Decoded container, independent of model family.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub tag: ModelTag,
    pub seed: u64,
    pub meta: BTreeMap<String, String>,
    pub tensors: Vec<(String, Tensor<f32>)>,
    pub stats: Vec<(String, Vec<f64>)>,
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GenError> {
        if self.bytes.len() - self.at < n {
            return Err(GenError::Checkpoint {
                offset: self.at,
                msg: format!("truncated, needed {n} more bytes"),
            });
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, GenError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, GenError> {
        let n = self.u32()? as usize;
        let at = self.at;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| GenError::Checkpoint {
            offset: at,
            msg: "string is not UTF-8".into(),
        })
    }

    fn err(&self, msg: impl Into<String>) -> GenError {
        GenError::Checkpoint { offset: self.at, msg: msg.into() }
    }
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(EAGM_MAGIC);
        out.extend_from_slice(&EAGM_VERSION.to_le_bytes());
        out.push(self.tag as u8);
        out.push(0);
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.meta.len() as u32).to_le_bytes());
        for (k, v) in &self.meta {
            put_str(&mut out, k);
            put_str(&mut out, v);
        }
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            put_str(&mut out, name);
            out.extend_from_slice(&(t.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(t.cols() as u32).to_le_bytes());
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.stats.len() as u32).to_le_bytes());
        for (name, v) in &self.stats {
            put_str(&mut out, name);
            out.extend_from_slice(&(v.len() as u32).to_le_bytes());
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, GenError> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != EAGM_MAGIC {
            return Err(GenError::Checkpoint {
                offset: 0,
                msg: "bad magic, not an EAGM checkpoint".into(),
            });
        }
        let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
        if version != EAGM_VERSION {
            return Err(GenError::Checkpoint {
                offset: 4,
                msg: format!("unsupported version {version}"),
            });
        }
        let code = r.take(1)?[0];
        let tag = ModelTag::from_code(code).ok_or_else(|| GenError::Checkpoint {
            offset: 6,
            msg: format!("unknown model tag {code}"),
        })?;
        if r.take(1)?[0] != 0 {
            return Err(GenError::Checkpoint {
                offset: 7,
                msg: "reserved byte is not zero".into(),
            });
        }
        let seed = u64::from_le_bytes(r.take(8)?.try_into().unwrap());
        let mut meta = BTreeMap::new();
        for _ in 0..r.u32()? {
            let k = r.str()?;
            let v = r.str()?;
            if meta.insert(k, v).is_some() {
                return Err(r.err("duplicate metadata key"));
            }
        }
        let mut tensors = Vec::new();
        for _ in 0..r.u32()? {
            let name = r.str()?;
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let len = rows.checked_mul(cols).filter(|&l| l > 0).ok_or_else(|| r.err("empty or oversized tensor"))?;
            let raw = r.take(len.checked_mul(4).ok_or_else(|| r.err("oversized tensor"))?)?;
            let data: Vec<f32> = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
            let t = Tensor::new(rows, cols, data).map_err(|e| r.err(e.to_string()))?;
            tensors.push((name, t));
        }
        let mut stats = Vec::new();
        for _ in 0..r.u32()? {
            let name = r.str()?;
            let len = r.u32()? as usize;
            let raw = r.take(len.checked_mul(8).ok_or_else(|| r.err("oversized stats"))?)?;
            stats.push((name, raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()));
        }
        if r.at != bytes.len() {
            return Err(r.err(format!("{} trailing bytes", bytes.len() - r.at)));
        }
        Ok(Self { tag, seed, meta, tensors, stats })
    }

    pub fn save(&self, path: &Path) -> Result<(), GenError> {
        crate::atomic_write(path, &self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GenError> {
        Self::decode(&std::fs::read(path)?)
    }

    pub fn meta(&self, key: &str) -> Result<&str, GenError> {
        self.meta.get(key).map(String::as_str).ok_or_else(|| GenError::Config(format!("checkpoint lacks `{key}`")))
    }

    pub fn meta_parse<V: std::str::FromStr>(&self, key: &str) -> Result<V, GenError> {
        let raw = self.meta(key)?;
        raw.parse().map_err(|_| GenError::Config(format!("checkpoint field `{key}` has invalid value `{raw}`")))
    }

    pub fn stat(&self, name: &str) -> Option<&[f64]> {
        self.stats.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor<f32>> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

fn list(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list(s: &str) -> Result<Vec<usize>, GenError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| p.parse().map_err(|_| GenError::Config(format!("bad width list `{s}`")))).collect()
}

impl<T: Scalar> GenerativeModel<T> {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let a = &self.arch;
        let mut meta = BTreeMap::new();
        meta.insert("kind".into(), a.kind.as_str().to_string());
        meta.insert("data_dim".into(), a.data_dim.to_string());
        meta.insert("latent_dim".into(), a.latent_dim.to_string());
        meta.insert("n_classes".into(), a.n_classes.to_string());
        meta.insert("hidden".into(), list(&a.hidden));
        meta.insert("lambda_gp".into(), a.lambda_gp.to_string());
        meta.insert("n_critic".into(), a.n_critic.to_string());
        meta.insert("init".into(), a.init.as_str().to_string());
        meta.insert("n_channels".into(), a.n_channels.to_string());
        meta.insert("n_bands".into(), a.n_bands.to_string());
        meta.insert("feature_kind".into(), a.feature_kind.as_str().to_string());
        meta.insert("epochs_trained".into(), self.epochs_trained.to_string());
        let tensors = self
            .param_sets()
            .into_iter()
            .flat_map(|p| p.iter().map(|(n, t)| (n.to_string(), Tensor::<f32>::cast(t))).collect::<Vec<_>>())
            .collect();
        let stats = match &self.norm {
            Some(n) => vec![("norm.mean".into(), n.mean().to_vec()), ("norm.std".into(), n.std().to_vec())],
            None => Vec::new(),
        };
        Checkpoint {
            tag: a.kind.into(),
            seed: self.seed,
            meta,
            tensors,
            stats,
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self, GenError> {
        let kind = ck
            .tag
            .generator_kind()
            .ok_or_else(|| GenError::Config("checkpoint does not hold a generative model".into()))?;
        let init = match ck.meta("init")? {
            "he" => InitScheme::He,
            "glorot" => InitScheme::Glorot,
            other => return Err(GenError::Config(format!("unknown init scheme `{other}`"))),
        };
        let arch = Architecture {
            kind,
            data_dim: ck.meta_parse("data_dim")?,
            latent_dim: ck.meta_parse("latent_dim")?,
            n_classes: ck.meta_parse("n_classes")?,
            hidden: parse_list(ck.meta("hidden")?)?,
            lambda_gp: ck.meta_parse("lambda_gp")?,
            n_critic: ck.meta_parse("n_critic")?,
            init,
            n_channels: ck.meta_parse("n_channels")?,
            n_bands: ck.meta_parse("n_bands")?,
            feature_kind: ck.meta_parse::<FeatureKind>("feature_kind")?,
        };
        let mut model = GenerativeModel::<T>::new(arch, ck.seed)?;
        model.epochs_trained = ck.meta_parse("epochs_trained")?;
        let expected: usize = model.param_sets().iter().map(|p| p.len()).sum();
        if expected != ck.tensors.len() {
            return Err(GenError::Config(format!("checkpoint has {} tensors, model needs {expected}", ck.tensors.len())));
        }
        for set in model.param_sets_mut() {
            fill(set, ck)?;
        }
        model.norm = match (ck.stat("norm.mean"), ck.stat("norm.std")) {
            (Some(m), Some(s)) if m.len() == s.len() => Some(Normalizer::from_parts(m.to_vec(), s.to_vec())),
            (None, None) => None,
            _ => return Err(GenError::Config("inconsistent normalization statistics".into())),
        };
        Ok(model)
    }
}

fn fill<T: Scalar>(set: &mut ParamSet<T>, ck: &Checkpoint) -> Result<(), GenError> {
    for (name, t) in set.iter_mut() {
        let src = ck.tensor(name).ok_or_else(|| GenError::MissingParam(name.to_string()))?;
        if src.shape() != t.shape() {
            return Err(GenError::Shape(format!("{name} is {:?} in the checkpoint, {:?} in the model", src.shape(), t.shape())));
        }
        *t = Tensor::cast(src);
    }
    Ok(())
}
