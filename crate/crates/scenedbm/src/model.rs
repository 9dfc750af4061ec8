//! Binary model files.
//!
//! A file starts with `SCENEDBM v1\n` and holds a sequence of sections, each
//! introduced by its name on a line of its own and closed by `END\n`:
//!
//! | section   | payload                                                    |
//! |-----------|------------------------------------------------------------|
//! | `CONFIG`  | byte length, then the config as `key = value` text         |
//! | `RBM`     | visible, hidden, then W (row-major), b, c                  |
//! | `DBM`     | p_v, p_h1, p_h2, then W₁, W₂, b, c₁, c₂                    |
//! | `SOFTMAX` | k, d, then θ (`k × (d + 1)`, row-major), λ                 |
//!
//! Counts are little-endian `u64`, parameters little-endian `f64`, so a
//! save/load round trip reproduces every parameter bit for bit.

use std::path::Path;

use scenedbm_core::dbm::DbmParams;
use scenedbm_core::rbm::RbmParams;
use scenedbm_core::softmax::SoftmaxParams;
use scenedbm_core::Matrix;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::pipeline::Model;

const MAGIC: &[u8] = b"SCENEDBM v";
const VERSION: u8 = b'1';

/// Every section a model file can hold. Only the config is mandatory.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub config: PipelineConfig,
    pub rbm: Option<RbmParams>,
    pub dbm: Option<DbmParams>,
    pub softmax: Option<SoftmaxParams>,
}

impl From<&Model> for ModelFile {
    fn from(model: &Model) -> Self {
        ModelFile {
            config: model.config.clone(),
            rbm: None,
            dbm: Some(model.dbm.clone()),
            softmax: Some(model.softmax.clone()),
        }
    }
}

impl TryFrom<ModelFile> for Model {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Model> {
        Ok(Model {
            config: file.config,
            dbm: file.dbm.ok_or_else(|| Error::Model("missing DBM section".into()))?,
            softmax: file
                .softmax
                .ok_or_else(|| Error::Model("missing SOFTMAX section".into()))?,
        })
    }
}

pub fn save_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    save_file(path, &ModelFile::from(model))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    load_file(path)?.try_into()
}

pub fn save_file(path: impl AsRef<Path>, file: &ModelFile) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(file)).map_err(|e| Error::io(path, e))
}

pub fn load_file(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

pub fn encode(file: &ModelFile) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.0.extend_from_slice(&[VERSION, b'\n']);

    w.tag("CONFIG");
    let text = file.config.to_text();
    w.count(text.len());
    w.0.extend_from_slice(text.as_bytes());

    if let Some(rbm) = &file.rbm {
        w.tag("RBM");
        w.count(rbm.visible());
        w.count(rbm.hidden());
        w.floats(rbm.w.as_slice());
        w.floats(&rbm.b);
        w.floats(&rbm.c);
    }
    if let Some(dbm) = &file.dbm {
        let (pv, ph1, ph2) = dbm.sizes();
        w.tag("DBM");
        w.count(pv);
        w.count(ph1);
        w.count(ph2);
        w.floats(dbm.w1.as_slice());
        w.floats(dbm.w2.as_slice());
        w.floats(&dbm.b);
        w.floats(&dbm.c1);
        w.floats(&dbm.c2);
    }
    if let Some(sm) = &file.softmax {
        w.tag("SOFTMAX");
        w.count(sm.classes());
        w.count(sm.features());
        w.floats(sm.theta.as_slice());
        w.floats(&[sm.lambda]);
    }
    w.tag("END");
    w.0
}

pub fn decode(bytes: &[u8]) -> Result<ModelFile> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::Model("not a model file (bad magic)".into()));
    }
    let version = r.take(2)?;
    if version[1] != b'\n' {
        return Err(Error::Model("malformed version line".into()));
    }
    if version[0] != VERSION {
        return Err(Error::UnsupportedVersion(version[0] as char));
    }

    if r.tag()? != "CONFIG" {
        return Err(Error::Model("the first section must be CONFIG".into()));
    }
    let len = r.count()?;
    let text = std::str::from_utf8(r.take(len)?).map_err(|_| Error::Model("config is not UTF-8".into()))?;
    let config: PipelineConfig = text.parse()?;

    let mut file = ModelFile {
        config,
        rbm: None,
        dbm: None,
        softmax: None,
    };
    loop {
        let tag = r.tag()?;
        let duplicate = || Error::Model(format!("duplicate {tag} section"));
        match tag.as_str() {
            "RBM" => {
                if file.rbm.is_some() {
                    return Err(duplicate());
                }
                let (pv, ph) = (r.count()?, r.count()?);
                let w = r.matrix(pv, ph)?;
                let (b, c) = (r.floats(pv)?, r.floats(ph)?);
                file.rbm = Some(RbmParams::new(w, b, c)?);
            }
            "DBM" => {
                if file.dbm.is_some() {
                    return Err(duplicate());
                }
                let (pv, ph1, ph2) = (r.count()?, r.count()?, r.count()?);
                let w1 = r.matrix(pv, ph1)?;
                let w2 = r.matrix(ph1, ph2)?;
                let (b, c1, c2) = (r.floats(pv)?, r.floats(ph1)?, r.floats(ph2)?);
                file.dbm = Some(DbmParams::new(w1, w2, b, c1, c2)?);
            }
            "SOFTMAX" => {
                if file.softmax.is_some() {
                    return Err(duplicate());
                }
                let (k, d) = (r.count()?, r.count()?);
                let theta = r.matrix(k, d.checked_add(1).ok_or(Error::Truncated)?)?;
                let lambda = r.floats(1)?[0];
                file.softmax = Some(SoftmaxParams::new(theta, lambda)?);
            }
            "END" => break,
            other => return Err(Error::Model(format!("unknown section {other:?}"))),
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Model("trailing bytes after END".into()));
    }
    Ok(file)
}

struct Writer(Vec<u8>);

impl Writer {
    fn tag(&mut self, name: &str) {
        self.0.extend_from_slice(name.as_bytes());
        self.0.push(b'\n');
    }

    fn count(&mut self, n: usize) {
        self.0.extend_from_slice(&(n as u64).to_le_bytes());
    }

    fn floats(&mut self, xs: &[f64]) {
        for x in xs {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(Error::Truncated)?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn tag(&mut self) -> Result<String> {
        let rest = &self.bytes[self.pos..];
        let end = rest.iter().take(16).position(|&b| b == b'\n');
        match end {
            Some(n) => {
                let name = String::from_utf8_lossy(&rest[..n]).into_owned();
                self.pos += n + 1;
                Ok(name)
            }
            None if rest.len() < 16 => Err(Error::Truncated),
            None => Err(Error::Model("malformed section header".into())),
        }
    }

    fn count(&mut self) -> Result<usize> {
        let raw = u64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes"));
        usize::try_from(raw).map_err(|_| Error::Model(format!("count {raw} is too large")))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or(Error::Truncated)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
            .collect())
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let n = rows.checked_mul(cols).ok_or(Error::Truncated)?;
        Ok(Matrix::from_vec(rows, cols, self.floats(n)?)?)
    }
}
