//! Versioned binary model containers: `.aem` for the autoencoder, `.cnm`
//! for the CNN. Layout is magic, u32 version, dimensions, then flat
//! little-endian f64 arrays; round-trips are bit-identical.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::detectors::ae::{AeModel, AeThreshold};
use crate::detectors::cnn::CnnModel;
use crate::error::{Error, Result};

const AE_MAGIC: [u8; 4] = *b"JSAE";
const CNN_MAGIC: [u8; 4] = *b"JSCN";
const VERSION: u32 = 1;

struct Reader<R: Read> {
    inner: R,
    what: &'static str,
}

impl<R: Read> Reader<R> {
    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.inner
            .read_exact(&mut b)
            .map_err(|_| Error::Format(format!("{}: truncated", self.what)))?;
        Ok(u32::from_le_bytes(b))
    }

    fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.inner
            .read_exact(&mut b)
            .map_err(|_| Error::Format(format!("{}: truncated", self.what)))?;
        Ok(f64::from_le_bytes(b))
    }

    fn byte(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.inner
            .read_exact(&mut b)
            .map_err(|_| Error::Format(format!("{}: truncated", self.what)))?;
        Ok(b[0])
    }

    fn f64_array(&mut self, len: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0f64; len];
        let mut b = [0u8; 8];
        for v in out.iter_mut() {
            self.inner
                .read_exact(&mut b)
                .map_err(|_| Error::Format(format!("{}: truncated array", self.what)))?;
            *v = f64::from_le_bytes(b);
        }
        Ok(out)
    }

    fn expect_eof(&mut self) -> Result<()> {
        let mut b = [0u8; 1];
        match self.inner.read(&mut b) {
            Ok(0) => Ok(()),
            _ => Err(Error::Format(format!("{}: trailing bytes", self.what))),
        }
    }
}

fn check_header<R: Read>(r: &mut Reader<R>, magic: [u8; 4]) -> Result<()> {
    let mut m = [0u8; 4];
    r.inner
        .read_exact(&mut m)
        .map_err(|_| Error::Format(format!("{}: truncated", r.what)))?;
    if m != magic {
        return Err(Error::Format(format!("{}: bad magic", r.what)));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "{}: version {version} unsupported (expected {VERSION})",
            r.what
        )));
    }
    Ok(())
}

fn write_f64s(out: &mut impl Write, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn save_ae(model: &AeModel, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(&AE_MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(model.input_dim as u32).to_le_bytes())?;
    out.write_all(&(model.hidden_dim as u32).to_le_bytes())?;
    write_f64s(&mut out, &[model.sparsity_weight, model.sparsity_target, model.l2_weight])?;
    let thr = model.threshold;
    out.write_all(&[thr.is_some() as u8])?;
    let t = thr.unwrap_or(AeThreshold { tau: 0.0, mse_train_mean: 0.0, mse_train_std: 0.0, mult: 0.0 });
    write_f64s(&mut out, &[t.tau, t.mse_train_mean, t.mse_train_std, t.mult])?;
    let (w1, b1, w2t, b2) = model.raw_arrays();
    write_f64s(&mut out, w1)?;
    write_f64s(&mut out, b1)?;
    write_f64s(&mut out, w2t)?;
    write_f64s(&mut out, b2)?;
    out.flush()?;
    Ok(())
}

pub fn load_ae(path: &Path) -> Result<AeModel> {
    let mut r = Reader { inner: BufReader::new(std::fs::File::open(path)?), what: "ae model" };
    check_header(&mut r, AE_MAGIC)?;
    let j = r.u32()? as usize;
    let k = r.u32()? as usize;
    if j == 0 || k == 0 || k >= j {
        return Err(Error::Format(format!("ae model: bad dims J={j}, K={k}")));
    }
    let sparsity_weight = r.f64()?;
    let sparsity_target = r.f64()?;
    let l2_weight = r.f64()?;
    let has_threshold = r.byte()? != 0;
    let tau = r.f64()?;
    let mse_train_mean = r.f64()?;
    let mse_train_std = r.f64()?;
    let mult = r.f64()?;
    let w1 = r.f64_array(k * j)?;
    let b1 = r.f64_array(k)?;
    let w2t = r.f64_array(k * j)?;
    let b2 = r.f64_array(j)?;
    r.expect_eof()?;
    Ok(AeModel::from_parts(
        j,
        k,
        w1,
        b1,
        w2t,
        b2,
        sparsity_weight,
        sparsity_target,
        l2_weight,
        has_threshold.then_some(AeThreshold { tau, mse_train_mean, mse_train_std, mult }),
    ))
}

pub fn save_cnn(model: &CnnModel, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(&CNN_MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(model.input_h as u32).to_le_bytes())?;
    out.write_all(&(model.input_w as u32).to_le_bytes())?;
    for c in model.channels {
        out.write_all(&(c as u32).to_le_bytes())?;
    }
    for arr in model.raw_arrays() {
        write_f64s(&mut out, arr)?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_cnn(path: &Path) -> Result<CnnModel> {
    let mut r = Reader { inner: BufReader::new(std::fs::File::open(path)?), what: "cnn model" };
    check_header(&mut r, CNN_MAGIC)?;
    let input_h = r.u32()? as usize;
    let input_w = r.u32()? as usize;
    let channels = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
    let [c1, c2, c3] = channels;
    let lens = [c1 * 9, c1, c2 * c1 * 9, c2, c3 * c2 * 9, c3, 2 * c3, 2];
    let mut arrays: Vec<Vec<f64>> = Vec::with_capacity(8);
    for len in lens {
        arrays.push(r.f64_array(len)?);
    }
    r.expect_eof()?;
    let arrays: [Vec<f64>; 8] = arrays.try_into().expect("eight arrays read");
    CnnModel::from_parts(input_h, input_w, channels, arrays)
}

/// Serialized size in bytes of a saved model, without touching disk.
pub fn ae_model_bytes(model: &AeModel) -> u64 {
    let (w1, b1, w2t, b2) = model.raw_arrays();
    (4 + 4 + 8 + 3 * 8 + 1 + 4 * 8) as u64 + 8 * (w1.len() + b1.len() + w2t.len() + b2.len()) as u64
}

pub fn cnn_model_bytes(model: &CnnModel) -> u64 {
    let params: usize = model.raw_arrays().iter().map(|a| a.len()).sum();
    (4 + 4 + 2 * 4 + 3 * 4) as u64 + 8 * params as u64
}
