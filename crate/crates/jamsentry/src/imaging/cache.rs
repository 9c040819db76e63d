//! Flat binary cache of labeled image tensors, so training reruns skip the
//! histogram stage. Layout: magic "JSIC", u32 version, u32 P, u32 Q,
//! u32 count, count label bytes (0 = nojam, 1 = jam), then count * P * Q
//! pixels as little-endian f64. Round-trips are bit-exact.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::iq::Label;

const MAGIC: [u8; 4] = *b"JSIC";
const VERSION: u32 = 1;

pub fn write_cache(path: &Path, images: &[(GrayImage, Label)]) -> Result<()> {
    if images.is_empty() {
        return Err(Error::EmptyInput("no images to cache".into()));
    }
    let (w, h) = (images[0].0.width(), images[0].0.height());
    if images.iter().any(|(im, _)| im.width() != w || im.height() != h) {
        return Err(Error::Shape("cache requires uniform image dimensions".into()));
    }
    let f = std::fs::File::create(path)?;
    let mut out = BufWriter::new(f);
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(w as u32).to_le_bytes())?;
    out.write_all(&(h as u32).to_le_bytes())?;
    out.write_all(&(images.len() as u32).to_le_bytes())?;
    for (_, label) in images {
        out.write_all(&[match label {
            Label::NoJam => 0u8,
            Label::Jam => 1u8,
        }])?;
    }
    for (im, _) in images {
        for px in im.pixels() {
            out.write_all(&px.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<Vec<(GrayImage, Label)>> {
    let f = std::fs::File::open(path)?;
    let mut input = BufReader::new(f);
    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::Format("image cache: truncated header".into()))?;
    if magic != MAGIC {
        return Err(Error::Format("image cache: bad magic".into()));
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "image cache: version {version} unsupported (expected {VERSION})"
        )));
    }
    let w = read_u32(&mut input)? as usize;
    let h = read_u32(&mut input)? as usize;
    let count = read_u32(&mut input)? as usize;
    let mut labels = vec![0u8; count];
    input
        .read_exact(&mut labels)
        .map_err(|_| Error::Format("image cache: truncated labels".into()))?;
    let mut images = Vec::with_capacity(count);
    for (idx, &lb) in labels.iter().enumerate() {
        let label = match lb {
            0 => Label::NoJam,
            1 => Label::Jam,
            other => return Err(Error::Format(format!("image cache: bad label byte {other}"))),
        };
        let mut pixels = vec![0.0f64; w * h];
        let mut buf = [0u8; 8];
        for px in pixels.iter_mut() {
            input
                .read_exact(&mut buf)
                .map_err(|_| Error::Format(format!("image cache: truncated at image {idx}")))?;
            *px = f64::from_le_bytes(buf);
        }
        images.push((GrayImage::from_parts(w, h, pixels, None, 0), label));
    }
    Ok(images)
}

fn read_u32(input: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::Format("image cache: truncated header".into()))?;
    Ok(u32::from_le_bytes(buf))
}
