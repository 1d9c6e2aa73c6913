//! Array container: one JSON header line, then raw little-endian values.
//!
//! Header example:
//! `{"dtype":"c128","shape":[64,64],"byte_order":"little","layout":"row-major"}`
//!
//! `c128` values are interleaved `(re, im)` pairs of `f64`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::domain::{ComplexImage, MeasurementStack, Probe};
use crate::error::{BprError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    C128,
    F64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub dtype: Dtype,
    pub shape: Vec<usize>,
    pub byte_order: String,
    pub layout: String,
}

impl Header {
    fn new(dtype: Dtype, shape: Vec<usize>) -> Self {
        Self {
            dtype,
            shape,
            byte_order: "little".into(),
            layout: "row-major".into(),
        }
    }

    pub fn count(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    C128(Vec<C64>),
    F64(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Array {
    pub shape: Vec<usize>,
    pub data: ArrayData,
}

fn format_err(msg: impl Into<String>) -> BprError {
    BprError::Format(msg.into())
}

impl Array {
    pub fn complex(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        check_count(&shape, data.len())?;
        Ok(Self { shape, data: ArrayData::C128(data) })
    }

    pub fn real(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        check_count(&shape, data.len())?;
        Ok(Self { shape, data: ArrayData::F64(data) })
    }

    pub fn header(&self) -> Header {
        let dtype = match self.data {
            ArrayData::C128(_) => Dtype::C128,
            ArrayData::F64(_) => Dtype::F64,
        };
        Header::new(dtype, self.shape.clone())
    }

    pub fn to_writer(&self, mut w: impl Write) -> Result<()> {
        let head = serde_json::to_string(&self.header()).map_err(|e| format_err(e.to_string()))?;
        w.write_all(head.as_bytes())?;
        w.write_all(b"\n")?;
        let mut buf = Vec::new();
        match &self.data {
            ArrayData::C128(v) => {
                buf.reserve(v.len() * 16);
                for z in v {
                    buf.extend_from_slice(&z.re.to_le_bytes());
                    buf.extend_from_slice(&z.im.to_le_bytes());
                }
            }
            ArrayData::F64(v) => {
                buf.reserve(v.len() * 8);
                for x in v {
                    buf.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn from_reader(r: impl Read) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        r.read_line(&mut line)?;
        if !line.ends_with('\n') {
            return Err(format_err("missing header line"));
        }
        let header: Header = serde_json::from_str(line.trim_end()).map_err(|e| format_err(format!("bad header: {e}")))?;
        if header.byte_order != "little" {
            return Err(format_err(format!("unsupported byte order `{}`", header.byte_order)));
        }
        if header.layout != "row-major" {
            return Err(format_err(format!("unsupported layout `{}`", header.layout)));
        }
        let mut raw = Vec::new();
        r.read_to_end(&mut raw)?;
        let n = header.count();
        let width = match header.dtype {
            Dtype::C128 => 16,
            Dtype::F64 => 8,
        };
        if raw.len() != n * width {
            return Err(format_err(format!("expected {} payload bytes, found {}", n * width, raw.len())));
        }
        let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
        let data = match header.dtype {
            Dtype::C128 => ArrayData::C128(raw.chunks_exact(16).map(|c| C64::new(f(&c[..8]), f(&c[8..]))).collect()),
            Dtype::F64 => ArrayData::F64(raw.chunks_exact(8).map(f).collect()),
        };
        Ok(Self { shape: header.shape, data })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut bytes = Vec::new();
        self.to_writer(&mut bytes)?;
        fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(fs::File::open(path)?)
    }

    pub fn into_complex(self) -> Result<(Vec<usize>, Vec<C64>)> {
        match self.data {
            ArrayData::C128(v) => Ok((self.shape, v)),
            ArrayData::F64(_) => Err(format_err("expected dtype c128, found f64")),
        }
    }

    pub fn into_real(self) -> Result<(Vec<usize>, Vec<f64>)> {
        match self.data {
            ArrayData::F64(v) => Ok((self.shape, v)),
            ArrayData::C128(_) => Err(format_err("expected dtype f64, found c128")),
        }
    }
}

fn check_count(shape: &[usize], len: usize) -> Result<()> {
    let n: usize = shape.iter().product();
    if n != len {
        return Err(format_err(format!("shape {shape:?} holds {n} values, got {len}")));
    }
    Ok(())
}

fn square_side(shape: &[usize]) -> Result<usize> {
    match shape {
        [a, b] if a == b => Ok(*a),
        _ => Err(format_err(format!("expected a square 2-D shape, got {shape:?}"))),
    }
}

impl From<&ComplexImage> for Array {
    fn from(x: &ComplexImage) -> Self {
        Self { shape: vec![x.side(), x.side()], data: ArrayData::C128(x.as_slice().to_vec()) }
    }
}

impl From<&Probe> for Array {
    fn from(x: &Probe) -> Self {
        Self { shape: vec![x.side(), x.side()], data: ArrayData::C128(x.as_slice().to_vec()) }
    }
}

/// Shape `[frames, frame_len]`.
impl From<&MeasurementStack> for Array {
    fn from(x: &MeasurementStack) -> Self {
        Self {
            shape: vec![x.frame_count(), x.frame_len()],
            data: ArrayData::F64(x.as_slice().to_vec()),
        }
    }
}

impl TryFrom<Array> for ComplexImage {
    type Error = BprError;
    fn try_from(a: Array) -> Result<Self> {
        let (shape, v) = a.into_complex()?;
        ComplexImage::new(square_side(&shape)?, v)
    }
}

impl TryFrom<Array> for Probe {
    type Error = BprError;
    fn try_from(a: Array) -> Result<Self> {
        let (shape, v) = a.into_complex()?;
        Probe::new(square_side(&shape)?, v)
    }
}

impl TryFrom<Array> for MeasurementStack {
    type Error = BprError;
    fn try_from(a: Array) -> Result<Self> {
        let (shape, v) = a.into_real()?;
        match shape.as_slice() {
            [_, len] => MeasurementStack::new(*len, v),
            _ => Err(format_err(format!("expected [frames, frame_len], got {shape:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::synth;
    use proptest::prelude::*;

    #[test]
    fn header_is_one_json_line() {
        let a = Array::real(vec![2, 3], vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let mut bytes = Vec::new();
        a.to_writer(&mut bytes).unwrap();
        let nl = bytes.iter().position(|b| *b == b'\n').unwrap();
        let head: serde_json::Value = serde_json::from_slice(&bytes[..nl]).unwrap();
        assert_eq!(head["dtype"], "f64");
        assert_eq!(head["shape"], serde_json::json!([2, 3]));
        assert_eq!(head["byte_order"], "little");
        assert_eq!(head["layout"], "row-major");
        assert_eq!(bytes.len() - nl - 1, 48);
        assert_eq!(&bytes[nl + 1 + 8..nl + 1 + 16], &1.0f64.to_le_bytes());
    }

    #[test]
    fn image_round_trip_is_bit_exact() {
        let u = synth::random_sample(8, 3);
        let mut bytes = Vec::new();
        Array::from(&u).to_writer(&mut bytes).unwrap();
        let back = ComplexImage::try_from(Array::from_reader(bytes.as_slice()).unwrap()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let p = synth::random_probe(4, 1);
        let mut bytes = Vec::new();
        Array::from(&p).to_writer(&mut bytes).unwrap();
        bytes.pop();
        assert!(matches!(Array::from_reader(bytes.as_slice()), Err(BprError::Format(_))));
    }

    #[test]
    fn wrong_dtype_is_rejected() {
        let a = Array::real(vec![2, 2], vec![1.0; 4]).unwrap();
        assert!(ComplexImage::try_from(a).is_err());
        assert!(Array::complex(vec![3], vec![C64::new(0.0, 0.0); 2]).is_err());
    }

    #[test]
    fn unknown_header_keys_are_rejected() {
        let bytes = b"{\"dtype\":\"f64\",\"shape\":[1],\"byte_order\":\"little\",\"layout\":\"row-major\",\"x\":1}\n\0\0\0\0\0\0\0\0";
        assert!(Array::from_reader(&bytes[..]).is_err());
    }

    proptest! {
        #[test]
        fn stack_round_trip(frames in 1usize..5, len in 1usize..9, seed in 0u64..100) {
            let mut rng = synth::rng(seed);
            let v: Vec<f64> = synth::complex_gaussian(&mut rng, frames * len).iter().map(|z| z.norm_sqr()).collect();
            let s = MeasurementStack::new(len, v).unwrap();
            let mut bytes = Vec::new();
            Array::from(&s).to_writer(&mut bytes).unwrap();
            let back = MeasurementStack::try_from(Array::from_reader(bytes.as_slice()).unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
