//! Binary weights file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      b"CTWT"
//! version    u32 (currently 1)
//! input     u32 input_size, u32 channels, u32 num_classes
//! layers     u32 count, then per layer:
//!   tag      u8: 1 conv, 2 dense, 3 relu, 4 maxpool2x2, 5 flatten, 6 softmax
//!   conv     u32 in, u32 out, u32 kernel, f64 weights[out*in*k*k], f64 bias[out]
//!   dense    u32 in, u32 out, f64 weights[out*in], f64 bias[out]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ConvLayer, DenseLayer, Layer, NetworkParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CTWT";
const VERSION: u32 = 1;

pub fn save_weights(path: &Path, net: &NetworkParams) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);

    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    for v in [
        net.input_size() as u32,
        net.input_channels() as u32,
        net.num_classes() as u32,
        net.layers().len() as u32,
    ] {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    for layer in net.layers() {
        match layer {
            Layer::Conv2d(c) => {
                w.write_all(&[1u8]).map_err(io_err)?;
                for v in [c.in_channels as u32, c.out_channels as u32, c.kernel as u32] {
                    w.write_all(&v.to_le_bytes()).map_err(io_err)?;
                }
                write_f64s(&mut w, &c.weights).map_err(io_err)?;
                write_f64s(&mut w, &c.bias).map_err(io_err)?;
            }
            Layer::Dense(d) => {
                w.write_all(&[2u8]).map_err(io_err)?;
                for v in [d.in_dim as u32, d.out_dim as u32] {
                    w.write_all(&v.to_le_bytes()).map_err(io_err)?;
                }
                write_f64s(&mut w, &d.weights).map_err(io_err)?;
                write_f64s(&mut w, &d.bias).map_err(io_err)?;
            }
            Layer::Relu => w.write_all(&[3u8]).map_err(io_err)?,
            Layer::MaxPool2x2 => w.write_all(&[4u8]).map_err(io_err)?,
            Layer::Flatten => w.write_all(&[5u8]).map_err(io_err)?,
            Layer::Softmax => w.write_all(&[6u8]).map_err(io_err)?,
        }
    }
    w.flush().map_err(io_err)
}

pub fn load_weights(path: &Path) -> Result<NetworkParams> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let parse = |msg: &str| Error::WeightsParse(msg.to_string());

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| parse("truncated magic"))?;
    if &magic != MAGIC {
        return Err(parse("bad magic"));
    }
    let version = read_u32(&mut r).map_err(|_| parse("truncated version"))?;
    if version != VERSION {
        return Err(Error::WeightsParse(format!("unsupported version {version}")));
    }
    let input_size = read_u32(&mut r).map_err(|_| parse("truncated header"))? as usize;
    let channels = read_u32(&mut r).map_err(|_| parse("truncated header"))? as usize;
    let num_classes = read_u32(&mut r).map_err(|_| parse("truncated header"))? as usize;
    let layer_count = read_u32(&mut r).map_err(|_| parse("truncated header"))? as usize;
    if layer_count > 1024 {
        return Err(parse("implausible layer count"));
    }

    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag).map_err(|_| parse("truncated layer tag"))?;
        let layer = match tag[0] {
            1 => {
                let in_channels = read_u32(&mut r).map_err(|_| parse("truncated conv"))? as usize;
                let out_channels = read_u32(&mut r).map_err(|_| parse("truncated conv"))? as usize;
                let kernel = read_u32(&mut r).map_err(|_| parse("truncated conv"))? as usize;
                if in_channels * out_channels * kernel == 0
                    || out_channels
                        .saturating_mul(in_channels)
                        .saturating_mul(kernel * kernel)
                        > 1 << 28
                {
                    return Err(parse("implausible conv shape"));
                }
                let weights = read_f64s(&mut r, out_channels * in_channels * kernel * kernel)
                    .map_err(|_| parse("truncated conv weights"))?;
                let bias =
                    read_f64s(&mut r, out_channels).map_err(|_| parse("truncated conv bias"))?;
                Layer::Conv2d(ConvLayer {
                    in_channels,
                    out_channels,
                    kernel,
                    weights,
                    bias,
                })
            }
            2 => {
                let in_dim = read_u32(&mut r).map_err(|_| parse("truncated dense"))? as usize;
                let out_dim = read_u32(&mut r).map_err(|_| parse("truncated dense"))? as usize;
                if in_dim * out_dim == 0 || in_dim.saturating_mul(out_dim) > 1 << 28 {
                    return Err(parse("implausible dense shape"));
                }
                let weights = read_f64s(&mut r, out_dim * in_dim)
                    .map_err(|_| parse("truncated dense weights"))?;
                let bias = read_f64s(&mut r, out_dim).map_err(|_| parse("truncated dense bias"))?;
                Layer::Dense(DenseLayer {
                    in_dim,
                    out_dim,
                    weights,
                    bias,
                })
            }
            3 => Layer::Relu,
            4 => Layer::MaxPool2x2,
            5 => Layer::Flatten,
            6 => Layer::Softmax,
            other => return Err(Error::WeightsParse(format!("unknown layer tag {other}"))),
        };
        layers.push(layer);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|_| parse("read error"))? != 0 {
        return Err(parse("trailing bytes after last layer"));
    }
    NetworkParams::new(layers, input_size, channels, num_classes)
        .map_err(|e| Error::WeightsParse(format!("inconsistent shapes: {e}")))
}

fn write_f64s<W: Write>(w: &mut W, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> std::io::Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
