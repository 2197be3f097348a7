//! Binary model format, little-endian throughout:
//!
//! ```text
//! magic    8 bytes  "PNRLQNET"
//! version  u32      1
//! layers   u32      number of layer sizes, n
//! sizes    n × u32
//! params   f64...   per layer: weights row-major, then biases
//! ```

use std::io::{Read, Write};

use super::{Mlp, NeuralError};

pub const MODEL_MAGIC: &[u8; 8] = b"PNRLQNET";
pub const MODEL_VERSION: u32 = 1;

pub fn write_model<W: Write>(net: &Mlp, mut w: W) -> Result<(), NeuralError> {
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&(net.sizes().len() as u32).to_le_bytes())?;
    for &s in net.sizes() {
        w.write_all(&(s as u32).to_le_bytes())?;
    }
    for p in net.params() {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NeuralError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_model<R: Read>(mut r: R) -> Result<Mlp, NeuralError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(NeuralError::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != MODEL_VERSION {
        return Err(NeuralError::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    if n > 64 {
        return Err(NeuralError::Format(format!("{n} layer sizes")));
    }
    let sizes = (0..n)
        .map(|_| read_u32(&mut r).map(|s| s as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let mut net = Mlp::zeros(&sizes)?;
    let mut b = [0u8; 8];
    for p in net.params_mut() {
        r.read_exact(&mut b)?;
        *p = f64::from_le_bytes(b);
    }
    if net.params().any(|p| !p.is_finite()) {
        return Err(NeuralError::NonFinite("model parameters"));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(NeuralError::Format("trailing bytes".into()));
    }
    Ok(net)
}
