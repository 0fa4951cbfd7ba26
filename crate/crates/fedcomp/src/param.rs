//! Flattened model parameterization exchanged between clients and server.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Hidden-layer widths of the autoencoder. Input and output width are
/// implied by the data (`M_i * w`); the list is taken verbatim from config
/// and is not required to be symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub hidden: Vec<usize>,
}

impl LayerSpec {
    pub fn new(hidden: Vec<usize>) -> Result<Self> {
        if hidden.is_empty() {
            return Err(Error::InvalidParameter {
                name: "layers",
                reason: "at least one hidden layer required".to_string(),
            });
        }
        if hidden.contains(&0) {
            return Err(Error::InvalidParameter {
                name: "layers",
                reason: "all layer widths must be >= 1".to_string(),
            });
        }
        Ok(Self { hidden })
    }

    /// Per-layer (rows, cols) for the full encoder-decoder stack,
    /// `input_dim -> hidden[0] -> ... -> hidden[last] -> input_dim`.
    pub fn layer_dims(&self, input_dim: usize) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = input_dim;
        for &h in &self.hidden {
            dims.push((h, prev));
            prev = h;
        }
        dims.push((input_dim, prev));
        dims
    }
}

/// Total number of weights and biases for a given architecture.
pub fn param_count(input_dim: usize, layers: &LayerSpec) -> usize {
    layers
        .layer_dims(input_dim)
        .iter()
        .map(|&(rows, cols)| rows * cols + rows)
        .sum()
}

/// A model as one flat `f64` vector plus the per-layer shapes needed to
/// view it as weight matrices and bias vectors. Layout per layer:
/// row-major weights followed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub flat: Vec<f64>,
    shapes: Vec<(usize, usize)>,
}

impl ParameterVector {
    pub fn from_flat(flat: Vec<f64>, shapes: Vec<(usize, usize)>) -> Result<Self> {
        let expected: usize = shapes.iter().map(|&(r, c)| r * c + r).sum();
        if flat.len() != expected {
            return Err(Error::LengthMismatch { expected, got: flat.len() });
        }
        Ok(Self { flat, shapes })
    }

    pub fn zeros(input_dim: usize, layers: &LayerSpec) -> Self {
        let shapes = layers.layer_dims(input_dim);
        let len: usize = shapes.iter().map(|&(r, c)| r * c + r).sum();
        Self { flat: alloc::vec![0.0; len], shapes }
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn shapes(&self) -> &[(usize, usize)] {
        &self.shapes
    }

    pub fn num_layers(&self) -> usize {
        self.shapes.len()
    }

    /// Input width of the first layer.
    pub fn input_dim(&self) -> usize {
        self.shapes.first().map(|&(_, c)| c).unwrap_or(0)
    }

    /// Offset of layer `l`'s weights in `flat`.
    fn layer_offset(&self, l: usize) -> usize {
        self.shapes[..l].iter().map(|&(r, c)| r * c + r).sum()
    }

    /// Row-major weights and bias of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (rows, cols) = self.shapes[l];
        let off = self.layer_offset(l);
        let w_end = off + rows * cols;
        (&self.flat[off..w_end], &self.flat[w_end..w_end + rows])
    }

    pub fn layer_mut(&mut self, l: usize) -> (&mut [f64], &mut [f64]) {
        let (rows, cols) = self.shapes[l];
        let off = self.layer_offset(l);
        let (w, rest) = self.flat[off..].split_at_mut(rows * cols);
        (w, &mut rest[..rows])
    }

    /// Same shapes, all coordinates zero.
    pub fn zeros_like(&self) -> Self {
        Self { flat: alloc::vec![0.0; self.flat.len()], shapes: self.shapes.clone() }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shapes == other.shapes
    }

    /// Little-endian binary encoding: magic, layer count, per-layer
    /// (rows, cols), then the flat f64 array.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.shapes.len() + 8 * self.flat.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.shapes.len() as u32).to_le_bytes());
        for &(rows, cols) in &self.shapes {
            out.extend_from_slice(&(rows as u32).to_le_bytes());
            out.extend_from_slice(&(cols as u32).to_le_bytes());
        }
        for &v in &self.flat {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.take(4)?;
        if magic != MAGIC {
            return Err(Error::Decode("bad magic".to_string()));
        }
        let n_layers = cur.u32()? as usize;
        let mut shapes = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let rows = cur.u32()? as usize;
            let cols = cur.u32()? as usize;
            shapes.push((rows, cols));
        }
        let len: usize = shapes.iter().map(|&(r, c)| r * c + r).sum();
        let mut flat = Vec::with_capacity(len);
        for _ in 0..len {
            flat.push(cur.f64()?);
        }
        if cur.pos != bytes.len() {
            return Err(Error::Decode("trailing bytes".to_string()));
        }
        Ok(Self { flat, shapes })
    }
}

const MAGIC: &[u8; 4] = b"FPV1";

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Decode("truncated input".to_string()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(f64::from_le_bytes(a))
    }
}

/// Nonzero-support pattern of a compressed model. `true` marks a
/// coordinate that is trainable during fine-tuning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityMask {
    pub bits: Vec<bool>,
}

impl SparsityMask {
    pub fn all_true(len: usize) -> Self {
        Self { bits: alloc::vec![true; len] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True if every coordinate of `self`'s support is also in `other`'s.
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits.len() == other.bits.len()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}
