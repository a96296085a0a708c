//! Regularly sampled video volumes and the on-disk volume format.
//!
//! A volume is stored as a pair of files: `<name>.json` holding a header
//! `{shape, origin, spacing, valid, params}` and `<name>.f32` holding the
//! samples as little-endian 32-bit floats in C order over `(x1, x2, t)`.

use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Sampling lattice: index `i` along axis `a` sits at `origin[a] + i·spacing[a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    pub shape: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
}

impl Grid3 {
    pub fn new(shape: [usize; 3], origin: [f64; 3], spacing: [f64; 3]) -> Result<Self> {
        let g = Self { shape, origin, spacing };
        g.validate()?;
        Ok(g)
    }

    /// Unit-spaced grid centred on the origin (to within half a sample).
    pub fn centered(shape: [usize; 3]) -> Result<Self> {
        let origin = std::array::from_fn(|a| -((shape[a] as f64 - 1.0) / 2.0).floor());
        Self::new(shape, origin, [1.0; 3])
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape.contains(&0) {
            return Err(Error::InvalidGrid(format!(
                "all dimensions must be ≥ 1, got {:?}",
                self.shape
            )));
        }
        if self.spacing.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "spacings must be positive, got {:?}",
                self.spacing
            )));
        }
        if self.origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("non-finite origin".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> [usize; 3] {
        [self.shape[1] * self.shape[2], self.shape[2], 1]
    }

    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.shape[1] + i[1]) * self.shape[2] + i[2]
    }

    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let i2 = idx % self.shape[2];
        let r = idx / self.shape[2];
        [r / self.shape[1], r % self.shape[1], i2]
    }

    pub fn position(&self, i: [usize; 3]) -> [f64; 3] {
        std::array::from_fn(|a| self.origin[a] + i[a] as f64 * self.spacing[a])
    }

    /// Continuous index coordinates of a physical position.
    pub fn to_index(&self, p: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|a| (p[a] - self.origin[a]) / self.spacing[a])
    }

    pub fn full_box(&self) -> IndexBox {
        IndexBox {
            lo: [0; 3],
            hi: self.shape,
        }
    }

    /// Sub-grid covering `b`.
    pub fn sub_grid(&self, b: &IndexBox) -> Grid3 {
        Grid3 {
            shape: b.shape(),
            origin: self.position(b.lo),
            spacing: self.spacing,
        }
    }

    /// Same physical extent with `factor` times as many samples per unit length.
    pub fn refined(&self, factor: usize) -> Grid3 {
        Grid3 {
            shape: std::array::from_fn(|a| (self.shape[a] - 1) * factor + 1),
            origin: self.origin,
            spacing: std::array::from_fn(|a| self.spacing[a] / factor as f64),
        }
    }
}

/// Half-open index box `lo ≤ i < hi` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl IndexBox {
    pub fn is_empty(&self) -> bool {
        (0..3).any(|a| self.hi[a] <= self.lo[a])
    }

    pub fn shape(&self) -> [usize; 3] {
        std::array::from_fn(|a| self.hi[a].saturating_sub(self.lo[a]))
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn contains(&self, i: [usize; 3]) -> bool {
        (0..3).all(|a| i[a] >= self.lo[a] && i[a] < self.hi[a])
    }

    pub fn intersect(&self, other: &IndexBox) -> IndexBox {
        IndexBox {
            lo: std::array::from_fn(|a| self.lo[a].max(other.lo[a])),
            hi: std::array::from_fn(|a| self.hi[a].min(other.hi[a])),
        }
    }

    /// Shrinks by `below[a]` at the low end and `above[a]` at the high end.
    pub fn shrink(&self, below: [usize; 3], above: [usize; 3]) -> IndexBox {
        IndexBox {
            lo: std::array::from_fn(|a| self.lo[a] + below[a]),
            hi: std::array::from_fn(|a| self.hi[a].saturating_sub(above[a])),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let b = *self;
        let empty = b.is_empty();
        (b.lo[0]..if empty { b.lo[0] } else { b.hi[0] })
            .flat_map(move |i| (b.lo[1]..b.hi[1]).flat_map(move |j| (b.lo[2]..b.hi[2]).map(move |k| [i, j, k])))
    }
}

/// A sampled scalar signal `f(x1, x2, t)` together with the box where its
/// values are trustworthy (e.g. where a filter had full support).
#[derive(Debug, Clone, PartialEq)]
pub struct VideoVolume {
    grid: Grid3,
    data: Vec<f64>,
    valid: IndexBox,
}

impl VideoVolume {
    pub fn new(grid: Grid3, data: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "data length {} does not match grid shape {:?}",
                data.len(),
                grid.shape
            )));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(grid.unravel(idx)));
        }
        Ok(Self {
            valid: grid.full_box(),
            grid,
            data,
        })
    }

    pub fn zeros(grid: Grid3) -> Result<Self> {
        grid.validate()?;
        Ok(Self {
            valid: grid.full_box(),
            data: vec![0.0; grid.len()],
            grid,
        })
    }

    pub fn from_fn(grid: Grid3, mut f: impl FnMut([f64; 3]) -> f64) -> Result<Self> {
        grid.validate()?;
        let data = (0..grid.len()).map(|idx| f(grid.position(grid.unravel(idx)))).collect();
        Self::new(grid, data)
    }

    /// Trusted constructor for internal pipelines that produce finite data.
    pub(crate) fn from_parts(grid: Grid3, data: Vec<f64>, valid: IndexBox) -> Self {
        debug_assert_eq!(data.len(), grid.len());
        Self { grid, data, valid }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn shape(&self) -> [usize; 3] {
        self.grid.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn valid(&self) -> &IndexBox {
        &self.valid
    }

    pub fn with_valid(mut self, valid: IndexBox) -> Self {
        self.valid = valid.intersect(&self.grid.full_box());
        self
    }

    pub fn get(&self, i: [usize; 3]) -> f64 {
        self.data[self.grid.index(i)]
    }

    pub fn max_abs_in(&self, b: &IndexBox) -> f64 {
        b.iter().map(|i| self.get(i).abs()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, k: f64) -> VideoVolume {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|v| v * k).collect(),
            valid: self.valid,
        }
    }

    /// Element-wise `a·self + b·other` on identical grids.
    pub fn combine(&self, a: f64, other: &VideoVolume, b: f64) -> Result<VideoVolume> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("cannot combine volumes on different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect(),
            valid: self.valid.intersect(&other.valid),
        })
    }

    /// Copy of the samples inside `b`.
    pub fn crop(&self, b: &IndexBox) -> VideoVolume {
        let b = b.intersect(&self.grid.full_box());
        let grid = self.grid.sub_grid(&b);
        let data = b.iter().map(|i| self.get(i)).collect();
        let lo = b.lo;
        let valid = IndexBox {
            lo: std::array::from_fn(|a| self.valid.lo[a].saturating_sub(lo[a])),
            hi: std::array::from_fn(|a| self.valid.hi[a].saturating_sub(lo[a])),
        }
        .intersect(&grid.full_box());
        Self { grid, data, valid }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub shape: [usize; 3],
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<IndexBox>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Paths `(header, samples)` of a volume named `name` in `dir`.
pub fn volume_paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{name}.json")), dir.join(format!("{name}.f32")))
}

pub fn encode_samples(data: &[f64]) -> Vec<u8> {
    data.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

pub fn decode_samples(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::Format(format!(
            "sample file length {} is not a multiple of 4",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

/// Writes `<dir>/<name>.json` and `<dir>/<name>.f32`, returning both paths.
pub fn write_volume(
    dir: &Path,
    name: &str,
    vol: &VideoVolume,
    params: serde_json::Value,
) -> Result<(PathBuf, PathBuf)> {
    let g = vol.grid();
    let header = VolumeHeader {
        shape: g.shape,
        origin: g.origin,
        spacing: g.spacing,
        valid: (*vol.valid() != g.full_box()).then_some(*vol.valid()),
        params,
    };
    let (hp, dp) = volume_paths(dir, name);
    fs::write(&hp, serde_json::to_string_pretty(&header)? + "\n")?;
    fs::write(&dp, encode_samples(vol.data()))?;
    Ok((hp, dp))
}

/// Reads a volume from its header path; the sample file is the sibling with
/// extension `.f32`.
pub fn read_volume(header_path: &Path) -> Result<(VideoVolume, VolumeHeader)> {
    let header: VolumeHeader = serde_json::from_str(&fs::read_to_string(header_path)?)?;
    let data = decode_samples(&fs::read(header_path.with_extension("f32"))?)?;
    let grid = Grid3::new(header.shape, header.origin, header.spacing)?;
    let mut vol = VideoVolume::new(grid, data)?;
    if let Some(v) = header.valid {
        vol = vol.with_valid(v);
    }
    Ok((vol, header))
}
