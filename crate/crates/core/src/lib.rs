//! Index of Visual Similarity (IVS) toolkit for pool-boiling diagnostics.
//!
//! The pipeline compares consecutive heat-flux frame sets from boiling
//! experiments and scores how similar they look:
//!
//! 1. **imgcore** – grayscale frames, PGM/PNG I/O, quantization.
//! 2. **sift** – scale-space keypoint detection and 128-d descriptors.
//! 3. **matchsim** – brute-force kNN matching, Lowe ratio test, and the
//!    morphological similarity score between frame pairs.
//! 4. **segment** – bubble masks (classical threshold + connected
//!    components, or externally supplied label maps), vapor-area
//!    accounting, and the physical similarity score.
//! 5. **ivs** – trial sampling, the two-pass IVS computation, and
//!    convergence traces.
//! 6. **thermal** – thermocouple data reduction (heat flux, wall
//!    temperature, HTC), the φ metric, and RSS uncertainty propagation.
//! 7. **synth** – synthetic boiling-frame and thermal-series generator
//!    with exact ground truth, used as the test fixture factory.
//! 8. **cli** – run manifests, report/plot emission, and the command
//!    layer behind the `ivskit` binary.

use std::path::PathBuf;

pub mod cli;
pub mod imgcore;
pub mod ivs;
pub mod matchsim;
mod rng;
pub mod segment;
pub mod sift;
pub mod synth;
pub mod thermal;
pub mod util;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported image format in {0}")]
    UnsupportedFormat(PathBuf),
    #[error("malformed image file {path}: {reason}")]
    MalformedImage { path: PathBuf, reason: String },
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("image too small: {width}x{height}, need at least {min} px on the short side")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: mask is {mask_w}x{mask_h}, frame is {frame_w}x{frame_h}")]
    MaskDimensionMismatch {
        mask_w: u32,
        mask_h: u32,
        frame_w: u32,
        frame_h: u32,
    },
    #[error("invalid run: {0}")]
    InvalidRun(String),
    #[error("manifest error in {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("csv parse error at {path}:{line}: {reason}")]
    Csv {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("missing configuration keys: {0}")]
    MissingConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
