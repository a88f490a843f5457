//! Byte-level readers and writers for the binary formats the runner ingests.
//! Nothing here touches the filesystem.

pub mod idx;
pub mod ppm;

pub use idx::{encode_idx, parse_idx, IdxTensor};
pub use ppm::{encode_ppm, parse_ppm, RgbImage};
