//! File formats: binary channel data and compound matrices, key=value
//! sidecars, images, law tables, run manifests and experiment configs.

mod binary;
mod config;
mod image;
mod laws;
mod manifest;
mod scatterers;
mod sidecar;

pub use binary::{read_rf, read_ufcm, sidecar_path, write_rf, write_ufcm, FORMAT_VERSION};
pub use config::{
    AberrationConfig, AberrationKind, AnglesConfig, ArrayConfig, CorrectionConfig,
    ExperimentConfig, GridConfig, OutputConfig, PatchConfig, PhantomConfig, PulseConfig,
    RunConfig,
};
pub use image::{
    csv_text, export_image, export_raster, import_csv, parse_pgm, pgm_bytes, ImageFormat,
    DEFAULT_DYNAMIC_RANGE_DB,
};
pub use laws::{
    law_csv, read_law_csv, write_aberration_csv, write_law_csv, write_patch_laws_csv,
    write_xy_csv, LAW_HEADER,
};
pub use manifest::{sha256_hex, Manifest, MANIFEST_NAME};
pub use scatterers::{read_scatterers_csv, write_scatterers_csv, SCATTERER_HEADER};
pub use sidecar::Sidecar;
