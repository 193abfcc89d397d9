//! Interchange formats: LSDF latent files, score CSVs and boundary JSON.

mod boundary_json;
mod lsdf;
mod scores;

pub use boundary_json::{
    boundary_from_json, boundary_to_json, read_boundary_file, write_boundary_file, BoundaryFile,
    BOUNDARY_FORMAT,
};
pub use lsdf::{
    parse_latents, read_latents, read_latents_file, read_latents_file_with_layout, write_latents,
    write_latents_file, write_latents_file_as, LatentLayout, HEADER_LEN, MAGIC, VERSION,
};
pub use scores::{read_scores, read_scores_file, write_scores, write_scores_file, ScoreTable};
