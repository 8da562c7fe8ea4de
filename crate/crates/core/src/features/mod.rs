pub mod lsi;
pub mod manifest;
pub mod si;
pub mod stats;

pub use lsi::{compute_lsi, LsiFeatures, LsiParams};
pub use manifest::{feature_ids, manifest, si_ids, FEATURE_LEN, LSI_IDS, LSI_LEN, SI_LEN};
pub use si::{compute_ci, compute_pai, compute_pdi, compute_pti, compute_si, SiFeatures};
