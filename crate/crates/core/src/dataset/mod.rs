//! Labeled image collections for validator training. Augmentation here is
//! never applied to generator data.

mod augment;
mod codec;
mod manifest;
mod split;

pub use augment::{
    apply as apply_augment, augment_image, augment_manifest, copy_seed, AugmentParams, AugmentSpec,
};
pub use codec::{decode_image, encode_image};
pub use manifest::{ingest_manifest, DatasetEntry, DatasetManifest};
pub use split::{stratified_split, SplitSpec};
