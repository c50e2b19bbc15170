//! One-hidden-layer feed-forward classifier trained full batch.

mod emb;
mod model;
mod train;

pub use emb::{train_emb_augmented, EmbAugmentedModel};
pub use model::{Dense, Gradients, Head, MlpModel};
pub use train::{train, EpochRecord, TrainConfig, TrainLog, TrainedModel};

/// Seeded generator used for initialization and dropout.
pub type ModelRng = rand_chacha::ChaCha8Rng;
