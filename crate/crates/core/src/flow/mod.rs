//! Rectified-flow restoration model: latent codec, conditioning, velocity network and training.

mod checkpoint;
mod codec;
mod embed;
mod model;
mod timestep;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use codec::{decode_latent, encode_latent, encode_latent_with, pool_frames, LatentSeq, DEFAULT_FRAME_LEN};
pub use embed::{
    embed_prompt, time_embedding, AudioCue, PromptEmbedding, PromptIndex, PromptSource, FALLBACK_ROWS,
    TIME_EMBED_DIM,
};
pub use model::{BlockParams, ModelConfig, Params, VelocityModel, MIX_TAPS};
pub use timestep::{make_training_example, make_training_example_at, sample_timestep, FlowBatch};
pub use train::{
    latent_pair, load_pairs, sample_conditioning, train_model, train_step, Adam, Dropout, LatentPair, PromptChoice,
    TrainConfig, TrainState, TrainingSample,
};
