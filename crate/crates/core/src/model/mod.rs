//! Attention encoder-decoder and its training objectives.

mod infer;
mod loss;
mod seq2seq;
mod vocab;

pub use infer::{PlainDecoder, PlainState};
pub use loss::{batch_objective, consistency_loss, mean_token_nll, supervised_loss, total_loss, BatchLoss};
pub use seq2seq::{CellKind, DecoderState, Encoded, ModelConfig, Seq2Seq, StepPosteriors};
pub use vocab::{TokenId, TokenSequence, Vocabulary, DEFAULT_CHARS};
