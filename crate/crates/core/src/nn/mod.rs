//! Hand-differentiated layers, an attention-gated U-Net and its training loop.

mod activation;
mod adam;
mod attention;
mod batchnorm;
mod conv;
#[cfg(test)]
mod gradcheck;
mod loss;
mod param;
mod pool;
mod schedule;
mod tensor;
mod train;
mod transposed;
mod unet;
mod upsample;
mod weights;

pub use activation::{open_sigmoid, sigmoid, Relu, Sigmoid};
pub use adam::{Adam, ADAM_BETA2, ADAM_EPS};
pub use attention::{AttentionGate, MatchingLayer};
pub use batchnorm::{BatchNorm2d, BN_EPS, BN_MOMENTUM};
pub use conv::{conv2d_backward, conv2d_forward, Conv2d};
pub use loss::{dice_loss, DICE_SMOOTH};
pub use param::{HasParams, Param};
pub use pool::{maxpool2x2, maxpool2x2_backward, MaxPool2x2};
pub use schedule::{PlateauSchedule, ScheduleAction};
pub use tensor::Tensor4;
pub use train::{
    history_csv, mean_dice, predict_all, train, train_network, write_history_csv, EpochRecord, Sample, TrainConfig,
    TrainOutcome,
};
pub use transposed::{transposed_conv2d, transposed_conv2d_backward, ConvTranspose2x2};
pub use unet::{ConvUnit, NetworkConfig, UNet};
pub use upsample::{upsample_bilinear, upsample_bilinear_backward};
pub use weights::{
    export_weights, first_blocks_mapping, full_mapping, import_weights, read_weights, read_weights_from,
    write_weights_to, NamedTensor, WEIGHTS_MAGIC,
};

/// Batch norm behaviour: batch statistics or running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
