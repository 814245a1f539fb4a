//! The metasurface-integrated network: TX encoder, power controller, SIM
//! channel segment and RX decoder trained end to end.

mod forward;
mod train;
mod weights;

pub use forward::{
    minn_forward, normalized_positions, power_control, relaxed_loss, rx_decode, tx_encode,
    ForwardOutput, PhaseMap, PowerMode, NORM_EPS, POWER_LOGIT_LIMIT,
};
pub use train::{
    channel_pools, constraint_check, evaluate, train, train_from, ConstraintReport, EpochMetrics,
    EvalMetrics, PowerSetting, TrainConfig, TrainInputs, TrainOutcome,
};
pub use weights::{Architecture, MinnWeights, ParamVars};
