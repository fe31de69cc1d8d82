pub mod anomaly;
pub mod cli;
pub mod io;
pub mod kinematics;
pub mod model;
pub mod pipeline;
pub mod registration;
pub mod rotation;
pub mod skeleton;
pub mod sync;
pub mod synth;
