//! File formats: `TNS3` tensors, PGM image stacks and CSV metrics.

pub mod metrics;
pub mod pgm;
pub mod tns3;

pub use metrics::{write_metrics, write_metrics_file, MetricsRow};
pub use pgm::{read_pgm_stack, read_video_channels, Layout};
pub use tns3::{read_tns3, write_tns3};
