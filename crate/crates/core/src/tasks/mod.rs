//! Benchmark data and metrics.

pub mod metrics;
pub mod mnist;
pub mod rng;
pub mod series;

pub use metrics::{accuracy, confusion_matrix, nmse, nrmse, MetricsReport};
pub use mnist::{load_mnist_idx, ImageDataset};
pub use rng::SeededRng;
pub use series::{
    gen_narma10, gen_second_order, gen_uniform_input, split_series, SeriesDataset, SeriesTask,
};
