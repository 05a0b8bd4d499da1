//! File formats: Matrix Market coordinate files, the neighbor-list text
//! format for weight matrices, and dataset CSV with missing-response
//! markers.

mod dataset_csv;
mod matrix_market;
mod neighbor_list;

pub use dataset_csv::{read_dataset_csv, write_dataset_csv, DatasetCsv};
pub use matrix_market::{read_matrix_market, write_matrix_market, MatrixMarketKind};
pub use neighbor_list::{read_neighbor_list, write_neighbor_list};
