//! File formats and exports. See docs/formats.md for the grammars.

pub mod csv;
pub mod game_file;
pub mod policy_file;

pub use csv::{certificate_csv, certificate_report, table1_csv, value_table_csv};
pub use game_file::{parse_game_file, write_game_file};
pub use policy_file::{parse_policy_file, write_policy_file};
