//! Batch drivers behind the `crowdopt` command line.

pub mod bench;
