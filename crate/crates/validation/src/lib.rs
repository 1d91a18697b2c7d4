//! Acceptance checks for `coarsenkit` live in this package's `acceptance` test target.
//!
//! Run them with `cargo test -p coarsenkit-validation --test acceptance`.
