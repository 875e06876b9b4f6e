//! Acceptance checks for `dwis-core` and the `dwis` harness. Everything lives
//! in `tests/acceptance.rs`; run it with `cargo test -p dwis-verify`.
