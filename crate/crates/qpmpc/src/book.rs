//! Doc-test anchors for the guide in `book/`.
//!
//! Each item below pulls one chapter in as documentation, so every
//! `rust` code block in the book compiles and runs under
//! `cargo test --doc`. The book cannot drift from the library without
//! the test suite noticing. This module only exists while rustdoc
//! collects doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub struct Introduction;

#[doc = include_str!("../../../book/src/engine.md")]
pub struct Engine;

#[doc = include_str!("../../../book/src/period-finding.md")]
pub struct PeriodFinding;

#[doc = include_str!("../../../book/src/protocols.md")]
pub struct Protocols;

#[doc = include_str!("../../../book/src/security.md")]
pub struct Security;

#[doc = include_str!("../../../book/src/harness.md")]
pub struct Harness;

#[doc = include_str!("../../../book/src/cli.md")]
pub struct Cli;

#[doc = include_str!("../../../book/src/formats.md")]
pub struct Formats;
