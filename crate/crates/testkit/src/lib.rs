//! Independent test oracles, the fixture web site and a scriptable HTTP
//! fixture server. Nothing here depends on the crates under test.

pub mod oracles;
pub mod planted;
pub mod server;
pub mod site;

pub use server::{FixtureRequest, FixtureResponse, FixtureServer};
