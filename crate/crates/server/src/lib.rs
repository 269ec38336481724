//! HTTP service and command-line driver around `tabiic-core`.

pub mod api;
pub mod cli;
pub mod error;
pub mod store;

pub use api::router;
pub use error::ApiError;
pub use store::Store;

/// Accepts a single ASCII character, or `tab` / `\t`.
pub fn parse_delimiter(text: &str) -> Result<u8, String> {
    match text {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        s if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        other => Err(format!("delimiter must be one ASCII character, got {other:?}")),
    }
}
