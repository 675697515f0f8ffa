use qdiscrim_core::Error;

pub const OK: u8 = 0;
pub const IO_OR_PARSE: u8 = 1;
pub const INVALID: u8 = 2;
pub const MEASUREMENT_HELPS: u8 = 3;
pub const USAGE: u8 = 64;

/// Maps a library error onto the exit-code contract.
pub fn for_error(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Parse(_) => IO_OR_PARSE,
        _ => INVALID,
    }
}
