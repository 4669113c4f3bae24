//! Small filesystem helpers shared by the format writers.

use std::ffi::OsString;
use std::io;
use std::path::Path;

/// Writes `bytes` to `path` atomically: the content goes to a sibling
/// temporary file first and is renamed into place, so readers never observe
/// a partially written file.
pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp_name = OsString::from(path.as_os_str());
    tmp_name.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp_name);
    std::fs::write(&tmp, bytes)?;
    match std::fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}
