use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use tempfile::NamedTempFile;

/// Write `path` through a temporary file in the same directory, renamed
/// into place once `fill` has succeeded.
pub fn write_atomic<F>(path: &Path, fill: F) -> anyhow::Result<()>
where
    F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
    }
    tmp.persist(path)
        .with_context(|| format!("cannot move output into {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))
}
