use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

/// Writes `content` to `path`, or to stdout when no path is given. Existing
/// files are only replaced with `force`.
pub fn emit(path: Option<&Path>, content: &str, force: bool) -> Result<(), String> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out.write_all(content.as_bytes()).map_err(|e| e.to_string());
    };
    let mut opts = OpenOptions::new();
    opts.write(true);
    if force {
        opts.create(true).truncate(true);
    } else {
        opts.create_new(true);
    }
    let mut file = opts.open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::AlreadyExists => format!("{} exists; pass --force to overwrite", path.display()),
        _ => format!("{}: {e}", path.display()),
    })?;
    file.write_all(content.as_bytes())
        .map_err(|e| format!("{}: {e}", path.display()))
}
