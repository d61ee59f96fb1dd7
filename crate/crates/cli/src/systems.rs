//! System descriptions for `correlate`: a name plus a probe report and a
//! PER report, each either inline or as a path relative to the system file.

use std::fs;
use std::path::{Path, PathBuf};

use afprobe_core::metrics::{PerReport, ProbeReport};
use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Source<T> {
    Inline(T),
    Path(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    name: String,
    probe_report: Source<ProbeReport>,
    per_report: Source<PerReport>,
}

fn resolve<T: DeserializeOwned>(src: Source<T>, base: &Path) -> Result<T> {
    match src {
        Source::Inline(v) => Ok(v),
        Source::Path(p) => {
            let path = base.join(p);
            let text = fs::read_to_string(&path).with_context(|| path.display().to_string())?;
            serde_json::from_str(&text).with_context(|| path.display().to_string())
        }
    }
}

pub fn load_system(path: &Path) -> Result<(String, ProbeReport, PerReport)> {
    let sys: SystemFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    Ok((
        sys.name,
        resolve(sys.probe_report, base)?,
        resolve(sys.per_report, base)?,
    ))
}
