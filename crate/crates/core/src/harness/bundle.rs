//! Harness bundles on disk.
//!
//! One directory per sample:
//!
//! ```text
//! <sample_id>/
//!   meta.json            {"sample_id", "dataset", "opt_level", "compiler"}
//!   driver.c             main() exercising func0
//!   expected_stdout.txt  optional reference output
//!   source.c             optional ground-truth function
//!   target.s             optional compiler listing of the ground truth
//!   aux/                 optional extra files copied next to the sources
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HarnessError, TestHarness};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub sample_id: String,
    pub dataset: String,
    pub opt_level: String,
    #[serde(default = "default_compiler")]
    pub compiler: String,
}

fn default_compiler() -> String {
    "gcc".into()
}

#[derive(Debug, Clone)]
pub struct HarnessBundle {
    pub dir: PathBuf,
    pub meta: BundleMeta,
    pub harness: TestHarness,
    pub ground_truth: Option<String>,
    pub target_listing: Option<String>,
}

fn read_opt(path: &Path) -> Result<Option<String>, HarnessError> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(HarnessError::BadBundle {
            path: path.to_path_buf(),
            message: e.to_string(),
        }),
    }
}

impl HarnessBundle {
    pub fn load(dir: &Path) -> Result<Self, HarnessError> {
        let bad = |message: String| HarnessError::BadBundle {
            path: dir.to_path_buf(),
            message,
        };
        let meta_text = read_opt(&dir.join("meta.json"))?.ok_or_else(|| bad("missing meta.json".into()))?;
        let meta: BundleMeta = serde_json::from_str(&meta_text).map_err(|e| bad(format!("meta.json: {e}")))?;
        let driver_source = read_opt(&dir.join("driver.c"))?.ok_or_else(|| bad("missing driver.c".into()))?;
        let mut link_inputs = Vec::new();
        let aux = dir.join("aux");
        if aux.is_dir() {
            let mut names: Vec<_> = std::fs::read_dir(&aux)
                .map_err(|e| bad(e.to_string()))?
                .filter_map(|e| e.ok())
                .filter(|e| e.path().is_file())
                .collect();
            names.sort_by_key(|e| e.file_name());
            for e in names {
                let text = std::fs::read_to_string(e.path()).map_err(|err| bad(err.to_string()))?;
                link_inputs.push((e.file_name().to_string_lossy().into_owned(), text));
            }
        }
        Ok(HarnessBundle {
            dir: dir.to_path_buf(),
            harness: TestHarness {
                driver_source,
                expected_stdout: read_opt(&dir.join("expected_stdout.txt"))?,
                link_inputs,
            },
            ground_truth: read_opt(&dir.join("source.c"))?,
            target_listing: read_opt(&dir.join("target.s"))?,
            meta,
        })
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&self.meta)? + "\n")?;
        std::fs::write(dir.join("driver.c"), &self.harness.driver_source)?;
        if let Some(exp) = &self.harness.expected_stdout {
            std::fs::write(dir.join("expected_stdout.txt"), exp)?;
        }
        if let Some(src) = &self.ground_truth {
            std::fs::write(dir.join("source.c"), src)?;
        }
        if let Some(s) = &self.target_listing {
            std::fs::write(dir.join("target.s"), s)?;
        }
        if !self.harness.link_inputs.is_empty() {
            std::fs::create_dir_all(dir.join("aux"))?;
            for (name, text) in &self.harness.link_inputs {
                std::fs::write(dir.join("aux").join(name), text)?;
            }
        }
        Ok(())
    }
}

/// Loads every bundle directory under `root`, sorted by sample id.
pub fn load_bundles(root: &Path) -> Result<Vec<HarnessBundle>, HarnessError> {
    let entries = std::fs::read_dir(root).map_err(|e| HarnessError::BadBundle {
        path: root.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut bundles = Vec::new();
    for e in entries.filter_map(|e| e.ok()) {
        if e.path().join("meta.json").is_file() {
            bundles.push(HarnessBundle::load(&e.path())?);
        }
    }
    bundles.sort_by(|a, b| a.meta.sample_id.cmp(&b.meta.sample_id));
    Ok(bundles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let b = HarnessBundle {
            dir: dir.path().join("s1"),
            meta: BundleMeta {
                sample_id: "s1".into(),
                dataset: "fixture".into(),
                opt_level: "O0".into(),
                compiler: "gcc".into(),
            },
            harness: TestHarness {
                driver_source: "int main(void) { return 0; }\n".into(),
                expected_stdout: Some("ok\n".into()),
                link_inputs: vec![("defs.h".into(), "#define N 3\n".into())],
            },
            ground_truth: Some("int func0(void) { return 1; }\n".into()),
            target_listing: None,
        };
        b.write(&dir.path().join("s1")).unwrap();
        let all = load_bundles(dir.path()).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].meta, b.meta);
        assert_eq!(all[0].harness, b.harness);
        assert_eq!(all[0].ground_truth, b.ground_truth);
        assert_eq!(all[0].target_listing, None);
    }
}
