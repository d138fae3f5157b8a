use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Content hash of the resolved inputs of a run.
pub fn run_id(command: &str, resolved: &Value) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(serde_json::to_string(resolved).expect("json").as_bytes());
    let digest = h.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    description: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    columns: Vec<(String, String)>,
}

/// Single writer for one run directory; `finish` adds the schema and manifest.
pub struct RunWriter {
    pub dir: PathBuf,
    pub id: String,
    files: Vec<FileEntry>,
}

impl RunWriter {
    pub fn create(outdir: &Path, id: &str) -> std::io::Result<Self> {
        let dir = outdir.join(id);
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir_all(&dir)?;
        Ok(RunWriter { dir, id: id.into(), files: vec![] })
    }

    pub fn csv(&mut self, name: &str, description: &str, columns: &[(&str, &str)], content: &str) -> std::io::Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.files.push(FileEntry {
            name: name.into(),
            description: description.into(),
            columns: columns.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        });
        Ok(())
    }

    pub fn json(&mut self, name: &str, description: &str, value: &Value) -> std::io::Result<()> {
        fs::write(self.dir.join(name), serde_json::to_string_pretty(value).expect("json") + "\n")?;
        self.files.push(FileEntry { name: name.into(), description: description.into(), columns: vec![] });
        Ok(())
    }

    pub fn finish(mut self, command: &str, config: &Value, seeds: &Value) -> std::io::Result<PathBuf> {
        let schema: Value = self
            .files
            .iter()
            .filter(|f| !f.columns.is_empty())
            .map(|f| (f.name.clone(), json!(f.columns.iter().map(|(c, d)| json!({"column": c, "meaning": d})).collect::<Vec<_>>())))
            .collect::<serde_json::Map<_, _>>()
            .into();
        self.json("schema.json", "column documentation for every CSV of this run", &schema)?;
        let manifest = json!({
            "run_id": self.id,
            "command": command,
            "code_version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "seeds": seeds,
            "files": self.files,
        });
        fs::write(self.dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).expect("json") + "\n")?;
        Ok(self.dir)
    }
}

pub const TIME: (&str, &str) = ("time", "evolution time in units of the inverse energy scale");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_every_file() {
        let tmp = tempfile::tempdir().unwrap();
        let mut w = RunWriter::create(tmp.path(), "abc").unwrap();
        w.csv("a.csv", "data", &[TIME, ("x", "value")], "time,x\n0,1\n").unwrap();
        w.json("b.json", "summary", &json!({"k": 1})).unwrap();
        let dir = w.finish("evolve", &json!({}), &json!({})).unwrap();
        let m: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
        let mut listed: Vec<String> = m["files"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap().to_string()).collect();
        listed.push("manifest.json".into());
        listed.sort();
        let mut on_disk: Vec<String> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
        on_disk.sort();
        assert_eq!(listed, on_disk);
    }

    #[test]
    fn run_id_is_content_hash() {
        let a = run_id("evolve", &json!({"l": 4}));
        assert_eq!(a, run_id("evolve", &json!({"l": 4})));
        assert_ne!(a, run_id("evolve", &json!({"l": 5})));
        assert_ne!(a, run_id("spectrum", &json!({"l": 4})));
        assert_eq!(a.len(), 16);
    }
}
