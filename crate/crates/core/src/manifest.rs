//! Dataset manifests: `subject_id <TAB> role <TAB> relative_path`, one entry per line.
//!
//! Blank lines and lines starting with `#` are ignored. Paths resolve against the
//! manifest's directory.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Gallery,
    Probe,
    Training,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Gallery => "gallery",
            Role::Probe => "probe",
            Role::Training => "training",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gallery" => Ok(Role::Gallery),
            "probe" => Ok(Role::Probe),
            "training" => Ok(Role::Training),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageEntry {
    /// Path as written in the manifest; doubles as the image identifier.
    pub relative_path: String,
    pub path: PathBuf,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subject {
    pub id: String,
    pub images: Vec<ImageEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    pub subjects: Vec<Subject>,
}

/// One image of one partition, flattened out of the subject records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionEntry<'a> {
    pub subject: &'a str,
    pub image: &'a ImageEntry,
}

impl DatasetManifest {
    /// Validates the manifest invariants on an in-memory manifest.
    pub fn from_subjects(subjects: Vec<Subject>) -> Result<Self> {
        let manifest = Self { subjects };
        manifest.validate(&PathBuf::from("<memory>"))?;
        Ok(manifest)
    }

    pub fn partition(&self, role: Role) -> Vec<PartitionEntry<'_>> {
        self.subjects
            .iter()
            .flat_map(|s| {
                s.images
                    .iter()
                    .filter(move |e| e.role == role)
                    .map(move |image| PartitionEntry {
                        subject: &s.id,
                        image,
                    })
            })
            .collect()
    }

    pub fn entry_count(&self) -> usize {
        self.subjects.iter().map(|s| s.images.len()).sum()
    }

    /// Every distinct image path referenced by any partition, in manifest order.
    pub fn unique_images(&self) -> Vec<&ImageEntry> {
        let mut seen = HashSet::new();
        self.subjects
            .iter()
            .flat_map(|s| s.images.iter())
            .filter(|e| seen.insert(e.relative_path.as_str()))
            .collect()
    }

    fn validate(&self, origin: &Path) -> Result<()> {
        let mut ids = HashSet::new();
        for s in &self.subjects {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::DuplicateSubject(s.id.clone()));
            }
            if s.images.is_empty() {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: 0,
                    message: format!("subject `{}` has no images", s.id),
                });
            }
        }
        let mut owner: HashMap<&str, &str> = HashMap::new();
        let mut roles: HashMap<&str, HashSet<Role>> = HashMap::new();
        for s in &self.subjects {
            for e in &s.images {
                if let Some(prev) = owner.insert(&e.relative_path, &s.id) {
                    if prev != s.id {
                        return Err(Error::DuplicateSubject(format!(
                            "{} (image {} also claimed by {prev})",
                            s.id, e.relative_path
                        )));
                    }
                }
                if !roles.entry(&e.relative_path).or_default().insert(e.role) {
                    return Err(Error::DuplicateSubject(format!(
                        "{} (entry {} {} repeated)",
                        s.id, e.role, e.relative_path
                    )));
                }
            }
        }
        for (path, r) in &roles {
            if r.contains(&Role::Training) && r.len() > 1 {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: 0,
                    message: format!("{path} is in both the training and a test partition"),
                });
            }
        }
        Ok(())
    }
}

/// Parses a manifest file, checking that every referenced image exists.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let manifest = parse_manifest(&text, base, path)?;
    for s in &manifest.subjects {
        for e in &s.images {
            if !e.path.is_file() {
                return Err(Error::MissingFile(e.path.clone()));
            }
        }
    }
    Ok(manifest)
}

/// Parses manifest text without touching the filesystem.
pub fn parse_manifest(text: &str, base: &Path, origin: &Path) -> Result<DatasetManifest> {
    // subject id -> index, preserving first-appearance order
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut subjects: Vec<Subject> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let subject = fields[0].trim();
        let role: Role = fields[1].trim().parse().map_err(parse_err)?;
        let rel = fields[2].trim();
        if subject.is_empty() || rel.is_empty() {
            return Err(parse_err("empty subject id or path".into()));
        }
        let idx = *index.entry(subject.to_string()).or_insert_with(|| {
            subjects.push(Subject {
                id: subject.to_string(),
                images: Vec::new(),
            });
            subjects.len() - 1
        });
        subjects[idx].images.push(ImageEntry {
            relative_path: rel.to_string(),
            path: base.join(rel),
            role,
        });
    }
    let manifest = DatasetManifest { subjects };
    manifest.validate(origin)?;
    Ok(manifest)
}

/// Writes a manifest in the canonical tab-separated form.
pub fn format_manifest(manifest: &DatasetManifest) -> String {
    let mut out = String::new();
    for s in &manifest.subjects {
        for e in &s.images {
            out.push_str(&format!("{}\t{}\t{}\n", s.id, e.role, e.relative_path));
        }
    }
    out
}

/// Builds the ORL protocol manifest over a directory laid out as `s<k>/<n>.pgm`.
///
/// The first `test_per_subject` images of every subject are used as both gallery and
/// probe (all-against-all, self pairs excluded at scoring time); the remaining images
/// form the disjoint training partition.
pub fn orl_protocol(
    subjects: usize,
    images_per_subject: usize,
    test_per_subject: usize,
    base: &Path,
) -> Result<DatasetManifest> {
    if test_per_subject == 0 || test_per_subject > images_per_subject {
        return Err(Error::Config(format!(
            "cannot take {test_per_subject} test images out of {images_per_subject}"
        )));
    }
    let subjects = (1..=subjects)
        .map(|s| {
            let mut images = Vec::new();
            for n in 1..=images_per_subject {
                let rel = format!("s{s}/{n}.pgm");
                let path = base.join(&rel);
                if n <= test_per_subject {
                    for role in [Role::Gallery, Role::Probe] {
                        images.push(ImageEntry {
                            relative_path: rel.clone(),
                            path: path.clone(),
                            role,
                        });
                    }
                } else {
                    images.push(ImageEntry {
                        relative_path: rel.clone(),
                        path: path.clone(),
                        role: Role::Training,
                    });
                }
            }
            Subject {
                id: format!("s{s}"),
                images,
            }
        })
        .collect();
    DatasetManifest::from_subjects(subjects)
}
