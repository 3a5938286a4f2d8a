use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::audio::{read_wav, AudioClip};
use crate::error::{Error, Result};
use crate::motion::{read_motion, MotionSequence};

const HEADER: &str = "MANIFEST v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::format(
                "manifest",
                format!("unknown split `{other}`"),
            )),
        }
    }
}

/// One clip: music plus one motion file and starting (x, z) per dancer.
/// Paths are relative to the manifest's root directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipEntry {
    pub id: String,
    pub split: Split,
    pub audio: PathBuf,
    pub motions: Vec<PathBuf>,
    pub positions: Vec<[f64; 2]>,
}

/// A clip read from disk.
#[derive(Debug, Clone)]
pub struct LoadedClip {
    pub id: String,
    pub audio: AudioClip,
    pub dancers: Vec<MotionSequence>,
}

/// Clip list with unique ids and at least one dancer per clip.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    root: PathBuf,
    entries: Vec<ClipEntry>,
}

impl DatasetManifest {
    pub fn new(root: PathBuf, entries: Vec<ClipEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.id.is_empty() || e.id.contains(char::is_whitespace) {
                return Err(Error::invalid(format!(
                    "clip id `{}` is empty or has whitespace",
                    e.id
                )));
            }
            if !seen.insert(e.id.as_str()) {
                return Err(Error::invalid(format!("duplicate clip id `{}`", e.id)));
            }
            if e.motions.is_empty() {
                return Err(Error::invalid(format!("clip `{}` has no dancers", e.id)));
            }
            if e.positions.len() != e.motions.len() {
                return Err(Error::Shape(format!(
                    "clip `{}` has {} motion files but {} positions",
                    e.id,
                    e.motions.len(),
                    e.positions.len()
                )));
            }
            if e.positions.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("position in clip `{}`", e.id)));
            }
        }
        Ok(Self { root, entries })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ClipEntry] {
        &self.entries
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ClipEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Fails with [`Error::MissingFile`] on the first referenced file that
    /// does not exist.
    pub fn check_files(&self) -> Result<()> {
        for e in &self.entries {
            for p in std::iter::once(&e.audio).chain(&e.motions) {
                let full = self.root.join(p);
                if !full.is_file() {
                    return Err(Error::MissingFile {
                        context: format!("manifest clip `{}`", e.id),
                        path: full,
                    });
                }
            }
        }
        Ok(())
    }

    /// Tab-separated: `id split audio motion;motion x,z;x,z`.
    pub fn render(&self) -> String {
        let mut s = format!("{HEADER}\n");
        for e in &self.entries {
            let motions: Vec<String> = e.motions.iter().map(|p| p.display().to_string()).collect();
            let positions: Vec<String> = e
                .positions
                .iter()
                .map(|p| format!("{},{}", p[0], p[1]))
                .collect();
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                e.id,
                e.split.name(),
                e.audio.display(),
                motions.join(";"),
                positions.join(";")
            );
        }
        s
    }

    pub fn parse(text: &str, root: PathBuf) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(HEADER) {
            return Err(Error::format(
                "manifest header",
                format!("expected `{HEADER}`"),
            ));
        }
        let mut entries = Vec::new();
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let section = format!("manifest line {}", n + 2);
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(Error::format(
                    section,
                    format!("expected 5 columns, got {}", cols.len()),
                ));
            }
            let positions = cols[4]
                .split(';')
                .map(|p| {
                    let xz: Vec<&str> = p.split(',').collect();
                    match xz.as_slice() {
                        [x, z] => match (x.trim().parse(), z.trim().parse()) {
                            (Ok(x), Ok(z)) => Ok([x, z]),
                            _ => Err(Error::format(
                                section.clone(),
                                format!("bad position `{p}`"),
                            )),
                        },
                        _ => Err(Error::format(
                            section.clone(),
                            format!("bad position `{p}`"),
                        )),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            entries.push(ClipEntry {
                id: cols[0].to_string(),
                split: cols[1].parse()?,
                audio: cols[2].into(),
                motions: cols[3].split(';').map(PathBuf::from).collect(),
                positions,
            });
        }
        Self::new(root, entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    /// Reads and validates a manifest, including file existence; paths
    /// resolve against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::MissingFile {
                    context: "dataset manifest".into(),
                    path: path.to_path_buf(),
                })
            }
            Err(e) => return Err(e.into()),
        };
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let m = Self::parse(&text, root)?;
        m.check_files()?;
        Ok(m)
    }

    /// Reads one clip; each dancer's starting position is taken from the
    /// manifest.
    pub fn load_clip(&self, entry: &ClipEntry) -> Result<LoadedClip> {
        let audio = read_wav(&self.root.join(&entry.audio))?;
        let dancers = entry
            .motions
            .iter()
            .zip(&entry.positions)
            .map(|(p, xz)| {
                let mut seq = read_motion(&self.root.join(p))?;
                seq.initial_position.x = xz[0];
                seq.initial_position.z = xz[1];
                Ok(seq)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LoadedClip {
            id: entry.id.clone(),
            audio,
            dancers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str) -> ClipEntry {
        ClipEntry {
            id: id.into(),
            split: Split::Train,
            audio: "a.wav".into(),
            motions: vec!["d0.motion".into(), "d1.motion".into()],
            positions: vec![[0.5, -1.25], [2.0, 0.0]],
        }
    }

    #[test]
    fn render_parse_round_trip() {
        let mut b = entry("b");
        b.split = Split::Test;
        let m = DatasetManifest::new("root".into(), vec![entry("a"), b]).unwrap();
        assert_eq!(
            DatasetManifest::parse(&m.render(), "root".into()).unwrap(),
            m
        );
        assert_eq!(m.split(Split::Test).count(), 1);
    }

    #[test]
    fn rejects_invalid_entries() {
        assert!(DatasetManifest::new("r".into(), vec![entry("a"), entry("a")]).is_err());
        let mut e = entry("a");
        e.motions.clear();
        e.positions.clear();
        assert!(DatasetManifest::new("r".into(), vec![e]).is_err());
        let mut e = entry("a");
        e.positions.pop();
        assert!(DatasetManifest::new("r".into(), vec![e]).is_err());
        assert!(DatasetManifest::parse("a\ttrain\tx\ty\t0,0\n", "r".into()).is_err());
        assert!(DatasetManifest::parse("MANIFEST v1\na\tval\tx\ty\t0,0\n", "r".into()).is_err());
    }

    #[test]
    fn dangling_reference_is_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.tsv");
        DatasetManifest::new(dir.path().into(), vec![entry("a")])
            .unwrap()
            .save(&path)
            .unwrap();
        let err = DatasetManifest::load(&path).unwrap_err();
        assert!(matches!(err, Error::MissingFile { .. }), "{err}");
        assert!(err.is_validation());
    }
}
