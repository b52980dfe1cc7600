use crate::error::{Error, Result};
use crate::imaging::Frame;
use crate::synthgen::read_frame;
use std::path::{Path, PathBuf};

/// Ordered supply of raw frames. A frame that cannot be decoded is reported
/// as an error in its slot so that indices stay aligned.
pub trait FrameSource {
    /// Name and content of the next frame, or `None` at the end.
    fn next_frame(&mut self) -> Option<(String, Result<Frame>)>;
}

/// Frames from image files in one directory, in lexicographic file-name
/// order. PNG and PGM/PNM files are picked up; other files are ignored.
#[derive(Debug, Clone)]
pub struct DirSource {
    files: Vec<PathBuf>,
    next: usize,
}

const EXTENSIONS: [&str; 3] = ["png", "pgm", "pnm"];

impl DirSource {
    pub fn open(dir: &Path) -> Result<Self> {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            let ext = path
                .extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase);
            if path.is_file() && ext.is_some_and(|e| EXTENSIONS.contains(&e.as_str())) {
                files.push(path);
            }
        }
        if files.is_empty() {
            return Err(Error::NoFrames);
        }
        files.sort();
        Ok(Self { files, next: 0 })
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }
}

impl FrameSource for DirSource {
    fn next_frame(&mut self) -> Option<(String, Result<Frame>)> {
        let path = self.files.get(self.next)?;
        self.next += 1;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        Some((name, read_frame(path)))
    }
}

/// In-memory frames, mainly for tests and benchmarks.
impl FrameSource for std::vec::IntoIter<Frame> {
    fn next_frame(&mut self) -> Option<(String, Result<Frame>)> {
        self.next().map(|f| (String::new(), Ok(f)))
    }
}
