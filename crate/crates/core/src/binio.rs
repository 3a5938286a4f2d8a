//! Little-endian helpers for the binary artifacts. Reads report the section
//! being decoded when the input ends early.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

pub(crate) struct Reader<R> {
    inner: R,
    pub section: String,
}

impl<R: Read> Reader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            section: "magic".into(),
        }
    }

    pub fn enter(&mut self, section: impl Into<String>) {
        self.section = section.into();
    }

    fn map(&self, e: std::io::Error) -> Error {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::format(self.section.clone(), "file ends early")
        } else {
            Error::Io(e)
        }
    }

    pub fn fail(&self, detail: impl Into<String>) -> Error {
        Error::format(self.section.clone(), detail)
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let mut buf = [0u8; 4];
        self.inner.read_exact(&mut buf).map_err(|e| self.map(e))?;
        if &buf != expected {
            return Err(self.fail(format!(
                "expected {:?}, found {:?}",
                String::from_utf8_lossy(expected),
                String::from_utf8_lossy(&buf)
            )));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        self.inner.read_u8().map_err(|e| self.map(e))
    }

    pub fn u32(&mut self) -> Result<u32> {
        self.inner.read_u32::<LE>().map_err(|e| self.map(e))
    }

    pub fn u64(&mut self) -> Result<u64> {
        self.inner.read_u64::<LE>().map_err(|e| self.map(e))
    }

    pub fn f32(&mut self) -> Result<f64> {
        let v = self.inner.read_f32::<LE>().map_err(|e| self.map(e))?;
        if !v.is_finite() {
            return Err(self.fail("non-finite value"));
        }
        Ok(f64::from(v))
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f32()).collect()
    }

    pub fn finish(mut self) -> Result<()> {
        let mut rest = [0u8; 1];
        match self.inner.read(&mut rest)? {
            0 => Ok(()),
            _ => {
                self.section = "trailer".into();
                Err(self.fail("unexpected bytes after the last section"))
            }
        }
    }
}

pub(crate) struct Writer<W> {
    inner: W,
}

impl<W: Write> Writer<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        Ok(self.inner.write_all(b)?)
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.inner.write_u8(v)?)
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.inner.write_u32::<LE>(v)?)
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.inner.write_u64::<LE>(v)?)
    }

    pub fn f32(&mut self, v: f64) -> Result<()> {
        Ok(self.inner.write_f32::<LE>(v as f32)?)
    }

    pub fn f32s(&mut self, v: &[f64]) -> Result<()> {
        v.iter().try_for_each(|&x| self.f32(x))
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

pub(crate) fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::invalid(format!("{what} {v} does not fit in 32 bits")))
}

/// Opens a file for reading, reporting a missing file as such.
pub(crate) fn open_input(path: &Path, context: &str) -> Result<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile {
            context: context.into(),
            path: path.to_path_buf(),
        }),
        Err(e) => Err(Error::Io(e)),
    }
}
