use std::fs::File;
use std::io;
use std::path::Path;
use std::sync::Mutex;

/// Random-access byte storage.
pub trait ByteSource: Send + Sync {
    fn len(&self) -> u64;

    /// Fills `buf` from `offset`; fails if the range runs past the end.
    fn read_at(&self, offset: u64, buf: &mut [u8]) -> io::Result<()>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Positioned reads on an open file.
#[derive(Debug)]
pub struct FileSource {
    file: File,
    len: u64,
}

impl FileSource {
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let file = File::open(path)?;
        let len = file.metadata()?.len();
        Ok(Self { file, len })
    }
}

impl ByteSource for FileSource {
    fn len(&self) -> u64 {
        self.len
    }

    #[cfg(unix)]
    fn read_at(&self, offset: u64, buf: &mut [u8]) -> io::Result<()> {
        use std::os::unix::fs::FileExt;
        self.file.read_exact_at(buf, offset)
    }

    #[cfg(windows)]
    fn read_at(&self, mut offset: u64, mut buf: &mut [u8]) -> io::Result<()> {
        use std::os::windows::fs::FileExt;
        while !buf.is_empty() {
            match self.file.seek_read(buf, offset)? {
                0 => return Err(io::ErrorKind::UnexpectedEof.into()),
                n => {
                    buf = &mut buf[n..];
                    offset += n as u64;
                }
            }
        }
        Ok(())
    }
}

impl ByteSource for Vec<u8> {
    fn len(&self) -> u64 {
        self.as_slice().len() as u64
    }

    fn read_at(&self, offset: u64, buf: &mut [u8]) -> io::Result<()> {
        let start = usize::try_from(offset).map_err(|_| io::Error::from(io::ErrorKind::UnexpectedEof))?;
        let src = self
            .get(start..start + buf.len())
            .ok_or_else(|| io::Error::from(io::ErrorKind::UnexpectedEof))?;
        buf.copy_from_slice(src);
        Ok(())
    }
}

/// Wraps a source and records every byte range read through it.
#[derive(Debug)]
pub struct CountingSource<S> {
    inner: S,
    ranges: Mutex<Vec<(u64, u64)>>,
}

impl<S: ByteSource> CountingSource<S> {
    pub fn new(inner: S) -> Self {
        Self { inner, ranges: Mutex::new(Vec::new()) }
    }

    /// Half-open `[start, end)` ranges in the order they were read.
    pub fn ranges(&self) -> Vec<(u64, u64)> {
        self.ranges.lock().expect("poisoned").clone()
    }

    /// Total bytes read, counting repeats.
    pub fn bytes_read(&self) -> u64 {
        self.ranges().iter().map(|(a, b)| b - a).sum()
    }

    pub fn reset(&self) {
        self.ranges.lock().expect("poisoned").clear();
    }
}

impl<S: ByteSource> ByteSource for CountingSource<S> {
    fn len(&self) -> u64 {
        self.inner.len()
    }

    fn read_at(&self, offset: u64, buf: &mut [u8]) -> io::Result<()> {
        self.ranges.lock().expect("poisoned").push((offset, offset + buf.len() as u64));
        self.inner.read_at(offset, buf)
    }
}
