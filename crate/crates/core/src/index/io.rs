//! Versioned little-endian index files.
//!
//! Layout: magic, version, m, n, N, suffix flag and floor, alphabet,
//! partition spec, then `bin` (N+1 × u64), `frag` (n × u64, sequence in the
//! high half), `lcp` (n+1 × u8), and finally the sequences themselves.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::FsIndex;
use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::ingest::{FragmentRef, SequenceDb, SequenceRecord, SequenceStore};
use crate::partition::PartitionScheme;

const MAGIC: &[u8; 8] = b"FSINDEX\0";
const VERSION: u32 = 1;

fn put_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_bytes(w: &mut impl Write, b: &[u8]) -> std::io::Result<()> {
    put_u64(w, b.len() as u64)?;
    w.write_all(b)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!("truncated while reading {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn len(&mut self, what: &str) -> Result<usize> {
        let v = self.u64(what)?;
        usize::try_from(v)
            .ok()
            .filter(|&n| n <= self.buf.len() - self.pos)
            .ok_or_else(|| Error::Format(format!("{what} length {v} exceeds the file")))
    }

    fn bytes(&mut self, what: &str) -> Result<&'a [u8]> {
        let n = self.len(what)?;
        self.take(n, what)
    }

    fn string(&mut self, what: &str) -> Result<String> {
        String::from_utf8(self.bytes(what)?.to_vec()).map_err(|_| Error::Format(format!("{what} is not UTF-8")))
    }
}

impl FsIndex {
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        put_u32(w, VERSION)?;
        put_u32(w, self.m() as u32)?;
        put_u64(w, self.len() as u64)?;
        put_u64(w, self.n_bins() as u64)?;
        w.write_all(&[self.suffix_floor.is_some() as u8])?;
        put_u32(w, self.suffix_floor.unwrap_or(0) as u32)?;
        put_bytes(w, self.scheme.alphabet().letters())?;
        put_bytes(w, self.scheme.spec_string().as_bytes())?;
        for &b in &self.bin {
            put_u64(w, b as u64)?;
        }
        for &f in &self.frag {
            put_u64(w, f.pack())?;
        }
        w.write_all(&self.lcp)?;
        let db = self.store.to_db();
        put_u64(w, db.len() as u64)?;
        for r in db.records() {
            put_bytes(w, r.id.as_bytes())?;
            put_bytes(w, &r.residues)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory cannot fail");
        out
    }

    /// Parses an index file. Array shapes and references are checked;
    /// [`audit`](Self::audit) checks the rest.
    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut c = Cursor { buf, pos: 0 };
        if c.take(MAGIC.len(), "magic")? != MAGIC {
            return Err(Error::Format("not an index file".into()));
        }
        let version = c.u32("version")?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let m = c.u32("m")? as usize;
        let n = c.u64("n")? as usize;
        let n_bins = c.u64("N")? as usize;
        let suffix = match c.u8("suffix flag")? {
            0 => false,
            1 => true,
            v => return Err(Error::Format(format!("bad suffix flag {v}"))),
        };
        let floor = c.u32("suffix floor")? as usize;
        let alphabet = Alphabet::new(&c.string("alphabet")?)?;
        let scheme = PartitionScheme::parse(&c.string("partition")?, &alphabet, m)?;
        if scheme.n_bins() != n_bins {
            return Err(Error::Format(format!(
                "header says {n_bins} bins, partition gives {}",
                scheme.n_bins()
            )));
        }
        if n >= u32::MAX as usize || n_bins > super::MAX_BINS {
            return Err(Error::Format("array sizes out of range".into()));
        }
        let suffix_floor = if suffix {
            if floor == 0 || floor > m {
                return Err(Error::Format(format!("suffix floor {floor} outside 1..={m}")));
            }
            Some(floor)
        } else {
            None
        };

        let raw = c.take(8 * (n_bins + 1), "bin")?;
        let mut bin = Vec::with_capacity(n_bins + 1);
        for ch in raw.chunks_exact(8) {
            let v = u64::from_le_bytes(ch.try_into().unwrap());
            if v > n as u64 {
                return Err(Error::Format(format!("bin offset {v} exceeds n = {n}")));
            }
            bin.push(v as u32);
        }
        let raw = c.take(8 * n, "frag")?;
        let frag: Vec<FragmentRef> = raw
            .chunks_exact(8)
            .map(|ch| FragmentRef::unpack(u64::from_le_bytes(ch.try_into().unwrap())))
            .collect();
        let lcp = c.take(n + 1, "lcp")?.to_vec();
        if lcp.iter().any(|&l| l as usize > m) {
            return Err(Error::Format("lcp value exceeds m".into()));
        }

        let count = c.u64("record count")? as usize;
        let mut records = Vec::new();
        for _ in 0..count {
            let id = c.string("record id")?;
            let residues = c.bytes("residues")?.to_vec();
            records.push(SequenceRecord { id, residues });
        }
        if c.pos != buf.len() {
            return Err(Error::Format("trailing bytes".into()));
        }
        let db = SequenceDb::from_records(records)?;
        let store = SequenceStore::new(&db, &alphabet);
        for &f in &frag {
            if f.sequence as usize >= store.num_sequences() || f.offset as usize >= store.sequence_len(f.sequence) {
                return Err(Error::Format(format!("fragment {f:?} points outside the sequences")));
            }
        }
        if bin[0] != 0 || bin[n_bins] as usize != n || bin.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format("bin offsets are inconsistent".into()));
        }
        Ok(Self {
            scheme,
            store,
            suffix_floor,
            frag,
            bin,
            lcp,
        })
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
