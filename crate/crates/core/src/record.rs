//! Click records and the CSMG binary file format.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "CSMG"
//! 4       1     version (0x01)
//! 5       8     photon count, little endian
//! 13      8     burn-in count, little endian
//! 21      n     one byte per photon
//! ```
//!
//! Payload byte: `0x00` is a lost photon; otherwise bits 2..1 hold the basis
//! (`01` = X, `10` = Y, `11` = Z) and bit 0 the outcome (`0` = +1, `1` = -1).

use std::fmt;
use std::io::{self, Read, Write};

use thiserror::Error;

use crate::frame::{Basis, Outcome};

pub const MAGIC: [u8; 4] = *b"CSMG";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 21;

/// One photon of the click record, stored in its wire encoding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(transparent)]
pub struct Event(u8);

impl Event {
    pub const LOST: Event = Event(0);

    #[inline]
    pub const fn click(basis: Basis, outcome: Outcome) -> Event {
        Event((basis.code() << 1) | outcome.bit() as u8)
    }

    #[inline]
    pub const fn from_byte(b: u8) -> Option<Event> {
        if b == 0 || (b >= 0x02 && b <= 0x07) {
            Some(Event(b))
        } else {
            None
        }
    }

    #[inline]
    pub const fn byte(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_lost(self) -> bool {
        self.0 == 0
    }

    /// Basis code `1..=3`, or `0` for a lost photon.
    #[inline]
    pub const fn basis_code(self) -> u8 {
        self.0 >> 1
    }

    #[inline]
    pub const fn basis(self) -> Option<Basis> {
        Basis::from_code(self.0 >> 1)
    }

    #[inline]
    pub const fn outcome(self) -> Option<Outcome> {
        if self.0 == 0 {
            None
        } else {
            Some(Outcome::from_bit(self.0 & 1 == 1))
        }
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// `__`, `X+`, `Z-`, ...
impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.basis(), self.outcome()) {
            (Some(b), Some(o)) => write!(f, "{}{}", b, if o.bit() { '-' } else { '+' }),
            _ => f.write_str("__"),
        }
    }
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported record version {0:#04x}")]
    UnsupportedVersion(u8),
    #[error("truncated record: header declares {declared} photons but payload ends at byte offset {offset}")]
    Truncated { declared: u64, offset: u64 },
    #[error("truncated header at byte offset {offset}")]
    TruncatedHeader { offset: u64 },
    #[error("trailing data after {declared} photons at byte offset {offset}")]
    TrailingData { declared: u64, offset: u64 },
    #[error("invalid event byte {byte:#04x} at byte offset {offset}")]
    InvalidEvent { byte: u8, offset: u64 },
    #[error("burn-in {burn_in} exceeds photon count {count}")]
    BurnInTooLarge { burn_in: u64, count: u64 },
    #[error("unrecognised event token {0:?}")]
    BadToken(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Click record produced by one stream of the machine gun.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClickRecord {
    events: Vec<Event>,
    burn_in: u64,
}

impl ClickRecord {
    pub fn new(events: Vec<Event>, burn_in: u64) -> Result<Self, RecordError> {
        if burn_in > events.len() as u64 {
            return Err(RecordError::BurnInTooLarge {
                burn_in,
                count: events.len() as u64,
            });
        }
        Ok(ClickRecord { events, burn_in })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of leading photons flagged as burn-in.
    pub fn burn_in(&self) -> u64 {
        self.burn_in
    }

    pub fn lost_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_lost()).count()
    }

    /// Parses whitespace-separated tokens like `"Z+ Y+ __ Z-"`.
    pub fn parse_tokens(s: &str) -> Result<Self, RecordError> {
        let events = s
            .split_whitespace()
            .map(|t| {
                let ev = match t {
                    "__" | "_" => Some(Event::LOST),
                    _ => {
                        let mut c = t.chars();
                        let basis = match c.next() {
                            Some('X') => Some(Basis::X),
                            Some('Y') => Some(Basis::Y),
                            Some('Z') => Some(Basis::Z),
                            _ => None,
                        };
                        let outcome = match c.as_str() {
                            "+" | "+1" => Some(Outcome::Plus),
                            "-" | "-1" => Some(Outcome::Minus),
                            _ => None,
                        };
                        basis.zip(outcome).map(|(b, o)| Event::click(b, o))
                    }
                };
                ev.ok_or_else(|| RecordError::BadToken(t.to_owned()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ClickRecord { events, burn_in: 0 })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        write_header(&mut w, self.events.len() as u64, self.burn_in)?;
        let bytes: Vec<u8> = self.events.iter().map(|e| e.byte()).collect();
        w.write_all(&bytes)?;
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.events.len());
        self.write_to(&mut out).expect("writing to Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self, RecordError> {
        let mut reader = RecordReader::new(r)?;
        let mut events = Vec::with_capacity(reader.count().min(1 << 30) as usize);
        while let Some(chunk) = reader.next_chunk(1 << 16)? {
            events.extend_from_slice(chunk);
        }
        Ok(ClickRecord {
            events,
            burn_in: reader.burn_in(),
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RecordError> {
        Self::read_from(bytes)
    }
}

pub fn write_header<W: Write>(mut w: W, count: u64, burn_in: u64) -> io::Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(&MAGIC);
    header[4] = VERSION;
    header[5..13].copy_from_slice(&count.to_le_bytes());
    header[13..21].copy_from_slice(&burn_in.to_le_bytes());
    w.write_all(&header)
}

/// Streaming reader: validates the header up front and the payload chunk by
/// chunk, so arbitrarily long records can be scanned in bounded memory.
pub struct RecordReader<R> {
    inner: R,
    count: u64,
    burn_in: u64,
    consumed: u64,
    buf: Vec<Event>,
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}

impl<R: Read> RecordReader<R> {
    pub fn new(mut inner: R) -> Result<Self, RecordError> {
        let mut header = [0u8; HEADER_LEN];
        let n = read_full(&mut inner, &mut header)?;
        if n >= 4 && header[..4] != MAGIC {
            return Err(RecordError::BadMagic(header[..4].try_into().unwrap()));
        }
        if n < HEADER_LEN {
            return Err(RecordError::TruncatedHeader { offset: n as u64 });
        }
        if header[4] != VERSION {
            return Err(RecordError::UnsupportedVersion(header[4]));
        }
        let count = u64::from_le_bytes(header[5..13].try_into().unwrap());
        let burn_in = u64::from_le_bytes(header[13..21].try_into().unwrap());
        if burn_in > count {
            return Err(RecordError::BurnInTooLarge { burn_in, count });
        }
        Ok(RecordReader {
            inner,
            count,
            burn_in,
            consumed: 0,
            buf: Vec::new(),
        })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in
    }

    /// Next validated chunk of at most `max` events; `None` at the end.
    pub fn next_chunk(&mut self, max: usize) -> Result<Option<&[Event]>, RecordError> {
        let remaining = self.count - self.consumed;
        if remaining == 0 {
            let mut probe = [0u8; 1];
            if read_full(&mut self.inner, &mut probe)? != 0 {
                return Err(RecordError::TrailingData {
                    declared: self.count,
                    offset: HEADER_LEN as u64 + self.count,
                });
            }
            return Ok(None);
        }
        let want = remaining.min(max.max(1) as u64) as usize;
        let mut bytes = vec![0u8; want];
        let got = read_full(&mut self.inner, &mut bytes)?;
        let base = HEADER_LEN as u64 + self.consumed;
        self.buf.clear();
        for (i, &b) in bytes[..got].iter().enumerate() {
            match Event::from_byte(b) {
                Some(e) => self.buf.push(e),
                None => {
                    return Err(RecordError::InvalidEvent {
                        byte: b,
                        offset: base + i as u64,
                    })
                }
            }
        }
        if got < want {
            return Err(RecordError::Truncated {
                declared: self.count,
                offset: base + got as u64,
            });
        }
        self.consumed += got as u64;
        Ok(Some(&self.buf))
    }
}
