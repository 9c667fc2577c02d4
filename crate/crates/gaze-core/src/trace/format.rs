//! Text and binary trace formats.
//!
//! Text: one record per line, `<instr_id> <pc-hex> <vaddr-hex> <L|S>`.
//! Binary: 8-byte header (`GZTR` magic + u32 LE version) followed by fixed
//! 25-byte little-endian records `{u64 instr_id, u64 pc, u64 vaddr, u8 kind}`.
//!
//! Reading validates that `instr_id` never decreases.

use std::io::{self, BufRead, Read, Write};

use super::{AccessKind, MemoryAccess};

pub const BINARY_MAGIC: &[u8; 4] = b"GZTR";
const BINARY_VERSION: u32 = 1;
const RECORD_BYTES: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Text,
    Binary,
}

#[derive(Debug)]
pub enum TraceError {
    Io(io::Error),
    /// Malformed text line; carries the 1-based line number and a message.
    Parse { line: usize, message: String },
    /// Malformed binary stream; carries the byte offset and a message.
    Binary { offset: usize, message: String },
    /// `instr_id` went backwards; carries the record index and both ids.
    NonMonotonic { record: usize, previous: u64, found: u64 },
}

impl std::fmt::Display for TraceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceError::Io(e) => write!(f, "trace i/o error: {e}"),
            TraceError::Parse { line, message } => {
                write!(f, "trace parse error at line {line}: {message}")
            }
            TraceError::Binary { offset, message } => {
                write!(f, "binary trace error at offset {offset}: {message}")
            }
            TraceError::NonMonotonic { record, previous, found } => write!(
                f,
                "instr_id not nondecreasing at record {record}: {found} after {previous}"
            ),
        }
    }
}

impl std::error::Error for TraceError {}

impl From<io::Error> for TraceError {
    fn from(e: io::Error) -> Self {
        TraceError::Io(e)
    }
}

/// Streaming reader over either format. Yields records in file order and
/// enforces instr_id monotonicity as it goes.
pub struct TraceReader<R> {
    inner: ReaderKind<R>,
    last_instr: Option<u64>,
    record: usize,
}

enum ReaderKind<R> {
    Text { source: io::BufReader<R>, line: usize },
    Binary { source: R, offset: usize },
}

impl<R: Read> TraceReader<R> {
    pub fn new(source: R, format: TraceFormat) -> Result<Self, TraceError> {
        let inner = match format {
            TraceFormat::Text => {
                ReaderKind::Text { source: io::BufReader::new(source), line: 0 }
            }
            TraceFormat::Binary => {
                let mut source = source;
                let mut header = [0u8; 8];
                source.read_exact(&mut header).map_err(|_| TraceError::Binary {
                    offset: 0,
                    message: "missing header".into(),
                })?;
                if &header[0..4] != BINARY_MAGIC {
                    return Err(TraceError::Binary {
                        offset: 0,
                        message: "bad magic".into(),
                    });
                }
                let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
                if version != BINARY_VERSION {
                    return Err(TraceError::Binary {
                        offset: 4,
                        message: format!("unsupported version {version}"),
                    });
                }
                ReaderKind::Binary { source, offset: 8 }
            }
        };
        Ok(Self { inner, last_instr: None, record: 0 })
    }

    fn next_record(&mut self) -> Result<Option<MemoryAccess>, TraceError> {
        let access = match &mut self.inner {
            ReaderKind::Text { source, line } => loop {
                let mut buf = String::new();
                if source.read_line(&mut buf)? == 0 {
                    break None;
                }
                *line += 1;
                let trimmed = buf.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                break Some(parse_text_line(trimmed, *line)?);
            },
            ReaderKind::Binary { source, offset } => {
                let mut buf = [0u8; RECORD_BYTES];
                match read_full(source, &mut buf) {
                    Ok(0) => None,
                    Ok(n) if n < RECORD_BYTES => {
                        return Err(TraceError::Binary {
                            offset: *offset,
                            message: format!("truncated record ({n} of {RECORD_BYTES} bytes)"),
                        });
                    }
                    Ok(_) => {
                        let rec = decode_record(&buf, *offset)?;
                        *offset += RECORD_BYTES;
                        Some(rec)
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        };
        if let Some(a) = &access {
            self.record += 1;
            if let Some(prev) = self.last_instr {
                if a.instr_id < prev {
                    return Err(TraceError::NonMonotonic {
                        record: self.record,
                        previous: prev,
                        found: a.instr_id,
                    });
                }
            }
            self.last_instr = Some(a.instr_id);
        }
        Ok(access)
    }
}

impl<R: Read> Iterator for TraceReader<R> {
    type Item = Result<MemoryAccess, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

fn read_full<R: Read>(source: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut read = 0;
    while read < buf.len() {
        match source.read(&mut buf[read..])? {
            0 => break,
            n => read += n,
        }
    }
    Ok(read)
}

fn parse_text_line(line: &str, lineno: usize) -> Result<MemoryAccess, TraceError> {
    let err = |message: String| TraceError::Parse { line: lineno, message };
    let mut fields = line.split_whitespace();
    let instr_id = fields
        .next()
        .ok_or_else(|| err("missing instr_id".into()))?
        .parse::<u64>()
        .map_err(|e| err(format!("bad instr_id: {e}")))?;
    let pc = parse_hex(fields.next().ok_or_else(|| err("missing pc".into()))?)
        .map_err(|m| err(format!("bad pc: {m}")))?;
    let vaddr = parse_hex(fields.next().ok_or_else(|| err("missing vaddr".into()))?)
        .map_err(|m| err(format!("bad vaddr: {m}")))?;
    let kind = match fields.next().ok_or_else(|| err("missing kind".into()))? {
        "L" => AccessKind::Load,
        "S" => AccessKind::Store,
        other => return Err(err(format!("bad kind `{other}` (expected L or S)"))),
    };
    if let Some(extra) = fields.next() {
        return Err(err(format!("trailing field `{extra}`")));
    }
    Ok(MemoryAccess { instr_id, pc, vaddr, kind })
}

fn parse_hex(s: &str) -> Result<u64, String> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u64::from_str_radix(digits, 16).map_err(|e| e.to_string())
}

fn decode_record(buf: &[u8; RECORD_BYTES], offset: usize) -> Result<MemoryAccess, TraceError> {
    let instr_id = u64::from_le_bytes(buf[0..8].try_into().unwrap());
    let pc = u64::from_le_bytes(buf[8..16].try_into().unwrap());
    let vaddr = u64::from_le_bytes(buf[16..24].try_into().unwrap());
    let kind = match buf[24] {
        0 => AccessKind::Load,
        1 => AccessKind::Store,
        other => {
            return Err(TraceError::Binary {
                offset: offset + 24,
                message: format!("bad kind byte {other}"),
            });
        }
    };
    Ok(MemoryAccess { instr_id, pc, vaddr, kind })
}

/// Reads a whole trace into memory, validating as it goes.
pub fn read_trace<R: Read>(source: R, format: TraceFormat) -> Result<Vec<MemoryAccess>, TraceError> {
    TraceReader::new(source, format)?.collect()
}

/// Writes a trace in the given format. Round-trips bit-exactly through
/// `read_trace` for both formats.
pub fn write_trace<W: Write>(
    sink: &mut W,
    accesses: &[MemoryAccess],
    format: TraceFormat,
) -> io::Result<()> {
    match format {
        TraceFormat::Text => {
            for a in accesses {
                let kind = match a.kind {
                    AccessKind::Load => 'L',
                    AccessKind::Store => 'S',
                };
                writeln!(sink, "{} {:#x} {:#x} {}", a.instr_id, a.pc, a.vaddr, kind)?;
            }
        }
        TraceFormat::Binary => {
            sink.write_all(BINARY_MAGIC)?;
            sink.write_all(&BINARY_VERSION.to_le_bytes())?;
            for a in accesses {
                sink.write_all(&a.instr_id.to_le_bytes())?;
                sink.write_all(&a.pc.to_le_bytes())?;
                sink.write_all(&a.vaddr.to_le_bytes())?;
                sink.write_all(&[match a.kind {
                    AccessKind::Load => 0u8,
                    AccessKind::Store => 1u8,
                }])?;
            }
        }
    }
    Ok(())
}
