//! YUV4MPEG2 reading and writing.
//!
//! Only the luma plane is kept. Chroma planes are read past and dropped, and
//! 10-bit samples are shifted down to 8 bits so every descriptor sees the same
//! sample scale regardless of the source depth.

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SIGNATURE: &[u8] = b"YUV4MPEG2";
const FRAME_MARKER: &[u8] = b"FRAME";
const MAX_LINE: usize = 4096;

/// Frame rate as an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: u32,
    pub den: u32,
}

impl Rational {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Domain(format!("frame rate {num}:{den} must be positive")));
        }
        Ok(Rational { num, den })
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// `30`, `30000/1001` or `30000:1001`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("invalid frame rate {s:?}"));
        let (num, den) = match s.split_once(['/', ':']) {
            Some((n, d)) => (
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            ),
            None => (s.trim().parse().map_err(|_| bad())?, 1),
        };
        Rational::new(num, den)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChromaSampling {
    #[serde(rename = "4:2:0")]
    Yuv420,
}

impl ChromaSampling {
    /// Samples in the two chroma planes of one frame.
    fn chroma_samples(self, width: usize, height: usize) -> usize {
        match self {
            ChromaSampling::Yuv420 => 2 * width.div_ceil(2) * height.div_ceil(2),
        }
    }
}

impl fmt::Display for ChromaSampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChromaSampling::Yuv420 => f.write_str("4:2:0"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoHeader {
    pub width: usize,
    pub height: usize,
    pub frame_rate: Rational,
    pub bit_depth: u8,
    pub chroma: ChromaSampling,
}

impl VideoHeader {
    pub fn new(width: usize, height: usize, frame_rate: Rational) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain(format!("frame size {width}x{height} must be positive")));
        }
        Ok(VideoHeader {
            width,
            height,
            frame_rate,
            bit_depth: 8,
            chroma: ChromaSampling::Yuv420,
        })
    }

    fn bytes_per_sample(&self) -> usize {
        if self.bit_depth > 8 {
            2
        } else {
            1
        }
    }

    fn luma_bytes(&self) -> usize {
        self.width * self.height * self.bytes_per_sample()
    }

    fn chroma_bytes(&self) -> usize {
        self.chroma.chroma_samples(self.width, self.height) * self.bytes_per_sample()
    }

    fn to_header_line(self) -> String {
        let tag = if self.bit_depth > 8 { "C420p10" } else { "C420jpeg" };
        format!(
            "YUV4MPEG2 W{} H{} F{}:{} Ip A1:1 {}\n",
            self.width, self.height, self.frame_rate.num, self.frame_rate.den, tag
        )
    }
}

/// One 8-bit luma plane, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LumaFrame {
    width: usize,
    height: usize,
    samples: Vec<u8>,
    index: usize,
}

impl LumaFrame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>, index: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Domain(format!("frame size {width}x{height} must be positive")));
        }
        if samples.len() != width * height {
            return Err(Error::Domain(format!(
                "{} samples do not fill a {width}x{height} frame",
                samples.len()
            )));
        }
        Ok(LumaFrame {
            width,
            height,
            samples,
            index,
        })
    }

    /// Builds a frame by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, index: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        LumaFrame {
            width,
            height,
            samples,
            index,
        }
    }

    pub fn filled(width: usize, height: usize, value: u8, index: usize) -> Self {
        Self::from_fn(width, height, index, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }
}

/// Streaming Y4M reader yielding luma planes in presentation order.
pub struct Y4mReader<R> {
    inner: R,
    header: VideoHeader,
    frames_read: usize,
    raw: Vec<u8>,
    finished: bool,
}

impl<R: BufRead> Y4mReader<R> {
    /// Parses the stream header, leaving the reader at the first FRAME marker.
    pub fn new(mut inner: R) -> Result<Self> {
        let line = read_line(&mut inner)?.ok_or_else(|| Error::format(None, "empty stream"))?;
        let header = parse_header(&line)?;
        Ok(Y4mReader {
            inner,
            header,
            frames_read: 0,
            raw: Vec::new(),
            finished: false,
        })
    }

    pub fn header(&self) -> &VideoHeader {
        &self.header
    }

    /// Number of frames yielded so far; the sequence length once the stream is exhausted.
    pub fn frames_read(&self) -> usize {
        self.frames_read
    }

    pub fn next_frame(&mut self) -> Result<Option<LumaFrame>> {
        if self.finished {
            return Ok(None);
        }
        let index = self.frames_read;
        let marker = match read_line(&mut self.inner) {
            Ok(Some(line)) => line,
            Ok(None) => {
                self.finished = true;
                return Ok(None);
            }
            Err(Error::Format { message, .. }) => {
                self.finished = true;
                return Err(Error::format(Some(index), message));
            }
            Err(e) => {
                self.finished = true;
                return Err(e);
            }
        };
        if !marker.starts_with(FRAME_MARKER) || marker.get(FRAME_MARKER.len()).is_some_and(|&b| b != b' ') {
            self.finished = true;
            return Err(Error::format(Some(index), "missing FRAME marker"));
        }

        let luma_bytes = self.header.luma_bytes();
        self.raw.resize(luma_bytes, 0);
        if let Err(e) = read_exact_or_truncated(&mut self.inner, &mut self.raw) {
            self.finished = true;
            return Err(match e {
                Error::Format { message, .. } => Error::format(Some(index), format!("luma plane {message}")),
                e => e,
            });
        }
        let samples = if self.header.bytes_per_sample() == 2 {
            self.raw
                .chunks_exact(2)
                .map(|c| (u16::from_le_bytes([c[0], c[1]]) >> 2).min(255) as u8)
                .collect()
        } else {
            self.raw.clone()
        };

        let chroma = self.header.chroma_bytes() as u64;
        let skipped = std::io::copy(&mut (&mut self.inner).take(chroma), &mut std::io::sink())?;
        if skipped != chroma {
            self.finished = true;
            return Err(Error::format(Some(index), "chroma planes truncated"));
        }

        self.frames_read += 1;
        Ok(Some(LumaFrame {
            width: self.header.width,
            height: self.header.height,
            samples,
            index,
        }))
    }
}

impl<R: BufRead> Iterator for Y4mReader<R> {
    type Item = Result<LumaFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

/// Writes 8-bit (or 10-bit, when the header says so) Y4M with flat chroma.
pub struct Y4mWriter<W: Write> {
    inner: W,
    header: VideoHeader,
}

impl<W: Write> Y4mWriter<W> {
    pub fn new(mut inner: W, header: VideoHeader) -> Result<Self> {
        inner.write_all(header.to_header_line().as_bytes())?;
        Ok(Y4mWriter { inner, header })
    }

    pub fn write_frame(&mut self, frame: &LumaFrame) -> Result<()> {
        if frame.width != self.header.width || frame.height != self.header.height {
            return Err(Error::Domain(format!(
                "frame {}x{} does not match stream {}x{}",
                frame.width, frame.height, self.header.width, self.header.height
            )));
        }
        self.inner.write_all(b"FRAME\n")?;
        let chroma = self.header.chroma.chroma_samples(self.header.width, self.header.height);
        if self.header.bytes_per_sample() == 2 {
            let mut buf = Vec::with_capacity(2 * (frame.samples.len() + chroma));
            for &s in &frame.samples {
                buf.extend_from_slice(&(u16::from(s) << 2).to_le_bytes());
            }
            for _ in 0..chroma {
                buf.extend_from_slice(&512u16.to_le_bytes());
            }
            self.inner.write_all(&buf)?;
        } else {
            self.inner.write_all(&frame.samples)?;
            self.inner.write_all(&vec![128u8; chroma])?;
        }
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}

/// Reads one `\n`-terminated line. `Ok(None)` on clean EOF; a line cut off by
/// EOF is a format error.
fn read_line<R: BufRead>(r: &mut R) -> Result<Option<Vec<u8>>> {
    let mut line = Vec::new();
    let n = r.by_ref().take(MAX_LINE as u64).read_until(b'\n', &mut line)?;
    if n == 0 {
        return Ok(None);
    }
    if line.last() != Some(&b'\n') {
        let message = if n >= MAX_LINE {
            "line too long"
        } else {
            "truncated line"
        };
        return Err(Error::format(None, message));
    }
    line.pop();
    Ok(Some(line))
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(Error::format(
                    None,
                    format!("truncated after {filled} of {} bytes", buf.len()),
                ))
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn parse_header(line: &[u8]) -> Result<VideoHeader> {
    let text = std::str::from_utf8(line).map_err(|_| Error::format(None, "header is not ASCII"))?;
    let mut tokens = text.split(' ').filter(|t| !t.is_empty());
    if tokens.next().map(str::as_bytes) != Some(SIGNATURE) {
        return Err(Error::format(None, "missing YUV4MPEG2 signature"));
    }

    let mut width = None;
    let mut height = None;
    let mut rate = None;
    let mut chroma_tag = "420jpeg";
    for token in tokens {
        let (key, value) = token.split_at(1);
        match key {
            "W" => width = Some(parse_dim(value, "width")?),
            "H" => height = Some(parse_dim(value, "height")?),
            "F" => {
                let (n, d) = value
                    .split_once(':')
                    .ok_or_else(|| Error::format(None, format!("bad frame rate {value:?}")))?;
                let num = n
                    .parse()
                    .map_err(|_| Error::format(None, format!("bad frame rate {value:?}")))?;
                let den = d
                    .parse()
                    .map_err(|_| Error::format(None, format!("bad frame rate {value:?}")))?;
                rate = Some(Rational::new(num, den).map_err(|e| Error::format(None, e.to_string()))?);
            }
            "C" => chroma_tag = value,
            // interlacing, aspect ratio, and extensions do not affect the luma plane
            _ => {}
        }
    }

    let width = width.ok_or_else(|| Error::format(None, "header lacks W"))?;
    let height = height.ok_or_else(|| Error::format(None, "header lacks H"))?;
    let frame_rate = rate.ok_or_else(|| Error::format(None, "header lacks F"))?;
    let (chroma, bit_depth) = match chroma_tag {
        "420" | "420jpeg" | "420mpeg2" | "420paldv" => (ChromaSampling::Yuv420, 8),
        "420p10" => (ChromaSampling::Yuv420, 10),
        other => return Err(Error::UnsupportedFormat(format!("chroma tag C{other}"))),
    };
    Ok(VideoHeader {
        width,
        height,
        frame_rate,
        bit_depth,
        chroma,
    })
}

fn parse_dim(value: &str, what: &str) -> Result<usize> {
    match value.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(Error::format(None, format!("bad {what} {value:?}"))),
    }
}
