//! WAV ingestion and framing into the `M x N` frames matrix.

use std::fmt;
use std::io::ErrorKind;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::OrthogonalTransform;
use crate::objective::power;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("signal has no samples".into()));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidParameter("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("signal samples"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

fn map_hound(err: hound::Error) -> Error {
    match err {
        // hound reports short reads as `Other` with this message
        hound::Error::IoError(e)
            if e.kind() == ErrorKind::UnexpectedEof || e.to_string().contains("read enough bytes") =>
        {
            Error::CorruptHeader(format!("unexpected end of file: {e}"))
        }
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::FormatError(msg) => Error::CorruptHeader(msg.to_string()),
        hound::Error::Unsupported => Error::UnsupportedFormat("unsupported WAV encoding".into()),
        hound::Error::UnfinishedSample => Error::CorruptHeader("truncated sample data".into()),
        other => Error::UnsupportedFormat(other.to_string()),
    }
}

/// Reads a PCM (8/16/24/32-bit) or IEEE float WAV file as a mono signal in `[-1, 1]`.
///
/// Multichannel files are averaged across channels.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::CorruptHeader("zero channels".into()));
    }
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(Error::UnsupportedFormat(format!(
                    "{}-bit float samples",
                    spec.bits_per_sample
                )));
            }
            reader
                .into_samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()
                .map_err(map_hound)?
        }
        hound::SampleFormat::Int => {
            let bits = spec.bits_per_sample;
            if !(8..=32).contains(&bits) {
                return Err(Error::UnsupportedFormat(format!("{bits}-bit integer samples")));
            }
            let scale = 2f64.powi(i32::from(bits) - 1);
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| (v as f64 / scale).clamp(-1.0, 1.0)))
                .collect::<std::result::Result<_, _>>()
                .map_err(map_hound)?
        }
    };
    if interleaved.len() % channels != 0 {
        return Err(Error::CorruptHeader("partial frame at end of data".into()));
    }
    let samples: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    if samples.is_empty() {
        return Err(Error::CorruptHeader("no sample data".into()));
    }
    Signal::new(samples, spec.sample_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// `sin(π (m + 1/2) / M)`.
    Sine,
    /// Periodic Hann, `sin^2(π m / M)`.
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        let m = len as f64;
        (0..len)
            .map(|i| {
                let i = i as f64;
                match self {
                    Window::Sine => (std::f64::consts::PI * (i + 0.5) / m).sin(),
                    Window::Hann => (std::f64::consts::PI * i / m).sin().powi(2),
                    Window::Rectangular => 1.0,
                }
            })
            .collect()
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Sine => "sine",
            Window::Hann => "hann",
            Window::Rectangular => "rectangular",
        })
    }
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sine" => Ok(Window::Sine),
            "hann" => Ok(Window::Hann),
            "rectangular" | "rect" | "boxcar" => Ok(Window::Rectangular),
            other => Err(Error::Config(format!("unknown window '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSpec {
    pub frame_ms: f64,
    /// Frame length in samples; overrides `frame_ms` when set.
    pub frame_samples: Option<usize>,
    pub overlap: f64,
    pub window: Window,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            frame_ms: 40.0,
            frame_samples: None,
            overlap: 0.5,
            window: Window::Sine,
        }
    }
}

impl FrameSpec {
    pub fn frame_len(&self, sample_rate: u32) -> usize {
        self.frame_samples
            .unwrap_or_else(|| (self.frame_ms * sample_rate as f64 / 1000.0).round() as usize)
    }

    pub fn hop(&self, frame_len: usize) -> usize {
        ((frame_len as f64 * (1.0 - self.overlap)).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramesMatrix {
    /// `M x N`; column `n` is the windowed segment starting at sample `n * hop`.
    pub data: Array2<f64>,
    pub hop: usize,
    pub window: Window,
}

impl FramesMatrix {
    pub fn frame_len(&self) -> usize {
        self.data.nrows()
    }

    pub fn count(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }
}

/// Slices a signal into overlapping windowed frames.
pub fn frame_signal(signal: &Signal, spec: &FrameSpec) -> Result<FramesMatrix> {
    let frame_len = spec.frame_len(signal.sample_rate);
    if frame_len < 2 {
        return Err(Error::InvalidParameter(format!(
            "frame length must be at least 2 samples, got {frame_len}"
        )));
    }
    if !(0.0..1.0).contains(&spec.overlap) {
        return Err(Error::InvalidParameter(format!(
            "overlap must lie in [0, 1), got {}",
            spec.overlap
        )));
    }
    let len = signal.samples.len();
    if len < frame_len {
        return Err(Error::SignalTooShort {
            len,
            frame: frame_len,
        });
    }
    let hop = spec.hop(frame_len);
    let count = (len - frame_len) / hop + 1;
    let window = spec.window.coefficients(frame_len);
    let data = Array2::from_shape_fn((frame_len, count), |(m, n)| {
        window[m] * signal.samples[n * hop + m]
    });
    Ok(FramesMatrix {
        data,
        hop,
        window: spec.window,
    })
}

/// `|Φ Y|^2`, floored.
pub fn spectrogram(frames: ArrayView2<'_, f64>, phi: &OrthogonalTransform) -> Result<Array2<f64>> {
    Ok(power(phi.apply(frames)?.view()))
}
