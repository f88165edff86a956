use super::{PoseSequence, SequenceFrame};
use crate::error::{Error, Result};

/// Fixed-length temporal windows taken every `stride` frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    length: usize,
    stride: usize,
}

impl WindowSpec {
    pub fn new(length: usize, stride: usize) -> Result<Self> {
        if length == 0 || stride == 0 {
            return Err(Error::InvalidConfig(format!(
                "window length ({length}) and stride ({stride}) must be at least 1"
            )));
        }
        Ok(Self { length, stride })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn stride(&self) -> usize {
        self.stride
    }
}

/// What to do with the frames past the last full window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadPolicy {
    Drop,
    /// Emit one final window, filled up by repeating the last frame.
    RepeatLast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    /// Index of the first frame within the sequence.
    pub offset: usize,
    pub frames: Vec<SequenceFrame>,
    /// How many trailing frames are copies of the sequence's last frame.
    pub padded: usize,
}

/// Cuts a sequence into windows starting at `0, stride, 2·stride, …`.
///
/// Full windows are those with `offset + length <= N`. With
/// [`PadPolicy::RepeatLast`], if frames remain after the last full window
/// (or the sequence is shorter than one window), one more window starts at
/// the next offset and is padded with the last frame.
pub fn window(seq: &PoseSequence, spec: WindowSpec, pad: PadPolicy) -> Vec<Window> {
    let frames = seq.frames();
    let n = frames.len();
    let (len, stride) = (spec.length, spec.stride);
    let mut out = Vec::new();
    let mut offset = 0;
    while offset + len <= n {
        out.push(Window {
            offset,
            frames: frames[offset..offset + len].to_vec(),
            padded: 0,
        });
        offset += stride;
    }
    let covered = out.last().map_or(0, |w| w.offset + len);
    if pad == PadPolicy::RepeatLast && covered < n && offset < n {
        let mut tail = frames[offset..].to_vec();
        let padded = len - tail.len();
        tail.resize(len, frames[n - 1].clone());
        out.push(Window {
            offset,
            frames: tail,
            padded,
        });
    }
    out
}
