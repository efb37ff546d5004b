//! Text motion files: one JSON header line, then one comma-separated row per frame.
//!
//! ```text
//! {"frames":60,"joints":2,"dim":23,"condition":1}
//! 0.12,-0.5,...
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::layout::PoseLayout;
use super::sequence::MotionSequence;
use crate::error::{Error, Result};
use crate::numerics::DenseArray;

pub const MOTION_EXTENSION: &str = "motion";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionHeader {
    pub frames: usize,
    pub joints: usize,
    pub dim: usize,
    pub condition: Option<usize>,
}

pub fn encode_motion(motion: &MotionSequence) -> Result<String> {
    motion.validate()?;
    let header = MotionHeader {
        frames: motion.frames(),
        joints: motion.layout().joints(),
        dim: motion.dim(),
        condition: motion.condition(),
    };
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    for f in 0..motion.frames() {
        for (i, v) in motion.frame(f).iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn decode_motion(text: &str, path: &Path) -> Result<MotionSequence> {
    let format_err = |detail: String| Error::Format {
        kind: "motion",
        path: path.to_path_buf(),
        detail,
    };
    let mut lines = text.lines();
    let header_line = lines.next().ok_or_else(|| format_err("empty file".into()))?;
    let header: MotionHeader =
        serde_json::from_str(header_line).map_err(|e| format_err(format!("header: {e}")))?;
    if header.frames == 0 {
        return Err(format_err("header declares zero frames".into()));
    }
    let layout = PoseLayout::new(header.joints).map_err(|e| format_err(e.to_string()))?;
    if header.dim != layout.dim() {
        return Err(Error::DimensionMismatch {
            joints: header.joints,
            expected: layout.dim(),
            found: header.dim,
        });
    }
    let mut data = Vec::with_capacity(header.frames * header.dim);
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|e| format_err(format!("row {i}: `{field}`: {e}")))?;
            data.push(v);
        }
        if data.len() - before != header.dim {
            return Err(format_err(format!(
                "row {i} has {} values, header declares {}",
                data.len() - before,
                header.dim
            )));
        }
        rows += 1;
    }
    if rows != header.frames {
        return Err(format_err(format!(
            "found {rows} rows, header declares {}",
            header.frames
        )));
    }
    let values = DenseArray::new(vec![header.frames, header.dim], data)?;
    let motion = MotionSequence::new(layout, values, header.condition)?;
    motion.validate().map_err(|e| format_err(e.to_string()))?;
    Ok(motion)
}

pub fn write_motion(path: &Path, motion: &MotionSequence) -> Result<()> {
    let text = encode_motion(motion)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_motion(path: &Path) -> Result<MotionSequence> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_motion(&text, path)
}

/// Writes `motions` as `000000.motion`, `000001.motion`, ... into `dir`.
pub fn write_motion_dir(dir: &Path, motions: &[MotionSequence]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    motions
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let path = dir.join(format!("{i:06}.{MOTION_EXTENSION}"));
            write_motion(&path, m)?;
            Ok(path)
        })
        .collect()
}

/// Reads every `*.motion` file in `dir`, in file-name order.
pub fn read_motion_dir(dir: &Path) -> Result<Vec<MotionSequence>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == MOTION_EXTENSION))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_motion(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout() -> PoseLayout {
        PoseLayout::new(2).unwrap()
    }

    #[test]
    fn header_is_single_json_line() {
        let m = MotionSequence::new(layout(), DenseArray::zeros(&[2, 23]), Some(1)).unwrap();
        let text = encode_motion(&m).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, r#"{"frames":2,"joints":2,"dim":23,"condition":1}"#);
        assert_eq!(text.lines().count(), 3);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn empty_motion_is_rejected_on_write() {
        let m = MotionSequence::new(layout(), DenseArray::zeros(&[0, 23]), None).unwrap();
        assert!(encode_motion(&m).is_err());
    }

    #[test]
    fn declared_dim_must_match_layout() {
        let mut text = String::from(r#"{"frames":1,"joints":21,"dim":250,"condition":null}"#);
        text.push('\n');
        text.push_str(&vec!["0"; 250].join(","));
        text.push('\n');
        let err = decode_motion(&text, Path::new("x.motion")).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 251, found: 250, .. }));
    }

    #[test]
    fn row_count_and_width_are_checked() {
        let header = r#"{"frames":2,"joints":2,"dim":23,"condition":null}"#;
        let row = vec!["1.5"; 23].join(",");
        let short = format!("{header}\n{row}\n");
        assert!(matches!(decode_motion(&short, Path::new("a")), Err(Error::Format { .. })));
        let narrow = format!("{header}\n{row}\n1,2\n");
        assert!(matches!(decode_motion(&narrow, Path::new("a")), Err(Error::Format { .. })));
        let ok = format!("{header}\n{row}\n{row}\n");
        assert_eq!(decode_motion(&ok, Path::new("a")).unwrap().frames(), 2);
    }

    #[test]
    fn malformed_header() {
        assert!(decode_motion("not json\n1,2\n", Path::new("a")).is_err());
        assert!(decode_motion("", Path::new("a")).is_err());
    }
}
