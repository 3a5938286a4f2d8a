//! Text motion files.
//!
//! ```text
//! MOTION v1 J=<J> F=<F> fps=<fps> x=<x0,x1,x2>
//! <flat pose vector for frame 0, whitespace separated>
//! ...
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so
//! reading a written file reproduces every value exactly.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::binio::open_input;
use crate::error::{Error, Result};
use crate::motion::{pose_dim, MotionSequence, Pose, Vec3};

pub fn format_motion(seq: &MotionSequence) -> String {
    let x = seq.initial_position;
    let mut out = format!(
        "MOTION v1 J={} F={} fps={} x={},{},{}\n",
        seq.joint_count(),
        seq.len(),
        seq.fps,
        x.x,
        x.y,
        x.z
    );
    let mut flat = Vec::new();
    for pose in &seq.frames {
        flat.clear();
        pose.write_flat(&mut flat);
        for (i, v) in flat.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_motion(text: &str) -> Result<MotionSequence> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format("motion header", "empty file"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("MOTION") || fields.next() != Some("v1") {
        return Err(Error::format(
            "motion header",
            format!("expected `MOTION v1`, got `{header}`"),
        ));
    }
    let (mut joints, mut frames, mut fps, mut x) = (None, None, None, None);
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::format("motion header", format!("bad field `{field}`")))?;
        let bad = || Error::format("motion header", format!("bad value in `{field}`"));
        match key {
            "J" => joints = Some(value.parse::<usize>().map_err(|_| bad())?),
            "F" => frames = Some(value.parse::<usize>().map_err(|_| bad())?),
            "fps" => fps = Some(value.parse::<f64>().map_err(|_| bad())?),
            "x" => {
                let v = value
                    .split(',')
                    .map(str::parse::<f64>)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad())?;
                if v.len() != 3 {
                    return Err(bad());
                }
                x = Some(Vec3::new(v[0], v[1], v[2]));
            }
            _ => {
                return Err(Error::format(
                    "motion header",
                    format!("unknown field `{key}`"),
                ))
            }
        }
    }
    let missing = |k: &str| Error::format("motion header", format!("missing `{k}`"));
    let joints = joints.ok_or_else(|| missing("J"))?;
    let frames = frames.ok_or_else(|| missing("F"))?;
    let fps = fps.ok_or_else(|| missing("fps"))?;
    let x = x.ok_or_else(|| missing("x"))?;

    let dim = pose_dim(joints);
    let mut poses = Vec::with_capacity(frames);
    let mut flat = Vec::with_capacity(dim);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let section = || format!("motion frame {i}");
        flat.clear();
        for tok in line.split_whitespace() {
            flat.push(
                tok.parse::<f64>()
                    .map_err(|_| Error::format(section(), format!("`{tok}` is not a number")))?,
            );
        }
        let pose =
            Pose::from_flat(&flat, joints).map_err(|e| Error::format(section(), e.to_string()))?;
        poses.push(pose);
    }
    if poses.len() != frames {
        return Err(Error::format(
            "motion body",
            format!("header declares {frames} frames, found {}", poses.len()),
        ));
    }
    MotionSequence::new(poses, fps, x)
}

pub fn write_motion(path: &Path, seq: &MotionSequence) -> Result<()> {
    std::fs::write(path, format_motion(seq))?;
    Ok(())
}

pub fn read_motion(path: &Path) -> Result<MotionSequence> {
    let mut text = String::new();
    open_input(path, "motion file")?.read_to_string(&mut text)?;
    parse_motion(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MotionSequence {
        let mut p = Pose::rest(vec![Vec3::new(0.1, -0.2, 1.0 / 3.0); 2], 0.9);
        p.root_velocity_z = 0.1 + 0.2;
        p.foot_contacts = [true, false, true, false];
        MotionSequence::new(vec![p.clone(), p], 30.0, Vec3::new(1.5, 0.0, -2.25)).unwrap()
    }

    #[test]
    fn write_then_parse_is_exact() {
        let seq = sample();
        let text = format_motion(&seq);
        assert!(text.starts_with("MOTION v1 J=2 F=2 fps=30 x=1.5,0,-2.25\n"));
        assert_eq!(parse_motion(&text).unwrap(), seq);
    }

    #[test]
    fn frame_count_mismatch_is_reported() {
        let text = format_motion(&sample()).replace("F=2", "F=3");
        let err = parse_motion(&text).unwrap_err().to_string();
        assert!(err.contains("3 frames"), "{err}");
    }

    #[test]
    fn bad_number_names_the_frame() {
        let mut text = format_motion(&sample());
        text = text.replacen("0.9", "zz", 1);
        let err = parse_motion(&text).unwrap_err().to_string();
        assert!(err.contains("frame 0"), "{err}");
    }
}
