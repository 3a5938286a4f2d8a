use std::fmt::Write as _;

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::generation::Sampling;

/// Initial dancer positions.
#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    Auto,
    Fixed(Vec<[f64; 2]>),
}

impl Placement {
    /// Parses `auto` or `x,z;x,z;…`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "auto" {
            return Ok(Placement::Auto);
        }
        let bad = || {
            Error::format(
                "positions",
                format!("`{text}` is neither `auto` nor `x,z;x,z;…`"),
            )
        };
        text.split(';')
            .map(|pair| {
                let (x, z) = pair.split_once(',').ok_or_else(bad)?;
                let x: f64 = x.trim().parse().map_err(|_| bad())?;
                let z: f64 = z.trim().parse().map_err(|_| bad())?;
                if !(x.is_finite() && z.is_finite()) {
                    return Err(bad());
                }
                Ok([x, z])
            })
            .collect::<Result<Vec<_>>>()
            .map(Placement::Fixed)
    }

    pub fn render(&self) -> String {
        match self {
            Placement::Auto => "auto".into(),
            Placement::Fixed(p) => p
                .iter()
                .map(|[x, z]| format!("{x},{z}"))
                .collect::<Vec<_>>()
                .join(";"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub segment_seconds: f64,
    pub fps: f64,
    pub sampling: Sampling,
    pub seed: u64,
    pub dancer_count: usize,
    pub placement: Placement,
    /// Prompt with Pos words; otherwise with `<n_N>` and `<c_i>`.
    pub with_position: bool,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            segment_seconds: 2.0,
            fps: 30.0,
            sampling: Sampling::default(),
            seed: 0,
            dancer_count: 3,
            placement: Placement::Auto,
            with_position: true,
        }
    }
}

const KEYS: [&str; 8] = [
    "segment_seconds",
    "fps",
    "temperature",
    "nucleus_p",
    "seed",
    "dancer_count",
    "positions",
    "with_position",
];

impl GenerationConfig {
    pub const KEYS: &'static [&'static str] = &KEYS;

    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        if !(self.segment_seconds.is_finite() && self.segment_seconds > 0.0) {
            return Err(Error::invalid(format!(
                "segment_seconds must be positive, got {}",
                self.segment_seconds
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::invalid(format!(
                "fps must be positive, got {}",
                self.fps
            )));
        }
        if self.dancer_count == 0 {
            return Err(Error::invalid("dancer_count must be at least 1"));
        }
        if let Placement::Fixed(p) = &self.placement {
            if p.len() != self.dancer_count {
                return Err(Error::invalid(format!(
                    "{} positions given for {} dancers",
                    p.len(),
                    self.dancer_count
                )));
            }
        }
        Ok(())
    }

    /// Motion steps (equal to audio tokens) per segment, at least one.
    pub fn tokens_per_segment(&self, downsample: usize) -> usize {
        ((self.segment_seconds * self.fps / downsample as f64).round() as usize).max(1)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(&KEYS)?;
        let d = Self::default();
        let cfg = Self {
            segment_seconds: kv.get_or("segment_seconds", d.segment_seconds)?,
            fps: kv.get_or("fps", d.fps)?,
            sampling: Sampling {
                temperature: kv.get_or("temperature", d.sampling.temperature)?,
                nucleus_p: kv.get_or("nucleus_p", d.sampling.nucleus_p)?,
            },
            seed: kv.get_or("seed", d.seed)?,
            dancer_count: kv.get_or("dancer_count", d.dancer_count)?,
            placement: kv
                .raw("positions")
                .map_or(Ok(Placement::Auto), Placement::parse)?,
            with_position: kv.get_or("with_position", d.with_position)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text, "generation config")?)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "segment_seconds={}", self.segment_seconds);
        let _ = writeln!(s, "fps={}", self.fps);
        let _ = writeln!(s, "temperature={}", self.sampling.temperature);
        let _ = writeln!(s, "nucleus_p={}", self.sampling.nucleus_p);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "dancer_count={}", self.dancer_count);
        let _ = writeln!(s, "positions={}", self.placement.render());
        let _ = writeln!(s, "with_position={}", self.with_position);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_renders() {
        let c = GenerationConfig::parse(
            "segment_seconds=4\ntemperature=0\nseed=7\ndancer_count=2\npositions=1,0;-1,0.5\n",
        )
        .unwrap();
        assert_eq!(c.placement, Placement::Fixed(vec![[1.0, 0.0], [-1.0, 0.5]]));
        assert_eq!(c.sampling.temperature, 0.0);
        assert_eq!(c.sampling.nucleus_p, 0.95);
        assert_eq!(GenerationConfig::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn rejects_mismatched_positions_and_unknown_keys() {
        assert!(GenerationConfig::parse("dancer_count=3\npositions=0,0").is_err());
        assert!(GenerationConfig::parse("temprature=1").is_err());
        assert!(GenerationConfig::parse("positions=a,b").is_err());
        assert!(GenerationConfig::parse("nucleus_p=0").is_err());
    }

    #[test]
    fn tokens_per_segment_rounds() {
        let c = GenerationConfig::default();
        assert_eq!(c.tokens_per_segment(4), 15);
        let c = GenerationConfig {
            segment_seconds: 0.01,
            ..c
        };
        assert_eq!(c.tokens_per_segment(4), 1);
    }
}
