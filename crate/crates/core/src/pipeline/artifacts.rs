//! Small text artifacts: a `<MAGIC> v<version>` line followed by
//! `key=value` lines.

use std::io::Read;
use std::path::Path;

use crate::binio::open_input;
use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::position::PositionGrid;
use crate::sequence::Vocabulary;

pub const GRID_MAGIC: &str = "GRID";
pub const GRID_VERSION: u32 = 1;
pub const VOCAB_MAGIC: &str = "VOCAB";
pub const VOCAB_VERSION: u32 = 1;

fn parse_tagged(text: &str, magic: &'static str, version: u32) -> Result<KeyValues> {
    let (head, body) = text.split_once('\n').unwrap_or((text, ""));
    let mut parts = head.split_whitespace();
    if parts.next() != Some(magic) {
        return Err(Error::format(
            format!("{magic} header"),
            format!("expected magic `{magic}`, got `{}`", head.trim()),
        ));
    }
    let found = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse::<u32>().ok())
        .ok_or_else(|| Error::format(format!("{magic} header"), "missing version"))?;
    if found != version {
        return Err(Error::Version {
            kind: magic,
            found,
            expected: version,
        });
    }
    KeyValues::parse(body, magic)
}

fn required<T: std::str::FromStr>(kv: &KeyValues, key: &str, magic: &str) -> Result<T> {
    kv.get(key)?
        .ok_or_else(|| Error::format(format!("{magic} body"), format!("missing `{key}`")))
}

fn read_text(path: &Path, context: &str) -> Result<String> {
    let mut text = String::new();
    open_input(path, context)?.read_to_string(&mut text)?;
    Ok(text)
}

pub fn render_grid(grid: &PositionGrid) -> String {
    let (min, max) = grid.extent();
    format!(
        "{GRID_MAGIC} v{GRID_VERSION}\norder={}\nmin={min}\nmax={max}\n",
        grid.order()
    )
}

pub fn parse_grid(text: &str) -> Result<PositionGrid> {
    let kv = parse_tagged(text, GRID_MAGIC, GRID_VERSION)?;
    kv.reject_unknown(&["order", "min", "max"])?;
    PositionGrid::new(
        required(&kv, "order", GRID_MAGIC)?,
        required(&kv, "min", GRID_MAGIC)?,
        required(&kv, "max", GRID_MAGIC)?,
    )
}

pub fn save_grid(grid: &PositionGrid, path: &Path) -> Result<()> {
    std::fs::write(path, render_grid(grid))?;
    Ok(())
}

pub fn load_grid(path: &Path) -> Result<PositionGrid> {
    parse_grid(&read_text(path, "grid config")?)
}

pub fn render_vocabulary(v: &Vocabulary) -> String {
    format!(
        "{VOCAB_MAGIC} v{VOCAB_VERSION}\nmotion={}\nmusic={}\npos={}\nmax_dancers={}\n",
        v.motion, v.music, v.pos, v.max_dancers
    )
}

pub fn parse_vocabulary(text: &str) -> Result<Vocabulary> {
    let kv = parse_tagged(text, VOCAB_MAGIC, VOCAB_VERSION)?;
    kv.reject_unknown(&["motion", "music", "pos", "max_dancers"])?;
    Vocabulary::new(
        required(&kv, "motion", VOCAB_MAGIC)?,
        required(&kv, "music", VOCAB_MAGIC)?,
        required(&kv, "pos", VOCAB_MAGIC)?,
        required(&kv, "max_dancers", VOCAB_MAGIC)?,
    )
}

pub fn save_vocabulary(v: &Vocabulary, path: &Path) -> Result<()> {
    std::fs::write(path, render_vocabulary(v))?;
    Ok(())
}

pub fn load_vocabulary(path: &Path) -> Result<Vocabulary> {
    parse_vocabulary(&read_text(path, "vocabulary")?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip_and_guards() {
        let g = PositionGrid::new(5, -7.5, 7.25).unwrap();
        let text = render_grid(&g);
        assert_eq!(parse_grid(&text).unwrap(), g);
        assert!(matches!(
            parse_grid(&text.replace("GRID", "GRIT")),
            Err(Error::Format { .. })
        ));
        let err = parse_grid(&text.replace("v1", "v2")).unwrap_err();
        assert!(matches!(err, Error::Version { found: 2, .. }), "{err}");
        assert!(parse_grid("GRID v1\norder=5\nmin=0\n").is_err());
    }

    #[test]
    fn vocabulary_round_trip() {
        let v = Vocabulary::new(256, 64, 4096, 5).unwrap();
        assert_eq!(parse_vocabulary(&render_vocabulary(&v)).unwrap(), v);
        assert!(parse_vocabulary("VOCAB v3\n").is_err());
    }
}
