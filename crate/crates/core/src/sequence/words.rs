use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One token word of an assembled sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Word {
    /// `<motion_id_K>`, K in the flattened motion id space.
    Motion(u32),
    /// `<music_id_K>`.
    Music(u32),
    /// `<Pos_id_K>`.
    Pos(u32),
    /// `<n_N>`: number of dancers in the example.
    DancerCount(u32),
    /// `<c_i>`: dancer header, 1-based.
    Dancer(u32),
    /// `<bom>` / `<eom>`: motion block delimiters.
    Bom,
    Eom,
    /// `<boa>` / `<eoa>`: audio block delimiters.
    Boa,
    Eoa,
}

impl Word {
    pub fn is_motion(&self) -> bool {
        matches!(self, Word::Motion(_))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Word::Motion(k) => write!(f, "<motion_id_{k}>"),
            Word::Music(k) => write!(f, "<music_id_{k}>"),
            Word::Pos(k) => write!(f, "<Pos_id_{k}>"),
            Word::DancerCount(n) => write!(f, "<n_{n}>"),
            Word::Dancer(i) => write!(f, "<c_{i}>"),
            Word::Bom => f.write_str("<bom>"),
            Word::Eom => f.write_str("<eom>"),
            Word::Boa => f.write_str("<boa>"),
            Word::Eoa => f.write_str("<eoa>"),
        }
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::format("token word", format!("`{s}`: {why}"));
        let inner = s
            .strip_prefix('<')
            .and_then(|r| r.strip_suffix('>'))
            .ok_or_else(|| bad("not enclosed in <>"))?;
        match inner {
            "bom" => return Ok(Word::Bom),
            "eom" => return Ok(Word::Eom),
            "boa" => return Ok(Word::Boa),
            "eoa" => return Ok(Word::Eoa),
            _ => {}
        }
        let (ctor, digits): (fn(u32) -> Word, &str) =
            if let Some(d) = inner.strip_prefix("motion_id_") {
                (Word::Motion, d)
            } else if let Some(d) = inner.strip_prefix("music_id_") {
                (Word::Music, d)
            } else if let Some(d) = inner.strip_prefix("Pos_id_") {
                (Word::Pos, d)
            } else if let Some(d) = inner.strip_prefix("n_") {
                (Word::DancerCount, d)
            } else if let Some(d) = inner.strip_prefix("c_") {
                (Word::Dancer, d)
            } else {
                return Err(bad("unknown word kind"));
            };
        // canonical decimal only, so parse(render(w)) and render(parse(s)) agree
        if digits.is_empty()
            || !digits.bytes().all(|b| b.is_ascii_digit())
            || (digits.len() > 1 && digits.starts_with('0'))
        {
            return Err(bad("id is not a decimal number"));
        }
        let id: u32 = digits.parse().map_err(|_| bad("id out of range"))?;
        if matches!(ctor(0), Word::Dancer(_) | Word::DancerCount(_)) && id == 0 {
            return Err(bad("dancer numbers start at 1"));
        }
        Ok(ctor(id))
    }
}

/// Renders words separated by single spaces.
pub fn render_words(words: &[Word]) -> String {
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&w.to_string());
    }
    out
}

/// Parses whitespace-separated words.
pub fn parse_words(text: &str) -> Result<Vec<Word>> {
    text.split_whitespace().map(str::parse).collect()
}

/// Interleaves a level-major code grid (`codes[l][t]`) into one id stream
/// `t0l0 t0l1 … t1l0 …` with `id = l·K + code`.
pub fn flatten_motion_codes(codes: &[Vec<usize>], codebook_size: usize) -> Result<Vec<u32>> {
    let levels = codes.len();
    if levels == 0 {
        return Err(Error::invalid("no code levels"));
    }
    let steps = codes[0].len();
    if codes.iter().any(|r| r.len() != steps) {
        return Err(Error::Shape("code levels differ in length".into()));
    }
    let mut out = Vec::with_capacity(levels * steps);
    for t in 0..steps {
        for (l, row) in codes.iter().enumerate() {
            let c = row[t];
            if c >= codebook_size {
                return Err(Error::OutOfRange(format!(
                    "code {c} at level {l} (K={codebook_size})"
                )));
            }
            out.push((l * codebook_size + c) as u32);
        }
    }
    Ok(out)
}

/// Inverse of [`flatten_motion_codes`]; position `j` must hold a level
/// `j mod L` id.
pub fn unflatten_motion_codes(
    ids: &[u32],
    levels: usize,
    codebook_size: usize,
) -> Result<Vec<Vec<usize>>> {
    if levels == 0 || !ids.len().is_multiple_of(levels) {
        return Err(Error::Shape(format!(
            "{} motion ids do not fill {levels} levels",
            ids.len()
        )));
    }
    let mut codes = vec![Vec::with_capacity(ids.len() / levels); levels];
    for (j, &id) in ids.iter().enumerate() {
        let id = id as usize;
        let (l, c) = (id / codebook_size, id % codebook_size);
        if l != j % levels {
            return Err(Error::invalid(format!(
                "motion id {id} at position {j} belongs to level {l}, expected {}",
                j % levels
            )));
        }
        codes[l].push(c);
    }
    Ok(codes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_forms() {
        assert_eq!(Word::Motion(5).to_string(), "<motion_id_5>");
        assert_eq!(Word::Music(0).to_string(), "<music_id_0>");
        assert_eq!(Word::Pos(17).to_string(), "<Pos_id_17>");
        assert_eq!("<motion_id_5>".parse::<Word>().unwrap(), Word::Motion(5));
        assert_eq!("<n_3>".parse::<Word>().unwrap(), Word::DancerCount(3));
    }

    #[test]
    fn malformed_words_name_the_text() {
        for bad in [
            "<motion_id_x>",
            "motion_id_1",
            "<motion_id_>",
            "<foo_1>",
            "<c_0>",
            "<music_id_01>",
            "<Pos_id_-1>",
        ] {
            let err = bad.parse::<Word>().unwrap_err().to_string();
            assert!(err.contains(bad), "{err}");
        }
    }

    #[test]
    fn interleaving_round_trip() {
        let codes = vec![vec![1, 2], vec![3, 0]];
        let ids = flatten_motion_codes(&codes, 4).unwrap();
        assert_eq!(ids, vec![1, 7, 2, 4]);
        assert_eq!(unflatten_motion_codes(&ids, 2, 4).unwrap(), codes);
        assert!(unflatten_motion_codes(&[7, 1], 2, 4).is_err());
        assert!(flatten_motion_codes(&[vec![4]], 4).is_err());
    }
}
