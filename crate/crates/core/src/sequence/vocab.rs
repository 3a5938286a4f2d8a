use crate::error::{Error, Result};
use crate::sequence::Word;

const MARKERS: [Word; 4] = [Word::Bom, Word::Eom, Word::Boa, Word::Eoa];

/// Dense numbering of every word a model can see.
///
/// Layout: the four markers, `<n_1>…<n_N>`, `<c_1>…<c_N>`, motion ids,
/// music ids, position ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vocabulary {
    pub motion: u32,
    pub music: u32,
    pub pos: u32,
    pub max_dancers: u32,
}

impl Vocabulary {
    pub fn new(motion: u32, music: u32, pos: u32, max_dancers: u32) -> Result<Self> {
        if motion == 0 || max_dancers == 0 {
            return Err(Error::invalid(
                "vocabulary needs motion ids and at least one dancer",
            ));
        }
        Ok(Self {
            motion,
            music,
            pos,
            max_dancers,
        })
    }

    fn motion_base(&self) -> usize {
        MARKERS.len() + 2 * self.max_dancers as usize
    }

    fn music_base(&self) -> usize {
        self.motion_base() + self.motion as usize
    }

    fn pos_base(&self) -> usize {
        self.music_base() + self.music as usize
    }

    pub fn size(&self) -> usize {
        self.pos_base() + self.pos as usize
    }

    /// Dense ids of all motion words, contiguous.
    pub fn motion_range(&self) -> std::ops::Range<usize> {
        self.motion_base()..self.music_base()
    }

    pub fn contains(&self, w: Word) -> bool {
        self.id(w).is_ok()
    }

    pub fn id(&self, w: Word) -> Result<usize> {
        let out = |what: &str, v: u32, lim: u32| {
            Error::OutOfRange(format!("{what} {v} outside vocabulary of {lim}"))
        };
        Ok(match w {
            Word::Bom => 0,
            Word::Eom => 1,
            Word::Boa => 2,
            Word::Eoa => 3,
            Word::DancerCount(n) => {
                if n == 0 || n > self.max_dancers {
                    return Err(out("dancer count", n, self.max_dancers));
                }
                MARKERS.len() + n as usize - 1
            }
            Word::Dancer(i) => {
                if i == 0 || i > self.max_dancers {
                    return Err(out("dancer", i, self.max_dancers));
                }
                MARKERS.len() + self.max_dancers as usize + i as usize - 1
            }
            Word::Motion(k) => {
                if k >= self.motion {
                    return Err(out("motion id", k, self.motion));
                }
                self.motion_base() + k as usize
            }
            Word::Music(k) => {
                if k >= self.music {
                    return Err(out("music id", k, self.music));
                }
                self.music_base() + k as usize
            }
            Word::Pos(k) => {
                if k >= self.pos {
                    return Err(out("position id", k, self.pos));
                }
                self.pos_base() + k as usize
            }
        })
    }

    pub fn word(&self, id: usize) -> Result<Word> {
        let m = MARKERS.len();
        let n = self.max_dancers as usize;
        Ok(if id < m {
            MARKERS[id]
        } else if id < m + n {
            Word::DancerCount((id - m + 1) as u32)
        } else if id < m + 2 * n {
            Word::Dancer((id - m - n + 1) as u32)
        } else if id < self.music_base() {
            Word::Motion((id - self.motion_base()) as u32)
        } else if id < self.pos_base() {
            Word::Music((id - self.music_base()) as u32)
        } else if id < self.size() {
            Word::Pos((id - self.pos_base()) as u32)
        } else {
            return Err(Error::OutOfRange(format!(
                "word id {id} outside vocabulary of {}",
                self.size()
            )));
        })
    }

    pub fn encode(&self, words: &[Word]) -> Result<Vec<usize>> {
        words.iter().map(|&w| self.id(w)).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Result<Vec<Word>> {
        ids.iter().map(|&i| self.word(i)).collect()
    }

    /// Every word, in id order.
    pub fn words(&self) -> impl Iterator<Item = Word> + '_ {
        (0..self.size()).map(|i| self.word(i).expect("in range"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_word_round_trips_through_id_and_text() {
        let v = Vocabulary::new(256, 64, 256, 5).unwrap();
        assert_eq!(v.size(), 4 + 10 + 256 + 64 + 256);
        for (i, w) in v.words().enumerate() {
            assert_eq!(v.id(w).unwrap(), i);
            let text = w.to_string();
            assert_eq!(text.parse::<Word>().unwrap(), w);
        }
    }

    #[test]
    fn out_of_range_words_rejected() {
        let v = Vocabulary::new(4, 2, 4, 2).unwrap();
        assert!(v.id(Word::Motion(4)).is_err());
        assert!(v.id(Word::Dancer(3)).is_err());
        assert!(v.word(v.size()).is_err());
        assert_eq!(v.motion_range().len(), 4);
    }
}
