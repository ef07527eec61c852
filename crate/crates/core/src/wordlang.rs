//! Words over the four automata, their canonical orders, and the
//! length-preserving bijections between mountain and plateau words.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("letter `{0}` is not in the alphabet of {1}")]
    AlphabetMismatch(char, Automaton),
    #[error("word `{0}` is not accepted by {1}")]
    NotAccepted(String, Automaton),
    #[error("height parameter must be at least 2, got {0}")]
    BadParameter(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    R,
    L,
    A,
    B,
    Dot,
    Open,
    Close,
    Star,
}

impl Letter {
    pub fn ascii(self) -> char {
        match self {
            Letter::R => 'R',
            Letter::L => 'L',
            Letter::A => 'A',
            Letter::B => 'B',
            Letter::Dot => '.',
            Letter::Open => '<',
            Letter::Close => '>',
            Letter::Star => '*',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        Some(match c {
            'R' => Letter::R,
            'L' => Letter::L,
            'A' => Letter::A,
            'B' => Letter::B,
            '.' | '•' => Letter::Dot,
            '<' | '⟨' => Letter::Open,
            '>' | '⟩' => Letter::Close,
            '*' => Letter::Star,
            _ => return None,
        })
    }

    /// Change in depth: R/B/⟨ go up, L/A/⟩ go down, • and * stay.
    pub fn depth_step(self) -> i64 {
        match self {
            Letter::R | Letter::B | Letter::Open => 1,
            Letter::L | Letter::A | Letter::Close => -1,
            Letter::Dot | Letter::Star => 0,
        }
    }
}

/// The four automata. `Mp(p)`/`Np(p)` have height p - 1; p need not be prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Automaton {
    M0,
    N0,
    Mp(usize),
    Np(usize),
}

impl fmt::Display for Automaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Automaton::M0 => write!(f, "M0"),
            Automaton::N0 => write!(f, "N0"),
            Automaton::Mp(p) => write!(f, "M{p}"),
            Automaton::Np(p) => write!(f, "N{p}"),
        }
    }
}

impl Automaton {
    pub fn alphabet(self) -> &'static [Letter] {
        use Letter::*;
        match self {
            Automaton::M0 => &[R, L],
            Automaton::N0 => &[Dot, Open, Close],
            Automaton::Mp(_) => &[R, L, A, B],
            Automaton::Np(_) => &[Dot, Open, Close, Star],
        }
    }

    pub fn is_mountain(self) -> bool {
        matches!(self, Automaton::M0 | Automaton::Mp(_))
    }

    /// Height bound p - 1 for the char-p automata.
    pub fn height(self) -> Option<i64> {
        match self {
            Automaton::Mp(p) | Automaton::Np(p) => Some(p as i64 - 1),
            _ => None,
        }
    }

    /// The automaton on the other side of the bijection.
    pub fn partner(self) -> Automaton {
        match self {
            Automaton::M0 => Automaton::N0,
            Automaton::N0 => Automaton::M0,
            Automaton::Mp(p) => Automaton::Np(p),
            Automaton::Np(p) => Automaton::Mp(p),
        }
    }

    fn check(self) -> Result<(), WordError> {
        match self {
            Automaton::Mp(p) | Automaton::Np(p) if p < 2 => Err(WordError::BadParameter(p)),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    pub automaton: Automaton,
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn parse(automaton: Automaton, s: &str) -> Result<Word, WordError> {
        let letters = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                Letter::from_char(c)
                    .filter(|l| automaton.alphabet().contains(l))
                    .ok_or(WordError::AlphabetMismatch(c, automaton))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Word { automaton, letters })
    }

    /// Parses and checks membership.
    pub fn accepted(automaton: Automaton, s: &str) -> Result<Word, WordError> {
        let w = Word::parse(automaton, s)?;
        if !accepts(&w)? {
            return Err(WordError::NotAccepted(s.to_string(), automaton));
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn depth_profile(&self) -> Vec<i64> {
        let mut d = 0;
        self.letters
            .iter()
            .map(|l| {
                d += l.depth_step();
                d
            })
            .collect()
    }

    /// Length of the R/L prefix of a mountain word.
    pub fn rl_len(&self) -> usize {
        self.letters.iter().take_while(|l| matches!(l, Letter::R | Letter::L)).count()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.letters {
            write!(f, "{}", l.ascii())?;
        }
        Ok(())
    }
}

pub fn accepts(w: &Word) -> Result<bool, WordError> {
    w.automaton.check()?;
    if let Some(&bad) = w.letters.iter().find(|l| !w.automaton.alphabet().contains(l)) {
        return Err(WordError::AlphabetMismatch(bad.ascii(), w.automaton));
    }
    Ok(accepts_letters(w.automaton, &w.letters))
}

fn accepts_letters(a: Automaton, letters: &[Letter]) -> bool {
    match a {
        Automaton::M0 => {
            let mut d = 0;
            letters.iter().all(|l| {
                d += l.depth_step();
                d >= 0
            })
        }
        Automaton::N0 => {
            let mut d = 0;
            for l in letters {
                if *l == Letter::Dot && d != 0 {
                    return false;
                }
                d += l.depth_step();
                if d < 0 {
                    return false;
                }
            }
            d == 0
        }
        Automaton::Mp(p) => {
            let h = p as i64 - 1;
            let k = letters.iter().take_while(|l| matches!(l, Letter::R | Letter::L)).count();
            if letters[k..].iter().any(|l| matches!(l, Letter::R | Letter::L)) {
                return false;
            }
            let mut d = 0;
            for (i, l) in letters[..k].iter().enumerate() {
                d += l.depth_step();
                if d < 0 || d > h || (d == h && i + 1 != k) {
                    return false;
                }
            }
            k == letters.len() || d == h
        }
        Automaton::Np(p) => {
            let h = p as i64 - 1;
            let mut d = 0;
            for l in letters {
                match l {
                    Letter::Dot if d != 0 => return false,
                    Letter::Star if d != h => return false,
                    _ => {}
                }
                d += l.depth_step();
                if d < 0 || d > h {
                    return false;
                }
            }
            d == 0
        }
    }
}

/// Canonical comparison of two mountain words of the same automaton.
pub fn mountain_cmp(a: &Word, b: &Word) -> Ordering {
    fn rl_rank(l: Letter) -> u8 {
        match l {
            Letter::L => 0,
            _ => 1,
        }
    }
    fn ab_rank(l: Letter) -> u8 {
        match l {
            Letter::B => 0,
            _ => 1,
        }
    }
    let (ka, kb) = (a.rl_len(), b.rl_len());
    let ra: Vec<u8> = a.letters[..ka].iter().map(|&l| rl_rank(l)).collect();
    let rb: Vec<u8> = b.letters[..kb].iter().map(|&l| rl_rank(l)).collect();
    ra.cmp(&rb).then_with(|| {
        // colexicographic on the A/B tail, B < A
        let ta: Vec<u8> = a.letters[ka..].iter().rev().map(|&l| ab_rank(l)).collect();
        let tb: Vec<u8> = b.letters[kb..].iter().rev().map(|&l| ab_rank(l)).collect();
        ta.cmp(&tb)
    })
}

/// All accepted words of length n, ascending in the canonical order.
pub fn enumerate(a: Automaton, n: usize) -> Vec<Word> {
    if a.check().is_err() {
        return vec![];
    }
    let mut out = vec![];
    let mut cur = vec![];
    extend(a, n, &mut cur, &mut out);
    let mut words: Vec<Word> = out.into_iter().map(|letters| Word { automaton: a, letters }).collect();
    if a.is_mountain() {
        words.sort_by(mountain_cmp);
    } else {
        let mut keyed: Vec<(Word, Word)> =
            words.into_iter().map(|w| (plateau_to_mountain(&w).unwrap(), w)).collect();
        keyed.sort_by(|x, y| mountain_cmp(&x.0, &y.0));
        words = keyed.into_iter().map(|(_, w)| w).collect();
    }
    words
}

fn extend(a: Automaton, n: usize, cur: &mut Vec<Letter>, out: &mut Vec<Vec<Letter>>) {
    if cur.len() == n {
        if accepts_letters(a, cur) {
            out.push(cur.clone());
        }
        return;
    }
    for &l in a.alphabet() {
        cur.push(l);
        if prefix_viable(a, cur, n) {
            extend(a, n, cur, out);
        }
        cur.pop();
    }
}

/// Cheap pruning: could this prefix still complete to an accepted word?
fn prefix_viable(a: Automaton, prefix: &[Letter], n: usize) -> bool {
    let remaining = (n - prefix.len()) as i64;
    match a {
        Automaton::M0 => {
            let mut d = 0;
            prefix.iter().all(|l| {
                d += l.depth_step();
                d >= 0
            })
        }
        Automaton::N0 | Automaton::Np(_) => {
            let h = a.height().unwrap_or(i64::MAX);
            let mut d = 0;
            for l in prefix {
                match l {
                    Letter::Dot if d != 0 => return false,
                    Letter::Star if d != h => return false,
                    _ => {}
                }
                d += l.depth_step();
                if d < 0 || d > h {
                    return false;
                }
            }
            d <= remaining
        }
        Automaton::Mp(p) => {
            let h = p as i64 - 1;
            let k = prefix.iter().take_while(|l| matches!(l, Letter::R | Letter::L)).count();
            if prefix[k..].iter().any(|l| matches!(l, Letter::R | Letter::L)) {
                return false;
            }
            let mut d = 0;
            for (i, l) in prefix[..k].iter().enumerate() {
                d += l.depth_step();
                if d < 0 || d > h || (d == h && i + 1 != k) {
                    return false;
                }
            }
            k == prefix.len() || d == h
        }
    }
}

/// Number of accepted words of length n, by dynamic programming over
/// automaton states (independent of `enumerate`).
pub fn count(a: Automaton, n: usize) -> u128 {
    if a.check().is_err() {
        return 0;
    }
    match a {
        Automaton::M0 => {
            let mut dp = vec![0u128; n + 2];
            dp[0] = 1;
            for _ in 0..n {
                let mut nx = vec![0u128; n + 2];
                for d in 0..=n {
                    if dp[d] == 0 {
                        continue;
                    }
                    nx[d + 1] += dp[d];
                    if d > 0 {
                        nx[d - 1] += dp[d];
                    }
                }
                dp = nx;
            }
            dp.iter().sum()
        }
        Automaton::N0 | Automaton::Np(_) => {
            let h = a.height().map_or(n, |h| h as usize);
            let star = matches!(a, Automaton::Np(_));
            let mut dp = vec![0u128; h + 1];
            dp[0] = 1;
            for _ in 0..n {
                let mut nx = vec![0u128; h + 1];
                for d in 0..=h {
                    let c = dp[d];
                    if c == 0 {
                        continue;
                    }
                    if d == 0 {
                        nx[0] += c; // dot
                    }
                    if star && d == h {
                        nx[d] += c;
                    }
                    if d < h {
                        nx[d + 1] += c;
                    }
                    if d > 0 {
                        nx[d - 1] += c;
                    }
                }
                dp = nx;
            }
            dp[0]
        }
        Automaton::Mp(p) => {
            // walks staying in [0, h-1]; once h is reached the rest is free
            let h = p - 1;
            let mut below = vec![0u128; h];
            below[0] = 1;
            let mut total: u128 = 0;
            for step in 0..n {
                let mut nx = vec![0u128; h];
                for d in 0..h {
                    let c = below[d];
                    if c == 0 {
                        continue;
                    }
                    if d + 1 < h {
                        nx[d + 1] += c;
                    } else {
                        // reaches h at this step
                        total += c << (n - step - 1);
                    }
                    if d > 0 {
                        nx[d - 1] += c;
                    }
                }
                below = nx;
            }
            total + below.iter().sum::<u128>()
        }
    }
}

fn require(w: &Word, a: Automaton) -> Result<(), WordError> {
    if w.automaton != a || !accepts(w)? {
        return Err(WordError::NotAccepted(w.to_string(), a));
    }
    Ok(())
}

/// Up/down steps of a word read as a walk: R, B, •, ⟨ up; L, A, ⟩, * down.
fn walk_steps(w: &Word) -> Vec<bool> {
    w.letters
        .iter()
        .map(|l| matches!(l, Letter::R | Letter::B | Letter::Dot | Letter::Open))
        .collect()
}

/// Right-to-left reading of a walk as a plateau word. `h` is the height
/// at which down steps turn into stars (None: never).
fn walk_to_plateau(up: &[bool], h: Option<i64>) -> Vec<Letter> {
    let mut out = vec![Letter::Dot; up.len()];
    let mut gap = 0i64;
    for (i, &u) in up.iter().enumerate().rev() {
        out[i] = if u {
            if gap == 0 {
                Letter::Dot
            } else {
                gap -= 1;
                Letter::Open
            }
        } else if Some(gap) == h {
            Letter::Star
        } else {
            gap += 1;
            Letter::Close
        };
    }
    out
}

/// Reads a walk as a mountain word: R/L until height h is first reached,
/// then B/A.
fn walk_to_mountain(up: &[bool], h: Option<i64>) -> Vec<Letter> {
    let mut d = 0;
    let mut reached = false;
    up.iter()
        .map(|&u| {
            let l = match (reached, u) {
                (false, true) => Letter::R,
                (false, false) => Letter::L,
                (true, true) => Letter::B,
                (true, false) => Letter::A,
            };
            d += if u { 1 } else { -1 };
            if Some(d) == h {
                reached = true;
            }
            l
        })
        .collect()
}

pub fn m0_to_n0(w: &Word) -> Result<Word, WordError> {
    require(w, Automaton::M0)?;
    Ok(Word { automaton: Automaton::N0, letters: walk_to_plateau(&walk_steps(w), None) })
}

pub fn n0_to_m0(w: &Word) -> Result<Word, WordError> {
    require(w, Automaton::N0)?;
    Ok(Word { automaton: Automaton::M0, letters: walk_to_mountain(&walk_steps(w), None) })
}

pub fn mp_to_np(w: &Word, p: usize) -> Result<Word, WordError> {
    require(w, Automaton::Mp(p))?;
    let h = Some(p as i64 - 1);
    Ok(Word { automaton: Automaton::Np(p), letters: walk_to_plateau(&walk_steps(w), h) })
}

pub fn np_to_mp(w: &Word, p: usize) -> Result<Word, WordError> {
    require(w, Automaton::Np(p))?;
    let h = Some(p as i64 - 1);
    Ok(Word { automaton: Automaton::Mp(p), letters: walk_to_mountain(&walk_steps(w), h) })
}

/// Dispatches to whichever bijection applies to the word's automaton.
pub fn mountain_to_plateau(w: &Word) -> Result<Word, WordError> {
    match w.automaton {
        Automaton::M0 => m0_to_n0(w),
        Automaton::Mp(p) => mp_to_np(w, p),
        a => Err(WordError::NotAccepted(w.to_string(), a)),
    }
}

pub fn plateau_to_mountain(w: &Word) -> Result<Word, WordError> {
    match w.automaton {
        Automaton::N0 => n0_to_m0(w),
        Automaton::Np(p) => np_to_mp(w, p),
        a => Err(WordError::NotAccepted(w.to_string(), a)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(a: Automaton, s: &str) -> Word {
        Word::parse(a, s).unwrap()
    }

    #[test]
    fn acceptance_examples() {
        assert!(accepts(&w(Automaton::Mp(3), "RLRRB")).unwrap());
        assert!(!accepts(&w(Automaton::M0, "LR")).unwrap());
        assert!(!accepts(&w(Automaton::N0, "<.>")).unwrap());
        assert!(matches!(Word::parse(Automaton::M0, "RA"), Err(WordError::AlphabetMismatch('A', _))));
        // A/B only after reaching the top
        assert!(!accepts(&w(Automaton::Mp(3), "RBR")).unwrap());
        assert!(!accepts(&w(Automaton::Mp(3), "RRLR")).unwrap());
    }

    #[test]
    fn m3_length_five_in_order() {
        let got: Vec<String> = enumerate(Automaton::Mp(3), 5).iter().map(|w| w.to_string()).collect();
        let want = [
            "RLRLR", "RLRRB", "RLRRA", "RRBBB", "RRABB", "RRBAB", "RRAAB", "RRBBA", "RRABA", "RRBAA", "RRAAA",
        ];
        assert_eq!(got, want);
        assert_eq!(count(Automaton::Mp(3), 5), 11);
    }

    #[test]
    fn small_counts() {
        assert_eq!(count(Automaton::M0, 4), 6);
        assert_eq!(enumerate(Automaton::M0, 4).len(), 6);
        assert_eq!(enumerate(Automaton::Mp(2), 4).len(), 8);
        assert_eq!(count(Automaton::Mp(3), 0), 1);
        assert_eq!(enumerate(Automaton::Np(5), 0).len(), 1);
    }

    #[test]
    fn char0_bijection_examples() {
        let f = |s: &str| m0_to_n0(&w(Automaton::M0, s)).unwrap().to_string();
        assert_eq!(f("RRL"), ".<>");
        assert_eq!(f("RLR"), "<>.");
        assert_eq!(f(""), "");
    }

    #[test]
    fn small_char3_bijection() {
        let f = |s: &str| mp_to_np(&w(Automaton::Mp(3), s), 3).unwrap().to_string();
        assert_eq!(f("RRB"), "...");
        assert_eq!(f("RRA"), ".<>");
        assert_eq!(f("RLR"), "<>.");
        let rr = mp_to_np(&w(Automaton::Mp(3), "RR"), 3).unwrap();
        assert!(accepts(&rr).unwrap());
        assert_eq!(rr.len(), 2);
    }

    #[test]
    fn long_height_four_words_correspond() {
        let mountain = w(Automaton::Mp(5), "RLRRRLRRBBAAABAAAAABAABBBBAAB");
        let plateau = w(Automaton::Np(5), "<>..<><<<<**><**>>><>>..<<>>.");
        assert!(accepts(&mountain).unwrap());
        assert!(accepts(&plateau).unwrap());
        assert_eq!(mountain.len(), 29);
        assert_eq!(*mountain.depth_profile()[..8].iter().max().unwrap(), 4);
        assert_eq!(mp_to_np(&mountain, 5).unwrap(), plateau);
        assert_eq!(np_to_mp(&plateau, 5).unwrap(), mountain);
    }

    #[test]
    fn rejects_foreign_input() {
        let n = w(Automaton::N0, "<>");
        assert!(m0_to_n0(&n).is_err());
        assert!(mp_to_np(&w(Automaton::Mp(3), "RRR"), 3).is_err());
    }
}
