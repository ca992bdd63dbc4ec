//! Brute-force reference ranking: full-matrix edit distance and exact
//! rational comparison of scores.
#![allow(dead_code)]

use std::cmp::Ordering;

use fairlint_core::terms::{MatchedOn, TermRecord};

pub fn norm(s: &str) -> Vec<char> {
    let lowered: String = s.chars().flat_map(char::to_lowercase).collect();
    let mut words: Vec<String> = Vec::new();
    let mut current = String::new();
    for c in lowered.chars() {
        if c.is_alphanumeric() {
            current.push(c);
        } else if c.is_whitespace() {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words.join(" ").chars().collect()
}

pub fn distance(a: &[char], b: &[char]) -> usize {
    let mut m = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in m.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        m[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = m[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            m[i][j] = sub.min(m[i - 1][j] + 1).min(m[i][j - 1] + 1);
        }
    }
    m[a.len()][b.len()]
}

/// Similarity as the exact fraction `1 - d/m`, kept as `(d, m)`.
#[derive(Debug, Clone, Copy)]
pub struct Score {
    pub d: usize,
    pub m: usize,
}

impl Score {
    pub fn of(a: &str, b: &str) -> Score {
        let (a, b) = (norm(a), norm(b));
        let m = a.len().max(b.len());
        if m == 0 {
            Score { d: 0, m: 1 }
        } else {
            Score { d: distance(&a, &b), m }
        }
    }

    pub fn value(self) -> f64 {
        1.0 - self.d as f64 / self.m as f64
    }

    /// Higher similarity compares greater.
    pub fn cmp(self, other: Score) -> Ordering {
        (other.d * self.m).cmp(&(self.d * other.m))
    }
}

#[derive(Debug, Clone)]
pub struct Ranked {
    pub iri: String,
    pub label: String,
    pub matched_on: MatchedOn,
    pub best: Score,
}

impl Ranked {
    pub fn score(&self) -> f64 {
        self.best.value()
    }
}

pub fn rank(query: &str, terms: &[TermRecord], k: usize) -> Vec<Ranked> {
    let mut all: Vec<Ranked> = terms
        .iter()
        .map(|t| {
            let mut best = (Score::of(query, &t.label), MatchedOn::Label);
            for s in &t.synonyms {
                let score = Score::of(query, s);
                if score.cmp(best.0) == Ordering::Greater {
                    best = (score, MatchedOn::Synonym);
                }
            }
            Ranked { iri: t.iri.clone(), label: t.label.clone(), matched_on: best.1, best: best.0 }
        })
        .collect();
    all.sort_by(|a, b| b.best.cmp(a.best).then_with(|| a.label.cmp(&b.label)).then_with(|| a.iri.cmp(&b.iri)));
    all.truncate(k);
    all
}
