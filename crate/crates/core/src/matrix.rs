//! Score matrices, the score-to-distance transform and quasi-metric audits.

use serde::Serialize;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::Value;

/// Per-letter-pair similarity table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoreMatrix {
    alphabet: Alphabet,
    scores: Vec<Value>,
}

impl ScoreMatrix {
    pub fn from_rows(alphabet: Alphabet, rows: &[Vec<Value>]) -> Result<Self> {
        let n = alphabet.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::MatrixFormat {
                line: 0,
                message: format!("expected a {n}x{n} table"),
            });
        }
        Ok(Self {
            alphabet,
            scores: rows.concat(),
        })
    }

    /// Parses the whitespace-separated matrix format used by the NCBI
    /// BLOSUM/PAM distribution files.
    ///
    /// Lines starting with `#` are comments. The first remaining line is the
    /// header of column letters; every following line is a labelled row. When
    /// `alphabet` is given the matrix is restricted to it and every other
    /// row/column (`B`, `Z`, `X`, `*`, ...) is dropped; otherwise the header
    /// order defines the alphabet.
    pub fn parse(text: &str, alphabet: Option<&Alphabet>) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (header_line, header) = lines.next().ok_or(Error::MatrixFormat {
            line: 0,
            message: "no header line".into(),
        })?;
        let mut columns = Vec::new();
        for token in header.split_whitespace() {
            let &[b] = token.as_bytes() else {
                return Err(Error::MatrixFormat {
                    line: header_line,
                    message: format!("header token {token:?} is not a single letter"),
                });
            };
            if columns.contains(&b) {
                return Err(Error::MatrixFormat {
                    line: header_line,
                    message: format!("header repeats letter {:?}", b as char),
                });
            }
            columns.push(b);
        }

        let width = columns.len();
        let mut rows: Vec<Option<Vec<Value>>> = vec![None; width];
        let mut row_count = 0;
        for (line, row) in lines {
            let mut tokens = row.split_whitespace();
            let label = tokens.next().unwrap_or_default();
            let &[b] = label.as_bytes() else {
                return Err(Error::MatrixFormat {
                    line,
                    message: format!("row label {label:?} is not a single letter"),
                });
            };
            let Some(slot) = columns.iter().position(|&c| c == b) else {
                return Err(Error::MatrixFormat {
                    line,
                    message: format!("row label {:?} is not in the header", b as char),
                });
            };
            if rows[slot].is_some() {
                return Err(Error::MatrixFormat {
                    line,
                    message: format!("row {:?} appears twice", b as char),
                });
            }
            let values = tokens
                .map(|t| {
                    t.parse::<Value>().map_err(|_| Error::MatrixFormat {
                        line,
                        message: format!("entry {t:?} is not an integer"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != width {
                return Err(Error::MatrixFormat {
                    line,
                    message: format!("row has {} entries, header has {width}", values.len()),
                });
            }
            rows[slot] = Some(values);
            row_count += 1;
        }
        if row_count != width {
            return Err(Error::MatrixFormat {
                line: header_line,
                message: format!("{row_count} rows for {width} columns; matrix is not square"),
            });
        }
        let rows: Vec<Vec<Value>> = rows.into_iter().map(Option::unwrap).collect();

        let alphabet = match alphabet {
            Some(a) => a.clone(),
            None => Alphabet::new(std::str::from_utf8(&columns).expect("ASCII letters"))?,
        };
        let mut index = Vec::with_capacity(alphabet.len());
        for &l in alphabet.letters() {
            let i = columns
                .iter()
                .position(|&c| c == l)
                .ok_or(Error::MissingMatrixLetter(l as char))?;
            index.push(i);
        }
        let mut scores = Vec::with_capacity(index.len() * index.len());
        for &r in &index {
            for &c in &index {
                scores.push(rows[r][c]);
            }
        }
        Ok(Self { alphabet, scores })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    #[inline]
    pub fn get(&self, a: u8, b: u8) -> Value {
        self.scores[a as usize * self.alphabet.len() + b as usize]
    }

    /// Lookup by letters rather than ordinals.
    pub fn score(&self, a: u8, b: u8) -> Result<Value> {
        let code = |l: u8| self.alphabet.code(l).ok_or(Error::UnknownLetter { letter: l as char });
        Ok(self.get(code(a)?, code(b)?))
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.alphabet.len() as u8;
        (0..n).all(|a| (0..n).all(|b| self.get(a, b) == self.get(b, a)))
    }

    /// Fragment similarity `s(x, y)` over encoded fragments of equal length.
    pub fn similarity(&self, x: &[u8], y: &[u8]) -> Value {
        x.iter().zip(y).map(|(&a, &b)| self.get(a, b)).sum()
    }

    /// Weight `w(x) = s(x, x)`.
    pub fn weight(&self, x: &[u8]) -> Value {
        x.iter().map(|&a| self.get(a, a)).sum()
    }

    /// Letter pairs where `D(a,b) + S(b,b) != D(b,a) + S(a,a)`.
    ///
    /// Empty for every symmetric matrix.
    pub fn coweightability_defects(&self) -> Vec<(char, char)> {
        let n = self.alphabet.len() as u8;
        let d = |a: u8, b: u8| self.get(a, a) - self.get(a, b);
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if d(a, b) + self.get(b, b) != d(b, a) + self.get(a, a) {
                    out.push((self.alphabet.letter(a) as char, self.alphabet.letter(b) as char));
                }
            }
        }
        out
    }
}

/// `w(x) = Σ S(x_i, x_i)` for an encoded fragment.
pub fn weight(matrix: &ScoreMatrix, fragment: &[u8]) -> Value {
    matrix.weight(fragment)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetrization {
    /// `D(a,b) + D(b,a)`, i.e. the average stored doubled.
    Average,
    /// `max(D(a,b), D(b,a))`.
    Maximum,
}

/// Non-negative per-letter-pair dissimilarity with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    alphabet: Alphabet,
    distances: Vec<Value>,
}

impl DistanceMatrix {
    pub fn from_rows(alphabet: Alphabet, rows: &[Vec<Value>]) -> Result<Self> {
        let n = alphabet.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DistanceMatrix(format!("expected a {n}x{n} table")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row[i] != 0 {
                return Err(Error::DistanceMatrix(format!(
                    "diagonal entry for {:?} is {}",
                    alphabet.letter(i as u8) as char,
                    row[i]
                )));
            }
            if let Some(v) = row.iter().find(|&&v| v < 0) {
                return Err(Error::DistanceMatrix(format!("negative entry {v}")));
            }
        }
        Ok(Self {
            alphabet,
            distances: rows.concat(),
        })
    }

    /// `D(a,b) = S(a,a) - S(a,b)`.
    pub fn from_score(score: &ScoreMatrix) -> Result<Self> {
        let alphabet = score.alphabet().clone();
        let n = alphabet.len() as u8;
        let mut distances = Vec::with_capacity(n as usize * n as usize);
        for a in 0..n {
            for b in 0..n {
                let value = score.get(a, a) - score.get(a, b);
                if value < 0 {
                    return Err(Error::NegativeDistance {
                        a: alphabet.letter(a) as char,
                        b: alphabet.letter(b) as char,
                        value,
                    });
                }
                distances.push(value);
            }
        }
        Ok(Self { alphabet, distances })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    #[inline]
    pub fn get(&self, a: u8, b: u8) -> Value {
        self.distances[a as usize * self.alphabet.len() + b as usize]
    }

    pub fn row(&self, a: u8) -> &[Value] {
        let n = self.alphabet.len();
        &self.distances[a as usize * n..(a as usize + 1) * n]
    }

    /// Fragment distance `d(x, y) = Σ D(x_i, y_i)`.
    pub fn distance(&self, x: &[u8], y: &[u8]) -> Value {
        x.iter().zip(y).map(|(&a, &b)| self.get(a, b)).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.alphabet.len() as u8;
        (0..n).all(|a| (0..n).all(|b| self.get(a, b) == self.get(b, a)))
    }

    /// Symmetric version of this matrix. [`Symmetrization::Average`] keeps
    /// integers by returning `D(a,b) + D(b,a)`, twice the average.
    pub fn symmetrize(&self, mode: Symmetrization) -> DistanceMatrix {
        let n = self.alphabet.len() as u8;
        let mut distances = Vec::with_capacity(self.distances.len());
        for a in 0..n {
            for b in 0..n {
                let (x, y) = (self.get(a, b), self.get(b, a));
                distances.push(match mode {
                    Symmetrization::Average => x + y,
                    Symmetrization::Maximum => x.max(y),
                });
            }
        }
        DistanceMatrix {
            alphabet: self.alphabet.clone(),
            distances,
        }
    }

    /// Audits separation, non-negativity and every ordered triangle.
    pub fn check_quasi_metric(&self) -> QuasiMetricReport {
        let n = self.alphabet.len() as u8;
        let letter = |c: u8| self.alphabet.letter(c) as char;
        let mut separation_ok = true;
        let mut nonneg_ok = true;
        for a in 0..n {
            for b in 0..n {
                let zero_both = self.get(a, b) == 0 && self.get(b, a) == 0;
                if zero_both != (a == b) {
                    separation_ok = false;
                }
                if self.get(a, b) < 0 {
                    nonneg_ok = false;
                }
            }
        }
        let mut triangle_violations = Vec::new();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let slack = self.get(a, c) - self.get(a, b) - self.get(b, c);
                    if slack > 0 {
                        triangle_violations.push(TriangleViolation {
                            a: letter(a),
                            b: letter(b),
                            c: letter(c),
                            slack,
                        });
                    }
                }
            }
        }
        QuasiMetricReport {
            is_quasi_metric: separation_ok && nonneg_ok && triangle_violations.is_empty(),
            separation_ok,
            nonneg_ok,
            is_symmetric: self.is_symmetric(),
            triangle_violations,
        }
    }
}

/// An ordered triple with `D(a,c) > D(a,b) + D(b,c)`; `slack` is the excess.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TriangleViolation {
    pub a: char,
    pub b: char,
    pub c: char,
    pub slack: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuasiMetricReport {
    pub separation_ok: bool,
    pub nonneg_ok: bool,
    pub triangle_violations: Vec<TriangleViolation>,
    pub is_quasi_metric: bool,
    pub is_symmetric: bool,
}

impl QuasiMetricReport {
    /// Number of distinct triangle-inequality failures.
    ///
    /// `(a,b,c)` and its mirror `(c,b,a)` count once when their slacks agree.
    /// For a distance derived from a symmetric score matrix the two are the
    /// same inequality: both slacks equal `S(a,b) + S(b,c) - S(a,c) - S(b,b)`.
    pub fn violation_count(&self) -> usize {
        let v = &self.triangle_violations;
        v.iter()
            .filter(|t| {
                let mirrored = v
                    .iter()
                    .any(|u| u.a == t.c && u.b == t.b && u.c == t.a && u.slack == t.slack);
                !mirrored || t.a <= t.c
            })
            .count()
    }
}
