//! Text grammar for matrix polynomials.
//!
//! A scalar polynomial (`m = 1`) is a signed sum of terms such as
//! `2 + x1 - 0.5*x1*x2^-1 + (1-2i)*x2`. A matrix polynomial is a bracketed
//! array of scalar polynomials, `[[2, x1], [x1^-1, 2]]`.

use std::fmt::Write as _;

use crate::algebra::MatrixPolynomial;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, ZERO};
use crate::words::ReducedWord;

type ScalarTerms = Vec<(ReducedWord, C64)>;

/// Parses the text grammar. `n` defaults to the largest generator index used
/// (at least 1).
pub fn parse_polynomial(src: &str, n: Option<usize>) -> Result<MatrixPolynomial> {
    let mut p = Parser {
        s: src.as_bytes(),
        pos: 0,
    };
    p.ws();
    let entries: Vec<Vec<ScalarTerms>> = if p.peek() == Some(b'[') {
        p.matrix()?
    } else {
        vec![vec![p.sum()?]]
    };
    p.ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    let m = entries.len();
    if entries.iter().any(|r| r.len() != m) {
        return Err(Error::Parse("matrix polynomial must be square".into()));
    }
    let used = entries
        .iter()
        .flatten()
        .flatten()
        .map(|(w, _)| w.max_generator())
        .max()
        .unwrap_or(0);
    let n = n.unwrap_or(used.max(1));
    let mut out = MatrixPolynomial::zero(m, n);
    for (i, row) in entries.into_iter().enumerate() {
        for (j, terms) in row.into_iter().enumerate() {
            for (w, z) in terms {
                let mut c = ComplexMatrix::zeros(m, m);
                c[(i, j)] = z;
                out.add_term(w, c)?;
            }
        }
    }
    out.prune();
    Ok(out)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at byte {}", self.pos))
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn matrix(&mut self) -> Result<Vec<Vec<ScalarTerms>>> {
        if !self.eat(b'[') {
            return Err(self.err("expected `[`"));
        }
        let mut rows = Vec::new();
        loop {
            if !self.eat(b'[') {
                return Err(self.err("expected `[` opening a row"));
            }
            let mut row = Vec::new();
            loop {
                row.push(self.sum()?);
                if self.eat(b',') {
                    continue;
                }
                if self.eat(b']') {
                    break;
                }
                return Err(self.err("expected `,` or `]`"));
            }
            rows.push(row);
            if self.eat(b',') {
                continue;
            }
            if self.eat(b']') {
                break;
            }
            return Err(self.err("expected `,` or `]`"));
        }
        Ok(rows)
    }

    fn sum(&mut self) -> Result<ScalarTerms> {
        let mut terms = Vec::new();
        self.ws();
        let mut sign = 1.0;
        if self.eat(b'-') {
            sign = -1.0;
        } else {
            self.eat(b'+');
        }
        loop {
            let (w, z) = self.term()?;
            terms.push((w, z * sign));
            self.ws();
            if self.eat(b'+') {
                sign = 1.0;
            } else if self.eat(b'-') {
                sign = -1.0;
            } else {
                break;
            }
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<(ReducedWord, C64)> {
        self.ws();
        let coef = match self.peek() {
            Some(b'x') => None,
            Some(b'e') => {
                self.pos += 1;
                return Ok((ReducedWord::identity(), C64::new(1.0, 0.0)));
            }
            _ => Some(self.coefficient()?),
        };
        self.ws();
        let explicit_mul = self.eat(b'*');
        self.ws();
        let has_word = matches!(self.peek(), Some(b'x'))
            || (explicit_mul && matches!(self.peek(), Some(b'e')));
        if explicit_mul && !has_word {
            return Err(self.err("expected a word after `*`"));
        }
        let word = if has_word {
            self.word()?
        } else {
            ReducedWord::identity()
        };
        Ok((word, coef.unwrap_or(C64::new(1.0, 0.0))))
    }

    fn coefficient(&mut self) -> Result<C64> {
        self.ws();
        if self.eat(b'(') {
            let inner = self.sum()?;
            if !self.eat(b')') {
                return Err(self.err("expected `)`"));
            }
            let mut z = ZERO;
            for (w, c) in inner {
                if !w.is_identity() {
                    return Err(self.err("words are not allowed inside a coefficient"));
                }
                z += c;
            }
            return Ok(z);
        }
        if self.peek() == Some(b'i') {
            self.pos += 1;
            return Ok(C64::new(0.0, 1.0));
        }
        let x = self.number()?;
        if self.peek() == Some(b'i') {
            self.pos += 1;
            Ok(C64::new(0.0, x))
        } else {
            Ok(C64::new(x, 0.0))
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(b'0'..=b'9')) {
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        if text.is_empty() {
            return Err(self.err("expected a coefficient or word"));
        }
        text.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number `{text}`")))
    }

    fn word(&mut self) -> Result<ReducedWord> {
        let start = self.pos;
        loop {
            self.ws();
            match self.peek() {
                Some(b'e') => self.pos += 1,
                Some(b'x') => {
                    self.pos += 1;
                    while matches!(self.peek(), Some(b'0'..=b'9')) {
                        self.pos += 1;
                    }
                    if self.peek() == Some(b'^') {
                        self.pos += 1;
                        if self.peek() == Some(b'-') {
                            self.pos += 1;
                        }
                        while matches!(self.peek(), Some(b'0'..=b'9')) {
                            self.pos += 1;
                        }
                    }
                }
                _ => return Err(self.err("expected a letter")),
            }
            let save = self.pos;
            self.ws();
            let continues = self.peek() == Some(b'*')
                && matches!(first_non_ws(&self.s[self.pos + 1..]), Some(b'x' | b'e'));
            if continues {
                self.pos += 1;
                continue;
            }
            self.pos = save;
            break;
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
        text.parse()
    }
}

fn first_non_ws(s: &[u8]) -> Option<u8> {
    s.iter().copied().find(|c| !c.is_ascii_whitespace())
}

fn format_real(x: f64) -> String {
    format!("{x}")
}

fn format_coef(z: C64) -> String {
    if z.im == 0.0 {
        format_real(z.re)
    } else if z.re == 0.0 {
        format!("{}i", format_real(z.im))
    } else {
        let sign = if z.im < 0.0 { '-' } else { '+' };
        format!(
            "({}{}{}i)",
            format_real(z.re),
            sign,
            format_real(z.im.abs())
        )
    }
}

fn format_scalar(terms: &[(ReducedWord, C64)]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (w, z)) in terms.iter().enumerate() {
        let (neg, z) = if z.im == 0.0 && z.re < 0.0 {
            (true, -z)
        } else {
            (false, *z)
        };
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if w.is_identity() {
            out.push_str(&format_coef(z));
        } else if z == C64::new(1.0, 0.0) {
            let _ = write!(out, "{w}");
        } else {
            let _ = write!(out, "{}*{w}", format_coef(z));
        }
    }
    out
}

/// Prints in the text grammar; [`parse_polynomial`] reads it back exactly.
pub fn format_polynomial(p: &MatrixPolynomial) -> String {
    let m = p.m();
    let entry = |i: usize, j: usize| -> Vec<(ReducedWord, C64)> {
        p.terms()
            .iter()
            .filter(|(_, c)| c[(i, j)] != ZERO)
            .map(|(w, c)| (w.clone(), c[(i, j)]))
            .collect()
    };
    if m == 1 {
        return format_scalar(&entry(0, 0));
    }
    let rows: Vec<String> = (0..m)
        .map(|i| {
            let cells: Vec<String> = (0..m).map(|j| format_scalar(&entry(i, j))).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::reduce;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn parses_scalar_polynomials() {
        let p = parse_polynomial("2 + x1 + x1^-1", None).unwrap();
        assert_eq!((p.m(), p.n()), (1, 1));
        assert_eq!(p.terms().len(), 3);
        assert_eq!(
            p.coefficient(&ReducedWord::identity()).unwrap()[(0, 0)],
            c(2.0, 0.0)
        );
        assert!(p.is_symmetric(0.0));

        let p = parse_polynomial("1 - x1 - x1^-1", None).unwrap();
        assert_eq!(
            p.coefficient(&reduce(&[-1], 1).unwrap()).unwrap()[(0, 0)],
            c(-1.0, 0.0)
        );

        let p = parse_polynomial("(1-2i)*x1*x2^-1 - 0.5i x2 + 3e-2", Some(3)).unwrap();
        assert_eq!(p.n(), 3);
        assert_eq!(
            p.coefficient(&reduce(&[1, -2], 2).unwrap()).unwrap()[(0, 0)],
            c(1.0, -2.0)
        );
        assert_eq!(
            p.coefficient(&reduce(&[2], 2).unwrap()).unwrap()[(0, 0)],
            c(0.0, -0.5)
        );
        assert_eq!(
            p.coefficient(&ReducedWord::identity()).unwrap()[(0, 0)],
            c(0.03, 0.0)
        );

        let p = parse_polynomial("x1*x1^-1 + e", None).unwrap();
        assert_eq!(
            p.coefficient(&ReducedWord::identity()).unwrap()[(0, 0)],
            c(2.0, 0.0)
        );
    }

    #[test]
    fn parses_matrix_polynomials() {
        let p = parse_polynomial("[[1, 2*x1], [2*x1^-1, 1]]", None).unwrap();
        assert_eq!((p.m(), p.n()), (2, 1));
        assert!(p.is_symmetric(0.0));
        let b = p.coefficient(&reduce(&[1], 1).unwrap()).unwrap();
        assert_eq!(b[(0, 1)], c(2.0, 0.0));
        assert_eq!(b[(1, 0)], c(0.0, 0.0));
    }

    #[test]
    fn rejects_malformed_text() {
        for bad in [
            "",
            "2 +",
            "[[1, x1], [x1]]",
            "x",
            "(x1)",
            "2 * ",
            "1 + y2",
            "[[1]",
        ] {
            assert!(parse_polynomial(bad, None).is_err(), "accepted `{bad}`");
        }
    }

    #[test]
    fn format_round_trips() {
        for src in [
            "2 + x1 + x1^-1",
            "-1 - x1*x2^-1 + (0.25-1.5i)*x2^2 + 3i*x1^-1",
            "[[1, 2*x1], [2*x1^-1, 1]]",
            "[[0, (0.1+0.2i)*x1], [(0.1-0.2i)*x1^-1, -7]]",
        ] {
            let p = parse_polynomial(src, None).unwrap();
            let text = format_polynomial(&p);
            let back = parse_polynomial(&text, Some(p.n())).unwrap();
            assert_eq!(back, p, "{src} -> {text}");
        }
        assert_eq!(
            format_polynomial(&parse_polynomial("2 + x1 + x1^-1", None).unwrap()),
            "2 + x1 + x1^-1"
        );
    }
}
