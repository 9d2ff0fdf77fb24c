// SPDX-License-Identifier: Apache-2.0

use rust_decimal::Decimal;

use super::PolicyError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Num(Decimal),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: &[&str] = &[
    "==", "!=", "<=", ">=", "->", "<", ">", "{", "}", "(", ")", "[", "]", ";", ",", ".",
];

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, PolicyError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        let at = |tok| Token {
            tok,
            line: start_line,
            col: start_col,
        };
        if ident_start(c) {
            let mut j = i + 1;
            // `-` joins words (`no-missing-contact`) but never starts `->`.
            while j < chars.len()
                && (ident_char(chars[j]) || (chars[j] == '-' && chars.get(j + 1).is_some_and(|&n| ident_char(n))))
            {
                j += 1;
            }
            let word: String = chars[i..j].iter().collect();
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            out.push(at(Tok::Ident(word)));
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if chars.get(j) == Some(&'.') && chars.get(j + 1).is_some_and(char::is_ascii_digit) {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            let text: String = chars[i..j].iter().collect();
            let num = text.parse::<Decimal>().map_err(|_| PolicyError::Parse {
                line,
                col,
                expected: "a number within decimal range".into(),
            })?;
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            out.push(at(Tok::Num(num)));
            continue;
        }
        if c == '"' {
            let mut j = i + 1;
            let mut escaped = false;
            while j < chars.len() && (escaped || chars[j] != '"') {
                escaped = !escaped && chars[j] == '\\';
                if chars[j] == '\n' {
                    break;
                }
                j += 1;
            }
            if j >= chars.len() || chars[j] != '"' {
                return Err(PolicyError::Parse {
                    line,
                    col,
                    expected: "closing `\"`".into(),
                });
            }
            let raw: String = chars[i..=j].iter().collect();
            let s: String = serde_json::from_str(&raw).map_err(|_| PolicyError::Parse {
                line,
                col,
                expected: "a valid string escape".into(),
            })?;
            let n = j + 1 - i;
            advance(&mut i, &mut line, &mut col, n);
            out.push(at(Tok::Str(s)));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                advance(&mut i, &mut line, &mut col, sym.len());
                out.push(at(Tok::Sym(sym)));
            }
            None => {
                return Err(PolicyError::Parse {
                    line,
                    col,
                    expected: format!("a token (found `{c}`)"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
