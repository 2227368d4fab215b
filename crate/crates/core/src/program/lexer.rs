//! Tokenizer for the supported C subset.
//!
//! Comments are dropped and lines starting with `#` (left over line markers
//! from preprocessing) are skipped. Every token remembers its 1-based line.

use super::ProgramError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Keyword(&'static str),
    Int { value: i128, text: String },
    Float(String),
    Char(i128),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
}

impl Token {
    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Keyword(k) => format!("`{k}`"),
            TokenKind::Int { text, .. } => format!("`{text}`"),
            TokenKind::Float(t) => format!("`{t}`"),
            TokenKind::Char(_) => "character literal".to_string(),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::Punct(p) => format!("`{p}`"),
            TokenKind::Eof => "end of input".to_string(),
        }
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.kind, TokenKind::Punct(q) if q == p)
    }

    pub fn is_keyword(&self, k: &str) -> bool {
        matches!(self.kind, TokenKind::Keyword(q) if q == k)
    }
}

pub const KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "inline", "int", "long", "register",
    "restrict", "return", "short", "signed", "sizeof", "static", "struct", "switch", "typedef",
    "union", "unsigned", "void", "volatile", "while", "_Bool",
];

// Longest first: a linear scan then finds the maximal munch.
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "^=", "|=", "(", ")", "[", "]", "{", "}", ";", ",", ":", "?",
    "=", "<", ">", "+", "-", "*", "/", "%", "&", "|", "^", "!", "~", ".",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ProgramError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut at_line_start = true;

    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            line += 1;
            i += 1;
            at_line_start = true;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' && at_line_start {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        at_line_start = false;
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start_line = line;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(ProgramError::syntax(start_line, "unterminated comment"));
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                if bytes[i] == b'\n' {
                    line += 1;
                }
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            let kind = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(word.to_string()),
            };
            tokens.push(Token { kind, line });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()))
        {
            let (kind, next) = lex_number(src, i, line)?;
            tokens.push(Token { kind, line });
            i = next;
            continue;
        }
        if c == b'\'' {
            let (value, next) = lex_char(bytes, i, line)?;
            tokens.push(Token {
                kind: TokenKind::Char(value),
                line,
            });
            i = next;
            continue;
        }
        if c == b'"' {
            let start_line = line;
            let mut j = i + 1;
            let mut text = String::new();
            loop {
                match bytes.get(j) {
                    None | Some(b'\n') => {
                        return Err(ProgramError::syntax(
                            start_line,
                            "unterminated string literal",
                        ))
                    }
                    Some(b'"') => break,
                    Some(b'\\') => {
                        let esc = *bytes.get(j + 1).ok_or_else(|| {
                            ProgramError::syntax(line, "unterminated string literal")
                        })?;
                        text.push('\\');
                        text.push(esc as char);
                        j += 2;
                    }
                    Some(_) => {
                        let ch = src[j..].chars().next().unwrap_or('?');
                        text.push(ch);
                        j += ch.len_utf8();
                    }
                }
            }
            tokens.push(Token {
                kind: TokenKind::Str(text),
                line,
            });
            i = j + 1;
            continue;
        }
        match PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            Some(p) => {
                tokens.push(Token {
                    kind: TokenKind::Punct(p),
                    line,
                });
                i += p.len();
            }
            None => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ProgramError::syntax(
                    line,
                    format!("unexpected character `{ch}`"),
                ));
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
    });
    Ok(tokens)
}

fn lex_number(src: &str, start: usize, line: u32) -> Result<(TokenKind, usize), ProgramError> {
    let bytes = src.as_bytes();
    let mut i = start;
    let is_hex = bytes[i] == b'0' && matches!(bytes.get(i + 1), Some(b'x') | Some(b'X'));
    if is_hex {
        i += 2;
        while i < bytes.len() && bytes[i].is_ascii_hexdigit() {
            i += 1;
        }
    } else {
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let mut is_float = false;
        if i < bytes.len() && bytes[i] == b'.' {
            is_float = true;
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            is_float = true;
            i += 1;
            if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                i += 1;
            }
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
        if is_float {
            while i < bytes.len() && matches!(bytes[i], b'f' | b'F' | b'l' | b'L') {
                i += 1;
            }
            return Ok((TokenKind::Float(src[start..i].to_string()), i));
        }
    }
    let digits_end = i;
    while i < bytes.len() && matches!(bytes[i], b'u' | b'U' | b'l' | b'L') {
        i += 1;
    }
    if i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
        return Err(ProgramError::syntax(
            line,
            format!("malformed number `{}`", &src[start..=i]),
        ));
    }
    let digits = &src[start..digits_end];
    let value = if is_hex {
        i128::from_str_radix(&digits[2..], 16)
    } else if digits.len() > 1 && digits.starts_with('0') {
        i128::from_str_radix(&digits[1..], 8)
    } else {
        digits.parse::<i128>()
    }
    .map_err(|_| ProgramError::syntax(line, format!("malformed number `{digits}`")))?;
    Ok((
        TokenKind::Int {
            value,
            text: src[start..i].to_string(),
        },
        i,
    ))
}

fn lex_char(bytes: &[u8], start: usize, line: u32) -> Result<(i128, usize), ProgramError> {
    let err = || ProgramError::syntax(line, "malformed character literal");
    let mut i = start + 1;
    let value = match *bytes.get(i).ok_or_else(err)? {
        b'\\' => {
            let esc = *bytes.get(i + 1).ok_or_else(err)?;
            i += 2;
            match esc {
                b'n' => 10,
                b't' => 9,
                b'r' => 13,
                b'0' => 0,
                b'\\' => 92,
                b'\'' => 39,
                b'"' => 34,
                b'a' => 7,
                b'b' => 8,
                b'f' => 12,
                b'v' => 11,
                b'x' => {
                    let start_hex = i;
                    while bytes.get(i).is_some_and(|b| b.is_ascii_hexdigit()) {
                        i += 1;
                    }
                    let digits = std::str::from_utf8(&bytes[start_hex..i]).map_err(|_| err())?;
                    i128::from_str_radix(digits, 16).map_err(|_| err())?
                }
                b'1'..=b'7' => {
                    let start_oct = i - 1;
                    while i - start_oct < 3
                        && bytes.get(i).is_some_and(|b| (b'0'..=b'7').contains(b))
                    {
                        i += 1;
                    }
                    let digits = std::str::from_utf8(&bytes[start_oct..i]).map_err(|_| err())?;
                    i128::from_str_radix(digits, 8).map_err(|_| err())?
                }
                _ => return Err(err()),
            }
        }
        b'\'' | b'\n' => return Err(err()),
        c => {
            i += 1;
            c as i128
        }
    };
    if bytes.get(i) != Some(&b'\'') {
        return Err(err());
    }
    Ok((value, i + 1))
}
