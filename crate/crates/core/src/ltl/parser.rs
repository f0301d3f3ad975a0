use std::fmt;

use super::Formula;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    /// Byte offset into the input.
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at byte {}: expected one of [{}], found {}",
            self.offset,
            self.expected.join(", "),
            self.found
        )
    }
}

/// Canonical proposition name for an API-style atom: `Move(plate, lower_rack)`
/// becomes `move_plate_lower_rack`.
pub fn canonical_prop(verb: &str, args: &[impl AsRef<str>]) -> String {
    let mut out = snake(verb);
    for a in args {
        out.push('_');
        out.push_str(&snake(a.as_ref()));
    }
    out
}

/// `ToggleOn` -> `toggle_on`, `lower_rack` -> `lower_rack`, `Task_1.2` -> `task_1_2`.
fn snake(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 4);
    let mut prev_lower = false;
    for c in s.trim().chars() {
        if c.is_ascii_uppercase() {
            if prev_lower {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
            prev_lower = false;
        } else if c == '.' || c == ' ' || c == '-' {
            out.push('_');
            prev_lower = false;
        } else {
            out.push(c);
            prev_lower = c.is_ascii_lowercase() || c.is_ascii_digit();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Comma,
    Not,
    And,
    Or,
    Ident(String),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Not => "'!'".into(),
            Tok::And => "'&'".into(),
            Tok::Or => "'|'".into(),
            Tok::Ident(s) => format!("{s:?}"),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(input: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut toks = Vec::new();
    let mut it = input.char_indices().peekable();
    while let Some(&(i, c)) = it.peek() {
        match c {
            c if c.is_whitespace() => {
                it.next();
            }
            '(' | ')' | ',' | '!' | '¬' | '∧' | '∨' | '◇' => {
                it.next();
                toks.push((
                    i,
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        '!' | '¬' => Tok::Not,
                        '∧' => Tok::And,
                        '∨' => Tok::Or,
                        _ => Tok::Ident("F".into()),
                    },
                ));
            }
            '&' | '|' => {
                it.next();
                // `&&` and `||` are accepted as synonyms.
                if it.peek().map(|&(_, d)| d) == Some(c) {
                    it.next();
                }
                toks.push((i, if c == '&' { Tok::And } else { Tok::Or }));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = i;
                while let Some(&(j, d)) = it.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' || d == '.' {
                        end = j + d.len_utf8();
                        it.next();
                    } else {
                        break;
                    }
                }
                toks.push((i, Tok::Ident(input[i..end].to_string())));
            }
            other => {
                return Err(ParseError {
                    offset: i,
                    expected: vec!["formula".into()],
                    found: format!("{other:?}"),
                })
            }
        }
    }
    toks.push((input.len(), Tok::End));
    Ok(toks)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

const KEYWORDS: [&str; 5] = ["T", "F", "X", "U", "false"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            lhs = lhs.or(self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::And {
            self.bump();
            lhs = lhs.and(self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        if self.is_kw("U") {
            self.bump();
            return Ok(lhs.until(self.until()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::Not {
            self.bump();
            return Ok(self.unary()?.not());
        }
        if self.is_kw("X") {
            self.bump();
            return Ok(self.unary()?.next());
        }
        if self.is_kw("F") {
            self.bump();
            return Ok(self.unary()?.eventually());
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        const ATOM: [&str; 6] = ["'('", "'!'", "T", "F", "X", "proposition"];
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let f = self.or()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.error(&["')'", "'&'", "'|'", "U"]));
                }
                self.bump();
                Ok(f)
            }
            Tok::Ident(s) if s == "T" => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let args = self.call_args()?;
                    return Ok(Formula::Prop(canonical_prop(&s, &args)));
                }
                Ok(Formula::Prop(snake_ident(&s)))
            }
            _ => Err(self.error(&ATOM)),
        }
    }

    fn call_args(&mut self) -> Result<Vec<String>, ParseError> {
        let mut args = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Ident(a) => {
                    self.bump();
                    args.push(a);
                }
                _ => return Err(self.error(&["argument"])),
            }
            match self.bump() {
                Tok::Comma => continue,
                Tok::RParen => return Ok(args),
                _ => {
                    self.pos -= 1;
                    return Err(self.error(&["','", "')'"]));
                }
            }
        }
    }
}

/// Plain identifiers are only lowercased (dots become underscores), so
/// `Task_1.2` and `task_1_2` name the same proposition.
fn snake_ident(s: &str) -> String {
    s.to_lowercase().replace('.', "_")
}

/// Parse the text grammar:
/// `T | ident | ident(args) | !f | X f | F f | f U f | f & f | f "|" f | (f)`.
///
/// Precedence, tightest first: `! X F`, `U` (right-assoc), `&`, `|`.
pub fn parse(input: &str) -> Result<Formula, ParseError> {
    let toks = lex(input)?;
    let mut p = Parser { toks, pos: 0 };
    if *p.peek() == Tok::End {
        return Err(p.error(&["formula"]));
    }
    let f = p.or()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["'&'", "'|'", "U", "end of input"]));
    }
    Ok(f)
}
