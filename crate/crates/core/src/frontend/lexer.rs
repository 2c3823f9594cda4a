use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Class,
    Enum,
    Extends,
    Static,
    Void,
    Return,
    If,
    Else,
    While,
    For,
    New,
    True,
    False,
    Null,
    This,
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    At,
    Assign,
    PlusAssign,
    MinusAssign,
    StarAssign,
    SlashAssign,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Float(v) => format!("float `{v:?}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Eof => "end of file".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Class => "class",
            Tok::Enum => "enum",
            Tok::Extends => "extends",
            Tok::Static => "static",
            Tok::Void => "void",
            Tok::Return => "return",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::For => "for",
            Tok::New => "new",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Null => "null",
            Tok::This => "this",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::At => "@",
            Tok::Assign => "=",
            Tok::PlusAssign => "+=",
            Tok::MinusAssign => "-=",
            Tok::StarAssign => "*=",
            Tok::SlashAssign => "/=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
    /// Byte range in the source text.
    pub start: usize,
    pub end: usize,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "class" => Tok::Class,
        "enum" => Tok::Enum,
        "extends" => Tok::Extends,
        "static" => Tok::Static,
        "void" => Tok::Void,
        "return" => Tok::Return,
        "if" => Tok::If,
        "else" => Tok::Else,
        "while" => Tok::While,
        "for" => Tok::For,
        "new" => Tok::New,
        "true" => Tok::True,
        "false" => Tok::False,
        "null" => Tok::Null,
        "this" => Tok::This,
        _ => return None,
    })
}

struct Cursor<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
    path: &'a str,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.bytes.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let ch = self.src[self.pos..].chars().next()?;
        self.pos += ch.len_utf8();
        if ch == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(ch)
    }

    fn error(&self, line: u32, col: u32, message: impl Into<String>) -> ParseError {
        ParseError {
            path: self.path.to_string(),
            line,
            col,
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Some(b' ' | b'\t' | b'\r' | b'\n'), _) => {
                    self.bump();
                }
                (Some(b'/'), Some(b'/')) => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some(b'/'), Some(b'*')) => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(), self.peek_at(1)) {
                            (Some(b'*'), Some(b'/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Err(self.error(line, col, "unterminated comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }
}

/// Tokenize MiniJ source. Comments and whitespace are dropped.
pub fn tokenize(src: &str, path: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
        path,
    };
    let mut out = Vec::new();
    loop {
        cur.skip_trivia()?;
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                line,
                col,
                start,
                end: start,
            });
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while matches!(cur.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
                cur.bump();
            }
            let word = &src[start..cur.pos];
            keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()))
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, start, line, col)?
        } else if c == b'"' {
            lex_string(&mut cur, line, col)?
        } else {
            lex_punct(&mut cur, line, col)?
        };
        out.push(Token {
            tok,
            line,
            col,
            start,
            end: cur.pos,
        });
    }
}

fn lex_number(cur: &mut Cursor<'_>, start: usize, line: u32, col: u32) -> Result<Tok, ParseError> {
    let mut is_float = false;
    while matches!(cur.peek(), Some(b) if b.is_ascii_digit()) {
        cur.bump();
    }
    if cur.peek() == Some(b'.') && matches!(cur.peek_at(1), Some(b) if b.is_ascii_digit()) {
        is_float = true;
        cur.bump();
        while matches!(cur.peek(), Some(b) if b.is_ascii_digit()) {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some(b'e' | b'E')) {
        let sign = matches!(cur.peek_at(1), Some(b'+' | b'-'));
        let digit_at = if sign { 2 } else { 1 };
        if matches!(cur.peek_at(digit_at), Some(b) if b.is_ascii_digit()) {
            is_float = true;
            cur.bump();
            if sign {
                cur.bump();
            }
            while matches!(cur.peek(), Some(b) if b.is_ascii_digit()) {
                cur.bump();
            }
        }
    }
    let text = &cur.src[start..cur.pos];
    if is_float {
        text.parse::<f64>()
            .map(Tok::Float)
            .map_err(|_| cur.error(line, col, format!("invalid float literal `{text}`")))
    } else {
        text.parse::<i64>()
            .map(Tok::Int)
            .map_err(|_| cur.error(line, col, format!("integer literal `{text}` out of range")))
    }
}

fn lex_string(cur: &mut Cursor<'_>, line: u32, col: u32) -> Result<Tok, ParseError> {
    cur.bump();
    let mut value = String::new();
    loop {
        match cur.bump() {
            None | Some('\n') => return Err(cur.error(line, col, "unterminated string literal")),
            Some('"') => return Ok(Tok::Str(value)),
            Some('\\') => match cur.bump() {
                Some('n') => value.push('\n'),
                Some('t') => value.push('\t'),
                Some('"') => value.push('"'),
                Some('\\') => value.push('\\'),
                _ => return Err(cur.error(cur.line, cur.col, "invalid escape sequence")),
            },
            Some(ch) => value.push(ch),
        }
    }
}

fn lex_punct(cur: &mut Cursor<'_>, line: u32, col: u32) -> Result<Tok, ParseError> {
    let two = |a: u8, b: u8| cur.peek() == Some(a) && cur.peek_at(1) == Some(b);
    let (tok, len) = if two(b'=', b'=') {
        (Tok::EqEq, 2)
    } else if two(b'!', b'=') {
        (Tok::NotEq, 2)
    } else if two(b'<', b'=') {
        (Tok::Le, 2)
    } else if two(b'>', b'=') {
        (Tok::Ge, 2)
    } else if two(b'&', b'&') {
        (Tok::AndAnd, 2)
    } else if two(b'|', b'|') {
        (Tok::OrOr, 2)
    } else if two(b'+', b'=') {
        (Tok::PlusAssign, 2)
    } else if two(b'-', b'=') {
        (Tok::MinusAssign, 2)
    } else if two(b'*', b'=') {
        (Tok::StarAssign, 2)
    } else if two(b'/', b'=') {
        (Tok::SlashAssign, 2)
    } else {
        let tok = match cur.peek().unwrap_or(0) {
            b'{' => Tok::LBrace,
            b'}' => Tok::RBrace,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b';' => Tok::Semi,
            b',' => Tok::Comma,
            b'.' => Tok::Dot,
            b'@' => Tok::At,
            b'=' => Tok::Assign,
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'%' => Tok::Percent,
            b'<' => Tok::Lt,
            b'>' => Tok::Gt,
            b'!' => Tok::Bang,
            _ => {
                let ch = cur.src[cur.pos..].chars().next().unwrap_or('?');
                return Err(cur.error(line, col, format!("unexpected character `{ch}`")));
            }
        };
        (tok, 1)
    };
    for _ in 0..len {
        cur.bump();
    }
    Ok(tok)
}
