use super::token::{Keyword, Op, Pos, Punct, Token, TokenKind};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LexError {
    #[error("{pos}: unexpected character {ch:?}")]
    UnexpectedChar { pos: Pos, ch: char },
    #[error("{pos}: unterminated string literal")]
    UnterminatedString { pos: Pos },
    #[error("{pos}: unterminated comment")]
    UnterminatedComment { pos: Pos },
    #[error("{pos}: malformed number `{text}`")]
    MalformedNumber { pos: Pos, text: String },
}

impl LexError {
    pub fn pos(&self) -> Pos {
        match self {
            LexError::UnexpectedChar { pos, .. }
            | LexError::UnterminatedString { pos }
            | LexError::UnterminatedComment { pos }
            | LexError::MalformedNumber { pos, .. } => *pos,
        }
    }
}

struct Lexer {
    chars: Vec<char>,
    idx: usize,
    line: u32,
    column: u32,
}

/// Splits cQPL source into tokens. Comments (`/* */` and `//`) and whitespace
/// are dropped.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut lx = Lexer {
        chars: source.chars().collect(),
        idx: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    while let Some(tok) = lx.next_token()? {
        out.push(tok);
    }
    Ok(out)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.idx).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.idx + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.idx).copied()?;
        self.idx += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }

    fn skip_trivia(&mut self) -> Result<(), LexError> {
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let start = self.pos();
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(), self.peek_at(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Err(LexError::UnterminatedComment { pos: start }),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<Token>, LexError> {
        self.skip_trivia()?;
        let pos = self.pos();
        let start = self.idx;
        let Some(c) = self.peek() else {
            return Ok(None);
        };

        let kind = if is_ident_start(c) {
            while self.peek().is_some_and(is_ident_char) {
                self.bump();
            }
            let word: String = self.chars[start..self.idx].iter().collect();
            match Keyword::lookup(&word) {
                Some(kw) => TokenKind::Keyword(kw),
                None => TokenKind::Ident,
            }
        } else if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            self.number(pos, start)?
        } else if c == '"' {
            self.bump();
            let mut text = String::new();
            loop {
                match self.bump() {
                    Some('"') => break,
                    Some('\\') => match self.bump() {
                        Some('n') => text.push('\n'),
                        Some('t') => text.push('\t'),
                        Some(other) => text.push(other),
                        None => return Err(LexError::UnterminatedString { pos }),
                    },
                    Some(ch) => text.push(ch),
                    None => return Err(LexError::UnterminatedString { pos }),
                }
            }
            TokenKind::Str(text)
        } else {
            self.bump();
            let next = self.peek();
            let two = |lx: &mut Self, k: TokenKind| {
                lx.bump();
                k
            };
            match (c, next) {
                (':', Some('=')) => two(self, TokenKind::Op(Op::Assign)),
                ('*', Some('=')) => two(self, TokenKind::Op(Op::GateAssign)),
                ('<', Some('=')) => two(self, TokenKind::Op(Op::Le)),
                ('>', Some('=')) => two(self, TokenKind::Op(Op::Ge)),
                ('=', Some('=')) => two(self, TokenKind::Op(Op::EqEq)),
                ('!', Some('=')) => two(self, TokenKind::Op(Op::Ne)),
                ('-', Some('>')) => two(self, TokenKind::Op(Op::Arrow)),
                (':', _) => TokenKind::Punct(Punct::Colon),
                ('*', _) => TokenKind::Op(Op::Star),
                ('<', _) => TokenKind::Op(Op::Lt),
                ('>', _) => TokenKind::Op(Op::Gt),
                ('=', _) => TokenKind::Op(Op::Eq),
                ('!', _) => TokenKind::Op(Op::Bang),
                ('-', _) => TokenKind::Op(Op::Minus),
                ('+', _) => TokenKind::Op(Op::Plus),
                ('/', _) => TokenKind::Op(Op::Slash),
                ('&', _) => TokenKind::Op(Op::Amp),
                ('|', _) => TokenKind::Op(Op::Pipe),
                (';', _) => TokenKind::Punct(Punct::Semi),
                (',', _) => TokenKind::Punct(Punct::Comma),
                ('(', _) => TokenKind::Punct(Punct::LParen),
                (')', _) => TokenKind::Punct(Punct::RParen),
                ('{', _) => TokenKind::Punct(Punct::LBrace),
                ('}', _) => TokenKind::Punct(Punct::RBrace),
                ('[', _) => TokenKind::Punct(Punct::LBracket),
                (']', _) => TokenKind::Punct(Punct::RBracket),
                _ => return Err(LexError::UnexpectedChar { pos, ch: c }),
            }
        };
        let lexeme: String = self.chars[start..self.idx].iter().collect();
        Ok(Some(Token { kind, lexeme, pos }))
    }

    fn number(&mut self, pos: Pos, start: usize) -> Result<TokenKind, LexError> {
        let mut is_float = false;
        while self.peek().is_some_and(|d| d.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') && self.peek_at(1).is_some_and(|d| d.is_ascii_digit()) {
            is_float = true;
            self.bump();
            while self.peek().is_some_and(|d| d.is_ascii_digit()) {
                self.bump();
            }
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.peek_at(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek_at(digit_at).is_some_and(|d| d.is_ascii_digit()) {
                is_float = true;
                for _ in 0..digit_at {
                    self.bump();
                }
                while self.peek().is_some_and(|d| d.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let digits: String = self.chars[start..self.idx].iter().collect();
        let imaginary = self.peek() == Some('i') && !self.peek_at(1).is_some_and(is_ident_char);
        if imaginary {
            self.bump();
        } else if self.peek().is_some_and(is_ident_char) {
            // e.g. `9loop`: identifiers must not start with a digit
            while self.peek().is_some_and(is_ident_char) {
                self.bump();
            }
            let text: String = self.chars[start..self.idx].iter().collect();
            return Err(LexError::MalformedNumber { pos, text });
        }
        let malformed = || LexError::MalformedNumber {
            pos,
            text: digits.clone(),
        };
        if imaginary {
            return digits.parse::<f64>().map(TokenKind::Imaginary).map_err(|_| malformed());
        }
        if is_float {
            digits.parse::<f64>().map(TokenKind::Float).map_err(|_| malformed())
        } else {
            digits.parse::<i64>().map(TokenKind::Int).map_err(|_| malformed())
        }
    }
}
