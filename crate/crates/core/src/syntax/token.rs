use std::fmt;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, serde::Serialize)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Self {
        Pos { line, column }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    New,
    Qbit,
    Bit,
    Short,
    Qshort,
    Int,
    Qint,
    Float,
    If,
    Then,
    Else,
    While,
    Do,
    Measure,
    Proc,
    Call,
    In,
    Module,
    Send,
    To,
    Receive,
    From,
    Print,
    Dump,
    Skip,
    True,
    False,
    H,
    CNot,
    Not,
    Phase,
    FT,
}

impl Keyword {
    pub const ALL: [Keyword; 32] = [
        Keyword::New,
        Keyword::Qbit,
        Keyword::Bit,
        Keyword::Short,
        Keyword::Qshort,
        Keyword::Int,
        Keyword::Qint,
        Keyword::Float,
        Keyword::If,
        Keyword::Then,
        Keyword::Else,
        Keyword::While,
        Keyword::Do,
        Keyword::Measure,
        Keyword::Proc,
        Keyword::Call,
        Keyword::In,
        Keyword::Module,
        Keyword::Send,
        Keyword::To,
        Keyword::Receive,
        Keyword::From,
        Keyword::Print,
        Keyword::Dump,
        Keyword::Skip,
        Keyword::True,
        Keyword::False,
        Keyword::H,
        Keyword::CNot,
        Keyword::Not,
        Keyword::Phase,
        Keyword::FT,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::New => "new",
            Keyword::Qbit => "qbit",
            Keyword::Bit => "bit",
            Keyword::Short => "short",
            Keyword::Qshort => "qshort",
            Keyword::Int => "int",
            Keyword::Qint => "qint",
            Keyword::Float => "float",
            Keyword::If => "if",
            Keyword::Then => "then",
            Keyword::Else => "else",
            Keyword::While => "while",
            Keyword::Do => "do",
            Keyword::Measure => "measure",
            Keyword::Proc => "proc",
            Keyword::Call => "call",
            Keyword::In => "in",
            Keyword::Module => "module",
            Keyword::Send => "send",
            Keyword::To => "to",
            Keyword::Receive => "receive",
            Keyword::From => "from",
            Keyword::Print => "print",
            Keyword::Dump => "dump",
            Keyword::Skip => "skip",
            Keyword::True => "true",
            Keyword::False => "false",
            Keyword::H => "H",
            Keyword::CNot => "CNot",
            Keyword::Not => "Not",
            Keyword::Phase => "Phase",
            Keyword::FT => "FT",
        }
    }

    pub fn lookup(word: &str) -> Option<Keyword> {
        Keyword::ALL.iter().copied().find(|k| k.as_str() == word)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    /// `:=`
    Assign,
    /// `*=`
    GateAssign,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Gt,
    Le,
    Ge,
    /// `==`
    EqEq,
    /// `=`, accepted as equality inside expressions
    Eq,
    Ne,
    Amp,
    Pipe,
    Bang,
    /// `->`
    Arrow,
}

impl Op {
    pub fn as_str(self) -> &'static str {
        match self {
            Op::Assign => ":=",
            Op::GateAssign => "*=",
            Op::Plus => "+",
            Op::Minus => "-",
            Op::Star => "*",
            Op::Slash => "/",
            Op::Lt => "<",
            Op::Gt => ">",
            Op::Le => "<=",
            Op::Ge => ">=",
            Op::EqEq => "==",
            Op::Eq => "=",
            Op::Ne => "!=",
            Op::Amp => "&",
            Op::Pipe => "|",
            Op::Bang => "!",
            Op::Arrow => "->",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Punct {
    Semi,
    Comma,
    Colon,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
}

impl Punct {
    pub fn as_str(self) -> &'static str {
        match self {
            Punct::Semi => ";",
            Punct::Comma => ",",
            Punct::Colon => ":",
            Punct::LParen => "(",
            Punct::RParen => ")",
            Punct::LBrace => "{",
            Punct::RBrace => "}",
            Punct::LBracket => "[",
            Punct::RBracket => "]",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident,
    Int(i64),
    Float(f64),
    /// Imaginary literal such as `0.5i`; the payload is the coefficient.
    Imaginary(f64),
    Str(String),
    Op(Op),
    Punct(Punct),
}

impl TokenKind {
    pub fn category(&self) -> &'static str {
        match self {
            TokenKind::Keyword(_) => "keyword",
            TokenKind::Ident => "identifier",
            TokenKind::Int(_) => "int-literal",
            TokenKind::Float(_) => "float-literal",
            TokenKind::Imaginary(_) => "imaginary-literal",
            TokenKind::Str(_) => "string-literal",
            TokenKind::Op(_) => "operator",
            TokenKind::Punct(_) => "punctuation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub pos: Pos,
}

impl Token {
    pub fn is_keyword(&self, kw: Keyword) -> bool {
        self.kind == TokenKind::Keyword(kw)
    }

    pub fn is_op(&self, op: Op) -> bool {
        self.kind == TokenKind::Op(op)
    }

    pub fn is_punct(&self, p: Punct) -> bool {
        self.kind == TokenKind::Punct(p)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} `{}`", self.kind.category(), self.lexeme)
    }
}
