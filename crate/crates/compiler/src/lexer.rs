//! Tokenizer for `.mlc` sources.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Num;

use crate::diag::{CompileError, ErrorKind, Result, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kw {
    Type,
    Record,
    Global,
    Map,
    Exception,
    Event,
    Modifier,
    Raises,
    Function,
    Let,
    Rec,
    Public,
    Private,
    Mutable,
    In,
    If,
    Then,
    Else,
    While,
    Do,
    Done,
    Invariant,
    Variant,
    Requires,
    Ensures,
    Match,
    With,
    End,
    Begin,
    Raise,
    True,
    False,
    Not,
    Old,
    Of,
    // Recognized only to reject them with a rule name.
    Try,
    Fun,
    For,
    Ref,
    Module,
    Use,
    Open,
}

const KEYWORDS: &[(&str, Kw)] = &[
    ("type", Kw::Type),
    ("record", Kw::Record),
    ("global", Kw::Global),
    ("map", Kw::Map),
    ("exception", Kw::Exception),
    ("event", Kw::Event),
    ("modifier", Kw::Modifier),
    ("raises", Kw::Raises),
    ("function", Kw::Function),
    ("let", Kw::Let),
    ("rec", Kw::Rec),
    ("public", Kw::Public),
    ("private", Kw::Private),
    ("mutable", Kw::Mutable),
    ("in", Kw::In),
    ("if", Kw::If),
    ("then", Kw::Then),
    ("else", Kw::Else),
    ("while", Kw::While),
    ("do", Kw::Do),
    ("done", Kw::Done),
    ("invariant", Kw::Invariant),
    ("variant", Kw::Variant),
    ("requires", Kw::Requires),
    ("ensures", Kw::Ensures),
    ("match", Kw::Match),
    ("with", Kw::With),
    ("end", Kw::End),
    ("begin", Kw::Begin),
    ("raise", Kw::Raise),
    ("true", Kw::True),
    ("false", Kw::False),
    ("not", Kw::Not),
    ("old", Kw::Old),
    ("of", Kw::Of),
    ("try", Kw::Try),
    ("fun", Kw::Fun),
    ("for", Kw::For),
    ("ref", Kw::Ref),
    ("module", Kw::Module),
    ("use", Kw::Use),
    ("open", Kw::Open),
];

impl Kw {
    pub fn text(self) -> &'static str {
        KEYWORDS.iter().find(|(_, k)| *k == self).map(|(s, _)| *s).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sym {
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    AndAnd,
    OrOr,
    Arrow,
    LArrow,
    Bar,
    Dot,
    At,
    Conj,
    Disj,
    FatArrow,
    Bang,
    ColonEq,
}

const SYMBOLS: &[(&str, Sym)] = &[
    ("<>", Sym::Ne),
    ("<=", Sym::Le),
    (">=", Sym::Ge),
    ("&&", Sym::AndAnd),
    ("||", Sym::OrOr),
    ("->", Sym::Arrow),
    ("<-", Sym::LArrow),
    ("/\\", Sym::Conj),
    ("\\/", Sym::Disj),
    ("=>", Sym::FatArrow),
    (":=", Sym::ColonEq),
    ("(", Sym::LParen),
    (")", Sym::RParen),
    ("{", Sym::LBrace),
    ("}", Sym::RBrace),
    ("[", Sym::LBracket),
    ("]", Sym::RBracket),
    (",", Sym::Comma),
    (";", Sym::Semi),
    (":", Sym::Colon),
    ("=", Sym::Eq),
    ("<", Sym::Lt),
    (">", Sym::Gt),
    ("+", Sym::Plus),
    ("-", Sym::Minus),
    ("*", Sym::Star),
    ("/", Sym::Slash),
    ("%", Sym::Percent),
    ("|", Sym::Bar),
    (".", Sym::Dot),
    ("@", Sym::At),
    ("!", Sym::Bang),
];

impl Sym {
    pub fn text(self) -> &'static str {
        SYMBOLS.iter().find(|(_, s)| *s == self).map(|(t, _)| *t).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Int(BigInt),
    Ident(String),
    /// `'a`: only lexed so the parser can reject it.
    TyVar(String),
    Str(String),
    Float(String),
    Kw(Kw),
    Sym(Sym),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(v) => write!(f, "INT {v}"),
            Tok::Ident(s) => write!(f, "IDENT {s}"),
            Tok::TyVar(s) => write!(f, "TYVAR '{s}"),
            Tok::Str(_) => write!(f, "STRING"),
            Tok::Float(s) => write!(f, "FLOAT {s}"),
            Tok::Kw(k) => write!(f, "{}", k.text().to_uppercase()),
            Tok::Sym(s) => write!(f, "'{}'", s.text()),
            Tok::Eof => write!(f, "EOF"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    _src: &'a str,
}

impl Cursor<'_> {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }
}

fn lex_err(span: Span, msg: impl Into<String>) -> CompileError {
    CompileError::new(ErrorKind::LexError, span, msg)
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `source` into tokens, ending with a single `Eof`.
pub fn tokenize(source: &str) -> Result<Vec<Token>> {
    let mut cur = Cursor { chars: source.chars().collect(), pos: 0, line: 1, col: 1, _src: source };
    let mut out = Vec::new();
    loop {
        skip_trivia(&mut cur)?;
        let span = cur.span();
        let Some(c) = cur.peek(0) else {
            out.push(Token { tok: Tok::Eof, span });
            return Ok(out);
        };
        let tok = if c.is_ascii_digit() {
            lex_number(&mut cur, span)?
        } else if is_ident_start(c) {
            let mut s = String::new();
            while let Some(c) = cur.peek(0).filter(|c| is_ident_char(*c)) {
                s.push(c);
                cur.bump();
            }
            while cur.peek(0) == Some('\'') {
                s.push('\'');
                cur.bump();
            }
            match KEYWORDS.iter().find(|(k, _)| *k == s) {
                Some((_, kw)) => Tok::Kw(*kw),
                None => Tok::Ident(s),
            }
        } else if c == '\'' {
            cur.bump();
            let mut s = String::new();
            while let Some(c) = cur.peek(0).filter(|c| is_ident_char(*c)) {
                s.push(c);
                cur.bump();
            }
            if s.is_empty() {
                return Err(lex_err(span, "stray quote"));
            }
            Tok::TyVar(s)
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    None => return Err(lex_err(span, "unterminated string literal")),
                    Some('"') => break,
                    Some('\\') => {
                        if let Some(e) = cur.bump() {
                            s.push(e);
                        }
                    }
                    Some(ch) => s.push(ch),
                }
            }
            Tok::Str(s)
        } else if let Some((text, sym)) = SYMBOLS.iter().find(|(t, _)| cur.starts_with(t)) {
            for _ in 0..text.chars().count() {
                cur.bump();
            }
            Tok::Sym(*sym)
        } else {
            return Err(lex_err(span, format!("unexpected character {c:?}")));
        };
        out.push(Token { tok, span });
    }
}

fn skip_trivia(cur: &mut Cursor<'_>) -> Result<()> {
    loop {
        match cur.peek(0) {
            Some(c) if c.is_whitespace() => {
                cur.bump();
            }
            Some('(') if cur.peek(1) == Some('*') => {
                let open = cur.span();
                cur.bump();
                cur.bump();
                let mut depth = 1;
                while depth > 0 {
                    if cur.starts_with("(*") {
                        cur.bump();
                        cur.bump();
                        depth += 1;
                    } else if cur.starts_with("*)") {
                        cur.bump();
                        cur.bump();
                        depth -= 1;
                    } else if cur.bump().is_none() {
                        return Err(lex_err(open, "unterminated comment"));
                    }
                }
            }
            _ => return Ok(()),
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>, span: Span) -> Result<Tok> {
    if cur.peek(0) == Some('0') && matches!(cur.peek(1), Some('x' | 'X')) {
        cur.bump();
        cur.bump();
        let mut digits = String::new();
        while let Some(c) = cur.peek(0).filter(|c| c.is_ascii_hexdigit() || *c == '_') {
            if c != '_' {
                digits.push(c);
            }
            cur.bump();
        }
        if digits.is_empty() {
            return Err(lex_err(span, "hex literal without digits"));
        }
        if cur.peek(0).is_some_and(is_ident_char) {
            return Err(lex_err(span, "malformed hex literal"));
        }
        return Ok(Tok::Int(BigInt::from_str_radix(&digits, 16).expect("hex digits")));
    }
    let mut digits = String::new();
    while let Some(c) = cur.peek(0).filter(|c| c.is_ascii_digit() || *c == '_') {
        if c != '_' {
            digits.push(c);
        }
        cur.bump();
    }
    if cur.peek(0) == Some('.') && cur.peek(1).is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
        let mut text = digits.clone();
        text.push('.');
        while let Some(c) = cur.peek(0).filter(|c| c.is_ascii_digit()) {
            text.push(c);
            cur.bump();
        }
        return Ok(Tok::Float(text));
    }
    if cur.peek(0).is_some_and(is_ident_start) {
        return Err(lex_err(span, "malformed integer literal"));
    }
    Ok(Tok::Int(digits.parse().expect("decimal digits")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn let_binding() {
        assert_eq!(
            toks("let x = 1"),
            vec![Tok::Kw(Kw::Let), Tok::Ident("x".into()), Tok::Sym(Sym::Eq), Tok::Int(1.into()), Tok::Eof]
        );
    }

    #[test]
    fn hex_literal() {
        assert_eq!(toks("0x2A"), vec![Tok::Int(42.into()), Tok::Eof]);
    }

    #[test]
    fn unterminated_string_points_at_opening() {
        let e = tokenize("let s =\n  \"abc").unwrap_err();
        assert_eq!(e.kind, ErrorKind::LexError);
        assert_eq!((e.span.line, e.span.col), (2, 3));
    }

    #[test]
    fn unterminated_comment_points_at_opening() {
        let e = tokenize("x (* a (* b *)").unwrap_err();
        assert_eq!((e.span.line, e.span.col), (1, 3));
    }

    #[test]
    fn spans_track_lines() {
        let t = tokenize("a\n  bc").unwrap();
        assert_eq!((t[1].span.line, t[1].span.col), (2, 3));
    }

    #[test]
    fn multi_char_symbols_win() {
        assert_eq!(
            toks("<- <= <> /\\"),
            vec![Tok::Sym(Sym::LArrow), Tok::Sym(Sym::Le), Tok::Sym(Sym::Ne), Tok::Sym(Sym::Conj), Tok::Eof]
        );
    }

    #[test]
    fn floats_and_tyvars_are_tokens() {
        assert_eq!(toks("1.5 'a"), vec![Tok::Float("1.5".into()), Tok::TyVar("a".into()), Tok::Eof]);
    }
}
