//! Java tokenizer.
//!
//! `>` is always emitted as a single-character token; the parser glues
//! adjacent ones back into shift/compare operators so that nested generic
//! arguments (`List<List<String>>`) close correctly.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    Keyword,
    IntLiteral,
    FloatLiteral,
    CharLiteral,
    StringLiteral,
    TextBlock,
    Op,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub end_line: u32,
    /// True when the next token starts immediately at `end`.
    pub joined: bool,
}

impl Token<'_> {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Op && self.text == op
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == kw
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Ident
    }

    pub fn is_literal(&self) -> bool {
        matches!(
            self.kind,
            TokenKind::IntLiteral
                | TokenKind::FloatLiteral
                | TokenKind::CharLiteral
                | TokenKind::StringLiteral
                | TokenKind::TextBlock
        ) || self.is_kw("true")
            || self.is_kw("false")
            || self.is_kw("null")
    }
}

impl fmt::Display for Token<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}` (line {})", self.text, self.line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comment {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub end_line: u32,
    pub is_doc: bool,
}

pub const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "false",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "null",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "true",
    "try",
    "void",
    "volatile",
    "while",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.binary_search(&word).is_ok()
}

// Longest first; '>' variants are deliberately absent.
const OPERATORS: &[&str] = &[
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", "+=", "-=", "*=", "/=",
    "&=", "|=", "^=", "%=", "<<", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@", "=", "<",
    "!", "~", "?", ":", "+", "-", "*", "/", "&", "|", "^", "%", ">",
];

#[derive(Debug, Default)]
pub struct Lexed<'a> {
    pub tokens: Vec<Token<'a>>,
    pub comments: Vec<Comment>,
    /// Unterminated literals or comments; the lexer still produces tokens.
    pub problems: Vec<(u32, String)>,
}

pub fn tokenize(source: &str) -> Lexed<'_> {
    Lexer::new(source).run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    out: Lexed<'a>,
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_part(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            line: 1,
            out: Lexed::default(),
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn byte_at(&self, i: usize) -> Option<u8> {
        self.bytes.get(i).copied()
    }

    fn advance_to(&mut self, end: usize) {
        self.line += self.src[self.pos..end].matches('\n').count() as u32;
        self.pos = end;
    }

    fn run(mut self) -> Lexed<'a> {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                let end = self.pos + c.len_utf8();
                self.advance_to(end);
                continue;
            }
            if self.src[self.pos..].starts_with("//") {
                let end = self.src[self.pos..]
                    .find('\n')
                    .map_or(self.src.len(), |i| self.pos + i);
                self.push_comment(end, false);
                continue;
            }
            if self.src[self.pos..].starts_with("/*") {
                let is_doc =
                    self.src[self.pos..].starts_with("/**") && !self.src[self.pos..].starts_with("/**/");
                let end = match self.src[self.pos + 2..].find("*/") {
                    Some(i) => self.pos + 2 + i + 2,
                    None => {
                        self.out
                            .problems
                            .push((self.line, "unterminated block comment".into()));
                        self.src.len()
                    }
                };
                self.push_comment(end, is_doc);
                continue;
            }
            let start = self.pos;
            let kind = if is_ident_start(c) {
                let mut end = start;
                for ch in self.src[start..].chars() {
                    if is_ident_part(ch) {
                        end += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                self.pos = end;
                if is_keyword(&self.src[start..end]) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Ident
                }
            } else if c.is_ascii_digit()
                || (c == '.' && self.byte_at(start + 1).is_some_and(|b| b.is_ascii_digit()))
            {
                self.number()
            } else if self.src[start..].starts_with("\"\"\"") {
                self.text_block()
            } else if c == '"' {
                self.quoted(b'"', TokenKind::StringLiteral)
            } else if c == '\'' {
                self.quoted(b'\'', TokenKind::CharLiteral)
            } else if let Some(op) = OPERATORS.iter().find(|op| self.src[start..].starts_with(**op)) {
                self.pos += op.len();
                TokenKind::Op
            } else {
                self.pos += c.len_utf8();
                TokenKind::Unknown
            };
            let end = self.pos;
            let line = self.line;
            let end_line = line + self.src[start..end].matches('\n').count() as u32;
            self.line = end_line;
            if let Some(prev) = self.out.tokens.last_mut() {
                prev.joined = prev.end == start;
            }
            self.out.tokens.push(Token {
                kind,
                text: &self.src[start..end],
                start,
                end,
                line,
                end_line,
                joined: false,
            });
        }
        self.out
    }

    fn push_comment(&mut self, end: usize, is_doc: bool) {
        let start = self.pos;
        let line = self.line;
        self.advance_to(end);
        self.out.comments.push(Comment {
            start,
            end,
            line,
            end_line: self.line,
            is_doc,
        });
    }

    fn number(&mut self) -> TokenKind {
        let start = self.pos;
        let b = self.bytes;
        let mut i = start;
        let mut float = false;
        if b[i] == b'0' && matches!(self.byte_at(i + 1), Some(b'x' | b'X' | b'b' | b'B')) {
            i += 2;
            while i < b.len() && (b[i].is_ascii_hexdigit() || b[i] == b'_') {
                i += 1;
            }
        } else {
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
                i += 1;
            }
            if i < b.len() && b[i] == b'.' && self.byte_at(i + 1).is_some_and(|c| c.is_ascii_digit()) {
                float = true;
                i += 1;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'_') {
                    i += 1;
                }
            } else if i < b.len()
                && b[i] == b'.'
                && !self.byte_at(i + 1).is_some_and(|c| c.is_ascii_alphabetic() || c == b'.')
            {
                // `1.` is a valid double literal
                float = true;
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    float = true;
                    i = j;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
        }
        if i < b.len() && matches!(b[i], b'l' | b'L') {
            i += 1;
        } else if i < b.len() && matches!(b[i], b'f' | b'F' | b'd' | b'D') {
            float = true;
            i += 1;
        }
        self.pos = i;
        if float {
            TokenKind::FloatLiteral
        } else {
            TokenKind::IntLiteral
        }
    }

    fn quoted(&mut self, quote: u8, kind: TokenKind) -> TokenKind {
        let b = self.bytes;
        let mut i = self.pos + 1;
        while i < b.len() {
            match b[i] {
                b'\\' => i += 2,
                b'\n' => break,
                c if c == quote => {
                    self.pos = i + 1;
                    return kind;
                }
                _ => i += 1,
            }
        }
        self.out
            .problems
            .push((self.line, "unterminated literal".into()));
        self.pos = i.min(b.len());
        kind
    }

    fn text_block(&mut self) -> TokenKind {
        let body = self.pos + 3;
        match self.src[body..].find("\"\"\"") {
            Some(i) => self.pos = body + i + 3,
            None => {
                self.out
                    .problems
                    .push((self.line, "unterminated text block".into()));
                self.pos = self.src.len();
            }
        }
        TokenKind::TextBlock
    }
}
