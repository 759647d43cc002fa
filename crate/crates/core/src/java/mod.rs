//! Java front end: tokenizer, syntax tree and a tolerant recursive-descent
//! parser. Shared by the indexer and the CodeBLEU scorer.

pub mod ast;
pub mod lexer;
pub mod parser;

pub use ast::{Kind, Node};
pub use lexer::{is_keyword, tokenize, Token, TokenKind};
pub use parser::{parse_compilation_unit, parse_members, parse_statements, ParseResult, SyntaxError};
