//! Recursive-descent Java parser.
//!
//! Covers the Java 8-17 surface used by the studied systems. Errors inside a
//! class member are recovered at the member boundary; a method whose body
//! fails to parse keeps its header and gets an `Error` body node.

use super::ast::{Kind, Node};
use super::lexer::{tokenize, Comment, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SyntaxError {
    pub line: u32,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ParseResult {
    pub root: Node,
    pub errors: Vec<SyntaxError>,
    pub comments: Vec<Comment>,
}

impl ParseResult {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Parses a whole compilation unit.
pub fn parse_compilation_unit(source: &str) -> ParseResult {
    run(source, |p| p.compilation_unit())
}

/// Parses a sequence of class-body members (methods, fields, nested types)
/// with no enclosing class; used for code snippets.
pub fn parse_members(source: &str) -> ParseResult {
    run(source, |p| {
        let start = p.pos;
        let mut children = Vec::new();
        while !p.eof() {
            match p.member("") {
                Ok(Some(n)) => children.push(n),
                Ok(None) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(p.finish_at(Kind::Program, start, None, children))
    })
}

/// Parses a sequence of block statements; used for code snippets.
pub fn parse_statements(source: &str) -> ParseResult {
    run(source, |p| {
        let start = p.pos;
        let mut children = Vec::new();
        while !p.eof() {
            children.push(p.block_statement()?);
        }
        Ok(p.finish_at(Kind::Program, start, None, children))
    })
}

fn run(source: &str, f: impl FnOnce(&mut Parser<'_>) -> PResult<Node>) -> ParseResult {
    let lexed = tokenize(source);
    let mut parser = Parser {
        toks: lexed.tokens,
        pos: 0,
        errors: Vec::new(),
        depth: 0,
    };
    for (line, msg) in lexed.problems {
        parser.errors.push(SyntaxError { line, message: msg });
    }
    let root = match f(&mut parser) {
        Ok(root) => root,
        Err(e) => {
            parser.errors.push(e);
            Node {
                kind: Kind::Error,
                text: None,
                start: 0,
                end: source.len(),
                line: 1,
                end_line: source.matches('\n').count() as u32 + 1,
                children: Vec::new(),
            }
        }
    };
    ParseResult {
        root,
        errors: parser.errors,
        comments: lexed.comments,
    }
}

type PResult<T> = Result<T, SyntaxError>;

const MAX_DEPTH: u32 = 128;

const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double", "void",
];

const MODIFIER_KEYWORDS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "abstract",
    "final",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
];

struct Parser<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
    errors: Vec<SyntaxError>,
    depth: u32,
}

impl<'a> Parser<'a> {
    // ---- token helpers -------------------------------------------------

    fn eof(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token<'a>> {
        self.toks.get(self.pos + n)
    }

    fn at_op(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(op))
    }

    fn at_op_n(&self, n: usize, op: &str) -> bool {
        self.peek_at(n).is_some_and(|t| t.is_op(op))
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_kw(kw))
    }

    fn at_ident(&self) -> bool {
        self.peek().is_some_and(|t| t.is_ident())
    }

    fn at_ident_text(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is_ident() && t.text == text)
    }

    fn bump(&mut self) -> Token<'a> {
        let t = self.toks[self.pos];
        self.pos += 1;
        t
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error<T>(&self, what: &str) -> PResult<T> {
        let (line, found) = match self.peek() {
            Some(t) => (t.line, format!("`{}`", t.text)),
            None => (
                self.toks.last().map_or(1, |t| t.end_line),
                "end of input".to_string(),
            ),
        };
        Err(SyntaxError {
            line,
            message: format!("expected {what}, found {found}"),
        })
    }

    fn expect_op(&mut self, op: &str) -> PResult<Token<'a>> {
        if self.at_op(op) {
            Ok(self.bump())
        } else {
            self.error(&format!("`{op}`"))
        }
    }

    fn expect_ident(&mut self) -> PResult<Token<'a>> {
        if self.at_ident() {
            Ok(self.bump())
        } else {
            self.error("identifier")
        }
    }

    fn finish_at(&self, kind: Kind, start: usize, text: Option<String>, children: Vec<Node>) -> Node {
        let (s, line) = match self.toks.get(start) {
            Some(t) if start < self.pos => (t.start, t.line),
            _ => {
                let t = self.toks.get(self.pos.saturating_sub(1));
                (t.map_or(0, |t| t.end), t.map_or(1, |t| t.end_line))
            }
        };
        let (e, end_line) = if self.pos > start {
            let t = &self.toks[self.pos - 1];
            (t.end, t.end_line)
        } else {
            (s, line)
        };
        Node {
            kind,
            text,
            start: s,
            end: e,
            line,
            end_line,
            children,
        }
    }

    fn leaf(&self, kind: Kind, tok: &Token<'_>) -> Node {
        Node {
            kind,
            text: Some(tok.text.to_string()),
            start: tok.start,
            end: tok.end,
            line: tok.line,
            end_line: tok.end_line,
            children: Vec::new(),
        }
    }

    fn compact_text(&self, start: usize) -> String {
        if start >= self.pos {
            return String::new();
        }
        self.toks[start..self.pos].iter().map(|t| t.text).collect()
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.error("shallower nesting");
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    /// Index just past the token matching the opener at `open_idx`.
    fn matching(&self, open_idx: usize, open: &str, close: &str) -> Option<usize> {
        let mut depth = 0usize;
        for (i, t) in self.toks.iter().enumerate().skip(open_idx) {
            if t.is_op(open) {
                depth += 1;
            } else if t.is_op(close) {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
        }
        None
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        match self.matching(self.pos, open, close) {
            Some(end) => {
                self.pos = end;
                Ok(())
            }
            None => self.error(&format!("closing `{close}`")),
        }
    }

    // ---- declarations --------------------------------------------------

    fn compilation_unit(&mut self) -> PResult<Node> {
        let start = self.pos;
        let mut children = Vec::new();
        while !self.eof() {
            if self.eat_op(";") {
                continue;
            }
            let save = self.pos;
            let item = self.top_level_item();
            match item {
                Ok(n) => children.push(n),
                Err(e) => {
                    self.errors.push(e);
                    self.pos = save;
                    self.recover_top_level();
                    children.push(self.finish_at(Kind::Error, save, None, Vec::new()));
                }
            }
        }
        Ok(self.finish_at(Kind::Program, start, None, children))
    }

    fn top_level_item(&mut self) -> PResult<Node> {
        let start = self.pos;
        if self.at_kw("import") {
            self.bump();
            let is_static = self.eat_kw("static");
            let name = self.qualified_name(true)?;
            self.expect_op(";")?;
            let text = if is_static { format!("static {name}") } else { name };
            return Ok(self.finish_at(Kind::ImportDecl, start, Some(text), Vec::new()));
        }
        let mods = self.modifiers()?;
        if self.eat_kw("package") {
            let name = self.qualified_name(false)?;
            self.expect_op(";")?;
            return Ok(self.finish_at(Kind::PackageDecl, start, Some(name), Vec::new()));
        }
        if self.at_type_decl_start() {
            return self.type_decl(start, mods);
        }
        self.error("type declaration")
    }

    fn recover_top_level(&mut self) {
        let begin = self.pos;
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            if self.pos > begin && depth == 0 && (t.is_kw("class") || t.is_kw("interface") || t.is_kw("enum")) {
                // back up over modifiers belonging to the next declaration
                while self.pos > begin + 1
                    && self.toks[self.pos - 1].kind == TokenKind::Keyword
                    && MODIFIER_KEYWORDS.contains(&self.toks[self.pos - 1].text)
                {
                    self.pos -= 1;
                }
                return;
            }
            if t.is_op("{") {
                depth += 1;
            } else if t.is_op("}") {
                depth -= 1;
                if depth <= 0 {
                    self.pos += 1;
                    if depth == 0 {
                        return;
                    }
                    depth = 0;
                    continue;
                }
            }
            self.pos += 1;
        }
    }

    fn qualified_name(&mut self, allow_star: bool) -> PResult<String> {
        let mut name = self.expect_ident()?.text.to_string();
        while self.at_op(".") {
            if allow_star && self.at_op_n(1, "*") {
                self.pos += 2;
                name.push_str(".*");
                break;
            }
            self.bump();
            name.push('.');
            name.push_str(self.expect_ident()?.text);
        }
        Ok(name)
    }

    fn at_type_decl_start(&self) -> bool {
        self.at_kw("class")
            || self.at_kw("interface")
            || self.at_kw("enum")
            || (self.at_op("@") && self.peek_at(1).is_some_and(|t| t.is_kw("interface")))
            || (self.at_ident_text("record")
                && self.peek_at(1).is_some_and(|t| t.is_ident())
                && (self.at_op_n(2, "(") || self.at_op_n(2, "<")))
    }

    fn annotation(&mut self) -> PResult<Node> {
        let start = self.pos;
        self.expect_op("@")?;
        let name = self.qualified_name(false)?;
        if self.at_op("(") {
            self.skip_balanced("(", ")")?;
        }
        Ok(self.finish_at(Kind::Annotation, start, Some(name), Vec::new()))
    }

    fn modifiers(&mut self) -> PResult<Option<Node>> {
        let start = self.pos;
        let mut words = Vec::new();
        let mut annotations = Vec::new();
        while let Some(t) = self.peek().copied() {
            if t.is_op("@") && !self.peek_at(1).is_some_and(|n| n.is_kw("interface")) {
                annotations.push(self.annotation()?);
            } else if t.kind == TokenKind::Keyword && MODIFIER_KEYWORDS.contains(&t.text) {
                // `synchronized (x) {}` is a statement, not a modifier
                if t.text == "synchronized" && self.at_op_n(1, "(") {
                    break;
                }
                words.push(t.text.to_string());
                self.bump();
            } else if t.is_kw("default") && !self.at_op_n(1, ":") && !self.at_op_n(1, "->") {
                words.push("default".into());
                self.bump();
            } else if t.is_ident()
                && t.text == "sealed"
                && self.peek_at(1).is_some_and(|n| n.kind == TokenKind::Keyword)
            {
                words.push("sealed".into());
                self.bump();
            } else if t.is_ident()
                && t.text == "non"
                && self.at_op_n(1, "-")
                && self.peek_at(2).is_some_and(|n| n.text == "sealed")
            {
                words.push("non-sealed".into());
                self.pos += 3;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Ok(None);
        }
        let text = (!words.is_empty()).then(|| words.join(" "));
        Ok(Some(self.finish_at(Kind::Modifiers, start, text, annotations)))
    }

    fn type_decl(&mut self, start: usize, mods: Option<Node>) -> PResult<Node> {
        self.enter()?;
        let r = self.type_decl_inner(start, mods);
        self.leave();
        r
    }

    fn type_decl_inner(&mut self, start: usize, mods: Option<Node>) -> PResult<Node> {
        let mut children: Vec<Node> = mods.into_iter().collect();
        let kind = if self.eat_kw("class") {
            Kind::ClassDecl
        } else if self.eat_kw("interface") {
            Kind::InterfaceDecl
        } else if self.eat_kw("enum") {
            Kind::EnumDecl
        } else if self.at_op("@") {
            self.pos += 2;
            Kind::AnnotationTypeDecl
        } else if self.at_ident_text("record") {
            self.bump();
            Kind::RecordDecl
        } else {
            return self.error("class, interface, enum or record");
        };
        let name = self.expect_ident()?.text.to_string();
        if self.at_op("<") {
            children.push(self.type_parameters()?);
        }
        if kind == Kind::RecordDecl {
            children.push(self.formal_parameters()?);
        }
        loop {
            let clause_start = self.pos;
            if self.eat_kw("extends") {
                let types = self.type_list()?;
                let k = if kind == Kind::ClassDecl {
                    Kind::Superclass
                } else {
                    Kind::SuperInterfaces
                };
                children.push(self.finish_at(k, clause_start, None, types));
            } else if self.eat_kw("implements") {
                let types = self.type_list()?;
                children.push(self.finish_at(Kind::SuperInterfaces, clause_start, None, types));
            } else if self.at_ident_text("permits") {
                self.bump();
                self.type_list()?;
            } else {
                break;
            }
        }
        let body = if kind == Kind::EnumDecl {
            self.enum_body(&name)?
        } else {
            self.class_body(&name)?
        };
        children.push(body);
        Ok(self.finish_at(kind, start, Some(name), children))
    }

    fn type_list(&mut self) -> PResult<Vec<Node>> {
        let mut types = vec![self.parse_type()?];
        while self.eat_op(",") {
            types.push(self.parse_type()?);
        }
        Ok(types)
    }

    fn type_parameters(&mut self) -> PResult<Node> {
        let start = self.pos;
        self.expect_op("<")?;
        loop {
            while self.at_op("@") {
                self.annotation()?;
            }
            self.expect_ident()?;
            if self.eat_kw("extends") {
                self.parse_type()?;
                while self.eat_op("&") {
                    self.parse_type()?;
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(">")?;
        let text = self.compact_text(start);
        Ok(self.finish_at(Kind::TypeParameters, start, Some(text), Vec::new()))
    }

    fn enum_body(&mut self, name: &str) -> PResult<Node> {
        let start = self.pos;
        self.expect_op("{")?;
        let mut children = Vec::new();
        while !self.at_op(";") && !self.at_op("}") {
            let cstart = self.pos;
            while self.at_op("@") {
                self.annotation()?;
            }
            let cname = self.expect_ident()?.text.to_string();
            let mut cchildren = Vec::new();
            if self.at_op("(") {
                cchildren.push(self.arguments()?);
            }
            if self.at_op("{") {
                cchildren.push(self.class_body("")?);
            }
            children.push(self.finish_at(Kind::EnumConstant, cstart, Some(cname), cchildren));
            if !self.eat_op(",") {
                break;
            }
        }
        if self.eat_op(";") {
            self.members_until_close(name, &mut children)?;
        }
        self.expect_op("}")?;
        Ok(self.finish_at(Kind::ClassBody, start, None, children))
    }

    fn class_body(&mut self, name: &str) -> PResult<Node> {
        let start = self.pos;
        self.expect_op("{")?;
        let mut children = Vec::new();
        self.members_until_close(name, &mut children)?;
        self.expect_op("}")?;
        Ok(self.finish_at(Kind::ClassBody, start, None, children))
    }

    fn members_until_close(&mut self, name: &str, out: &mut Vec<Node>) -> PResult<()> {
        while !self.at_op("}") {
            if self.eof() {
                return self.error("`}`");
            }
            let save = self.pos;
            match self.member(name) {
                Ok(Some(n)) => out.push(n),
                Ok(None) => {}
                Err(e) => {
                    self.errors.push(e);
                    self.pos = save;
                    self.recover_member();
                    out.push(self.finish_at(Kind::Error, save, None, Vec::new()));
                }
            }
        }
        Ok(())
    }

    fn recover_member(&mut self) {
        let begin = self.pos;
        let mut depth = 0usize;
        while let Some(t) = self.peek() {
            if t.is_op("{") {
                depth += 1;
            } else if t.is_op("}") {
                if depth == 0 {
                    if self.pos == begin {
                        self.pos += 1;
                    }
                    return;
                }
                depth -= 1;
                if depth == 0 {
                    self.pos += 1;
                    return;
                }
            } else if t.is_op(";") && depth == 0 {
                self.pos += 1;
                return;
            }
            self.pos += 1;
        }
    }

    fn member(&mut self, class_name: &str) -> PResult<Option<Node>> {
        let start = self.pos;
        if self.eat_op(";") {
            return Ok(None);
        }
        if self.at_op("{") || (self.at_kw("static") && self.at_op_n(1, "{")) {
            let is_static = self.eat_kw("static");
            let block = self.block()?;
            let text = is_static.then(|| "static".to_string());
            return Ok(Some(self.finish_at(Kind::InitializerBlock, start, text, vec![block])));
        }
        let mods = self.modifiers()?;
        if self.at_type_decl_start() {
            return self.type_decl(start, mods).map(Some);
        }
        let mut children: Vec<Node> = mods.into_iter().collect();
        if self.at_op("<") {
            children.push(self.type_parameters()?);
        }
        // constructor
        if self.at_ident() && self.at_op_n(1, "(") {
            let name = self.bump().text.to_string();
            children.push(self.formal_parameters()?);
            if let Some(t) = self.throws_clause()? {
                children.push(t);
            }
            children.push(self.method_body()?);
            return Ok(Some(self.finish_at(Kind::ConstructorDecl, start, Some(name), children)));
        }
        // compact record constructor
        if self.at_ident_text(class_name) && !class_name.is_empty() && self.at_op_n(1, "{") {
            let name = self.bump().text.to_string();
            children.push(self.method_body()?);
            return Ok(Some(self.finish_at(
                Kind::CompactConstructorDecl,
                start,
                Some(name),
                children,
            )));
        }
        let ty = self.parse_type()?;
        let name_tok = self.expect_ident()?;
        if self.at_op("(") {
            children.push(ty);
            children.push(self.formal_parameters()?);
            while self.at_op("[") && self.at_op_n(1, "]") {
                self.pos += 2;
            }
            if let Some(t) = self.throws_clause()? {
                children.push(t);
            }
            if self.eat_kw("default") {
                self.skip_to_semicolon()?;
                return Ok(Some(self.finish_at(
                    Kind::MethodDecl,
                    start,
                    Some(name_tok.text.to_string()),
                    children,
                )));
            }
            if self.at_op("{") {
                children.push(self.method_body()?);
            } else {
                self.expect_op(";")?;
            }
            return Ok(Some(self.finish_at(
                Kind::MethodDecl,
                start,
                Some(name_tok.text.to_string()),
                children,
            )));
        }
        children.push(ty);
        children.extend(self.declarators_after_name(name_tok)?);
        self.expect_op(";")?;
        Ok(Some(self.finish_at(Kind::FieldDecl, start, None, children)))
    }

    fn skip_to_semicolon(&mut self) -> PResult<()> {
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            if t.is_op("(") || t.is_op("{") || t.is_op("[") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("}") || t.is_op("]") {
                depth -= 1;
            } else if t.is_op(";") && depth <= 0 {
                self.pos += 1;
                return Ok(());
            }
            self.pos += 1;
        }
        self.error("`;`")
    }

    /// Method or constructor body; a body that fails to parse is replaced by
    /// an `Error` node so the declaration itself survives.
    fn method_body(&mut self) -> PResult<Node> {
        let start = self.pos;
        match self.block() {
            Ok(b) => Ok(b),
            Err(e) => {
                self.errors.push(e);
                self.pos = start;
                self.skip_balanced("{", "}")?;
                Ok(self.finish_at(Kind::Error, start, None, Vec::new()))
            }
        }
    }

    fn throws_clause(&mut self) -> PResult<Option<Node>> {
        let start = self.pos;
        if !self.eat_kw("throws") {
            return Ok(None);
        }
        let types = self.type_list()?;
        Ok(Some(self.finish_at(Kind::Throws, start, None, types)))
    }

    fn formal_parameters(&mut self) -> PResult<Node> {
        let start = self.pos;
        self.expect_op("(")?;
        let mut params = Vec::new();
        if !self.at_op(")") {
            loop {
                params.push(self.formal_parameter()?);
                if !self.eat_op(",") {
                    break;
                }
            }
        }
        self.expect_op(")")?;
        Ok(self.finish_at(Kind::FormalParameters, start, None, params))
    }

    fn formal_parameter(&mut self) -> PResult<Node> {
        let start = self.pos;
        let mods = self.modifiers()?;
        let ty = self.parse_type()?;
        let mut children: Vec<Node> = mods.into_iter().collect();
        children.push(ty);
        if self.eat_op("...") {
            let name = self.expect_ident()?.text.to_string();
            return Ok(self.finish_at(Kind::SpreadParameter, start, Some(name), children));
        }
        if self.eat_kw("this") {
            return Ok(self.finish_at(Kind::ReceiverParameter, start, Some("this".into()), children));
        }
        let name = self.expect_ident()?;
        if self.at_op(".") && self.peek_at(1).is_some_and(|t| t.is_kw("this")) {
            self.pos += 2;
            return Ok(self.finish_at(Kind::ReceiverParameter, start, Some("this".into()), children));
        }
        while self.at_op("[") && self.at_op_n(1, "]") {
            self.pos += 2;
        }
        Ok(self.finish_at(Kind::FormalParameter, start, Some(name.text.to_string()), children))
    }

    fn declarators_after_name(&mut self, first: Token<'a>) -> PResult<Vec<Node>> {
        let mut out = vec![self.declarator_rest(first)?];
        while self.eat_op(",") {
            let name = self.expect_ident()?;
            out.push(self.declarator_rest(name)?);
        }
        Ok(out)
    }

    fn declarator_rest(&mut self, name: Token<'a>) -> PResult<Node> {
        let start = self.pos - 1;
        debug_assert_eq!(self.toks[start].start, name.start);
        while self.at_op("[") && self.at_op_n(1, "]") {
            self.pos += 2;
        }
        let mut children = Vec::new();
        if self.eat_op("=") {
            children.push(self.variable_initializer()?);
        }
        Ok(self.finish_at(Kind::VariableDeclarator, start, Some(name.text.to_string()), children))
    }

    fn variable_initializer(&mut self) -> PResult<Node> {
        if self.at_op("{") {
            self.array_initializer()
        } else {
            self.expression()
        }
    }

    fn array_initializer(&mut self) -> PResult<Node> {
        let start = self.pos;
        self.expect_op("{")?;
        let mut items = Vec::new();
        while !self.at_op("}") {
            items.push(self.variable_initializer()?);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op("}")?;
        Ok(self.finish_at(Kind::ArrayInitializer, start, None, items))
    }

    // ---- types ---------------------------------------------------------

    fn parse_type(&mut self) -> PResult<Node> {
        let start = self.pos;
        self.type_inner()?;
        let text = self.compact_text(start);
        Ok(self.finish_at(Kind::Type, start, Some(text), Vec::new()))
    }

    fn type_inner(&mut self) -> PResult<()> {
        while self.at_op("@") {
            self.annotation()?;
        }
        match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword && PRIMITIVES.contains(&t.text) => {
                self.bump();
            }
            Some(t) if t.is_ident() => {
                self.bump();
                if self.at_op("<") {
                    self.type_arguments()?;
                }
                while self.at_op(".")
                    && self.peek_at(1).is_some_and(|t| t.is_ident() || t.is_op("@"))
                {
                    self.bump();
                    while self.at_op("@") {
                        self.annotation()?;
                    }
                    self.expect_ident()?;
                    if self.at_op("<") {
                        self.type_arguments()?;
                    }
                }
            }
            _ => return self.error("type"),
        }
        loop {
            if self.at_op("[") && self.at_op_n(1, "]") {
                self.pos += 2;
            } else if self.at_op("@") {
                // annotated dimension: `String @NonNull []`
                let save = self.pos;
                self.annotation()?;
                if !(self.at_op("[") && self.at_op_n(1, "]")) {
                    self.pos = save;
                    break;
                }
            } else {
                break;
            }
        }
        Ok(())
    }

    fn type_arguments(&mut self) -> PResult<()> {
        self.expect_op("<")?;
        if self.eat_op(">") {
            return Ok(());
        }
        loop {
            while self.at_op("@") {
                self.annotation()?;
            }
            if self.eat_op("?") {
                if self.eat_kw("extends") || self.eat_kw("super") {
                    self.type_inner()?;
                }
            } else {
                self.type_inner()?;
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(">")?;
        Ok(())
    }

    fn speculate<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> Option<T> {
        let save = self.pos;
        let errs = self.errors.len();
        match f(self) {
            Ok(v) => Some(v),
            Err(_) => {
                self.pos = save;
                self.errors.truncate(errs);
                None
            }
        }
    }

    // ---- statements ----------------------------------------------------

    fn block(&mut self) -> PResult<Node> {
        self.enter()?;
        let start = self.pos;
        self.expect_op("{")?;
        let mut children = Vec::new();
        while !self.at_op("}") {
            if self.eof() {
                self.leave();
                return self.error("`}`");
            }
            children.push(self.block_statement()?);
        }
        self.bump();
        self.leave();
        Ok(self.finish_at(Kind::Block, start, None, children))
    }

    fn looks_like_local_var_decl(&mut self) -> bool {
        let save = self.pos;
        let ok = (|| {
            self.modifiers().ok()?;
            self.type_inner().ok()?;
            if !self.at_ident() {
                return None;
            }
            let next = self.peek_at(1)?;
            (next.is_op("=") || next.is_op(";") || next.is_op(",") || next.is_op(":") || next.is_op("["))
                .then_some(())
        })()
        .is_some();
        self.pos = save;
        ok
    }

    fn block_statement(&mut self) -> PResult<Node> {
        let start = self.pos;
        // local class / record / interface
        let save = self.pos;
        if let Some(mods) = self.speculate(|p| p.modifiers()) {
            if self.at_type_decl_start() {
                return self.type_decl(start, mods);
            }
        }
        self.pos = save;
        if self.looks_like_local_var_decl() {
            let decl = self.local_var_decl()?;
            self.expect_op(";")?;
            return Ok(self.extend_to_here(decl));
        }
        self.statement()
    }

    fn extend_to_here(&self, mut n: Node) -> Node {
        if let Some(t) = self.toks.get(self.pos.wrapping_sub(1)) {
            n.end = t.end;
            n.end_line = t.end_line;
        }
        n
    }

    /// `[mods] Type name [= init] {, name [= init]}` without the trailing `;`.
    fn local_var_decl(&mut self) -> PResult<Node> {
        let start = self.pos;
        let mods = self.modifiers()?;
        let ty = self.parse_type()?;
        let first = self.expect_ident()?;
        let mut children: Vec<Node> = mods.into_iter().collect();
        children.push(ty);
        children.extend(self.declarators_after_name(first)?);
        Ok(self.finish_at(Kind::LocalVarDecl, start, None, children))
    }

    fn statement(&mut self) -> PResult<Node> {
        self.enter()?;
        let r = self.statement_inner();
        self.leave();
        r
    }

    fn statement_inner(&mut self) -> PResult<Node> {
        let start = self.pos;
        let Some(tok) = self.peek().copied() else {
            return self.error("statement");
        };
        if tok.is_op("{") {
            return self.block();
        }
        if tok.is_op(";") {
            self.bump();
            return Ok(self.finish_at(Kind::Empty, start, None, Vec::new()));
        }
        if tok.kind == TokenKind::Keyword {
            match tok.text {
                "if" => {
                    self.bump();
                    let cond = self.par_expression()?;
                    let then = self.statement()?;
                    let mut children = vec![cond, then];
                    if self.eat_kw("else") {
                        children.push(self.statement()?);
                    }
                    return Ok(self.finish_at(Kind::If, start, None, children));
                }
                "while" => {
                    self.bump();
                    let cond = self.par_expression()?;
                    let body = self.statement()?;
                    return Ok(self.finish_at(Kind::While, start, None, vec![cond, body]));
                }
                "do" => {
                    self.bump();
                    let body = self.statement()?;
                    if !self.eat_kw("while") {
                        return self.error("`while`");
                    }
                    let cond = self.par_expression()?;
                    self.expect_op(";")?;
                    return Ok(self.finish_at(Kind::Do, start, None, vec![body, cond]));
                }
                "for" => return self.for_statement(),
                "try" => return self.try_statement(),
                "switch" => {
                    self.bump();
                    let subject = self.par_expression()?;
                    let block = self.switch_block()?;
                    return Ok(self.finish_at(Kind::SwitchStatement, start, None, vec![subject, block]));
                }
                "return" => {
                    self.bump();
                    let mut children = Vec::new();
                    if !self.at_op(";") {
                        children.push(self.expression()?);
                    }
                    self.expect_op(";")?;
                    return Ok(self.finish_at(Kind::Return, start, None, children));
                }
                "throw" => {
                    self.bump();
                    let e = self.expression()?;
                    self.expect_op(";")?;
                    return Ok(self.finish_at(Kind::Throw, start, None, vec![e]));
                }
                "break" | "continue" => {
                    self.bump();
                    let label = if self.at_ident() {
                        Some(self.bump().text.to_string())
                    } else {
                        None
                    };
                    self.expect_op(";")?;
                    let kind = if tok.text == "break" { Kind::Break } else { Kind::Continue };
                    return Ok(self.finish_at(kind, start, label, Vec::new()));
                }
                "synchronized" => {
                    self.bump();
                    let lock = self.par_expression()?;
                    let body = self.block()?;
                    return Ok(self.finish_at(Kind::Synchronized, start, None, vec![lock, body]));
                }
                "assert" => {
                    self.bump();
                    let mut children = vec![self.expression()?];
                    if self.eat_op(":") {
                        children.push(self.expression()?);
                    }
                    self.expect_op(";")?;
                    return Ok(self.finish_at(Kind::Assert, start, None, children));
                }
                "this" | "super" if self.at_op_n(1, "(") => {
                    self.bump();
                    let args = self.arguments()?;
                    self.expect_op(";")?;
                    return Ok(self.finish_at(
                        Kind::ExplicitConstructorInvocation,
                        start,
                        Some(tok.text.to_string()),
                        vec![args],
                    ));
                }
                _ => {}
            }
        }
        if tok.is_ident() {
            if tok.text == "yield"
                && !self.peek_at(1).is_some_and(|t| {
                    t.is_op("=") || t.is_op(".") || t.is_op("(") || t.is_op("[") || t.is_op("++") || t.is_op("--")
                })
            {
                self.bump();
                let e = self.expression()?;
                self.expect_op(";")?;
                return Ok(self.finish_at(Kind::Yield, start, None, vec![e]));
            }
            if self.at_op_n(1, ":") {
                let label = self.bump().text.to_string();
                self.bump();
                let body = self.statement()?;
                return Ok(self.finish_at(Kind::Labeled, start, Some(label), vec![body]));
            }
        }
        // qualified super constructor call: `outer.super(...)`
        let e = self.expression()?;
        self.expect_op(";")?;
        Ok(self.finish_at(Kind::ExpressionStatement, start, None, vec![e]))
    }

    fn par_expression(&mut self) -> PResult<Node> {
        self.expect_op("(")?;
        let e = self.expression()?;
        self.expect_op(")")?;
        Ok(e)
    }

    fn for_statement(&mut self) -> PResult<Node> {
        let start = self.pos;
        self.bump();
        self.expect_op("(")?;
        // enhanced for
        if let Some((mods, ty, name)) = self.speculate(|p| {
            let mods = p.modifiers()?;
            let ty = p.parse_type()?;
            let name = p.expect_ident()?;
            p.expect_op(":")?;
            Ok((mods, ty, name))
        }) {
            let iterable = self.expression()?;
            self.expect_op(")")?;
            let body = self.statement()?;
            let var = self.leaf(Kind::VariableDeclarator, &name);
            let mut children: Vec<Node> = mods.into_iter().collect();
            children.extend([ty, var, iterable, body]);
            return Ok(self.finish_at(Kind::EnhancedFor, start, None, children));
        }
        let mut children = Vec::new();
        if !self.at_op(";") {
            if self.looks_like_local_var_decl() {
                children.push(self.local_var_decl()?);
            } else {
                children.push(self.expression()?);
                while self.eat_op(",") {
                    children.push(self.expression()?);
                }
            }
        }
        self.expect_op(";")?;
        if !self.at_op(";") {
            children.push(self.expression()?);
        }
        self.expect_op(";")?;
        if !self.at_op(")") {
            children.push(self.expression()?);
            while self.eat_op(",") {
                children.push(self.expression()?);
            }
        }
        self.expect_op(")")?;
        children.push(self.statement()?);
        Ok(self.finish_at(Kind::For, start, None, children))
    }

    fn try_statement(&mut self) -> PResult<Node> {
        let start = self.pos;
        self.bump();
        let mut children = Vec::new();
        if self.at_op("(") {
            let rstart = self.pos;
            self.bump();
            let mut resources = Vec::new();
            while !self.at_op(")") {
                let res_start = self.pos;
                let res = if self.looks_like_local_var_decl() {
                    let mods = self.modifiers()?;
                    let ty = self.parse_type()?;
                    let name = self.expect_ident()?;
                    let decl = self.declarator_rest(name)?;
                    let mut c: Vec<Node> = mods.into_iter().collect();
                    c.extend([ty, decl]);
                    self.finish_at(Kind::Resource, res_start, None, c)
                } else {
                    let e = self.expression()?;
                    self.finish_at(Kind::Resource, res_start, None, vec![e])
                };
                resources.push(res);
                if !self.eat_op(";") {
                    break;
                }
            }
            self.expect_op(")")?;
            children.push(self.finish_at(Kind::ResourceSpec, rstart, None, resources));
        }
        children.push(self.block()?);
        while self.at_kw("catch") {
            let cstart = self.pos;
            self.bump();
            self.expect_op("(")?;
            let pstart = self.pos;
            let mods = self.modifiers()?;
            let mut types: Vec<Node> = mods.into_iter().collect();
            types.push(self.parse_type()?);
            while self.eat_op("|") {
                types.push(self.parse_type()?);
            }
            let name = self.expect_ident()?.text.to_string();
            let param = self.finish_at(Kind::CatchParameter, pstart, Some(name), types);
            self.expect_op(")")?;
            let body = self.block()?;
            children.push(self.finish_at(Kind::CatchClause, cstart, None, vec![param, body]));
        }
        if self.at_kw("finally") {
            let fstart = self.pos;
            self.bump();
            let body = self.block()?;
            children.push(self.finish_at(Kind::Finally, fstart, None, vec![body]));
        }
        Ok(self.finish_at(Kind::Try, start, None, children))
    }

    fn switch_block(&mut self) -> PResult<Node> {
        let start = self.pos;
        self.expect_op("{")?;
        let mut children = Vec::new();
        while !self.at_op("}") {
            let gstart = self.pos;
            let (label, arrow) = self.switch_label()?;
            if arrow {
                let body = if self.at_op("{") {
                    self.block()?
                } else if self.at_kw("throw") {
                    self.statement()?
                } else {
                    let estart = self.pos;
                    let e = self.expression()?;
                    self.expect_op(";")?;
                    self.finish_at(Kind::ExpressionStatement, estart, None, vec![e])
                };
                children.push(self.finish_at(Kind::SwitchRule, gstart, None, vec![label, body]));
            } else {
                let mut group = vec![label];
                while self.at_kw("case") || self.at_kw("default") {
                    let (next, _) = self.switch_label()?;
                    group.push(next);
                }
                while !self.at_op("}") && !self.at_kw("case") && !self.at_kw("default") {
                    if self.eof() {
                        return self.error("`}`");
                    }
                    group.push(self.block_statement()?);
                }
                // `default` may also start a local declaration modifier; labels always end in `:`/`->`
                children.push(self.finish_at(Kind::SwitchGroup, gstart, None, group));
            }
        }
        self.bump();
        Ok(self.finish_at(Kind::SwitchBlock, start, None, children))
    }

    fn switch_label(&mut self) -> PResult<(Node, bool)> {
        let start = self.pos;
        let mut children = Vec::new();
        if self.eat_kw("default") {
        } else if self.eat_kw("case") {
            loop {
                if self.eat_kw("default") {
                } else if let Some(p) = self.speculate(|p| {
                    let pstart = p.pos;
                    let mods = p.modifiers()?;
                    let ty = p.parse_type()?;
                    let name = p.expect_ident()?;
                    if !(p.at_op(",") || p.at_op(":") || p.at_op("->") || p.at_ident_text("when")) {
                        return p.error("pattern end");
                    }
                    let mut c: Vec<Node> = mods.into_iter().collect();
                    c.push(ty);
                    Ok(p.finish_at(Kind::Pattern, pstart, Some(name.text.to_string()), c))
                }) {
                    children.push(p);
                } else {
                    children.push(self.ternary()?);
                }
                if !self.eat_op(",") {
                    break;
                }
            }
            if self.at_ident_text("when") {
                self.bump();
                children.push(self.ternary()?);
            }
        } else {
            return self.error("`case` or `default`");
        }
        let arrow = if self.eat_op("->") {
            true
        } else {
            self.expect_op(":")?;
            false
        };
        Ok((self.finish_at(Kind::SwitchLabel, start, None, children), arrow))
    }

    // ---- expressions ---------------------------------------------------

    fn expression(&mut self) -> PResult<Node> {
        self.enter()?;
        let r = if self.lambda_ahead() {
            self.lambda()
        } else {
            self.assignment()
        };
        self.leave();
        r
    }

    fn lambda_ahead(&self) -> bool {
        if self.at_ident() && self.at_op_n(1, "->") {
            return true;
        }
        if self.at_op("(") {
            if let Some(end) = self.matching(self.pos, "(", ")") {
                return self.toks.get(end).is_some_and(|t| t.is_op("->"));
            }
        }
        false
    }

    fn lambda(&mut self) -> PResult<Node> {
        let start = self.pos;
        let params = if self.at_ident() {
            let t = self.bump();
            let id = self.leaf(Kind::Identifier, &t);
            self.finish_at(Kind::LambdaParams, start, None, vec![id])
        } else {
            self.expect_op("(")?;
            let mut items = Vec::new();
            while !self.at_op(")") {
                if self.at_ident() && (self.at_op_n(1, ",") || self.at_op_n(1, ")")) {
                    let t = self.bump();
                    items.push(self.leaf(Kind::Identifier, &t));
                } else {
                    items.push(self.formal_parameter()?);
                }
                if !self.eat_op(",") {
                    break;
                }
            }
            self.expect_op(")")?;
            self.finish_at(Kind::LambdaParams, start, None, items)
        };
        self.expect_op("->")?;
        let body = if self.at_op("{") { self.block()? } else { self.expression()? };
        Ok(self.finish_at(Kind::Lambda, start, None, vec![params, body]))
    }

    /// Recognises `>`-family operators glued from single-char tokens.
    /// Returns (operator, token count).
    fn gt_operator(&self) -> Option<(&'static str, usize)> {
        if !self.at_op(">") {
            return None;
        }
        let mut n = 1;
        while n < 3 && self.toks[self.pos + n - 1].joined && self.at_op_n(n, ">") {
            n += 1;
        }
        let eq = self.toks[self.pos + n - 1].joined && self.at_op_n(n, "=");
        Some(match (n, eq) {
            (1, false) => (">", 1),
            (1, true) => (">=", 2),
            (2, false) => (">>", 2),
            (2, true) => (">>=", 3),
            (3, false) => (">>>", 3),
            _ => (">>>=", 4),
        })
    }

    fn assignment_op(&self) -> Option<(&'static str, usize)> {
        if let Some((op, n)) = self.gt_operator() {
            return matches!(op, ">>=" | ">>>=").then_some((op, n));
        }
        let t = self.peek()?;
        if t.kind != TokenKind::Op {
            return None;
        }
        const OPS: &[&str] = &["=", "+=", "-=", "*=", "/=", "&=", "|=", "^=", "%=", "<<="];
        OPS.iter().find(|o| **o == t.text).map(|o| (*o, 1))
    }

    fn assignment(&mut self) -> PResult<Node> {
        let start = self.pos;
        let lhs = self.ternary()?;
        if let Some((op, n)) = self.assignment_op() {
            self.pos += n;
            let rhs = self.expression()?;
            return Ok(self.finish_at(Kind::Assignment, start, Some(op.to_string()), vec![lhs, rhs]));
        }
        Ok(lhs)
    }

    fn ternary(&mut self) -> PResult<Node> {
        let start = self.pos;
        let cond = self.binary(1)?;
        if self.eat_op("?") {
            let then = self.expression()?;
            self.expect_op(":")?;
            let otherwise = if self.lambda_ahead() { self.lambda()? } else { self.ternary()? };
            return Ok(self.finish_at(Kind::Ternary, start, None, vec![cond, then, otherwise]));
        }
        Ok(cond)
    }

    fn binary_operator(&self) -> Option<(&'static str, u8, usize)> {
        if let Some((op, n)) = self.gt_operator() {
            return match op {
                ">" | ">=" => Some((op, 7, n)),
                ">>" | ">>>" => Some((op, 8, n)),
                _ => None,
            };
        }
        let t = self.peek()?;
        if t.is_kw("instanceof") {
            return Some(("instanceof", 7, 1));
        }
        if t.kind != TokenKind::Op {
            return None;
        }
        let (op, prec): (&'static str, u8) = match t.text {
            "||" => ("||", 1),
            "&&" => ("&&", 2),
            "|" => ("|", 3),
            "^" => ("^", 4),
            "&" => ("&", 5),
            "==" => ("==", 6),
            "!=" => ("!=", 6),
            "<" => ("<", 7),
            "<=" => ("<=", 7),
            "<<" => ("<<", 8),
            "+" => ("+", 9),
            "-" => ("-", 9),
            "*" => ("*", 10),
            "/" => ("/", 10),
            "%" => ("%", 10),
            _ => return None,
        };
        Some((op, prec, 1))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Node> {
        let start = self.pos;
        let mut lhs = self.unary()?;
        while let Some((op, prec, n)) = self.binary_operator() {
            if prec < min_prec {
                break;
            }
            self.pos += n;
            if op == "instanceof" {
                let final_mod = self.modifiers()?;
                let ty = self.parse_type()?;
                let mut children = vec![lhs, ty];
                children.extend(final_mod);
                if self.at_ident() && !self.at_ident_text("when") {
                    let t = self.bump();
                    children.push(self.leaf(Kind::Identifier, &t));
                }
                lhs = self.finish_at(Kind::InstanceOf, start, None, children);
                continue;
            }
            let rhs = self.binary(prec + 1)?;
            lhs = self.finish_at(Kind::Binary, start, Some(op.to_string()), vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Node> {
        self.enter()?;
        let r = self.unary_inner();
        self.leave();
        r
    }

    fn unary_inner(&mut self) -> PResult<Node> {
        let start = self.pos;
        let Some(t) = self.peek().copied() else {
            return self.error("expression");
        };
        if t.kind == TokenKind::Op {
            match t.text {
                "+" | "-" | "!" | "~" => {
                    self.bump();
                    let operand = self.unary()?;
                    return Ok(self.finish_at(Kind::Unary, start, Some(t.text.to_string()), vec![operand]));
                }
                "++" | "--" => {
                    self.bump();
                    let operand = self.unary()?;
                    return Ok(self.finish_at(
                        Kind::PrefixUpdate,
                        start,
                        Some(t.text.to_string()),
                        vec![operand],
                    ));
                }
                "(" => {
                    if let Some(cast) = self.try_cast()? {
                        return Ok(cast);
                    }
                }
                _ => {}
            }
        }
        let mut e = self.postfix()?;
        while self.at_op("++") || self.at_op("--") {
            let op = self.bump().text.to_string();
            e = self.finish_at(Kind::PostfixUpdate, start, Some(op), vec![e]);
        }
        Ok(e)
    }

    fn try_cast(&mut self) -> PResult<Option<Node>> {
        let start = self.pos;
        let Some((ty, primitive)) = self.speculate(|p| {
            p.expect_op("(")?;
            let first = p.peek().copied();
            let ty = p.parse_type()?;
            while p.eat_op("&") {
                p.parse_type()?;
            }
            p.expect_op(")")?;
            let primitive = first.is_some_and(|t| t.kind == TokenKind::Keyword) && !ty.text().contains('<');
            Ok((ty, primitive))
        }) else {
            return Ok(None);
        };
        let operand_follows = self.peek().is_some_and(|t| {
            t.is_ident()
                || t.is_literal()
                || t.is_op("(")
                || t.is_op("!")
                || t.is_op("~")
                || t.is_kw("this")
                || t.is_kw("super")
                || t.is_kw("new")
                || t.is_kw("switch")
                || (t.kind == TokenKind::Keyword && PRIMITIVES.contains(&t.text))
        });
        if primitive {
            let operand = self.unary()?;
            return Ok(Some(self.finish_at(Kind::Cast, start, None, vec![ty, operand])));
        }
        if operand_follows {
            let operand = if self.lambda_ahead() { self.lambda()? } else { self.unary()? };
            return Ok(Some(self.finish_at(Kind::Cast, start, None, vec![ty, operand])));
        }
        self.pos = start;
        Ok(None)
    }

    fn arguments(&mut self) -> PResult<Node> {
        let start = self.pos;
        self.expect_op("(")?;
        let mut args = Vec::new();
        if !self.at_op(")") {
            loop {
                args.push(self.expression()?);
                if !self.eat_op(",") {
                    break;
                }
            }
        }
        self.expect_op(")")?;
        Ok(self.finish_at(Kind::ArgumentList, start, None, args))
    }

    fn primary(&mut self) -> PResult<Node> {
        let start = self.pos;
        let Some(t) = self.peek().copied() else {
            return self.error("expression");
        };
        if t.is_literal() {
            self.bump();
            return Ok(self.leaf(Kind::Literal, &t));
        }
        if t.is_ident() {
            self.bump();
            if self.at_op("(") {
                let args = self.arguments()?;
                return Ok(self.finish_at(Kind::MethodInvocation, start, Some(t.text.to_string()), vec![args]));
            }
            return Ok(self.leaf(Kind::Identifier, &t));
        }
        if t.kind == TokenKind::Keyword {
            match t.text {
                "this" => {
                    self.bump();
                    return Ok(self.leaf(Kind::This, &t));
                }
                "super" => {
                    self.bump();
                    return Ok(self.leaf(Kind::Super, &t));
                }
                "new" => return self.creation(None),
                "switch" => {
                    self.bump();
                    let subject = self.par_expression()?;
                    let block = self.switch_block()?;
                    return Ok(self.finish_at(Kind::SwitchExpression, start, None, vec![subject, block]));
                }
                p if PRIMITIVES.contains(&p) => {
                    let ty = self.parse_type()?;
                    if self.at_op(".") && self.peek_at(1).is_some_and(|t| t.is_kw("class")) {
                        self.pos += 2;
                        return Ok(self.finish_at(Kind::ClassLiteral, start, None, vec![ty]));
                    }
                    if self.eat_op("::") {
                        let name = if self.eat_kw("new") { "new".to_string() } else { self.expect_ident()?.text.to_string() };
                        return Ok(self.finish_at(Kind::MethodReference, start, Some(name), vec![ty]));
                    }
                    return self.error("`.class` or `::`");
                }
                _ => {}
            }
        }
        if t.is_op("(") {
            self.bump();
            let e = self.expression()?;
            self.expect_op(")")?;
            return Ok(self.finish_at(Kind::Parenthesized, start, None, vec![e]));
        }
        self.error("expression")
    }

    fn creation(&mut self, outer: Option<Node>) -> PResult<Node> {
        let start = match &outer {
            Some(_) => self.pos.saturating_sub(2),
            None => self.pos,
        };
        let start = if outer.is_some() {
            // `outer.new Inner()` starts at the receiver
            self.toks
                .iter()
                .position(|t| t.start == outer.as_ref().map_or(0, |o| o.start))
                .unwrap_or(start)
        } else {
            start
        };
        if !self.eat_kw("new") {
            return self.error("`new`");
        }
        if self.at_op("<") {
            self.type_arguments()?;
        }
        let ty_start = self.pos;
        let mut ty_tokens_ok = false;
        // base type without dimensions
        while self.at_op("@") {
            self.annotation()?;
        }
        match self.peek() {
            Some(t) if t.kind == TokenKind::Keyword && PRIMITIVES.contains(&t.text) => {
                self.bump();
                ty_tokens_ok = true;
            }
            Some(t) if t.is_ident() => {
                self.bump();
                if self.at_op("<") {
                    self.type_arguments()?;
                }
                while self.at_op(".") && self.peek_at(1).is_some_and(|t| t.is_ident() || t.is_op("@")) {
                    self.bump();
                    while self.at_op("@") {
                        self.annotation()?;
                    }
                    self.expect_ident()?;
                    if self.at_op("<") {
                        self.type_arguments()?;
                    }
                }
                ty_tokens_ok = true;
            }
            _ => {}
        }
        if !ty_tokens_ok {
            return self.error("type after `new`");
        }
        let ty_text = self.compact_text(ty_start);
        let ty = self.finish_at(Kind::Type, ty_start, Some(ty_text), Vec::new());
        if self.at_op("[") {
            let mut children = vec![ty];
            while self.at_op("[") {
                let dstart = self.pos;
                self.bump();
                if self.eat_op("]") {
                    continue;
                }
                let e = self.expression()?;
                self.expect_op("]")?;
                children.push(self.finish_at(Kind::DimExpr, dstart, None, vec![e]));
            }
            if self.at_op("{") {
                children.push(self.array_initializer()?);
            }
            return Ok(self.finish_at(Kind::ArrayCreation, start, None, children));
        }
        let mut children: Vec<Node> = outer.into_iter().collect();
        children.push(ty);
        children.push(self.arguments()?);
        if self.at_op("{") {
            children.push(self.class_body("")?);
        }
        Ok(self.finish_at(Kind::ObjectCreation, start, None, children))
    }

    fn postfix(&mut self) -> PResult<Node> {
        let start = self.pos;
        let mut e = self.primary()?;
        loop {
            if self.at_op(".") {
                self.bump();
                let Some(t) = self.peek().copied() else {
                    return self.error("member name");
                };
                if t.is_kw("new") {
                    e = self.creation(Some(e))?;
                } else if t.is_kw("this") {
                    self.bump();
                    e = self.finish_at(Kind::This, start, Some(format!("{}.this", e.text())), vec![e]);
                } else if t.is_kw("class") {
                    self.bump();
                    e = self.finish_at(Kind::ClassLiteral, start, None, vec![e]);
                } else if t.is_kw("super") {
                    self.bump();
                    e = self.finish_at(Kind::Super, start, Some("super".into()), vec![e]);
                } else if t.is_op("<") {
                    self.type_arguments()?;
                    let name = self.expect_ident()?.text.to_string();
                    let args = self.arguments()?;
                    e = self.finish_at(Kind::MethodInvocation, start, Some(name), vec![e, args]);
                } else if t.is_ident() {
                    self.bump();
                    if self.at_op("(") {
                        let args = self.arguments()?;
                        e = self.finish_at(Kind::MethodInvocation, start, Some(t.text.to_string()), vec![e, args]);
                    } else {
                        e = self.finish_at(Kind::FieldAccess, start, Some(t.text.to_string()), vec![e]);
                    }
                } else {
                    return self.error("member name");
                }
            } else if self.at_op("[") {
                if self.at_op_n(1, "]") {
                    // array type in expression position: `Foo[]::new`, `Foo[].class`
                    while self.at_op("[") && self.at_op_n(1, "]") {
                        self.pos += 2;
                    }
                    continue;
                }
                self.bump();
                let idx = self.expression()?;
                self.expect_op("]")?;
                e = self.finish_at(Kind::ArrayAccess, start, None, vec![e, idx]);
            } else if self.at_op("::") {
                self.bump();
                let name = if self.eat_kw("new") {
                    "new".to_string()
                } else {
                    self.expect_ident()?.text.to_string()
                };
                e = self.finish_at(Kind::MethodReference, start, Some(name), vec![e]);
            } else if self.at_op("<") && e.kind == Kind::Identifier && self.generic_reference_ahead() {
                // `List<String>::new`
                self.type_arguments()?;
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn generic_reference_ahead(&self) -> bool {
        let save_depth = {
            let mut depth = 0i32;
            let mut i = self.pos;
            loop {
                let Some(t) = self.toks.get(i) else { return false };
                if t.is_op("<") {
                    depth += 1;
                } else if t.is_op(">") {
                    depth -= 1;
                    if depth == 0 {
                        break i + 1;
                    }
                } else if !(t.is_ident() || t.is_op(",") || t.is_op(".") || t.is_op("?") || t.is_op("[") || t.is_op("]") || t.kind == TokenKind::Keyword) {
                    return false;
                }
                i += 1;
            }
        };
        self.toks.get(save_depth).is_some_and(|t| t.is_op("::"))
    }
}
