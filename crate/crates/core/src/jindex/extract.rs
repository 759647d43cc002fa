//! Per-file extraction of declarations and invocation sites.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{MethodId, MethodNode};
use crate::java::{parse_compilation_unit, Kind, Node};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeInfo {
    /// Package-qualified name with `$` between nested types.
    pub fqn: String,
    pub package: String,
    /// Supertype names as written, generics stripped.
    pub supertypes: Vec<String>,
    pub file_path: String,
}

impl TypeInfo {
    pub fn dotted(&self) -> String {
        self.fqn.replace('$', ".")
    }

    pub fn simple(&self) -> &str {
        self.fqn.rsplit(['.', '$']).next().unwrap_or(&self.fqn)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvocationSite {
    pub caller: MethodId,
    pub callee: String,
    pub argc: u32,
    /// Static type the receiver is known to have, as written in source.
    pub hint: Option<String>,
    pub line: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedFile {
    pub path: String,
    pub package: String,
    pub imports: Vec<String>,
    pub types: Vec<TypeInfo>,
    pub methods: Vec<MethodNode>,
    pub sites: Vec<InvocationSite>,
    pub syntax_errors: usize,
    pub skipped: bool,
}

/// Strips generic arguments, array brackets and annotations from a type.
pub(crate) fn normalize_type(text: &str) -> String {
    let mut out = String::new();
    let mut depth = 0usize;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '<' => depth += 1,
            '>' => depth = depth.saturating_sub(1),
            '@' if depth == 0 => {
                while chars.peek().is_some_and(|c| c.is_alphanumeric() || *c == '.' || *c == '_') {
                    chars.next();
                }
            }
            _ if depth > 0 => {}
            '[' | ']' => {}
            c if c.is_whitespace() => {}
            c => out.push(c),
        }
    }
    out.trim_end_matches("...").trim_matches('.').to_string()
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

struct TypeCtx {
    fqn: String,
    /// Name relative to the package, dotted (`Graph.Builder`).
    local_name: String,
    superclass: Option<String>,
    fields: HashMap<String, String>,
}

struct FileWalker<'s> {
    src: &'s str,
    path: String,
    package: String,
    comments: Vec<(usize, usize)>,
    out: ParsedFile,
}

/// Parses one Java source file. A file whose syntax cannot be recovered at
/// all is marked skipped; otherwise recovered declarations are kept.
pub fn parse_file(path: &str, source: &str) -> ParsedFile {
    let result = parse_compilation_unit(source);
    let mut walker = FileWalker {
        src: source,
        path: path.to_string(),
        package: String::new(),
        comments: result.comments.iter().map(|c| (c.start, c.end)).collect(),
        out: ParsedFile {
            path: path.to_string(),
            syntax_errors: result.errors.len(),
            ..ParsedFile::default()
        },
    };
    if result.root.kind == Kind::Error {
        log::warn!("{path}: unparseable, skipped ({} errors)", result.errors.len());
        walker.out.skipped = true;
        return walker.out;
    }
    if !result.errors.is_empty() {
        log::debug!("{path}: {} syntax errors recovered", result.errors.len());
    }
    for item in &result.root.children {
        match item.kind {
            Kind::PackageDecl => walker.package = item.text().to_string(),
            Kind::ImportDecl => walker.out.imports.push(item.text().to_string()),
            _ => {}
        }
    }
    walker.out.package = walker.package.clone();
    for item in &result.root.children {
        if item.kind.is_type_decl() {
            walker.visit_type(item, None);
        }
    }
    walker.out
}

impl FileWalker<'_> {
    fn visit_type(&mut self, decl: &Node, outer: Option<&TypeCtx>) {
        let name = decl.text();
        let (fqn, local_name) = match outer {
            Some(o) => (format!("{}${name}", o.fqn), format!("{}.{name}", o.local_name)),
            None if self.package.is_empty() => (name.to_string(), name.to_string()),
            None => (format!("{}.{name}", self.package), name.to_string()),
        };
        let mut supertypes = Vec::new();
        let mut superclass = None;
        for clause in &decl.children {
            if matches!(clause.kind, Kind::Superclass | Kind::SuperInterfaces) {
                for ty in clause.children_of(Kind::Type) {
                    let t = normalize_type(ty.text());
                    if clause.kind == Kind::Superclass && decl.kind == Kind::ClassDecl {
                        superclass = Some(t.clone());
                    }
                    supertypes.push(t);
                }
            }
        }
        self.out.types.push(TypeInfo {
            fqn: fqn.clone(),
            package: self.package.clone(),
            supertypes,
            file_path: self.path.clone(),
        });
        let Some(body) = decl.child(Kind::ClassBody) else {
            return;
        };
        let mut fields = outer.map(|o| o.fields.clone()).unwrap_or_default();
        let mut record_arity = 0;
        if let Some(params) = decl.child(Kind::FormalParameters) {
            record_arity = params.children.len() as u32;
            for p in &params.children {
                if let Some(ty) = p.child(Kind::Type) {
                    fields.insert(p.text().to_string(), normalize_type(ty.text()));
                }
            }
        }
        for member in &body.children {
            match member.kind {
                Kind::FieldDecl => {
                    if let Some(ty) = member.child(Kind::Type) {
                        let ty = normalize_type(ty.text());
                        for d in member.children_of(Kind::VariableDeclarator) {
                            fields.insert(d.text().to_string(), ty.clone());
                        }
                    }
                }
                Kind::EnumConstant => {
                    fields.insert(member.text().to_string(), local_name.clone());
                }
                _ => {}
            }
        }
        let ctx = TypeCtx {
            fqn,
            local_name,
            superclass,
            fields,
        };
        for member in &body.children {
            match member.kind {
                Kind::MethodDecl | Kind::ConstructorDecl | Kind::CompactConstructorDecl => {
                    self.visit_method(member, &ctx, record_arity)
                }
                k if k.is_type_decl() => self.visit_type(member, Some(&ctx)),
                _ => {}
            }
        }
    }

    fn leading_comment(&self, start: usize) -> Option<String> {
        let (cs, ce) = self
            .comments
            .iter()
            .rev()
            .find(|(_, e)| *e <= start)
            .copied()?;
        self.src[ce..start]
            .trim()
            .is_empty()
            .then(|| self.src[cs..ce].to_string())
    }

    fn visit_method(&mut self, decl: &Node, ctx: &TypeCtx, record_arity: u32) {
        let name = match decl.kind {
            Kind::MethodDecl => decl.text().to_string(),
            _ => "<init>".to_string(),
        };
        let mut scope: HashMap<String, String> = HashMap::new();
        let (arity, varargs) = match decl.child(Kind::FormalParameters) {
            Some(params) => {
                let mut n = 0;
                let mut varargs = false;
                for p in &params.children {
                    match p.kind {
                        Kind::FormalParameter | Kind::SpreadParameter => {
                            n += 1;
                            varargs |= p.kind == Kind::SpreadParameter;
                            if let Some(ty) = p.child(Kind::Type) {
                                scope.insert(p.text().to_string(), normalize_type(ty.text()));
                            }
                        }
                        _ => {}
                    }
                }
                (n, varargs)
            }
            None => (record_arity, false),
        };
        let id = MethodId::new(&ctx.fqn, &name, arity, &self.path);
        let body = decl
            .children
            .iter()
            .find(|c| matches!(c.kind, Kind::Block | Kind::Error));
        if let Some(body) = body {
            collect_locals(body, &mut scope);
            let mut sites = Vec::new();
            collect_sites(body, ctx, &scope, &id, &mut sites);
            self.out.sites.extend(sites);
        }
        let node = MethodNode {
            id,
            body_text: decl.source(self.src).to_string(),
            span: (decl.line, decl.end_line),
            doc_text: self.leading_comment(decl.start),
            varargs,
            extra_spans: Vec::new(),
        };
        // same-arity overloads collapse into one node
        if let Some(existing) = self.out.methods.iter_mut().find(|m| m.id == node.id) {
            existing.body_text.push_str("\n\n");
            existing.body_text.push_str(&node.body_text);
            existing.extra_spans.push(node.span);
            existing.varargs |= node.varargs;
        } else {
            self.out.methods.push(node);
        }
    }
}

fn collect_locals(node: &Node, scope: &mut HashMap<String, String>) {
    node.walk(&mut |n| match n.kind {
        Kind::LocalVarDecl | Kind::Resource => {
            if let Some(ty) = n.child(Kind::Type) {
                let ty = normalize_type(ty.text());
                for d in n.children_of(Kind::VariableDeclarator) {
                    scope.entry(d.text().to_string()).or_insert_with(|| ty.clone());
                }
            }
        }
        Kind::EnhancedFor | Kind::FormalParameter | Kind::SpreadParameter | Kind::CatchParameter | Kind::Pattern => {
            if let Some(ty) = n.child(Kind::Type) {
                let name = match n.kind {
                    Kind::EnhancedFor => n.child(Kind::VariableDeclarator).map(|d| d.text()),
                    _ => Some(n.text()),
                };
                if let Some(name) = name {
                    scope.entry(name.to_string()).or_insert_with(|| normalize_type(ty.text()));
                }
            }
        }
        Kind::InstanceOf => {
            if let (Some(ty), Some(binding)) = (n.child(Kind::Type), n.child(Kind::Identifier)) {
                scope
                    .entry(binding.text().to_string())
                    .or_insert_with(|| normalize_type(ty.text()));
            }
        }
        _ => {}
    });
}

/// Dotted name chain (`a.b.C`) when `n` is built only from identifiers.
fn name_chain(n: &Node) -> Option<String> {
    match n.kind {
        Kind::Identifier => Some(n.text().to_string()),
        Kind::FieldAccess => {
            let base = name_chain(n.children.first()?)?;
            Some(format!("{base}.{}", n.text()))
        }
        _ => None,
    }
}

fn receiver_hint(recv: &Node, ctx: &TypeCtx, scope: &HashMap<String, String>) -> Option<String> {
    match recv.kind {
        Kind::This => match recv.children.first() {
            Some(qualifier) => name_chain(qualifier),
            None => Some(ctx.local_name.clone()),
        },
        Kind::Super => match recv.children.first() {
            Some(qualifier) => name_chain(qualifier),
            None => ctx.superclass.clone(),
        },
        Kind::Identifier => {
            let name = recv.text();
            scope
                .get(name)
                .or_else(|| ctx.fields.get(name))
                .cloned()
                .or_else(|| starts_upper(name).then(|| name.to_string()))
        }
        Kind::FieldAccess => {
            let base = recv.children.first()?;
            if base.kind == Kind::This && base.children.is_empty() {
                return ctx.fields.get(recv.text()).cloned();
            }
            let chain = name_chain(recv)?;
            let first = chain.split('.').next().unwrap_or("");
            let last = chain.rsplit('.').next().unwrap_or("");
            let is_variable = scope.contains_key(first) || ctx.fields.contains_key(first);
            (!is_variable && starts_upper(last)).then_some(chain)
        }
        Kind::ObjectCreation => recv
            .child(Kind::Type)
            .map(|t| normalize_type(t.text())),
        Kind::Cast => recv.child(Kind::Type).map(|t| normalize_type(t.text())),
        Kind::Parenthesized => receiver_hint(recv.children.first()?, ctx, scope),
        Kind::Literal if recv.text().starts_with('"') => Some("String".into()),
        _ => None,
    }
}

fn argc(args: Option<&Node>) -> u32 {
    args.map_or(0, |a| a.children.len() as u32)
}

fn collect_sites(
    node: &Node,
    ctx: &TypeCtx,
    scope: &HashMap<String, String>,
    caller: &MethodId,
    out: &mut Vec<InvocationSite>,
) {
    let mut push = |callee: &str, argc: u32, hint: Option<String>, line: u32| {
        out.push(InvocationSite {
            caller: caller.clone(),
            callee: callee.to_string(),
            argc,
            hint,
            line,
        })
    };
    match node.kind {
        Kind::MethodInvocation => {
            let args = node.child(Kind::ArgumentList);
            let hint = if node.children.len() >= 2 {
                receiver_hint(&node.children[0], ctx, scope)
            } else {
                None
            };
            push(node.text(), argc(args), hint, node.line);
        }
        Kind::ObjectCreation => {
            let hint = node.child(Kind::Type).map(|t| normalize_type(t.text()));
            push("<init>", argc(node.child(Kind::ArgumentList)), hint, node.line);
        }
        Kind::ExplicitConstructorInvocation => {
            let hint = if node.text() == "this" {
                Some(ctx.local_name.clone())
            } else {
                ctx.superclass.clone()
            };
            push("<init>", argc(node.child(Kind::ArgumentList)), hint, node.line);
        }
        _ => {}
    }
    for child in &node.children {
        collect_sites(child, ctx, scope, caller, out);
    }
}
