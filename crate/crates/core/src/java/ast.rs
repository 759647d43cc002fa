use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Program,
    PackageDecl,
    ImportDecl,
    ClassDecl,
    InterfaceDecl,
    EnumDecl,
    RecordDecl,
    AnnotationTypeDecl,
    ClassBody,
    EnumConstant,
    FieldDecl,
    MethodDecl,
    ConstructorDecl,
    CompactConstructorDecl,
    InitializerBlock,
    FormalParameters,
    FormalParameter,
    SpreadParameter,
    ReceiverParameter,
    Modifiers,
    Annotation,
    Type,
    TypeParameters,
    Superclass,
    SuperInterfaces,
    Throws,
    Block,
    LocalVarDecl,
    VariableDeclarator,
    ExpressionStatement,
    If,
    For,
    EnhancedFor,
    While,
    Do,
    Try,
    ResourceSpec,
    Resource,
    CatchClause,
    CatchParameter,
    Finally,
    SwitchStatement,
    SwitchExpression,
    SwitchBlock,
    SwitchGroup,
    SwitchRule,
    SwitchLabel,
    Return,
    Throw,
    Break,
    Continue,
    Yield,
    Synchronized,
    Labeled,
    Assert,
    Empty,
    ExplicitConstructorInvocation,
    Assignment,
    Ternary,
    Lambda,
    LambdaParams,
    Binary,
    InstanceOf,
    Unary,
    PrefixUpdate,
    PostfixUpdate,
    Cast,
    Parenthesized,
    Literal,
    Identifier,
    This,
    Super,
    FieldAccess,
    ArrayAccess,
    MethodInvocation,
    ArgumentList,
    ObjectCreation,
    ArrayCreation,
    ArrayInitializer,
    DimExpr,
    MethodReference,
    ClassLiteral,
    Pattern,
    Error,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        use Kind::*;
        match self {
            Program => "program",
            PackageDecl => "package_declaration",
            ImportDecl => "import_declaration",
            ClassDecl => "class_declaration",
            InterfaceDecl => "interface_declaration",
            EnumDecl => "enum_declaration",
            RecordDecl => "record_declaration",
            AnnotationTypeDecl => "annotation_type_declaration",
            ClassBody => "class_body",
            EnumConstant => "enum_constant",
            FieldDecl => "field_declaration",
            MethodDecl => "method_declaration",
            ConstructorDecl => "constructor_declaration",
            CompactConstructorDecl => "compact_constructor_declaration",
            InitializerBlock => "initializer_block",
            FormalParameters => "formal_parameters",
            FormalParameter => "formal_parameter",
            SpreadParameter => "spread_parameter",
            ReceiverParameter => "receiver_parameter",
            Modifiers => "modifiers",
            Annotation => "annotation",
            Type => "type",
            TypeParameters => "type_parameters",
            Superclass => "superclass",
            SuperInterfaces => "super_interfaces",
            Throws => "throws",
            Block => "block",
            LocalVarDecl => "local_variable_declaration",
            VariableDeclarator => "variable_declarator",
            ExpressionStatement => "expression_statement",
            If => "if_statement",
            For => "for_statement",
            EnhancedFor => "enhanced_for_statement",
            While => "while_statement",
            Do => "do_statement",
            Try => "try_statement",
            ResourceSpec => "resource_specification",
            Resource => "resource",
            CatchClause => "catch_clause",
            CatchParameter => "catch_formal_parameter",
            Finally => "finally_clause",
            SwitchStatement => "switch_statement",
            SwitchExpression => "switch_expression",
            SwitchBlock => "switch_block",
            SwitchGroup => "switch_block_statement_group",
            SwitchRule => "switch_rule",
            SwitchLabel => "switch_label",
            Return => "return_statement",
            Throw => "throw_statement",
            Break => "break_statement",
            Continue => "continue_statement",
            Yield => "yield_statement",
            Synchronized => "synchronized_statement",
            Labeled => "labeled_statement",
            Assert => "assert_statement",
            Empty => "empty_statement",
            ExplicitConstructorInvocation => "explicit_constructor_invocation",
            Assignment => "assignment_expression",
            Ternary => "ternary_expression",
            Lambda => "lambda_expression",
            LambdaParams => "inferred_parameters",
            Binary => "binary_expression",
            InstanceOf => "instanceof_expression",
            Unary => "unary_expression",
            PrefixUpdate | PostfixUpdate => "update_expression",
            Cast => "cast_expression",
            Parenthesized => "parenthesized_expression",
            Literal => "literal",
            Identifier => "identifier",
            This => "this",
            Super => "super",
            FieldAccess => "field_access",
            ArrayAccess => "array_access",
            MethodInvocation => "method_invocation",
            ArgumentList => "argument_list",
            ObjectCreation => "object_creation_expression",
            ArrayCreation => "array_creation_expression",
            ArrayInitializer => "array_initializer",
            DimExpr => "dimensions_expr",
            MethodReference => "method_reference",
            ClassLiteral => "class_literal",
            Pattern => "pattern",
            Error => "ERROR",
        }
    }

    pub fn is_type_decl(self) -> bool {
        matches!(
            self,
            Kind::ClassDecl
                | Kind::InterfaceDecl
                | Kind::EnumDecl
                | Kind::RecordDecl
                | Kind::AnnotationTypeDecl
        )
    }
}

/// A syntax tree node. `text` carries the name for declarations and
/// invocations, the operator for operator expressions, and the source
/// text for leaves (identifiers, literals, types).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub kind: Kind,
    pub text: Option<String>,
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub end_line: u32,
    pub children: Vec<Node>,
}

impl Node {
    pub fn text(&self) -> &str {
        self.text.as_deref().unwrap_or("")
    }

    pub fn child(&self, kind: Kind) -> Option<&Node> {
        self.children.iter().find(|c| c.kind == kind)
    }

    pub fn children_of(&self, kind: Kind) -> impl Iterator<Item = &Node> {
        self.children.iter().filter(move |c| c.kind == kind)
    }

    pub fn source<'s>(&self, src: &'s str) -> &'s str {
        &src[self.start..self.end]
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Pre-order traversal.
    pub fn walk<'n>(&'n self, f: &mut impl FnMut(&'n Node)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    pub fn contains_error(&self) -> bool {
        let mut found = false;
        self.walk(&mut |n| found |= n.kind == Kind::Error);
        found
    }

    /// S-expression of node kinds only, mirroring tree-sitter's `sexp()`.
    pub fn sexp(&self) -> String {
        let mut out = String::new();
        self.write_sexp(&mut out);
        out
    }

    fn write_sexp(&self, out: &mut String) {
        let _ = write!(out, "({}", self.kind.as_str());
        for c in &self.children {
            out.push(' ');
            c.write_sexp(out);
        }
        out.push(')');
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(Node::height).max().unwrap_or(0)
    }
}
