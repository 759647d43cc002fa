//! Method declarations, invocation sites and the static call graph.

mod extract;
mod graph;
mod tree;

pub use extract::{parse_file, InvocationSite, ParsedFile, TypeInfo};
pub use graph::{build_call_graph, map_frame, normalize_class, BuildStats, CallGraph};
pub use tree::{is_excluded, java_files, parse_tree};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Identity of a method within one snapshot. Field order is the sort order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MethodId {
    pub class_fqn: String,
    pub method_name: String,
    pub arity: u32,
    pub file_path: String,
}

impl MethodId {
    pub fn new(class_fqn: &str, method_name: &str, arity: u32, file_path: &str) -> Self {
        Self {
            class_fqn: class_fqn.to_string(),
            method_name: method_name.to_string(),
            arity,
            file_path: file_path.to_string(),
        }
    }

    /// `class_fqn#method_name`, the form used in report locations.
    pub fn location(&self) -> String {
        format!("{}#{}", self.class_fqn, self.method_name)
    }

    pub fn simple_class(&self) -> &str {
        self.class_fqn
            .rsplit(['.', '$'])
            .next()
            .unwrap_or(&self.class_fqn)
    }

    pub fn package(&self) -> &str {
        let outer = self.class_fqn.split('$').next().unwrap_or("");
        outer.rsplit_once('.').map_or("", |(p, _)| p)
    }
}

/// `a.b.C$D#name/2@src/a/b/C.java`
impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}#{}/{}@{}",
            self.class_fqn, self.method_name, self.arity, self.file_path
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a method id: {0:?}")]
pub struct MethodIdParseError(pub String);

impl FromStr for MethodId {
    type Err = MethodIdParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || MethodIdParseError(s.to_string());
        let (class_fqn, rest) = s.split_once('#').ok_or_else(err)?;
        let (name_arity, file_path) = rest.split_once('@').ok_or_else(err)?;
        let (method_name, arity) = name_arity.rsplit_once('/').ok_or_else(err)?;
        let arity = arity.parse().map_err(|_| err())?;
        if class_fqn.is_empty() || method_name.is_empty() || file_path.is_empty() {
            return Err(err());
        }
        Ok(MethodId::new(class_fqn, method_name, arity, file_path))
    }
}

/// Checks the `class_fqn#method_name` location syntax.
pub fn is_valid_location(s: &str) -> bool {
    let Some((class, method)) = s.split_once('#') else {
        return false;
    };
    let ident = |t: &str| {
        let mut chars = t.chars();
        chars
            .next()
            .is_some_and(|c| c.is_alphabetic() || c == '_' || c == '$')
            && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
    };
    !class.is_empty()
        && class.split('.').all(ident)
        && (method == "<init>" || method == "<clinit>" || ident(method))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodNode {
    pub id: MethodId,
    pub body_text: String,
    pub span: (u32, u32),
    pub doc_text: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub varargs: bool,
    /// Spans of further same-arity overloads merged into this node.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_spans: Vec<(u32, u32)>,
}

impl MethodNode {
    pub fn contains_line(&self, line: u32) -> bool {
        std::iter::once(&self.span)
            .chain(&self.extra_spans)
            .any(|&(s, e)| s <= line && line <= e)
    }

    /// True when a call with `argc` arguments can bind to this method.
    pub fn accepts(&self, argc: u32) -> bool {
        if self.varargs {
            argc + 1 >= self.id.arity
        } else {
            argc == self.id.arity
        }
    }
}
