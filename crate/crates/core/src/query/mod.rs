//! Boolean queries: parsing, canonical rendering and structure-preserving
//! expansion with mapped terms.
//!
//! Grammar (operators are case-insensitive, precedence `NOT > AND > OR`):
//!
//! ```text
//! or      := and ("OR" and)*
//! and     := unary ("AND"? unary)*      adjacent terms are an implicit AND
//! unary   := "NOT" unary | primary
//! primary := "(" or ")" | '"' text '"' | word
//! ```
//!
//! Inside quotes `\"` and `\\` escape a quote and a backslash.

mod expand;
mod parser;

use std::fmt;

pub use expand::{expand_query, ExpansionConfig, ExpansionTrace, LeafTrace, TraceEntry};
pub use parser::parse_query;

use crate::error::Result;
use crate::registry::normalize_term;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueryAst {
    /// A single normalized word.
    Term(String),
    /// Normalized text of two or more words.
    Phrase(String),
    And(Vec<QueryAst>),
    Or(Vec<QueryAst>),
    Not(Box<QueryAst>),
}

impl QueryAst {
    /// Builds a leaf from raw text; multi-word text becomes a phrase.
    pub fn leaf(raw: &str) -> Result<Self> {
        let text = normalize_term(raw)?;
        Ok(if text.contains(' ') {
            QueryAst::Phrase(text)
        } else {
            QueryAst::Term(text)
        })
    }

    pub fn leaf_text(&self) -> Option<&str> {
        match self {
            QueryAst::Term(t) | QueryAst::Phrase(t) => Some(t),
            _ => None,
        }
    }

    pub fn negate(child: QueryAst) -> Self {
        QueryAst::Not(Box::new(child))
    }

    /// Canonical text: upper-case operators, every composite node in
    /// parentheses, every leaf quoted.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out);
        out
    }

    fn render_into(&self, out: &mut String) {
        match self {
            QueryAst::Term(t) | QueryAst::Phrase(t) => {
                out.push('"');
                for c in t.chars() {
                    if c == '"' || c == '\\' {
                        out.push('\\');
                    }
                    out.push(c);
                }
                out.push('"');
            }
            QueryAst::And(children) | QueryAst::Or(children) => {
                let op = if matches!(self, QueryAst::And(_)) {
                    " AND "
                } else {
                    " OR "
                };
                out.push('(');
                for (i, child) in children.iter().enumerate() {
                    if i > 0 {
                        out.push_str(op);
                    }
                    child.render_into(out);
                }
                out.push(')');
            }
            QueryAst::Not(child) => {
                out.push_str("(NOT ");
                child.render_into(out);
                out.push(')');
            }
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&QueryAst> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a QueryAst>) {
        match self {
            QueryAst::Term(_) | QueryAst::Phrase(_) => out.push(self),
            QueryAst::And(cs) | QueryAst::Or(cs) => cs.iter().for_each(|c| c.collect_leaves(out)),
            QueryAst::Not(c) => c.collect_leaves(out),
        }
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Canonical form of a query AST.
pub fn render_query(ast: &QueryAst) -> String {
    ast.render()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(s: &str) -> QueryAst {
        QueryAst::leaf(s).unwrap()
    }

    #[test]
    fn render_examples() {
        let ast = QueryAst::And(vec![
            QueryAst::Or(vec![t("hacker"), t("hacking")]),
            t("security"),
        ]);
        assert_eq!(ast.render(), r#"(("hacker" OR "hacking") AND "security")"#);
        assert_eq!(t("hacker").render(), r#""hacker""#);
        assert_eq!(QueryAst::negate(t("crime")).render(), r#"(NOT "crime")"#);
        assert_eq!(t(r#"say "hi"\"#).render(), r#""say \"hi\"\\""#);
    }

    #[test]
    fn leaf_kind_follows_word_count() {
        assert_eq!(t("Hacker"), QueryAst::Term("hacker".into()));
        assert_eq!(t(" Social   Work "), QueryAst::Phrase("social work".into()));
        assert!(QueryAst::leaf("  ").is_err());
    }

    /// Random ASTs up to `depth` levels of composite nodes.
    pub(crate) fn arb_ast(depth: u32) -> impl Strategy<Value = QueryAst> {
        let leaf = prop_oneof![
            "[a-zäöü0-9_+\\-*.'/\\\\\"]{1,6}".prop_map(QueryAst::Term),
            "[a-z]{1,5}( [a-z()\"]{1,5}){1,2}".prop_map(QueryAst::Phrase),
            // words that would read as operators unless quoted
            prop::sample::select(vec!["and", "or", "not"]).prop_map(|w| QueryAst::Term(w.into())),
        ];
        leaf.prop_recursive(depth, 64, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(QueryAst::And),
                prop::collection::vec(inner.clone(), 2..4).prop_map(QueryAst::Or),
                inner.prop_map(QueryAst::negate),
            ]
        })
    }

    proptest! {
        #[test]
        fn parse_render_identity(ast in arb_ast(6)) {
            let rendered = ast.render();
            let parsed = parse_query(&rendered).unwrap();
            prop_assert_eq!(parsed, ast);
        }
    }
}
