//! ONTO-TXT v1, a line-based ontology format.
//!
//! ```text
//! concept <C>
//! isa <C> <P>
//! disjoint <C> <D>
//! objprop <p>
//! dataprop <p>
//! restrict <C> <p> (min|max|exactly) <n>
//! ind <i> <C>
//! rel <i> <p> <j>
//! data <i> <p> "<literal>"
//! ```
//!
//! `#` outside a literal starts a comment. Literals escape `\\`, `\"` and
//! `\n`; any other backslash is kept as is. Terms may be used before they
//! are declared; everything is validated once all sources are in.

use super::{Assertion, Bound, ConceptGraph, ConceptGraphBuilder, FactStore, OntologyError, Origin, PropertyKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    Word(String),
    Literal(String),
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn quote_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Reads a quoted literal at the start of `s`; returns the decoded text and
/// the number of bytes consumed.
pub(crate) fn scan_literal(s: &str) -> Result<(String, usize), String> {
    let mut chars = s.char_indices();
    match chars.next() {
        Some((_, '"')) => {}
        _ => return Err("expected a quoted literal".into()),
    }
    let mut out = String::new();
    while let Some((i, c)) = chars.next() {
        match c {
            '"' => return Ok((out, i + 1)),
            '\\' => match chars.clone().next() {
                Some((_, '\\')) => {
                    out.push('\\');
                    chars.next();
                }
                Some((_, '"')) => {
                    out.push('"');
                    chars.next();
                }
                Some((_, 'n')) => {
                    out.push('\n');
                    chars.next();
                }
                _ => out.push('\\'),
            },
            c => out.push(c),
        }
    }
    Err("unterminated literal".into())
}

/// Splits a line into words and quoted literals, dropping any comment.
pub(crate) fn tokenize(line: &str) -> Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let mut rest = line;
    loop {
        rest = rest.trim_start();
        if rest.is_empty() || rest.starts_with('#') {
            return Ok(tokens);
        }
        if rest.starts_with('"') {
            let (lit, used) = scan_literal(rest)?;
            tokens.push(Token::Literal(lit));
            rest = &rest[used..];
            if !(rest.is_empty() || rest.starts_with(char::is_whitespace) || rest.starts_with('#')) {
                return Err("literal must be followed by whitespace".into());
            }
        } else {
            let end = rest
                .find(|c: char| c.is_whitespace() || c == '#' || c == '"')
                .unwrap_or(rest.len());
            tokens.push(Token::Word(rest[..end].to_string()));
            rest = &rest[end..];
        }
    }
}

/// Collects ONTO-TXT sources and validates them together.
#[derive(Debug, Default)]
pub struct OntologyLoader {
    builder: ConceptGraphBuilder,
    facts: Vec<(Assertion, Origin)>,
}

impl OntologyLoader {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses one source. Only syntax is checked here.
    pub fn add_source(&mut self, source: &str, text: &[u8]) -> Result<&mut Self, OntologyError> {
        let text = std::str::from_utf8(text).map_err(|e| OntologyError::Parse {
            origin: Origin {
                source: source.to_string(),
                line: 1 + text[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count(),
            },
            message: "input is not valid UTF-8".into(),
        })?;
        for (i, line) in text.lines().enumerate() {
            let origin = Origin {
                source: source.to_string(),
                line: i + 1,
            };
            self.add_line(line, origin)?;
        }
        Ok(self)
    }

    fn add_line(&mut self, line: &str, origin: Origin) -> Result<(), OntologyError> {
        let fail = |message: String| OntologyError::Parse {
            origin: origin.clone(),
            message,
        };
        let tokens = tokenize(line).map_err(fail)?;
        let Some(Token::Word(directive)) = tokens.first() else {
            return if tokens.is_empty() {
                Ok(())
            } else {
                Err(fail("line must start with a directive".into()))
            };
        };
        let args = &tokens[1..];
        let ident = |i: usize| -> Result<&str, OntologyError> {
            match args.get(i) {
                Some(Token::Word(w)) if is_identifier(w) => Ok(w),
                Some(Token::Word(w)) => Err(fail(format!("invalid identifier {w:?}"))),
                _ => Err(fail(format!(
                    "`{directive}` expects an identifier in position {}",
                    i + 1
                ))),
            }
        };
        let arity = |n: usize| -> Result<(), OntologyError> {
            if args.len() == n {
                Ok(())
            } else {
                Err(fail(format!("`{directive}` takes {n} arguments, found {}", args.len())))
            }
        };
        let o = Some(origin.clone());
        match directive.as_str() {
            "concept" => {
                arity(1)?;
                self.builder.concept_at(ident(0)?, o);
            }
            "isa" => {
                arity(2)?;
                self.builder.isa_at(ident(0)?, ident(1)?, o);
            }
            "disjoint" => {
                arity(2)?;
                self.builder.disjoint_at(ident(0)?, ident(1)?, o);
            }
            "objprop" => {
                arity(1)?;
                self.builder.property_at(ident(0)?, PropertyKind::Object, o);
            }
            "dataprop" => {
                arity(1)?;
                self.builder.property_at(ident(0)?, PropertyKind::Data, o);
            }
            "restrict" => {
                arity(4)?;
                let n: u32 = match &args[3] {
                    Token::Word(w) => w.parse().map_err(|_| fail(format!("invalid bound {w:?}")))?,
                    Token::Literal(_) => return Err(fail("bound must be a number".into())),
                };
                let bound = match &args[2] {
                    Token::Word(w) if w == "min" => Bound::Min(n),
                    Token::Word(w) if w == "max" => Bound::Max(n),
                    Token::Word(w) if w == "exactly" => Bound::Exactly(n),
                    _ => return Err(fail("expected min, max or exactly".into())),
                };
                self.builder.restrict_at(ident(0)?, ident(1)?, bound, o);
            }
            "ind" => {
                arity(2)?;
                self.facts.push((Assertion::concept(ident(0)?, ident(1)?), origin));
            }
            "rel" => {
                arity(3)?;
                self.facts
                    .push((Assertion::object(ident(0)?, ident(1)?, ident(2)?), origin));
            }
            "data" => {
                arity(3)?;
                let Token::Literal(lit) = &args[2] else {
                    return Err(fail("`data` expects a quoted literal".into()));
                };
                self.facts
                    .push((Assertion::data(ident(0)?, ident(1)?, lit.clone()), origin));
            }
            other => return Err(fail(format!("unknown directive {other:?}"))),
        }
        Ok(())
    }

    /// Builds and validates the graph, then checks every fact's vocabulary.
    pub fn finish(self) -> Result<(ConceptGraph, FactStore), OntologyError> {
        let graph = self.builder.build()?;
        let mut store = FactStore::new();
        for (fact, origin) in self.facts {
            fact.check(&graph).map_err(|e| match e {
                OntologyError::UndeclaredTerm { term, .. } => OntologyError::UndeclaredTerm {
                    term,
                    origin: Some(origin.clone()),
                },
                other => other,
            })?;
            store.insert(fact);
        }
        Ok((graph, store))
    }
}

/// Loads a single ONTO-TXT document.
pub fn load_ontology(text: &[u8]) -> Result<(ConceptGraph, FactStore), OntologyError> {
    let mut loader = OntologyLoader::new();
    loader.add_source("<input>", text)?;
    loader.finish()
}
