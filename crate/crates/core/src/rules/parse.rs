use std::collections::BTreeSet;

use super::{Atom, Builtin, Rule, RuleError, Term};
use crate::ontology::{is_identifier, scan_literal};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Lit(String),
    Open,
    Close,
    Comma,
    Amp,
    Arrow,
    Colon,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Var(s) => format!("`?{s}`"),
            Tok::Lit(s) => format!("literal {s:?}"),
            Tok::Open => "`(`".into(),
            Tok::Close => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Arrow => "`=>`".into(),
            Tok::Colon => "`:`".into(),
        }
    }
}

fn word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex_line(line: &str, lineno: usize, out: &mut Vec<(Tok, usize)>) -> Result<(), RuleError> {
    let fail = |message: String| RuleError::Parse { line: lineno, message };
    let mut rest = line;
    loop {
        rest = rest.trim_start();
        let Some(c) = rest.chars().next() else {
            return Ok(());
        };
        let (tok, used) = match c {
            '#' => return Ok(()),
            '(' => (Tok::Open, 1),
            ')' => (Tok::Close, 1),
            ',' => (Tok::Comma, 1),
            '&' => (Tok::Amp, 1),
            ':' => (Tok::Colon, 1),
            '=' if rest.starts_with("=>") => (Tok::Arrow, 2),
            '"' => {
                let (lit, used) = scan_literal(rest).map_err(fail)?;
                (Tok::Lit(lit), used)
            }
            '?' => {
                let end = rest[1..].find(|c| !word_char(c)).map_or(rest.len(), |i| i + 1);
                if end == 1 {
                    return Err(fail("`?` must be followed by a variable name".into()));
                }
                (Tok::Var(rest[1..end].to_string()), end)
            }
            c if word_char(c) => {
                let end = rest.find(|c| !word_char(c)).unwrap_or(rest.len());
                (Tok::Ident(rest[..end].to_string()), end)
            }
            c => return Err(fail(format!("unexpected character {c:?}"))),
        };
        out.push((tok, lineno));
        rest = &rest[used..];
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    last_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map_or(self.last_line, |(_, l)| *l)
    }

    fn fail(&self, message: impl Into<String>) -> RuleError {
        RuleError::Parse {
            line: self.line(),
            message: message.into(),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), RuleError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(self.fail(format!("expected {}, found {}", want.describe(), t.describe()))),
            None => Err(self.fail(format!("expected {}, found end of input", want.describe()))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, RuleError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => Err(self.fail(format!("expected {what}, found {}", t.describe()))),
            None => Err(self.fail(format!("expected {what}, found end of input"))),
        }
    }

    fn term(&mut self) -> Result<Term, RuleError> {
        match self.next() {
            Some(Tok::Var(v)) => Ok(Term::Var(v)),
            Some(Tok::Lit(l)) => Ok(Term::Literal(l)),
            Some(Tok::Ident(i)) => Ok(Term::Individual(i)),
            Some(t) => {
                self.pos -= 1;
                Err(self.fail(format!("expected a term, found {}", t.describe())))
            }
            None => Err(self.fail("expected a term, found end of input")),
        }
    }

    fn atom(&mut self, rule: &str) -> Result<Atom, RuleError> {
        let mut name = self.ident("an atom")?;
        let builtin = if name == "builtin" && self.peek() == Some(&Tok::Colon) {
            self.pos += 1;
            name = self.ident("a builtin name")?;
            Some(name.parse::<Builtin>().map_err(|name| RuleError::UnknownBuiltin {
                rule: rule.to_string(),
                name,
            })?)
        } else {
            None
        };
        self.expect(Tok::Open)?;
        let mut args = vec![self.term()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            args.push(self.term()?);
        }
        self.expect(Tok::Close)?;
        if let Some(builtin) = builtin {
            if args.len() != builtin.arity() {
                return Err(self.fail(format!("builtin {name} takes {} arguments", builtin.arity())));
            }
            return Ok(Atom::Builtin { builtin, args });
        }
        let mut args = args.into_iter();
        match (args.next(), args.next(), args.next()) {
            (Some(term), None, None) => Ok(Atom::Concept { concept: name, term }),
            (Some(subject), Some(object), None) => Ok(Atom::Property {
                property: name,
                subject,
                object,
            }),
            _ => Err(self.fail(format!("atom {name} takes one or two arguments"))),
        }
    }

    fn conjunction(&mut self, rule: &str) -> Result<Vec<Atom>, RuleError> {
        let mut atoms = vec![self.atom(rule)?];
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            atoms.push(self.atom(rule)?);
        }
        Ok(atoms)
    }

    fn rule(&mut self) -> Result<Rule, RuleError> {
        match self.next() {
            Some(Tok::Ident(kw)) if kw == "rule" => {}
            _ => {
                self.pos -= 1;
                return Err(self.fail("expected `rule`"));
            }
        }
        let name = self.ident("a rule name")?;
        self.expect(Tok::Colon)?;
        let body = self.conjunction(&name)?;
        self.expect(Tok::Arrow)?;
        let head = self.conjunction(&name)?;
        if let Some(t) = self.peek() {
            return Err(self.fail(format!("unexpected {} after rule head", t.describe())));
        }
        Ok(Rule { name, body, head })
    }
}

/// Parses RULE-TXT. Every rule is checked for safety; names must be unique.
pub fn parse_rules(text: &[u8]) -> Result<Vec<Rule>, RuleError> {
    let text = std::str::from_utf8(text).map_err(|e| RuleError::Parse {
        line: 1 + text[..e.valid_up_to()].iter().filter(|b| **b == b'\n').count(),
        message: "input is not valid UTF-8".into(),
    })?;

    // Split into chunks, one per `rule` keyword at the start of a line.
    let mut chunks: Vec<Vec<(Tok, usize)>> = Vec::new();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        let mut toks = Vec::new();
        lex_line(line, i + 1, &mut toks)?;
        last_line = i + 1;
        if toks.is_empty() {
            continue;
        }
        if matches!(&toks[0].0, Tok::Ident(k) if k == "rule") || chunks.is_empty() {
            chunks.push(toks);
        } else {
            chunks.last_mut().expect("non-empty").extend(toks);
        }
    }

    let mut rules = Vec::new();
    let mut names = BTreeSet::new();
    for toks in chunks {
        let end_line = toks.last().map_or(last_line, |(_, l)| *l);
        let mut p = Parser {
            toks,
            pos: 0,
            last_line: end_line,
        };
        let rule = p.rule()?;
        if !is_identifier(&rule.name) {
            return Err(p.fail(format!("invalid rule name {:?}", rule.name)));
        }
        if !names.insert(rule.name.clone()) {
            return Err(RuleError::DuplicateRule(rule.name));
        }
        rule.check_safety()?;
        rules.push(rule);
    }
    Ok(rules)
}
