//! Lexer and parsers for terms, clauses, distribution literals and theory
//! files.
//!
//! Theory-file grammar (one statement per line, `#` starts a comment):
//!
//! ```text
//! kind <Name>
//! op <symbol> arity <n> lifting <lifting>
//! params <symbol> { p/q, ... }
//! axiom <premise>, ... |- <conclusion>
//! space { points a, b; d a a = 1/2; d a b = 1 }
//! option depth|max_rounds|closure <n>
//! ```
//!
//! Liftings are `sup`, `discrete`, `scaled(r)`, `identity`,
//! `kantorovich(p)` and `lk(p)`; an identifier argument refers to the
//! parameter of each operation instance. Atoms are `s = t` or `s =[e] t`.
//! Unlisted space entries default to 0 on the diagonal for reflexive kinds
//! (1 otherwise) and 1 off the diagonal; symmetric kinds mirror `d a b`.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::distributions::Dist;
use crate::error::ParseError;
use crate::expr::{BinOp, Expr};
use crate::gmet::{Axiom, FiniteSpace, MetricKind};
use crate::liftings::{LiftingSpec, LiftingTag, ParamArg};
use crate::terms::{OpDecl, Param, Signature, Symbol, Term};
use crate::theory::{EquationLike, HornClause, Theory};
use crate::unit::{Rational, UnitValue};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Punct(char),
    Turnstile,
    Newline,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let code = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = code.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line: line_no,
                });
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                out.push(Token {
                    tok: Tok::Int(digits.parse().expect("digits")),
                    line: line_no,
                });
            } else if c == '|' && chars.get(i + 1) == Some(&'-') {
                out.push(Token {
                    tok: Tok::Turnstile,
                    line: line_no,
                });
                i += 2;
            } else if "()[]{};,:/*+-=".contains(c) {
                out.push(Token {
                    tok: Tok::Punct(c),
                    line: line_no,
                });
                i += 1;
            } else {
                return Err(ParseError::new(
                    line_no,
                    format!("unexpected character `{c}`"),
                ));
            }
        }
        out.push(Token {
            tok: Tok::Newline,
            line: line_no,
        });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Newlines are insignificant inside braces and single-item parses.
    skip_newlines: bool,
}

/// Unresolved term syntax; resolution against a signature happens later.
#[derive(Debug, Clone)]
pub(crate) struct RawTerm {
    name: String,
    line: usize,
    param: Option<Expr>,
    args: Option<Vec<RawTerm>>,
}

#[derive(Debug, Clone)]
pub(crate) enum RawAtom {
    Eq(RawTerm, RawTerm),
    QEq(RawTerm, RawTerm, Expr),
}

#[derive(Debug, Clone)]
pub(crate) struct RawClause {
    premises: Vec<RawAtom>,
    conclusion: RawAtom,
}

impl Parser {
    fn new(text: &str, skip_newlines: bool) -> Result<Self, ParseError> {
        Ok(Self {
            toks: lex(text)?,
            pos: 0,
            skip_newlines,
        })
    }

    fn skip(&mut self) {
        if self.skip_newlines {
            while matches!(
                self.toks.get(self.pos),
                Some(Token {
                    tok: Tok::Newline,
                    ..
                })
            ) {
                self.pos += 1;
            }
        }
    }

    fn peek(&mut self) -> Option<&Tok> {
        self.skip();
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |t| t.line)
    }

    fn next(&mut self) -> Option<Tok> {
        self.skip();
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line(), msg)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = self.describe_next();
            Err(self.err(format!("expected `{c}`, found {found}")))
        }
    }

    fn describe_next(&mut self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Newline) => "end of line".into(),
            Some(Tok::Ident(s)) => format!("`{s}`"),
            Some(Tok::Int(n)) => format!("`{n}`"),
            Some(Tok::Punct(c)) => format!("`{c}`"),
            Some(Tok::Turnstile) => "`|-`".into(),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                let found = self.describe_next();
                Err(self.err(format!("expected identifier, found {found}")))
            }
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let line = self.line();
        match self.ident() {
            Ok(s) if s == kw => Ok(()),
            _ => Err(ParseError::new(line, format!("expected `{kw}`"))),
        }
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn end_of_statement(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None | Some(Tok::Newline) => Ok(()),
            _ => {
                let found = self.describe_next();
                Err(self.err(format!("unexpected {found}")))
            }
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        self.skip_newlines = true;
        if self.at_end() {
            Ok(())
        } else {
            let found = self.describe_next();
            Err(self.err(format!("trailing input {found}")))
        }
    }

    // expressions -----------------------------------------------------

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = match (op, lhs, rhs) {
                // fold rational literals so `1/2` is a single number
                (BinOp::Div, Expr::Num(a), Expr::Num(b)) => {
                    if b.is_zero() {
                        return Err(self.err("division by zero"));
                    }
                    Expr::Num(a / b)
                }
                (op, l, r) => Expr::bin(op, l, r),
            };
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        match self.next() {
            Some(Tok::Int(n)) => Ok(Expr::Num(Rational::from_integer(n))),
            Some(Tok::Ident(s)) => Ok(Expr::Var(s)),
            Some(Tok::Punct('(')) => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            _ => {
                self.pos = self.pos.saturating_sub(1);
                let found = self.describe_next();
                Err(self.err(format!("expected a number or name, found {found}")))
            }
        }
    }

    fn rational(&mut self) -> Result<Rational, ParseError> {
        let line = self.line();
        let e = self.expr()?;
        e.eval_closed()
            .map_err(|_| ParseError::new(line, format!("malformed rational `{e}`")))
    }

    fn unit(&mut self) -> Result<UnitValue, ParseError> {
        let line = self.line();
        let r = self.rational()?;
        UnitValue::new(r).map_err(|e| ParseError::new(line, e.to_string()))
    }

    // terms and clauses -----------------------------------------------

    /// True if a `;` occurs at nesting depth zero before the matching `)`.
    fn has_param_section(&self) -> bool {
        let mut depth = 0usize;
        for t in &self.toks[self.pos..] {
            match t.tok {
                Tok::Punct('(') => depth += 1,
                Tok::Punct(')') => {
                    if depth == 0 {
                        return false;
                    }
                    depth -= 1;
                }
                Tok::Punct(';') if depth == 0 => return true,
                Tok::Punct(',') if depth == 0 => return false,
                _ => {}
            }
        }
        false
    }

    fn term(&mut self) -> Result<RawTerm, ParseError> {
        let line = self.line();
        let name = self.ident()?;
        if !self.eat('(') {
            return Ok(RawTerm {
                name,
                line,
                param: None,
                args: None,
            });
        }
        let param = if self.has_param_section() {
            let e = self.expr()?;
            self.expect(';')?;
            Some(e)
        } else {
            None
        };
        let mut args = Vec::new();
        if !self.eat(')') {
            loop {
                args.push(self.term()?);
                if self.eat(')') {
                    break;
                }
                self.expect(',')?;
            }
        }
        Ok(RawTerm {
            name,
            line,
            param,
            args: Some(args),
        })
    }

    fn atom(&mut self) -> Result<RawAtom, ParseError> {
        let lhs = self.term()?;
        self.expect('=')?;
        if self.eat('[') {
            let e = self.expr()?;
            self.expect(']')?;
            let rhs = self.term()?;
            Ok(RawAtom::QEq(lhs, rhs, e))
        } else {
            let rhs = self.term()?;
            Ok(RawAtom::Eq(lhs, rhs))
        }
    }

    fn clause(&mut self) -> Result<RawClause, ParseError> {
        let mut premises = Vec::new();
        if self.peek() == Some(&Tok::Turnstile) {
            self.next();
            let conclusion = self.atom()?;
            return Ok(RawClause {
                premises,
                conclusion,
            });
        }
        loop {
            let a = self.atom()?;
            match self.peek() {
                Some(Tok::Punct(',')) => {
                    self.next();
                    premises.push(a);
                }
                Some(Tok::Turnstile) => {
                    self.next();
                    premises.push(a);
                    let conclusion = self.atom()?;
                    return Ok(RawClause {
                        premises,
                        conclusion,
                    });
                }
                _ if premises.is_empty() => {
                    return Ok(RawClause {
                        premises,
                        conclusion: a,
                    })
                }
                _ => return Err(self.err("expected `,` or `|-` after a premise")),
            }
        }
    }

    fn lifting(&mut self) -> Result<LiftingSpec, ParseError> {
        let line = self.line();
        let name = self.ident()?;
        let tag = match name.as_str() {
            "sup" => LiftingTag::Sup,
            "discrete" => LiftingTag::Discrete,
            "identity" => LiftingTag::Identity,
            "scaled" => LiftingTag::Scaled,
            "kantorovich" => LiftingTag::Kantorovich,
            "lk" => LiftingTag::Lk,
            other => return Err(ParseError::new(line, format!("unknown lifting `{other}`"))),
        };
        let param = if self.eat('(') {
            let arg = match self.peek() {
                Some(Tok::Ident(_)) => {
                    self.ident()?;
                    ParamArg::OpParam
                }
                _ => ParamArg::Value(self.unit()?),
            };
            self.expect(')')?;
            Some(arg)
        } else {
            None
        };
        LiftingSpec::new(tag, param).map_err(|e| ParseError::new(line, e.to_string()))
    }
}

// resolution -----------------------------------------------------------

/// How bare identifiers that are not declared constants are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NameMode {
    /// Undeclared names are variables; parameters may be expressions.
    Pattern,
    /// Undeclared names are errors; parameters must be closed.
    Ground,
}

pub(crate) fn resolve(raw: &RawTerm, sig: &Signature, mode: NameMode) -> Result<Term, ParseError> {
    let err = |m: String| ParseError::new(raw.line, m);
    match &raw.args {
        None => {
            if sig.has_constant(&raw.name) {
                return Ok(Term::Const(raw.name.clone()));
            }
            if let Some(op) = sig.op(&raw.name) {
                if op.arity == 0 && op.params.is_none() {
                    return Ok(Term::App(Symbol::plain(&raw.name), Vec::new()));
                }
                return Err(err(format!(
                    "operation `{}` used without arguments",
                    raw.name
                )));
            }
            match mode {
                NameMode::Pattern => Ok(Term::Var(raw.name.clone())),
                NameMode::Ground => Err(err(format!("unknown constant `{}`", raw.name))),
            }
        }
        Some(args) => {
            let op = sig
                .op(&raw.name)
                .ok_or_else(|| err(format!("unknown symbol `{}`", raw.name)))?;
            if args.len() != op.arity {
                return Err(err(format!(
                    "`{}` expects {} argument(s), got {}",
                    raw.name,
                    op.arity,
                    args.len()
                )));
            }
            let param = match (&op.params, &raw.param) {
                (None, None) => None,
                (None, Some(_)) => return Err(err(format!("`{}` takes no parameter", raw.name))),
                (Some(_), None) => return Err(err(format!("`{}` needs a parameter", raw.name))),
                (Some(set), Some(e)) => match (e.eval_closed(), mode) {
                    (Ok(v), NameMode::Ground) if !set.contains(&v) => {
                        return Err(err(format!(
                            "parameter {e} is not declared for `{}`",
                            raw.name
                        )))
                    }
                    (Ok(v), _) => Some(Param::Value(v)),
                    (Err(_), NameMode::Pattern) => Some(Param::Expr(e.clone())),
                    (Err(_), NameMode::Ground) => {
                        return Err(err(format!("malformed rational parameter `{e}`")))
                    }
                },
            };
            let args = args
                .iter()
                .map(|a| resolve(a, sig, mode))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Term::App(
                Symbol {
                    name: raw.name.clone(),
                    param,
                },
                args,
            ))
        }
    }
}

fn resolve_atom(raw: &RawAtom, sig: &Signature) -> Result<EquationLike, ParseError> {
    Ok(match raw {
        RawAtom::Eq(l, r) => EquationLike::Eq(
            resolve(l, sig, NameMode::Pattern)?,
            resolve(r, sig, NameMode::Pattern)?,
        ),
        RawAtom::QEq(l, r, e) => EquationLike::QEq(
            resolve(l, sig, NameMode::Pattern)?,
            resolve(r, sig, NameMode::Pattern)?,
            e.clone(),
        ),
    })
}

fn resolve_clause(raw: &RawClause, sig: &Signature) -> Result<HornClause, ParseError> {
    let premises = raw
        .premises
        .iter()
        .map(|a| resolve_atom(a, sig))
        .collect::<Result<Vec<_>, _>>()?;
    let conclusion = resolve_atom(&raw.conclusion, sig)?;
    Ok(HornClause::new(premises, conclusion))
}

// public entry points --------------------------------------------------

pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text, true)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses a ground term: undeclared identifiers are rejected.
pub fn parse_ground_term(text: &str, sig: &Signature) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, true)?;
    let raw = p.term()?;
    p.finish()?;
    resolve(&raw, sig, NameMode::Ground)
}

/// Parses a term in which undeclared identifiers are variables.
pub fn parse_pattern(text: &str, sig: &Signature) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, true)?;
    let raw = p.term()?;
    p.finish()?;
    resolve(&raw, sig, NameMode::Pattern)
}

pub fn parse_clause(text: &str, sig: &Signature) -> Result<HornClause, ParseError> {
    let mut p = Parser::new(text, true)?;
    let raw = p.clause()?;
    p.finish()?;
    resolve_clause(&raw, sig)
}

pub fn parse_lifting(text: &str) -> Result<LiftingSpec, ParseError> {
    let mut p = Parser::new(text, true)?;
    let l = p.lifting()?;
    p.finish()?;
    Ok(l)
}

/// Parses `{a:1/2, b:1/2}`.
pub fn parse_dist(text: &str) -> Result<Dist, ParseError> {
    let mut p = Parser::new(text, true)?;
    p.expect('{')?;
    let mut weights = Vec::new();
    if !p.eat('}') {
        loop {
            let atom = p.ident()?;
            p.expect(':')?;
            let w = p.rational()?;
            weights.push((atom, w));
            if p.eat('}') {
                break;
            }
            p.expect(',')?;
        }
    }
    p.finish()?;
    Dist::new(weights).map_err(|e| ParseError::new(1, e.to_string()))
}

/// Options a theory file may set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileOptions {
    pub depth: Option<usize>,
    pub max_rounds: Option<usize>,
    pub closure: Option<usize>,
}

/// A parsed theory file: the theory, an optional space and options.
#[derive(Debug, Clone)]
pub struct TheoryFile {
    pub theory: Theory,
    pub space: Option<FiniteSpace>,
    pub options: FileOptions,
}

impl TheoryFile {
    /// The theory extended by the bundled space, if any.
    pub fn extended(&self) -> Result<Theory, crate::theory::TheoryError> {
        match &self.space {
            Some(s) => crate::theory::extend_by_space(&self.theory, s),
            None => Ok(self.theory.clone()),
        }
    }
}

fn usize_of(r: Rational, line: usize) -> Result<usize, ParseError> {
    if !r.is_integer() || r < Rational::from_integer(0.into()) {
        return Err(ParseError::new(line, "expected a natural number"));
    }
    r.to_integer()
        .try_into()
        .map_err(|_| ParseError::new(line, "number too large"))
}

/// `d a b = v` on a line.
type SpaceEntry = (String, String, UnitValue, usize);

pub fn parse_theory_file(text: &str) -> Result<TheoryFile, ParseError> {
    let mut p = Parser::new(text, false)?;
    let mut kind: Option<MetricKind> = None;
    let mut ops: Vec<OpDecl> = Vec::new();
    let mut params: HashMap<String, (usize, BTreeSet<Rational>)> = HashMap::new();
    let mut raw_axioms: Vec<RawClause> = Vec::new();
    let mut space_stmt: Option<(usize, Vec<String>, Vec<SpaceEntry>)> = None;
    let mut options = FileOptions::default();

    loop {
        p.skip_newlines = true;
        if p.at_end() {
            break;
        }
        p.skip_newlines = false;
        let line = p.line();
        let head = p.ident()?;
        match head.as_str() {
            "kind" => {
                if kind.is_some() {
                    return Err(ParseError::new(line, "duplicate `kind`"));
                }
                let name = p.ident()?;
                kind = Some(name.parse::<MetricKind>().map_err(|e| e.at_line(line))?);
            }
            "op" => {
                let name = p.ident()?;
                p.keyword("arity")?;
                let arity = usize_of(p.rational()?, line)?;
                p.keyword("lifting")?;
                let lifting = p.lifting()?;
                if ops.iter().any(|o| o.name == name) {
                    return Err(ParseError::new(
                        line,
                        format!("duplicate operation `{name}`"),
                    ));
                }
                ops.push(OpDecl {
                    name,
                    arity,
                    lifting,
                    params: None,
                });
            }
            "params" => {
                let name = p.ident()?;
                p.skip_newlines = true;
                p.expect('{')?;
                let mut set = BTreeSet::new();
                if !p.eat('}') {
                    loop {
                        let l = p.line();
                        let v = p.unit()?;
                        if !v.is_proper() {
                            return Err(ParseError::new(
                                l,
                                "parameters must lie strictly between 0 and 1",
                            ));
                        }
                        set.insert(v.into_rational());
                        if p.eat('}') {
                            break;
                        }
                        p.expect(',')?;
                    }
                }
                p.skip_newlines = false;
                params
                    .entry(name)
                    .or_insert((line, BTreeSet::new()))
                    .1
                    .extend(set);
            }
            "axiom" => {
                raw_axioms.push(p.clause()?);
            }
            "space" => {
                if space_stmt.is_some() {
                    return Err(ParseError::new(line, "duplicate `space`"));
                }
                p.skip_newlines = true;
                p.expect('{')?;
                let mut points = Vec::new();
                let mut entries = Vec::new();
                while !p.eat('}') {
                    if p.eat(';') {
                        continue;
                    }
                    let l = p.line();
                    let what = p.ident()?;
                    match what.as_str() {
                        "points" => loop {
                            points.push(p.ident()?);
                            if !p.eat(',') {
                                break;
                            }
                        },
                        "d" => {
                            let a = p.ident()?;
                            let b = p.ident()?;
                            p.expect('=')?;
                            let v = p.unit()?;
                            entries.push((a, b, v, l));
                        }
                        other => {
                            return Err(ParseError::new(
                                l,
                                format!("unexpected `{other}` in space block"),
                            ))
                        }
                    }
                }
                p.skip_newlines = false;
                space_stmt = Some((line, points, entries));
            }
            "option" => {
                let name = p.ident()?;
                let v = usize_of(p.rational()?, line)?;
                match name.as_str() {
                    "depth" => options.depth = Some(v),
                    "max_rounds" => options.max_rounds = Some(v),
                    "closure" => options.closure = Some(v),
                    other => {
                        return Err(ParseError::new(line, format!("unknown option `{other}`")))
                    }
                }
            }
            other => {
                return Err(ParseError::new(
                    line,
                    format!("unknown statement `{other}`"),
                ))
            }
        }
        p.end_of_statement()?;
    }

    let kind = kind.ok_or_else(|| ParseError::new(1, "missing `kind` declaration"))?;
    for (name, (line, set)) in params {
        let op = ops.iter_mut().find(|o| o.name == name).ok_or_else(|| {
            ParseError::new(line, format!("params for undeclared operation `{name}`"))
        })?;
        op.params = Some(set);
    }
    for op in &ops {
        if op.params.is_none() && op.lifting.needs_op_param() {
            return Err(ParseError::new(
                1,
                format!(
                    "lifting of `{}` refers to a parameter but no params are declared",
                    op.name
                ),
            ));
        }
    }
    let sig = Signature::new(ops).map_err(|e| ParseError::new(1, e.to_string()))?;
    let axioms = raw_axioms
        .iter()
        .map(|c| resolve_clause(c, &sig))
        .collect::<Result<Vec<_>, _>>()?;
    let theory = Theory::new(sig, kind, axioms).map_err(|e| ParseError::new(1, e.to_string()))?;

    let space = match space_stmt {
        None => None,
        Some((line, points, entries)) => Some(build_space(kind, points, entries, line)?),
    };
    Ok(TheoryFile {
        theory,
        space,
        options,
    })
}

fn build_space(
    kind: MetricKind,
    points: Vec<String>,
    entries: Vec<SpaceEntry>,
    line: usize,
) -> Result<FiniteSpace, ParseError> {
    if points.is_empty() {
        return Err(ParseError::new(line, "space declares no points"));
    }
    let n = points.len();
    let index: HashMap<&str, usize> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let diag = if kind.has(Axiom::Reflexivity) {
        UnitValue::zero()
    } else {
        UnitValue::one()
    };
    let mut m: Vec<Vec<Option<UnitValue>>> = vec![vec![None; n]; n];
    for (a, b, v, l) in &entries {
        let i = *index
            .get(a.as_str())
            .ok_or_else(|| ParseError::new(*l, format!("unknown point `{a}`")))?;
        let j = *index
            .get(b.as_str())
            .ok_or_else(|| ParseError::new(*l, format!("unknown point `{b}`")))?;
        m[i][j] = Some(v.clone());
    }
    let sym = kind.has(Axiom::Symmetry);
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    m[i][j]
                        .clone()
                        .or_else(|| if sym { m[j][i].clone() } else { None })
                        .unwrap_or_else(|| {
                            if i == j {
                                diag.clone()
                            } else {
                                UnitValue::one()
                            }
                        })
                })
                .collect()
        })
        .collect();
    FiniteSpace::new(points, rows, kind).map_err(|e| ParseError::new(line, e.to_string()))
}

/// Parses a stand-alone space block `{ points ...; d ... }` of a given kind.
pub fn parse_space(text: &str, kind: MetricKind) -> Result<FiniteSpace, ParseError> {
    let mut p = Parser::new(text, true)?;
    p.expect('{')?;
    let mut points = Vec::new();
    let mut entries = Vec::new();
    while !p.eat('}') {
        if p.eat(';') {
            continue;
        }
        let l = p.line();
        match p.ident()?.as_str() {
            "points" => loop {
                points.push(p.ident()?);
                if !p.eat(',') {
                    break;
                }
            },
            "d" => {
                let a = p.ident()?;
                let b = p.ident()?;
                p.expect('=')?;
                let v = p.unit()?;
                entries.push((a, b, v, l));
            }
            other => {
                return Err(ParseError::new(
                    l,
                    format!("unexpected `{other}` in space block"),
                ))
            }
        }
    }
    p.finish()?;
    build_space(kind, points, entries, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unit::ratio;

    fn convex_sig() -> Signature {
        let file =
            parse_theory_file("kind DMet\nop plus arity 2 lifting lk(p)\nparams plus { 1/2 }\n")
                .unwrap();
        file.theory.sig.clone()
    }

    #[test]
    fn term_with_parameter() {
        let mut sig = convex_sig();
        sig.add_constant("a").unwrap();
        sig.add_constant("b").unwrap();
        let t = parse_ground_term("plus(1/2; a, b)", &sig).unwrap();
        assert_eq!(
            t,
            Term::App(
                Symbol::with_param("plus", ratio(1, 2)),
                vec![Term::Const("a".into()), Term::Const("b".into())]
            )
        );
        assert_eq!(t.to_string(), "plus(1/2; a, b)");
        assert_eq!(parse_ground_term(&t.to_string(), &sig).unwrap(), t);
    }

    #[test]
    fn variables_and_errors() {
        let sig = convex_sig();
        assert_eq!(parse_pattern("x", &sig).unwrap(), Term::Var("x".into()));
        let err = parse_pattern("plus(1/2; a)", &sig).unwrap_err();
        assert!(err.message.contains("expects 2"), "{err}");
        assert!(parse_pattern("times(a, b)", &sig).is_err());
        assert!(parse_pattern("plus(1/0; a, b)", &sig).is_err());
        assert!(parse_ground_term("plus(1/3; a, b)", &sig).is_err());
        assert!(parse_pattern("plus(a, b)", &sig).is_err());
    }

    #[test]
    fn kantorovich_rule_clause() {
        let sig = convex_sig();
        let c = parse_clause(
            "x1 =[e1] y1, x2 =[e2] y2 |- plus(p; x1, x2) =[p*e1 + (1-p)*e2] plus(p; y1, y2)",
            &sig,
        )
        .unwrap();
        assert_eq!(c.premises.len(), 2);
        assert!(c.is_basic());
    }

    #[test]
    fn dist_literal() {
        let d = parse_dist("{a:1/2, b:1/2}").unwrap();
        assert_eq!(d.to_string(), "{a:1/2, b:1/2}");
        assert!(parse_dist("{a:1/2}").is_err());
        assert!(parse_dist("{a:1/2, a:1/2}").is_ok());
    }

    #[test]
    fn space_block_defaults() {
        let file =
            parse_theory_file("kind DMet\nspace {\n  points a, b\n  d a a = 1/2\n  d a b = 1\n}\n")
                .unwrap();
        let s = file.space.unwrap();
        assert_eq!(s.distance("a", "a").unwrap(), &UnitValue::from_ratio(1, 2));
        assert_eq!(s.distance("b", "a").unwrap(), &UnitValue::one());
        // unlisted diagonal of a non-reflexive kind defaults to 1
        assert_eq!(s.distance("b", "b").unwrap(), &UnitValue::one());

        let inline = parse_theory_file("kind Met\nspace { points a,b; d a b = 1/3 }").unwrap();
        let s = inline.space.unwrap();
        assert!(s.distance("a", "a").unwrap().is_zero());
        assert_eq!(s.distance("b", "a").unwrap(), &UnitValue::from_ratio(1, 3));
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        assert!(parse_theory_file("").is_err());
        let err =
            parse_theory_file("kind Met\nop f arity 2 lifting sup\naxiom f(x) = x\n").unwrap_err();
        assert_eq!(err.line, 3);
        let err = parse_theory_file("kind Met\nfrobnicate\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = parse_theory_file("kind Nope\n").unwrap_err();
        assert_eq!(err.line, 1);
    }
}
