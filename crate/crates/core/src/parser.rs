//! Surface syntax for `.luc` programs and the matching pretty-printer.
//!
//! ```text
//! expr    := "let" ident "=" expr "in" expr
//!          | "if" expr "then" expr "else" expr
//!          | "ifhasattr" "(" ident "," ident ")" "then" expr "else" expr
//!          | "break" ident expr | "new" | postfix
//! postfix := atom ("." ident (":=" expr)? | "(" exprlist ")")*
//! atom    := ident | int | string | "true" | "false" | "(" expr ")"
//!          | "func" "(" ident* ")" ":" type "{" expr "}"
//!          | "label" ident ":" type "{" expr "}"
//!          | primop "(" exprlist ")"
//! type    := tatom ("\/" tatom)*
//! tatom   := "int" | "bool" | "str" | "bot" | "never" | Upper | "(" type ")"
//!          | "[" constraints "]" "(" types ")" "->" type "[" constraints "]"
//! ```

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{}:{}: expected {}, found {found}", .span.line, .span.col, .expected.join(" or "))]
    Unexpected { span: Span, expected: Vec<String>, found: String },
    #[error("{}:{}: location literals are reserved for evaluation traces", .span.line, .span.col)]
    LocationLiteral { span: Span },
    #[error("{}:{}: {message}", .span.line, .span.col)]
    Invalid { span: Span, message: String },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Unexpected { span, .. }
            | ParseError::LocationLiteral { span }
            | ParseError::Invalid { span, .. } => *span,
        }
    }
}

const KEYWORDS: &[&str] = &[
    "let",
    "in",
    "if",
    "then",
    "else",
    "ifhasattr",
    "func",
    "label",
    "break",
    "new",
    "true",
    "false",
    "int",
    "bool",
    "str",
    "bot",
    "never",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Sym(&'static str),
    Loc,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Loc => f.write_str("location literal"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const SYMBOLS: &[&str] = &[":=", "->", "<|", "\\/", "(", ")", "{", "}", "[", "]", ",", ".", ":", "="];

fn lex(text: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut line_start) = (0usize, 1u32, 0usize);
    let span_at = |s: usize, e: usize, line: u32, line_start: usize| {
        Span::new(s, e, line, (text[line_start..s].chars().count() + 1) as u32)
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == b'-' && bytes.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let span = span_at(start, i, line, line_start);
            let n = text[start..i].parse::<i64>().map_err(|_| ParseError::Invalid {
                span,
                message: format!("integer literal `{}` out of range", &text[start..i]),
            })?;
            out.push((Tok::Int(n), span));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), span_at(start, i, line, line_start)));
            continue;
        }
        if c == b'"' {
            i += 1;
            let mut s = String::new();
            loop {
                match text[i..].chars().next() {
                    None => {
                        return Err(ParseError::Unexpected {
                            span: span_at(start, i, line, line_start),
                            expected: vec!["closing `\"`".into()],
                            found: "end of input".into(),
                        })
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let esc = text[i + 1..].chars().next();
                        let ch = match esc {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('"') => '"',
                            Some('\\') => '\\',
                            _ => {
                                return Err(ParseError::Invalid {
                                    span: span_at(i, i + 1, line, line_start),
                                    message: "unknown escape sequence".into(),
                                })
                            }
                        };
                        s.push(ch);
                        i += 2;
                    }
                    Some(ch) => {
                        if ch == '\n' {
                            line += 1;
                            line_start = i + 1;
                        }
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            out.push((Tok::Str(s), span_at(start, i, line, line_start.min(start))));
            continue;
        }
        if c == b'@' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((Tok::Loc, span_at(start, i, line, line_start)));
            continue;
        }
        match SYMBOLS.iter().find(|s| text[i..].starts_with(*s)) {
            Some(sym) => {
                i += sym.len();
                out.push((Tok::Sym(sym), span_at(start, i, line, line_start)));
            }
            None => {
                let ch = text[i..].chars().next().unwrap();
                return Err(ParseError::Unexpected {
                    span: span_at(start, i + ch.len_utf8(), line, line_start),
                    expected: vec!["a token".into()],
                    found: format!("`{ch}`"),
                });
            }
        }
    }
    out.push((Tok::Eof, span_at(text.len(), text.len(), line, line_start)));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        if *self.peek() == Tok::Loc {
            return Err(ParseError::LocationLiteral { span: self.span() });
        }
        Err(ParseError::Unexpected {
            span: self.span(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<Span> {
        if self.is_sym(s) {
            Ok(self.bump().1)
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<Span> {
        if self.is_kw(kw) {
            Ok(self.bump().1)
        } else {
            self.error(&[&format!("`{kw}`")])
        }
    }

    fn ident(&mut self) -> PResult<(Ident, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && PrimOp::from_name(&s).is_none() => {
                let sp = self.bump().1;
                Ok((s, sp))
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let start = self.span();
        if self.is_kw("let") {
            self.bump();
            let (name, _) = self.ident()?;
            self.expect_sym("=")?;
            let bound = self.expr()?;
            self.expect_kw("in")?;
            let body = self.expr()?;
            let span = start.to(body.span);
            return Ok(Expr::new(ExprKind::Let { name, bound: Box::new(bound), body: Box::new(body) }, span));
        }
        if self.is_kw("if") {
            self.bump();
            let cond = self.expr()?;
            self.expect_kw("then")?;
            let then_branch = self.expr()?;
            self.expect_kw("else")?;
            let else_branch = self.expr()?;
            let span = start.to(else_branch.span);
            return Ok(Expr::new(
                ExprKind::If {
                    cond: Box::new(cond),
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                },
                span,
            ));
        }
        if self.is_kw("ifhasattr") {
            self.bump();
            self.expect_sym("(")?;
            let (subject, _) = self.ident()?;
            self.expect_sym(",")?;
            let (attr, _) = self.field_name()?;
            self.expect_sym(")")?;
            self.expect_kw("then")?;
            let then_branch = self.expr()?;
            self.expect_kw("else")?;
            let else_branch = self.expr()?;
            let span = start.to(else_branch.span);
            return Ok(Expr::new(
                ExprKind::IfHasAttr {
                    subject: Subject::Var(subject),
                    attr,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                },
                span,
            ));
        }
        if self.is_kw("break") {
            self.bump();
            let (label, _) = self.ident()?;
            let arg = self.expr()?;
            let span = start.to(arg.span);
            return Ok(Expr::new(ExprKind::Break { label, arg: Box::new(arg) }, span));
        }
        if self.is_kw("new") {
            let span = self.bump().1;
            return Ok(Expr::new(ExprKind::New, span));
        }
        self.postfix()
    }

    /// Field names may coincide with keywords other than the structural ones.
    fn field_name(&mut self) -> PResult<(Ident, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let sp = self.bump().1;
                Ok((s, sp))
            }
            _ => self.error(&["field name"]),
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            if self.is_sym(".") {
                let target = match &e.kind {
                    ExprKind::Var(x) => Subject::Var(x.clone()),
                    _ => {
                        return Err(ParseError::Invalid {
                            span: self.span(),
                            message: "field access requires a variable on the left".into(),
                        })
                    }
                };
                self.bump();
                let (field, fspan) = self.field_name()?;
                if self.eat_sym(":=") {
                    let value = self.expr()?;
                    let span = e.span.to(value.span);
                    return Ok(Expr::new(ExprKind::SetField { target, field, value: Box::new(value) }, span));
                }
                e = Expr::new(ExprKind::GetField { target, field }, e.span.to(fspan));
            } else if self.is_sym("(") {
                let args = self.exprlist()?;
                let span = e.span.to(self.prev_span());
                e = Expr::new(ExprKind::Apply { callee: Box::new(e), args }, span);
            } else {
                return Ok(e);
            }
        }
    }

    fn exprlist(&mut self) -> PResult<Vec<Expr>> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if self.eat_sym(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_sym(")") {
                return Ok(args);
            }
            if !self.eat_sym(",") {
                return self.error(&["`,`", "`)`"]);
            }
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::new(ExprKind::Const(Const::Int(n)), start))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::new(ExprKind::Const(Const::Str(s)), start))
            }
            Tok::Loc => Err(ParseError::LocationLiteral { span: start }),
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Expr::new(ExprKind::Const(Const::Bool(s == "true")), start))
            }
            Tok::Ident(s) if s == "func" => {
                self.bump();
                self.expect_sym("(")?;
                let mut params = Vec::new();
                while !self.eat_sym(")") {
                    if !params.is_empty() {
                        self.eat_sym(",");
                    }
                    params.push(self.ident()?.0);
                }
                self.expect_sym(":")?;
                let ann_span = self.span();
                let annotation = self.arrow_annotation(ann_span)?;
                if annotation.params.len() != params.len() {
                    return Err(ParseError::Invalid {
                        span: ann_span,
                        message: format!(
                            "annotation declares {} parameter(s) but the function has {}",
                            annotation.params.len(),
                            params.len()
                        ),
                    });
                }
                self.expect_sym("{")?;
                let body = self.expr()?;
                let end = self.expect_sym("}")?;
                Ok(Expr::new(ExprKind::Func { params, annotation, body: Box::new(body) }, start.to(end)))
            }
            Tok::Ident(s) if s == "label" => {
                self.bump();
                let (label, _) = self.ident()?;
                self.expect_sym(":")?;
                let ann_span = self.span();
                let annotation = self.arrow_annotation(ann_span)?;
                if !annotation.params.is_empty() || !annotation.pre.is_empty() {
                    return Err(ParseError::Invalid {
                        span: ann_span,
                        message: "label annotations take no parameters and an empty precondition".into(),
                    });
                }
                self.expect_sym("{")?;
                let body = self.expr()?;
                let end = self.expect_sym("}")?;
                Ok(Expr::new(ExprKind::Label { label, annotation, body: Box::new(body) }, start.to(end)))
            }
            Tok::Ident(s) if PrimOp::from_name(&s).is_some() && *self.peek_at(1) == Tok::Sym("(") => {
                self.bump();
                let op = PrimOp::from_name(&s).unwrap();
                let args = self.exprlist()?;
                Ok(Expr::new(ExprKind::Prim { op, args }, start.to(self.prev_span())))
            }
            Tok::Ident(_) => {
                let (x, span) = self.ident()?;
                Ok(Expr::new(ExprKind::Var(x), span))
            }
            _ => self.error(&["expression"]),
        }
    }

    fn arrow_annotation(&mut self, span: Span) -> PResult<ArrowType> {
        match self.ty()? {
            TypeExpr::Arrow(a) => Ok(*a),
            _ => Err(ParseError::Invalid { span, message: "annotation must be a function type".into() }),
        }
    }

    fn ty(&mut self) -> PResult<TypeExpr> {
        let mut parts = vec![self.type_atom()?];
        while self.eat_sym("\\/") {
            parts.push(self.type_atom()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { normalize_type(&TypeExpr::Or(parts)) })
    }

    fn type_atom(&mut self) -> PResult<TypeExpr> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let t = match s.as_str() {
                    "int" => TypeExpr::int(),
                    "bool" => TypeExpr::bool(),
                    "str" => TypeExpr::str(),
                    "bot" => TypeExpr::Bottom,
                    "never" => TypeExpr::Never,
                    _ if s.starts_with(|c: char| c.is_ascii_uppercase()) => TypeExpr::Var(TypeVar(s.clone())),
                    _ => return self.error(&["type"]),
                };
                self.bump();
                Ok(t)
            }
            Tok::Sym("(") => {
                self.bump();
                let t = self.ty()?;
                self.expect_sym(")")?;
                Ok(t)
            }
            Tok::Sym("[") => {
                let pre = self.constraints()?;
                self.expect_sym("(")?;
                let mut params = Vec::new();
                if !self.eat_sym(")") {
                    loop {
                        params.push(self.ty()?);
                        if self.eat_sym(")") {
                            break;
                        }
                        if !self.eat_sym(",") {
                            return self.error(&["`,`", "`)`"]);
                        }
                    }
                }
                self.expect_sym("->")?;
                let result = self.ty()?;
                let post = self.constraints()?;
                Ok(TypeExpr::arrow(ArrowType::new(pre, params, result, post)))
            }
            _ => self.error(&["type"]),
        }
    }

    fn constraints(&mut self) -> PResult<ConstraintSet> {
        self.expect_sym("[")?;
        let mut out = ConstraintSet::new();
        if self.eat_sym("]") {
            return Ok(out);
        }
        loop {
            let span = self.span();
            let var = match self.peek().clone() {
                Tok::Ident(s) if s.starts_with(|c: char| c.is_ascii_uppercase()) => {
                    self.bump();
                    TypeVar(s)
                }
                _ => return self.error(&["type variable"]),
            };
            self.expect_sym("<|")?;
            let record = self.record()?;
            if out.contains(&var) {
                return Err(ParseError::Invalid { span, message: format!("duplicate constraint for {var}") });
            }
            out.insert(var, record);
            if self.eat_sym("]") {
                return Ok(out);
            }
            if !self.eat_sym(",") {
                return self.error(&["`,`", "`]`"]);
            }
        }
    }

    fn record(&mut self) -> PResult<RecordType> {
        self.expect_sym("{")?;
        let mut rec = RecordType::new();
        if self.eat_sym("}") {
            return Ok(rec);
        }
        loop {
            let (field, span) = self.field_name()?;
            self.expect_sym(":")?;
            let t = self.ty()?;
            if rec.fields.insert(field.clone(), t).is_some() {
                return Err(ParseError::Invalid { span, message: format!("duplicate field `{field}`") });
            }
            if self.eat_sym("}") {
                return Ok(rec);
            }
            if !self.eat_sym(",") {
                return self.error(&["`,`", "`}`"]);
            }
        }
    }
}

/// Parses a source program. Location literals are rejected.
pub fn parse_program(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error(&["end of input"]);
    }
    Ok(e)
}

/// Parses a standalone type, e.g. `int \/ bot`.
pub fn parse_type(text: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return p.error(&["end of input"]);
    }
    Ok(t)
}

/// Parses a constraint set written `[X <| {a: int}, ...]`.
pub fn parse_constraints(text: &str) -> Result<ConstraintSet, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let c = p.constraints()?;
    if *p.peek() != Tok::Eof {
        return p.error(&["end of input"]);
    }
    Ok(c)
}

// ---------------------------------------------------------------------------
// Printing

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Base(b) => f.write_str(b.name()),
            TypeExpr::Var(v) => write!(f, "{v}"),
            TypeExpr::Bottom => f.write_str("bot"),
            TypeExpr::Never => f.write_str("never"),
            TypeExpr::Arrow(a) => write!(f, "{a}"),
            TypeExpr::Or(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" \\/ ")?;
                    }
                    match p {
                        TypeExpr::Or(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ArrowType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pre)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ") -> {} {}", self.result, self.post)
    }
}

impl fmt::Display for RecordType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, t)) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}: {t}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("[ ]");
        }
        f.write_str("[")?;
        for (i, (v, r)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} <| {r}")?;
        }
        f.write_str("]")
    }
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const::Int(n) => write!(f, "{n}"),
            Const::Bool(b) => write!(f, "{b}"),
            Const::Str(s) => {
                f.write_char('"')?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        c => f.write_char(c)?,
                    }
                }
                f.write_char('"')
            }
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Var(x) => f.write_str(x),
            Subject::Loc(l) => write!(f, "@loc{}", l.0),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_print(self))
    }
}

/// Renders an expression in surface syntax. Locations print as `@loc<n>`,
/// which the parser rejects; such output is for traces only.
pub fn pretty_print(e: &Expr) -> String {
    let mut out = String::new();
    print_expr(e, &mut out);
    out
}

/// Forms that extend greedily to the right and need parentheses before a postfix.
fn is_open_ended(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Let { .. }
            | ExprKind::If { .. }
            | ExprKind::IfHasAttr { .. }
            | ExprKind::Break { .. }
            | ExprKind::New
            | ExprKind::SetField { .. }
            | ExprKind::Const(_)
            | ExprKind::Loc(_)
    )
}

fn print_list(args: &[Expr], out: &mut String) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        print_expr(a, out);
    }
    out.push(')');
}

fn print_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Var(x) => out.push_str(x),
        ExprKind::Const(c) => {
            let _ = write!(out, "{c}");
        }
        ExprKind::Loc(l) => {
            let _ = write!(out, "@loc{}", l.0);
        }
        ExprKind::Func { params, annotation, body } => {
            let _ = write!(out, "func({}): {annotation} {{ ", params.join(", "));
            print_expr(body, out);
            out.push_str(" }");
        }
        ExprKind::Label { label, annotation, body } => {
            let _ = write!(out, "label {label} : {annotation} {{ ");
            print_expr(body, out);
            out.push_str(" }");
        }
        ExprKind::Let { name, bound, body } => {
            let _ = write!(out, "let {name} = ");
            print_expr(bound, out);
            out.push_str(" in ");
            print_expr(body, out);
        }
        ExprKind::Apply { callee, args } => {
            if is_open_ended(callee) {
                out.push('(');
                print_expr(callee, out);
                out.push(')');
            } else {
                print_expr(callee, out);
            }
            print_list(args, out);
        }
        ExprKind::Prim { op, args } => {
            out.push_str(op.name());
            print_list(args, out);
        }
        ExprKind::If { cond, then_branch, else_branch } => {
            out.push_str("if ");
            print_expr(cond, out);
            out.push_str(" then ");
            print_expr(then_branch, out);
            out.push_str(" else ");
            print_expr(else_branch, out);
        }
        ExprKind::IfHasAttr { subject, attr, then_branch, else_branch } => {
            let _ = write!(out, "ifhasattr({subject}, {attr}) then ");
            print_expr(then_branch, out);
            out.push_str(" else ");
            print_expr(else_branch, out);
        }
        ExprKind::Break { label, arg } => {
            let _ = write!(out, "break {label} ");
            print_expr(arg, out);
        }
        ExprKind::New => out.push_str("new"),
        ExprKind::SetField { target, field, value } => {
            let _ = write!(out, "{target}.{field} := ");
            print_expr(value, out);
        }
        ExprKind::GetField { target, field } => {
            let _ = write!(out, "{target}.{field}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_let_with_field_update() {
        let e = parse_program("let x = new in x.a := 1").unwrap();
        let expected =
            Expr::let_in("x", Expr::new_object(), Expr::set_field(Subject::Var("x".into()), "a", Expr::int(1)));
        assert_eq!(e, expected);
    }

    #[test]
    fn parses_if() {
        let e = parse_program("if true then 1 else 2").unwrap();
        assert_eq!(e, Expr::if_then_else(Expr::bool(true), Expr::int(1), Expr::int(2)));
    }

    #[test]
    fn parses_immediate_application() {
        let e = parse_program("func(x): [ ](int) -> int [ ] { x }(3)").unwrap();
        let ann = ArrowType::new(ConstraintSet::new(), vec![TypeExpr::int()], TypeExpr::int(), ConstraintSet::new());
        let expected = Expr::apply(Expr::func(&["x"], ann, Expr::var("x")), vec![Expr::int(3)]);
        assert_eq!(e, expected);
        // Token-stream comparison against the printed form of the hand-built tree.
        let toks = |s: &str| lex(s).unwrap().into_iter().map(|(t, _)| t).collect::<Vec<_>>();
        assert_eq!(toks(&pretty_print(&expected)), toks("func(x): [ ](int) -> int [ ] { x }(3)"));
    }

    #[test]
    fn prints_basic_forms() {
        assert_eq!(pretty_print(&Expr::new_object()), "new");
        assert_eq!(pretty_print(&Expr::break_to("n", Expr::int(5))), "break n 5");
    }

    #[test]
    fn rejects_location_literal() {
        let err = parse_program("let x = @loc0 in x").unwrap_err();
        assert!(matches!(err, ParseError::LocationLiteral { .. }));
        assert_eq!(err.span().start, 8);
    }

    #[test]
    fn errors_carry_spans_inside_input() {
        for src in ["let x = in 3", "if 1 then", "func(x): int { x }", "x.", "(1", "let 5 = 1 in 2", "\"abc"] {
            let err = parse_program(src).unwrap_err();
            assert!(err.span().end <= src.len(), "{src}: {err:?}");
        }
    }

    #[test]
    fn comments_are_skipped() {
        let e = parse_program("# leading\nlet x = 1 # trailing\nin x").unwrap();
        assert_eq!(e, Expr::let_in("x", Expr::int(1), Expr::var("x")));
        assert_eq!(e.span.line, 2);
    }

    #[test]
    fn type_syntax() {
        let t = parse_type("str \\/ (int \\/ bot) \\/ int").unwrap();
        assert_eq!(t, TypeExpr::or([TypeExpr::int(), TypeExpr::str(), TypeExpr::Bottom]));
        let a = parse_type("[X <| {a: int \\/ bot}](X, int) -> bool [X <| {a: int}]").unwrap();
        assert_eq!(a.to_string(), "[X <| {a: int \\/ bot}](X, int) -> bool [X <| {a: int}]");
        assert!(parse_type("x").is_err());
        assert_eq!(parse_type("never").unwrap(), TypeExpr::Never);
        assert_eq!(parse_type("never \\/ int").unwrap(), TypeExpr::int());
    }

    #[test]
    fn label_annotation_shape_is_checked() {
        assert!(parse_program("label n : [ ]( ) -> int [ ] { break n 7 }").is_ok());
        assert!(parse_program("label n : [ ](int) -> int [ ] { 7 }").is_err());
        assert!(parse_program("label n : [X <| {}]() -> int [ ] { 7 }").is_err());
    }

    #[test]
    fn callee_parenthesized_when_open_ended() {
        let e = Expr::apply(Expr::let_in("f", Expr::var("g"), Expr::var("f")), vec![Expr::int(1)]);
        let s = pretty_print(&e);
        assert_eq!(s, "(let f = g in f)(1)");
        assert_eq!(parse_program(&s).unwrap(), e);
    }
}
