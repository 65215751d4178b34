//! The model text format: lexer, parser with positioned diagnostics,
//! canonical serializer, and structural equality up to renaming.
//!
//! ```text
//! lattice x:[-3,3] t:[-1,3] c:1 arrow:forward
//! var x domain {0,1} at (-2,1) controllable observable kind:input
//! var a domain {-1,1} at (-2,2) observable kind:output
//! mech a from (lam_l, x) {
//!   (0,0) -> {-1: 1/2, 1: 1/2};
//! }
//! constraint (a, b) { (-1,-1) -> 2; }
//! prior { (0,0) -> 1/4; }
//! ```
//!
//! `#` starts a comment. Probabilities and weights are rationals; decimal
//! literals are only accepted in decimal mode. Unlisted constraint and prior
//! tuples carry weight zero; kernels must be complete.

use crate::equivalence::Experiment;
use crate::lattice::{Arrow, Lattice, Region, Site};
use crate::model::{
    Constraint, Diagnostic, Mechanism, Model, Prior, Severity, VarKind, Variable,
};
use crate::rational::{format_q, parse_decimal, parse_rational, Q};
use crate::transform::rename_variables;
use num::Zero;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TokKind {
    Ident,
    Number,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Semi,
    Arrow,
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokKind,
    text: String,
    line: usize,
    col: usize,
}

fn lex(src: &str, file: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let mut toks = Vec::new();
    let mut errors = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0usize;
    let mut line = 1usize;
    let mut col = 1usize;
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        let simple = match c {
            '(' => Some(TokKind::LParen),
            ')' => Some(TokKind::RParen),
            '{' => Some(TokKind::LBrace),
            '}' => Some(TokKind::RBrace),
            '[' => Some(TokKind::LBracket),
            ']' => Some(TokKind::RBracket),
            ',' => Some(TokKind::Comma),
            ':' => Some(TokKind::Colon),
            ';' => Some(TokKind::Semi),
            _ => None,
        };
        if let Some(kind) = simple {
            toks.push(Token {
                kind,
                text: c.to_string(),
                line: tline,
                col: tcol,
            });
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '-' {
            if i + 1 < chars.len() && chars[i + 1] == '>' {
                toks.push(Token {
                    kind: TokKind::Arrow,
                    text: "->".to_string(),
                    line: tline,
                    col: tcol,
                });
                advance(&mut i, &mut line, &mut col);
                advance(&mut i, &mut line, &mut col);
                continue;
            }
            if i + 1 >= chars.len() || !chars[i + 1].is_ascii_digit() {
                errors.push(Diagnostic {
                    file: file.to_string(),
                    line: tline,
                    col: tcol,
                    code: "E_UNEXPECTED_CHARACTER".to_string(),
                    message: "`-` must start a negative number or `->`".to_string(),
                    severity: Severity::Error,
                });
                advance(&mut i, &mut line, &mut col);
                continue;
            }
        }
        if c == '-' || c.is_ascii_digit() {
            let mut text = String::new();
            text.push(c);
            advance(&mut i, &mut line, &mut col);
            while i < chars.len() && chars[i].is_ascii_digit() {
                text.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            if i < chars.len() && (chars[i] == '.' || chars[i] == '/') {
                let sep = chars[i];
                if i + 1 < chars.len()
                    && (chars[i + 1].is_ascii_digit()
                        || (sep == '/' && chars[i + 1] == '-'))
                {
                    text.push(sep);
                    advance(&mut i, &mut line, &mut col);
                    if i < chars.len() && chars[i] == '-' {
                        text.push('-');
                        advance(&mut i, &mut line, &mut col);
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        text.push(chars[i]);
                        advance(&mut i, &mut line, &mut col);
                    }
                }
            }
            toks.push(Token {
                kind: TokKind::Number,
                text,
                line: tline,
                col: tcol,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut text = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                text.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            toks.push(Token {
                kind: TokKind::Ident,
                text,
                line: tline,
                col: tcol,
            });
            continue;
        }
        errors.push(Diagnostic {
            file: file.to_string(),
            line: tline,
            col: tcol,
            code: "E_UNEXPECTED_CHARACTER".to_string(),
            message: format!("unexpected character `{c}`"),
            severity: Severity::Error,
        });
        advance(&mut i, &mut line, &mut col);
    }
    if errors.is_empty() {
        Ok(toks)
    } else {
        Err(errors)
    }
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    file: &'a str,
    decimal: bool,
    diags: Vec<Diagnostic>,
    positions: BTreeMap<String, (usize, usize)>,
}

const TOP_KEYWORDS: [&str; 5] = ["lattice", "var", "mech", "constraint", "prior"];

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        match self.peek() {
            Some(t) => (t.line, t.col),
            None => self
                .toks
                .last()
                .map(|t| (t.line, t.col + t.text.len()))
                .unwrap_or((1, 1)),
        }
    }

    fn error_at(&mut self, line: usize, col: usize, code: &str, message: String) {
        self.diags.push(Diagnostic {
            file: self.file.to_string(),
            line,
            col,
            code: code.to_string(),
            message,
            severity: Severity::Error,
        });
    }

    fn error_here(&mut self, code: &str, message: String) {
        let (line, col) = self.here();
        self.error_at(line, col, code, message);
    }

    /// Skip ahead to the next top-level keyword at brace depth zero.
    fn recover(&mut self) {
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            match t.kind {
                TokKind::LBrace => depth += 1,
                TokKind::RBrace => depth -= 1,
                TokKind::Ident
                    if depth <= 0 && TOP_KEYWORDS.contains(&t.text.as_str()) =>
                {
                    return;
                }
                _ => {}
            }
            self.pos += 1;
        }
    }

    fn expect(&mut self, kind: TokKind, what: &str) -> Option<Token> {
        match self.peek() {
            Some(t) if t.kind == kind => self.next(),
            Some(t) => {
                let (line, col, text) = (t.line, t.col, t.text.clone());
                self.error_at(
                    line,
                    col,
                    "E_UNEXPECTED_TOKEN",
                    format!("expected {what}, found `{text}`"),
                );
                None
            }
            None => {
                self.error_here("E_UNEXPECTED_END", format!("expected {what}"));
                None
            }
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Option<()> {
        let t = self.expect(TokKind::Ident, &format!("`{word}`"))?;
        if t.text == word {
            Some(())
        } else {
            self.error_at(
                t.line,
                t.col,
                "E_UNEXPECTED_TOKEN",
                format!("expected `{word}`, found `{}`", t.text),
            );
            None
        }
    }

    fn integer(&mut self, what: &str) -> Option<i64> {
        let t = self.expect(TokKind::Number, what)?;
        if t.text.contains('.') || t.text.contains('/') {
            self.error_at(
                t.line,
                t.col,
                "E_EXPECTED_INTEGER",
                format!("{what} must be an integer, found `{}`", t.text),
            );
            return None;
        }
        match t.text.parse::<i64>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.error_at(
                    t.line,
                    t.col,
                    "E_EXPECTED_INTEGER",
                    format!("`{}` does not fit in a 64-bit integer", t.text),
                );
                None
            }
        }
    }

    /// A probability or weight literal. Decimal forms only pass in decimal
    /// mode.
    fn number(&mut self, what: &str) -> Option<Q> {
        let t = self.expect(TokKind::Number, what)?;
        if t.text.contains('.') {
            if !self.decimal {
                self.error_at(
                    t.line,
                    t.col,
                    "E_DECIMAL_LITERAL",
                    format!(
                        "decimal literal `{}` needs decimal mode; use a rational like p/q",
                        t.text
                    ),
                );
                return None;
            }
            match parse_decimal(&t.text) {
                Some(q) => Some(q),
                None => {
                    self.error_at(
                        t.line,
                        t.col,
                        "E_BAD_NUMBER",
                        format!("`{}` is not a valid decimal", t.text),
                    );
                    None
                }
            }
        } else {
            match parse_rational(&t.text) {
                Some(q) => Some(q),
                None => {
                    self.error_at(
                        t.line,
                        t.col,
                        "E_BAD_NUMBER",
                        format!("`{}` is not a valid rational", t.text),
                    );
                    None
                }
            }
        }
    }

    /// A value label: identifier or number token, kept as raw text.
    fn value_label(&mut self, what: &str) -> Option<Token> {
        match self.peek() {
            Some(t) if t.kind == TokKind::Ident || t.kind == TokKind::Number => self.next(),
            Some(t) => {
                let (line, col, text) = (t.line, t.col, t.text.clone());
                self.error_at(
                    line,
                    col,
                    "E_UNEXPECTED_TOKEN",
                    format!("expected {what}, found `{text}`"),
                );
                None
            }
            None => {
                self.error_here("E_UNEXPECTED_END", format!("expected {what}"));
                None
            }
        }
    }

    fn site(&mut self) -> Option<Site> {
        self.expect(TokKind::LParen, "`(`")?;
        let x = self.integer("site x coordinate")?;
        self.expect(TokKind::Comma, "`,`")?;
        let t = self.integer("site t coordinate")?;
        self.expect(TokKind::RParen, "`)`")?;
        Some(Site::new(x, t))
    }

    fn lattice(&mut self) -> Option<Lattice> {
        self.expect_keyword("x")?;
        self.expect(TokKind::Colon, "`:`")?;
        self.expect(TokKind::LBracket, "`[`")?;
        let x_min = self.integer("x lower bound")?;
        self.expect(TokKind::Comma, "`,`")?;
        let x_max = self.integer("x upper bound")?;
        self.expect(TokKind::RBracket, "`]`")?;
        self.expect_keyword("t")?;
        self.expect(TokKind::Colon, "`:`")?;
        self.expect(TokKind::LBracket, "`[`")?;
        let t_min = self.integer("t lower bound")?;
        self.expect(TokKind::Comma, "`,`")?;
        let t_max = self.integer("t upper bound")?;
        self.expect(TokKind::RBracket, "`]`")?;
        self.expect_keyword("c")?;
        self.expect(TokKind::Colon, "`:`")?;
        let c = self.integer("signal speed")?;
        self.expect_keyword("arrow")?;
        self.expect(TokKind::Colon, "`:`")?;
        let arrow_tok = self.expect(TokKind::Ident, "`forward` or `none`")?;
        let arrow = match arrow_tok.text.as_str() {
            "forward" => Arrow::Forward,
            "none" => Arrow::None,
            other => {
                self.error_at(
                    arrow_tok.line,
                    arrow_tok.col,
                    "E_UNEXPECTED_TOKEN",
                    format!("arrow must be `forward` or `none`, found `{other}`"),
                );
                return None;
            }
        };
        if x_min > x_max || t_min > t_max {
            self.error_at(
                arrow_tok.line,
                arrow_tok.col,
                "E_BAD_BOUNDS",
                "lattice bounds must satisfy min <= max".to_string(),
            );
            return None;
        }
        if c < 0 {
            self.error_at(
                arrow_tok.line,
                arrow_tok.col,
                "E_BAD_BOUNDS",
                "signal speed must be nonnegative".to_string(),
            );
            return None;
        }
        Some(Lattice {
            x_min,
            x_max,
            t_min,
            t_max,
            c,
            arrow,
        })
    }

    fn variable(&mut self) -> Option<Variable> {
        let name_tok = self.expect(TokKind::Ident, "variable name")?;
        let name = name_tok.text.clone();
        self.positions
            .entry(name.clone())
            .or_insert((name_tok.line, name_tok.col));
        self.expect_keyword("domain")?;
        self.expect(TokKind::LBrace, "`{`")?;
        let mut domain = Vec::new();
        loop {
            let v = self.value_label("domain value")?;
            domain.push(v.text);
            match self.peek().map(|t| t.kind) {
                Some(TokKind::Comma) => {
                    self.next();
                }
                Some(TokKind::RBrace) => {
                    self.next();
                    break;
                }
                _ => {
                    self.error_here("E_UNEXPECTED_TOKEN", "expected `,` or `}`".to_string());
                    return None;
                }
            }
        }
        // Location: `at (x,t)`, `at ((x,t),(x,t))`, or `nowhere`.
        let region = match self.peek() {
            Some(t) if t.kind == TokKind::Ident && t.text == "at" => {
                self.next();
                self.expect(TokKind::LParen, "`(`")?;
                let multi = matches!(self.peek(), Some(t) if t.kind == TokKind::LParen);
                if multi {
                    let mut sites = Vec::new();
                    loop {
                        sites.push(self.site()?);
                        match self.peek().map(|t| t.kind) {
                            Some(TokKind::Comma) => {
                                self.next();
                            }
                            Some(TokKind::RParen) => {
                                self.next();
                                break;
                            }
                            _ => {
                                self.error_here(
                                    "E_UNEXPECTED_TOKEN",
                                    "expected `,` or `)`".to_string(),
                                );
                                return None;
                            }
                        }
                    }
                    Some(Region::from_sites(sites))
                } else {
                    let x = self.integer("site x coordinate")?;
                    self.expect(TokKind::Comma, "`,`")?;
                    let t = self.integer("site t coordinate")?;
                    self.expect(TokKind::RParen, "`)`")?;
                    Some(Region::single(x, t))
                }
            }
            Some(t) if t.kind == TokKind::Ident && t.text == "nowhere" => {
                self.next();
                None
            }
            _ => {
                self.error_here(
                    "E_UNEXPECTED_TOKEN",
                    "expected `at (x,t)` or `nowhere`".to_string(),
                );
                return None;
            }
        };
        let mut hidden = false;
        let mut controllable = false;
        let mut observable = false;
        let mut kind: Option<VarKind> = None;
        while let Some(t) = self.peek() {
            if t.kind != TokKind::Ident {
                break;
            }
            match t.text.as_str() {
                "hidden" => {
                    hidden = true;
                    self.next();
                }
                "controllable" => {
                    controllable = true;
                    self.next();
                }
                "observable" => {
                    observable = true;
                    self.next();
                }
                "kind" => {
                    self.next();
                    self.expect(TokKind::Colon, "`:`")?;
                    let k = self.expect(TokKind::Ident, "`input` or `output`")?;
                    kind = match k.text.as_str() {
                        "input" => Some(VarKind::Input),
                        "output" => Some(VarKind::Output),
                        other => {
                            self.error_at(
                                k.line,
                                k.col,
                                "E_UNEXPECTED_TOKEN",
                                format!("kind must be `input` or `output`, found `{other}`"),
                            );
                            return None;
                        }
                    };
                }
                _ => break,
            }
        }
        let Some(kind) = kind else {
            self.error_at(
                name_tok.line,
                name_tok.col,
                "E_MISSING_KIND",
                format!("variable `{name}` does not declare kind:input or kind:output"),
            );
            return None;
        };
        Some(Variable {
            name,
            domain,
            kind,
            region,
            hidden,
            controllable,
            observable,
        })
    }

    /// `(a, b, c)` of identifiers; possibly empty.
    fn name_tuple(&mut self) -> Option<Vec<String>> {
        self.expect(TokKind::LParen, "`(`")?;
        let mut names = Vec::new();
        if matches!(self.peek(), Some(t) if t.kind == TokKind::RParen) {
            self.next();
            return Some(names);
        }
        loop {
            let t = self.expect(TokKind::Ident, "variable name")?;
            names.push(t.text);
            match self.peek().map(|t| t.kind) {
                Some(TokKind::Comma) => {
                    self.next();
                }
                Some(TokKind::RParen) => {
                    self.next();
                    break;
                }
                _ => {
                    self.error_here("E_UNEXPECTED_TOKEN", "expected `,` or `)`".to_string());
                    return None;
                }
            }
        }
        Some(names)
    }

    /// `(v1, v2)` of value labels resolved against the given domains;
    /// possibly empty for zero-arity rows.
    fn value_tuple(&mut self, domains: &[&[String]], what: &str) -> Option<Vec<usize>> {
        self.expect(TokKind::LParen, "`(`")?;
        let mut vals = Vec::new();
        if matches!(self.peek(), Some(t) if t.kind == TokKind::RParen) {
            self.next();
        } else {
            loop {
                let t = self.value_label(&format!("{what} value"))?;
                vals.push(t);
                match self.peek().map(|t| t.kind) {
                    Some(TokKind::Comma) => {
                        self.next();
                    }
                    Some(TokKind::RParen) => {
                        self.next();
                        break;
                    }
                    _ => {
                        self.error_here(
                            "E_UNEXPECTED_TOKEN",
                            "expected `,` or `)`".to_string(),
                        );
                        return None;
                    }
                }
            }
        }
        if vals.len() != domains.len() {
            let (line, col) = vals
                .first()
                .map(|t| (t.line, t.col))
                .unwrap_or_else(|| self.here());
            self.error_at(
                line,
                col,
                "E_BAD_TUPLE",
                format!(
                    "{what} tuple has {} entries, expected {}",
                    vals.len(),
                    domains.len()
                ),
            );
            return None;
        }
        let mut out = Vec::with_capacity(vals.len());
        for (tok, dom) in vals.iter().zip(domains) {
            match dom.iter().position(|d| d == &tok.text) {
                Some(i) => out.push(i),
                None => {
                    self.error_at(
                        tok.line,
                        tok.col,
                        "E_UNKNOWN_VALUE",
                        format!("`{}` is not a value of this variable", tok.text),
                    );
                    return None;
                }
            }
        }
        Some(out)
    }

    fn mechanism(&mut self, vars: &[Variable]) -> Option<Mechanism> {
        let target_tok = self.expect(TokKind::Ident, "mechanism target")?;
        let target = target_tok.text.clone();
        self.positions
            .entry(target.clone())
            .or_insert((target_tok.line, target_tok.col));
        let Some(target_var) = vars.iter().find(|v| v.name == target) else {
            self.error_at(
                target_tok.line,
                target_tok.col,
                "E_UNKNOWN_VARIABLE",
                format!("mechanism targets undeclared variable `{target}`"),
            );
            return None;
        };
        self.expect_keyword("from")?;
        let parents = self.name_tuple()?;
        let mut parent_domains: Vec<&[String]> = Vec::new();
        for p in &parents {
            match vars.iter().find(|v| v.name == *p) {
                Some(v) => parent_domains.push(&v.domain),
                None => {
                    self.error_at(
                        target_tok.line,
                        target_tok.col,
                        "E_UNKNOWN_VARIABLE",
                        format!("mechanism for `{target}` references undeclared parent `{p}`"),
                    );
                    return None;
                }
            }
        }
        self.expect(TokKind::LBrace, "`{`")?;
        let mut kernel: BTreeMap<Vec<usize>, Vec<(usize, Q)>> = BTreeMap::new();
        while !matches!(self.peek(), Some(t) if t.kind == TokKind::RBrace) {
            let (rline, rcol) = self.here();
            let row = self.value_tuple(&parent_domains, "parent")?;
            self.expect(TokKind::Arrow, "`->`")?;
            self.expect(TokKind::LBrace, "`{`")?;
            let mut dist: Vec<(usize, Q)> = Vec::new();
            loop {
                let val_tok = self.value_label("target value")?;
                let Some(val) = target_var.domain.iter().position(|d| d == &val_tok.text)
                else {
                    self.error_at(
                        val_tok.line,
                        val_tok.col,
                        "E_UNKNOWN_VALUE",
                        format!("`{}` is not a value of `{target}`", val_tok.text),
                    );
                    return None;
                };
                self.expect(TokKind::Colon, "`:`")?;
                let p = self.number("probability")?;
                if dist.iter().any(|(v, _)| *v == val) {
                    self.error_at(
                        val_tok.line,
                        val_tok.col,
                        "E_DUPLICATE_VALUE",
                        format!("value `{}` listed twice in one row", val_tok.text),
                    );
                    return None;
                }
                dist.push((val, p));
                match self.peek().map(|t| t.kind) {
                    Some(TokKind::Comma) => {
                        self.next();
                    }
                    Some(TokKind::RBrace) => {
                        self.next();
                        break;
                    }
                    _ => {
                        self.error_here(
                            "E_UNEXPECTED_TOKEN",
                            "expected `,` or `}`".to_string(),
                        );
                        return None;
                    }
                }
            }
            if matches!(self.peek(), Some(t) if t.kind == TokKind::Semi) {
                self.next();
            }
            dist.sort_by_key(|(v, _)| *v);
            if kernel.insert(row, dist).is_some() {
                self.error_at(
                    rline,
                    rcol,
                    "E_BAD_TUPLE",
                    format!("duplicate parent tuple in mechanism for `{target}`"),
                );
                return None;
            }
        }
        self.expect(TokKind::RBrace, "`}`")?;
        Some(Mechanism {
            target,
            parents,
            kernel,
        })
    }

    fn constraint(&mut self, vars: &[Variable], index: usize) -> Option<Constraint> {
        let (line, col) = self.here();
        self.positions
            .entry(format!("constraint#{index}"))
            .or_insert((line, col));
        let scope = self.name_tuple()?;
        let mut domains: Vec<&[String]> = Vec::new();
        for s in &scope {
            match vars.iter().find(|v| v.name == *s) {
                Some(v) => domains.push(&v.domain),
                None => {
                    self.error_at(
                        line,
                        col,
                        "E_UNKNOWN_VARIABLE",
                        format!("constraint references undeclared variable `{s}`"),
                    );
                    return None;
                }
            }
        }
        self.expect(TokKind::LBrace, "`{`")?;
        let mut weights: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        while !matches!(self.peek(), Some(t) if t.kind == TokKind::RBrace) {
            let (rline, rcol) = self.here();
            let row = self.value_tuple(&domains, "scope")?;
            self.expect(TokKind::Arrow, "`->`")?;
            let w = self.number("weight")?;
            if matches!(self.peek(), Some(t) if t.kind == TokKind::Semi) {
                self.next();
            }
            if weights.insert(row, w).is_some() {
                self.error_at(
                    rline,
                    rcol,
                    "E_BAD_TUPLE",
                    "duplicate tuple in constraint".to_string(),
                );
                return None;
            }
        }
        self.expect(TokKind::RBrace, "`}`")?;
        Some(Constraint { scope, weights })
    }

    fn prior(&mut self, vars: &[Variable]) -> Option<Prior> {
        let (line, col) = self.here();
        self.positions.entry("prior".to_string()).or_insert((line, col));
        let domains: Vec<&[String]> = vars
            .iter()
            .filter(|v| v.kind == VarKind::Input)
            .map(|v| v.domain.as_slice())
            .collect();
        self.expect(TokKind::LBrace, "`{`")?;
        let mut entries: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        while !matches!(self.peek(), Some(t) if t.kind == TokKind::RBrace) {
            let (rline, rcol) = self.here();
            let row = self.value_tuple(&domains, "input")?;
            self.expect(TokKind::Arrow, "`->`")?;
            let p = self.number("probability")?;
            if matches!(self.peek(), Some(t) if t.kind == TokKind::Semi) {
                self.next();
            }
            if entries.insert(row, p).is_some() {
                self.error_at(
                    rline,
                    rcol,
                    "E_BAD_TUPLE",
                    "duplicate tuple in prior".to_string(),
                );
                return None;
            }
        }
        self.expect(TokKind::RBrace, "`}`")?;
        Some(Prior { entries })
    }
}

/// Parse and validate a model. `name` is the model's display name (usually
/// the file stem); `file` labels diagnostics. Returns the model plus any
/// warnings, or the full list of errors and warnings.
pub fn parse_model(
    src: &str,
    name: &str,
    file: &str,
    decimal: bool,
) -> Result<(Model, Vec<Diagnostic>), Vec<Diagnostic>> {
    let toks = lex(src, file)?;
    let mut p = Parser {
        toks,
        pos: 0,
        file,
        decimal,
        diags: Vec::new(),
        positions: BTreeMap::new(),
    };
    let mut lattice: Option<Lattice> = None;
    let mut variables: Vec<Variable> = Vec::new();
    let mut mechanisms: Vec<Mechanism> = Vec::new();
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut prior: Option<Prior> = None;

    while let Some(t) = p.peek() {
        let (line, col, text) = (t.line, t.col, t.text.clone());
        if t.kind != TokKind::Ident {
            p.error_at(
                line,
                col,
                "E_UNEXPECTED_TOKEN",
                format!("expected a declaration, found `{text}`"),
            );
            p.recover();
            continue;
        }
        match text.as_str() {
            "lattice" => {
                p.next();
                if lattice.is_some() {
                    p.error_at(
                        line,
                        col,
                        "E_DUPLICATE_BLOCK",
                        "lattice is declared twice".to_string(),
                    );
                    p.recover();
                    continue;
                }
                p.positions.entry("lattice".to_string()).or_insert((line, col));
                match p.lattice() {
                    Some(l) => lattice = Some(l),
                    None => p.recover(),
                }
            }
            "var" => {
                p.next();
                match p.variable() {
                    Some(v) => variables.push(v),
                    None => p.recover(),
                }
            }
            "mech" => {
                p.next();
                match p.mechanism(&variables) {
                    Some(m) => mechanisms.push(m),
                    None => p.recover(),
                }
            }
            "constraint" => {
                p.next();
                let idx = constraints.len();
                match p.constraint(&variables, idx) {
                    Some(c) => constraints.push(c),
                    None => p.recover(),
                }
            }
            "prior" => {
                p.next();
                if prior.is_some() {
                    p.error_at(
                        line,
                        col,
                        "E_DUPLICATE_BLOCK",
                        "prior is declared twice".to_string(),
                    );
                    p.recover();
                    continue;
                }
                match p.prior(&variables) {
                    Some(pr) => prior = Some(pr),
                    None => p.recover(),
                }
            }
            other => {
                p.error_at(
                    line,
                    col,
                    "E_UNEXPECTED_TOKEN",
                    format!("expected a declaration, found `{other}`"),
                );
                p.next();
                p.recover();
            }
        }
    }

    let model = Model {
        name: name.to_string(),
        lattice,
        variables,
        mechanisms,
        constraints,
        prior: prior.unwrap_or(Prior {
            entries: BTreeMap::new(),
        }),
        decimal,
    };

    let mut diags = p.diags;
    let had_syntax_errors = !diags.is_empty();
    for issue in model.validate() {
        let (line, col) = issue
            .subject
            .as_deref()
            .and_then(|s| p.positions.get(s))
            .or_else(|| p.positions.get("prior"))
            .copied()
            .unwrap_or((1, 1));
        diags.push(Diagnostic {
            file: file.to_string(),
            line,
            col,
            code: issue.code.to_string(),
            message: issue.message,
            severity: issue.severity,
        });
    }
    let has_errors =
        had_syntax_errors || diags.iter().any(|d| d.severity == Severity::Error);
    if has_errors {
        Err(diags)
    } else {
        Ok((model, diags))
    }
}

/// Parse an experiments file: a sequence of
/// `experiment { name: value, ... }` blocks.
pub fn parse_experiments(src: &str, file: &str) -> Result<Vec<Experiment>, Vec<Diagnostic>> {
    let toks = lex(src, file)?;
    let mut p = Parser {
        toks,
        pos: 0,
        file,
        decimal: false,
        diags: Vec::new(),
        positions: BTreeMap::new(),
    };
    let mut out = Vec::new();
    while p.peek().is_some() {
        if p.expect_keyword("experiment").is_none() {
            return Err(p.diags);
        }
        if p.expect(TokKind::LBrace, "`{`").is_none() {
            return Err(p.diags);
        }
        let mut exp: Experiment = BTreeMap::new();
        while !matches!(p.peek(), Some(t) if t.kind == TokKind::RBrace) {
            let Some(name) = p.expect(TokKind::Ident, "setting name") else {
                return Err(p.diags);
            };
            if p.expect(TokKind::Colon, "`:`").is_none() {
                return Err(p.diags);
            }
            let Some(val) = p.value_label("setting value") else {
                return Err(p.diags);
            };
            if exp.insert(name.text.clone(), val.text).is_some() {
                p.error_at(
                    name.line,
                    name.col,
                    "E_BAD_TUPLE",
                    format!("setting `{}` assigned twice", name.text),
                );
                return Err(p.diags);
            }
            if matches!(p.peek(), Some(t) if t.kind == TokKind::Comma) {
                p.next();
            }
        }
        if p.expect(TokKind::RBrace, "`}`").is_none() {
            return Err(p.diags);
        }
        out.push(exp);
    }
    Ok(out)
}

fn region_text(region: &Option<Region>) -> String {
    match region {
        None => "nowhere".to_string(),
        Some(r) => {
            let sites: Vec<&Site> = r.iter().collect();
            if sites.len() == 1 {
                format!("at ({},{})", sites[0].x, sites[0].t)
            } else {
                let inner = sites
                    .iter()
                    .map(|s| format!("({},{})", s.x, s.t))
                    .collect::<Vec<_>>()
                    .join(",");
                format!("at ({inner})")
            }
        }
    }
}

fn var_text(v: &Variable) -> String {
    let mut s = format!(
        "var {} domain {{{}}} {}",
        v.name,
        v.domain.join(","),
        region_text(&v.region)
    );
    if v.hidden {
        s.push_str(" hidden");
    }
    if v.controllable {
        s.push_str(" controllable");
    }
    if v.observable {
        s.push_str(" observable");
    }
    s.push_str(match v.kind {
        VarKind::Input => " kind:input",
        VarKind::Output => " kind:output",
    });
    s
}

fn tuple_text(labels: &[&Vec<String>], key: &[usize]) -> String {
    let inner = key
        .iter()
        .enumerate()
        .map(|(i, &v)| labels[i][v].clone())
        .collect::<Vec<_>>()
        .join(",");
    format!("({inner})")
}

/// Canonical text rendering: variables sorted by name, mechanism parents and
/// constraint scopes sorted with their tables re-keyed, zero rows dropped,
/// probabilities always in lowest-terms rational form, one trailing newline.
pub fn canonical_text(m: &Model) -> String {
    let mut out = String::new();
    if let Some(l) = &m.lattice {
        let arrow = match l.arrow {
            Arrow::Forward => "forward",
            Arrow::None => "none",
        };
        out.push_str(&format!(
            "lattice x:[{},{}] t:[{},{}] c:{} arrow:{arrow}\n",
            l.x_min, l.x_max, l.t_min, l.t_max, l.c
        ));
    }

    let mut var_order: Vec<usize> = (0..m.variables.len()).collect();
    var_order.sort_by(|&a, &b| m.variables[a].name.cmp(&m.variables[b].name));
    for &i in &var_order {
        out.push_str(&var_text(&m.variables[i]));
        out.push('\n');
    }

    let mut mech_order: Vec<usize> = (0..m.mechanisms.len()).collect();
    mech_order.sort_by(|&a, &b| m.mechanisms[a].target.cmp(&m.mechanisms[b].target));
    for &i in &mech_order {
        let mech = &m.mechanisms[i];
        let target_var = m.var(&mech.target).expect("validated target");
        // Sort parents by name, stable in the original order for duplicates,
        // and re-key the kernel rows through the same permutation.
        let mut parent_perm: Vec<usize> = (0..mech.parents.len()).collect();
        parent_perm.sort_by(|&a, &b| {
            mech.parents[a].cmp(&mech.parents[b]).then(a.cmp(&b))
        });
        let sorted_parents: Vec<String> =
            parent_perm.iter().map(|&j| mech.parents[j].clone()).collect();
        let parent_domains: Vec<&Vec<String>> = sorted_parents
            .iter()
            .map(|p| &m.var(p).expect("validated parent").domain)
            .collect();
        let mut rows: BTreeMap<Vec<usize>, Vec<(usize, Q)>> = BTreeMap::new();
        for (key, dist) in &mech.kernel {
            let new_key: Vec<usize> = parent_perm.iter().map(|&j| key[j]).collect();
            let mut d: Vec<(usize, Q)> = dist
                .iter()
                .filter(|(_, p)| !p.is_zero())
                .cloned()
                .collect();
            d.sort_by_key(|(v, _)| *v);
            rows.insert(new_key, d);
        }
        out.push_str(&format!(
            "mech {} from ({}) {{\n",
            mech.target,
            sorted_parents.join(",")
        ));
        for (key, dist) in &rows {
            let entries = dist
                .iter()
                .map(|(v, p)| format!("{}: {}", target_var.domain[*v], format_q(p)))
                .collect::<Vec<_>>()
                .join(", ");
            out.push_str(&format!(
                "  {} -> {{{entries}}};\n",
                tuple_text(&parent_domains, key)
            ));
        }
        out.push_str("}\n");
    }

    let mut constraint_blocks: Vec<String> = Vec::new();
    for c in &m.constraints {
        let mut scope_perm: Vec<usize> = (0..c.scope.len()).collect();
        scope_perm.sort_by(|&a, &b| c.scope[a].cmp(&c.scope[b]).then(a.cmp(&b)));
        let sorted_scope: Vec<String> =
            scope_perm.iter().map(|&j| c.scope[j].clone()).collect();
        let domains: Vec<&Vec<String>> = sorted_scope
            .iter()
            .map(|s| &m.var(s).expect("validated scope").domain)
            .collect();
        let mut rows: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        for (key, w) in &c.weights {
            if w.is_zero() {
                continue;
            }
            let new_key: Vec<usize> = scope_perm.iter().map(|&j| key[j]).collect();
            rows.insert(new_key, w.clone());
        }
        let mut block = format!("constraint ({}) {{\n", sorted_scope.join(","));
        for (key, w) in &rows {
            block.push_str(&format!(
                "  {} -> {};\n",
                tuple_text(&domains, key),
                format_q(w)
            ));
        }
        block.push_str("}\n");
        constraint_blocks.push(block);
    }
    constraint_blocks.sort();
    for b in &constraint_blocks {
        out.push_str(b);
    }

    let inputs_sorted: Vec<usize> = var_order
        .iter()
        .copied()
        .filter(|&i| m.variables[i].kind == VarKind::Input)
        .collect();
    if !inputs_sorted.is_empty() {
        // The prior is keyed by declaration order; re-key it to the sorted
        // input order used by the canonical text.
        let decl_inputs: Vec<usize> = (0..m.variables.len())
            .filter(|&i| m.variables[i].kind == VarKind::Input)
            .collect();
        let slot_of: BTreeMap<usize, usize> = decl_inputs
            .iter()
            .enumerate()
            .map(|(slot, &vi)| (vi, slot))
            .collect();
        let domains: Vec<&Vec<String>> = inputs_sorted
            .iter()
            .map(|&i| &m.variables[i].domain)
            .collect();
        let mut rows: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        for (key, p) in &m.prior.entries {
            if p.is_zero() {
                continue;
            }
            let new_key: Vec<usize> =
                inputs_sorted.iter().map(|&vi| key[slot_of[&vi]]).collect();
            rows.insert(new_key, p.clone());
        }
        out.push_str("prior {\n");
        for (key, p) in &rows {
            out.push_str(&format!(
                "  {} -> {};\n",
                tuple_text(&domains, key),
                format_q(p)
            ));
        }
        out.push_str("}\n");
    }
    out
}

/// Beyond this many candidate renamings the bijection search falls back to a
/// single name-guided attempt.
pub const RENAMING_SEARCH_LIMIT: u64 = 40_320;

fn signature_key(v: &Variable) -> String {
    format!(
        "{:?}|{}|{}|{}{}{}",
        v.kind,
        v.domain.join(","),
        region_text(&v.region),
        v.hidden as u8,
        v.controllable as u8,
        v.observable as u8
    )
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..n {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Structural identity up to renaming variables within matching signature
/// groups: some bijection makes the canonical texts byte-identical.
///
/// The search is exhaustive while the number of candidate bijections stays
/// within [`RENAMING_SEARCH_LIMIT`]; beyond that only a name-guided pairing
/// is tried, so a negative answer is then inconclusive.
pub fn canonical_equal(a: &Model, b: &Model) -> bool {
    let mut a_groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for v in &a.variables {
        a_groups.entry(signature_key(v)).or_default().push(v.name.clone());
    }
    let mut b_groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for v in &b.variables {
        b_groups.entry(signature_key(v)).or_default().push(v.name.clone());
    }
    if a_groups.len() != b_groups.len() {
        return false;
    }
    let mut groups: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    for (key, av) in &a_groups {
        match b_groups.get(key) {
            Some(bv) if bv.len() == av.len() => groups.push((av.clone(), bv.clone())),
            _ => return false,
        }
    }

    let mut candidates: u64 = 1;
    for (av, _) in &groups {
        let mut f: u64 = 1;
        for k in 2..=av.len() as u64 {
            f = f.saturating_mul(k);
        }
        candidates = candidates.saturating_mul(f);
        if candidates > RENAMING_SEARCH_LIMIT {
            break;
        }
    }

    let b_text = canonical_text(b);
    let try_map = |map: &BTreeMap<String, String>| -> bool {
        match rename_variables(a, map) {
            Some(renamed) => canonical_text(&renamed) == b_text,
            None => false,
        }
    };

    if candidates > RENAMING_SEARCH_LIMIT {
        // Name-guided single attempt: identical names pair up first, the
        // rest pair in declaration order.
        let mut map = BTreeMap::new();
        for (av, bv) in &groups {
            let mut b_left: Vec<&String> = bv.iter().collect();
            let mut unpaired: Vec<&String> = Vec::new();
            for an in av {
                if let Some(pos) = b_left.iter().position(|bn| *bn == an) {
                    map.insert(an.clone(), b_left.remove(pos).clone());
                } else {
                    unpaired.push(an);
                }
            }
            for (an, bn) in unpaired.into_iter().zip(b_left) {
                map.insert(an.clone(), bn.clone());
            }
        }
        return try_map(&map);
    }

    fn search(
        groups: &[(Vec<String>, Vec<String>)],
        idx: usize,
        map: &mut BTreeMap<String, String>,
        try_map: &impl Fn(&BTreeMap<String, String>) -> bool,
    ) -> bool {
        if idx == groups.len() {
            return try_map(map);
        }
        let (av, bv) = &groups[idx];
        for perm in permutations(av.len()) {
            for (i, an) in av.iter().enumerate() {
                map.insert(an.clone(), bv[perm[i]].clone());
            }
            if search(groups, idx + 1, map, try_map) {
                return true;
            }
        }
        for an in av {
            map.remove(an);
        }
        false
    }
    let mut map = BTreeMap::new();
    search(&groups, 0, &mut map, &try_map)
}
