//! Concrete text syntax: lexing, parsing, and rendering of formulas and
//! probability queries.
//!
//! Grammar (precedence low to high, binaries left-associative):
//!
//! ```text
//! formula  = or ;
//! or       = and { "|" and } ;
//! and      = chop { "&" chop } ;
//! chop     = unary { ( ";" [ bound ] | "U" [ "<=" nat ] ) unary } ;
//! unary    = "!" unary | "X" [ bound ] unary
//!          | "<>" [ bound ] unary | "[]" [ bound ] unary | primary ;
//! primary  = "true" | "false" | "empty" | "more" | "skip"
//!          | "len" "(" nat ")"
//!          | ( "keep" | "halt" | "fin" ) "(" formula ")"
//!          | ident | "(" formula ")" ;
//! bound    = "[" nat [ "," ( nat | "w" | "inf" ) ] "]" ;
//! query    = "Pr" cmp threshold "[" formula "]" ;
//! cmp      = "<" | "<=" | ">=" | ">" | "=" ;
//! threshold = nat [ "." nat | "/" nat ] ;
//! ```
//!
//! Abbreviations are resolved while parsing: `X[t]` is `X[t,t]`, bare `X`
//! is `X[1,1]`, bare `;` is `;[0,0]`, and `X[0,0] P` is `P` itself. `w` and
//! `inf` are ordinary atoms outside bound brackets. `U` is `;[1,1]`;
//! `U<=t` unfolds through the bounded-until abbreviation.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::bound::TimeBound;
use crate::formula::{
    self, Comparator, Formula, ProbQuery,
};

/// Byte range in the input text. `start <= end`, both at most the input
/// length; an empty span at the input length marks end-of-input errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    /// A character the lexer has no token for.
    BadCharacter(char),
    /// The token at the span does not fit the grammar here.
    UnexpectedToken { found: String, expected: Vec<&'static str> },
    /// Input ended where more tokens were required.
    UnexpectedEnd { expected: Vec<&'static str> },
    /// A bound `[t1,t2]` with `t1 > t2`.
    EmptyBound { lower: u32, upper: u32 },
    /// An integer literal that does not fit the bound type.
    IntOverflow,
    /// A probability threshold outside `[0, 1]`.
    ThresholdRange(String),
    /// A fractional threshold with denominator zero.
    ZeroDenominator,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ParseErrorKind,
}

impl ParseError {
    /// The expected-token set, when the error is a syntax error.
    pub fn expected(&self) -> &[&'static str] {
        match &self.kind {
            ParseErrorKind::UnexpectedToken { expected, .. }
            | ParseErrorKind::UnexpectedEnd { expected } => expected,
            _ => &[],
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: ", self.span)?;
        match &self.kind {
            ParseErrorKind::BadCharacter(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedToken { found, expected } => {
                write!(f, "unexpected {found}, expected ")?;
                write_expected(f, expected)
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                write!(f, "unexpected end of input, expected ")?;
                write_expected(f, expected)
            }
            ParseErrorKind::EmptyBound { lower, upper } => {
                write!(f, "empty bound [{lower},{upper}]: lower endpoint exceeds upper")
            }
            ParseErrorKind::IntOverflow => write!(f, "integer literal too large"),
            ParseErrorKind::ThresholdRange(t) => {
                write!(f, "threshold {t} lies outside [0, 1]")
            }
            ParseErrorKind::ZeroDenominator => write!(f, "threshold denominator is zero"),
        }
    }
}

fn write_expected(f: &mut fmt::Formatter<'_>, expected: &[&'static str]) -> fmt::Result {
    match expected {
        [] => write!(f, "nothing"),
        [single] => write!(f, "{single}"),
        _ => {
            write!(f, "one of ")?;
            for (i, e) in expected.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{e}")?;
            }
            Ok(())
        }
    }
}

impl core::error::Error for ParseError {}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    True,
    False,
    Empty,
    More,
    Skip,
    Len,
    Keep,
    Halt,
    Fin,
    Until,
    Pr,
    Next,
    Not,
    AndOp,
    OrOp,
    Semi,
    Diamond,
    Box,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Slash,
    Lt,
    Le,
    Ge,
    Gt,
    EqOp,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("identifier `{name}`"),
            Tok::Int(raw) => format!("integer `{raw}`"),
            Tok::True => "`true`".into(),
            Tok::False => "`false`".into(),
            Tok::Empty => "`empty`".into(),
            Tok::More => "`more`".into(),
            Tok::Skip => "`skip`".into(),
            Tok::Len => "`len`".into(),
            Tok::Keep => "`keep`".into(),
            Tok::Halt => "`halt`".into(),
            Tok::Fin => "`fin`".into(),
            Tok::Until => "`U`".into(),
            Tok::Pr => "`Pr`".into(),
            Tok::Next => "`X`".into(),
            Tok::Not => "`!`".into(),
            Tok::AndOp => "`&`".into(),
            Tok::OrOp => "`|`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Diamond => "`<>`".into(),
            Tok::Box => "`[]`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::EqOp => "`=`".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        let c = text[i..].chars().next().expect("in range");
        let single = |tok: Tok| (tok, 1);
        let (tok, width) = match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
                continue;
            }
            '(' => single(Tok::LParen),
            ')' => single(Tok::RParen),
            '[' if bytes.get(i + 1) == Some(&b']') => (Tok::Box, 2),
            '[' => single(Tok::LBracket),
            ']' => single(Tok::RBracket),
            ',' => single(Tok::Comma),
            '.' => single(Tok::Dot),
            '/' => single(Tok::Slash),
            ';' => single(Tok::Semi),
            '!' => single(Tok::Not),
            '&' => single(Tok::AndOp),
            '|' => single(Tok::OrOp),
            '=' => single(Tok::EqOp),
            '<' if bytes.get(i + 1) == Some(&b'>') => (Tok::Diamond, 2),
            '<' if bytes.get(i + 1) == Some(&b'=') => (Tok::Le, 2),
            '<' => single(Tok::Lt),
            '>' if bytes.get(i + 1) == Some(&b'=') => (Tok::Ge, 2),
            '>' => single(Tok::Gt),
            '0'..='9' => {
                let mut end = i;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                (Tok::Int(text[i..end].to_string()), end - i)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = i;
                while end < bytes.len()
                    && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_')
                {
                    end += 1;
                }
                let word = &text[i..end];
                let tok = match word {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    "empty" => Tok::Empty,
                    "more" => Tok::More,
                    "skip" => Tok::Skip,
                    "len" => Tok::Len,
                    "keep" => Tok::Keep,
                    "halt" => Tok::Halt,
                    "fin" => Tok::Fin,
                    "U" => Tok::Until,
                    "Pr" => Tok::Pr,
                    "X" => Tok::Next,
                    _ => Tok::Ident(word.to_string()),
                };
                (tok, end - i)
            }
            other => {
                return Err(ParseError {
                    span: SourceSpan { start, end: start + other.len_utf8() },
                    kind: ParseErrorKind::BadCharacter(other),
                })
            }
        };
        i += width;
        toks.push((tok, SourceSpan { start, end: i }));
    }
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
    /// Span used for end-of-input errors.
    end: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            end: text.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_span(&self) -> SourceSpan {
        match self.toks.get(self.pos) {
            Some((_, span)) => *span,
            None => SourceSpan { start: self.end, end: self.end },
        }
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let item = self.toks[self.pos].clone();
        self.pos += 1;
        item
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn fail<T>(&self, expected: Vec<&'static str>) -> Result<T, ParseError> {
        let span = self.peek_span();
        let kind = match self.peek() {
            Some(tok) => ParseErrorKind::UnexpectedToken {
                found: tok.describe(),
                expected,
            },
            None => ParseErrorKind::UnexpectedEnd { expected },
        };
        Err(ParseError { span, kind })
    }

    fn expect(&mut self, tok: Tok, name: &'static str) -> Result<SourceSpan, ParseError> {
        if self.peek() == Some(&tok) {
            Ok(self.bump().1)
        } else {
            self.fail(alloc::vec![name])
        }
    }

    fn nat(&mut self) -> Result<(u32, SourceSpan), ParseError> {
        match self.peek() {
            Some(Tok::Int(raw)) => {
                let raw = raw.clone();
                let span = self.bump().1;
                let value = raw.parse::<u32>().map_err(|_| ParseError {
                    span,
                    kind: ParseErrorKind::IntOverflow,
                })?;
                Ok((value, span))
            }
            _ => self.fail(alloc::vec!["integer"]),
        }
    }

    /// `[t]`, `[t1,t2]`, `[t1,w]`; caller has seen the `[`.
    fn bound_tail(&mut self, open: SourceSpan) -> Result<TimeBound, ParseError> {
        let (lower, _) = self.nat()?;
        let bound = if self.eat(&Tok::Comma) {
            match self.peek() {
                Some(Tok::Ident(name)) if name == "w" || name == "inf" => {
                    self.bump();
                    Some(TimeBound::omega_from(lower))
                }
                Some(Tok::Int(_)) => {
                    let (upper, _) = self.nat()?;
                    TimeBound::new(lower, upper)
                }
                _ => return self.fail(alloc::vec!["integer", "`w`", "`inf`"]),
            }
        } else {
            Some(TimeBound::point(lower))
        };
        let close = self.expect(Tok::RBracket, "`]`")?;
        bound.ok_or_else(|| {
            let upper = match self.toks[self.pos - 2].0 {
                Tok::Int(ref raw) => raw.parse().unwrap_or(0),
                _ => 0,
            };
            ParseError {
                span: SourceSpan { start: open.start, end: close.end },
                kind: ParseErrorKind::EmptyBound { lower, upper },
            }
        })
    }

    fn opt_bound(&mut self) -> Result<Option<TimeBound>, ParseError> {
        if self.peek() == Some(&Tok::LBracket) {
            let open = self.bump().1;
            Ok(Some(self.bound_tail(open)?))
        } else {
            Ok(None)
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.and()?;
        while self.eat(&Tok::OrOp) {
            acc = acc.or(self.and()?);
        }
        Ok(acc)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.chop()?;
        while self.eat(&Tok::AndOp) {
            acc = acc.and(self.chop()?);
        }
        Ok(acc)
    }

    fn chop(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(&Tok::Semi) {
                let bound = self.opt_bound()?.unwrap_or(TimeBound::ZERO);
                acc = acc.chop(bound, self.unary()?);
            } else if self.eat(&Tok::Until) {
                if self.eat(&Tok::Le) {
                    let (t, _) = self.nat()?;
                    acc = formula::until_leq(t, acc, self.unary()?);
                } else {
                    acc = formula::until(acc, self.unary()?);
                }
            } else {
                return Ok(acc);
            }
        }
    }

    /// `X[0,0] P` denotes `P` itself; all other bounds build a node.
    fn mk_next(bound: TimeBound, body: Formula) -> Formula {
        if bound.is_zero() {
            body
        } else {
            Formula::next(bound, body)
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.bump();
                Ok(self.unary()?.neg())
            }
            Some(Tok::Next) => {
                self.bump();
                let bound = self.opt_bound()?.unwrap_or(TimeBound::UNIT);
                Ok(Self::mk_next(bound, self.unary()?))
            }
            Some(Tok::Diamond) => {
                self.bump();
                match self.opt_bound()? {
                    Some(bound) => Ok(Self::mk_next(bound, self.unary()?)),
                    None => Ok(formula::diamond(self.unary()?)),
                }
            }
            Some(Tok::Box) => {
                self.bump();
                match self.opt_bound()? {
                    Some(bound) => {
                        let body = self.unary()?;
                        Ok(Self::mk_next(bound, body.neg()).neg())
                    }
                    None => Ok(formula::always(self.unary()?)),
                }
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::True) => {
                self.bump();
                Ok(Formula::True)
            }
            Some(Tok::False) => {
                self.bump();
                Ok(Formula::fals())
            }
            Some(Tok::Empty) => {
                self.bump();
                Ok(formula::empty())
            }
            Some(Tok::More) => {
                self.bump();
                Ok(formula::more())
            }
            Some(Tok::Skip) => {
                self.bump();
                Ok(formula::skip())
            }
            Some(Tok::Len) => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let (n, _) = self.nat()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(formula::len(n))
            }
            Some(Tok::Keep) | Some(Tok::Halt) | Some(Tok::Fin) => {
                let (tok, _) = self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let body = self.or()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(match tok {
                    Tok::Keep => formula::keep(body),
                    Tok::Halt => formula::halt(body),
                    _ => formula::fin(body),
                })
            }
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.bump();
                Ok(Formula::atom(name))
            }
            Some(Tok::LParen) => {
                self.bump();
                let body = self.or()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(body)
            }
            _ => self.fail(alloc::vec![
                "`!`", "`X`", "`<>`", "`[]`", "`(`", "identifier", "keyword",
            ]),
        }
    }

    fn finish<T>(&mut self, value: T) -> Result<T, ParseError> {
        if self.pos == self.toks.len() {
            Ok(value)
        } else {
            self.fail(alloc::vec!["end of input"])
        }
    }

    fn comparator(&mut self) -> Result<Comparator, ParseError> {
        let cmp = match self.peek() {
            Some(Tok::Lt) => Comparator::Lt,
            Some(Tok::Le) => Comparator::Le,
            Some(Tok::Ge) => Comparator::Ge,
            Some(Tok::Gt) => Comparator::Gt,
            Some(Tok::EqOp) => Comparator::Eq,
            _ => return self.fail(alloc::vec!["`<`", "`<=`", "`>=`", "`>`", "`=`"]),
        };
        self.bump();
        Ok(cmp)
    }

    fn big(&mut self) -> Result<(BigInt, usize, SourceSpan), ParseError> {
        match self.peek() {
            Some(Tok::Int(raw)) => {
                let raw = raw.clone();
                let span = self.bump().1;
                let value = BigInt::parse_bytes(raw.as_bytes(), 10).expect("digits");
                Ok((value, raw.len(), span))
            }
            _ => self.fail(alloc::vec!["integer"]),
        }
    }

    /// Decimal (`0.25`), fraction (`1/4`), or integer threshold.
    fn threshold(&mut self) -> Result<(BigRational, SourceSpan), ParseError> {
        let (whole, _, start) = self.big()?;
        let mut span = start;
        let value = if self.eat(&Tok::Dot) {
            let (frac, digits, frac_span) = self.big()?;
            span.end = frac_span.end;
            let mut scale = BigInt::one();
            for _ in 0..digits {
                scale *= 10;
            }
            BigRational::new(whole * &scale + frac, scale)
        } else if self.eat(&Tok::Slash) {
            let (denom, _, denom_span) = self.big()?;
            span.end = denom_span.end;
            if denom.is_zero() {
                return Err(ParseError {
                    span,
                    kind: ParseErrorKind::ZeroDenominator,
                });
            }
            BigRational::new(whole, denom)
        } else {
            BigRational::from_integer(whole)
        };
        Ok((value, span))
    }
}

/// Parse a formula; the whole input must be consumed.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.or()?;
    p.finish(f)
}

/// Parse a probability-bound query `Pr<cmp><threshold> [ <formula> ]`.
pub fn parse_query(text: &str) -> Result<ProbQuery, ParseError> {
    let mut p = Parser::new(text)?;
    p.expect(Tok::Pr, "`Pr`")?;
    let comparator = p.comparator()?;
    let (threshold, tspan) = p.threshold()?;
    p.expect(Tok::LBracket, "`[`")?;
    let body = p.or()?;
    p.expect(Tok::RBracket, "`]`")?;
    let query = ProbQuery::new(comparator, threshold, body).map_err(|e| match e {
        crate::formula::QueryError::ThresholdRange(t) => ParseError {
            span: tspan,
            kind: ParseErrorKind::ThresholdRange(ratio_text(&t)),
        },
    })?;
    p.finish(query)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Exact rational as text: integers bare, otherwise `numer/denom`.
pub fn ratio_text(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

const LVL_OR: u8 = 0;
const LVL_AND: u8 = 1;
const LVL_CHOP: u8 = 2;
const LVL_UNARY: u8 = 3;

/// Render a formula so that parsing the output returns a structurally equal
/// AST. Only primary-level sugar is used on output: `false` for `!true` and
/// `empty` for `!X[1,1] true`; all bounds are printed in full.
pub fn render(f: &Formula) -> String {
    let mut out = String::new();
    render_prec(f, LVL_OR, &mut out);
    out
}

fn render_prec(f: &Formula, level: u8, out: &mut String) {
    if f.is_false() {
        out.push_str("false");
        return;
    }
    if *f == formula::empty() {
        out.push_str("empty");
        return;
    }
    let own = match f {
        Formula::Or(..) => LVL_OR,
        Formula::And(..) => LVL_AND,
        Formula::Chop(..) => LVL_CHOP,
        Formula::Neg(..) | Formula::Next(..) => LVL_UNARY,
        Formula::True | Formula::Atom(_) => {
            match f {
                Formula::True => out.push_str("true"),
                Formula::Atom(name) => out.push_str(name),
                _ => unreachable!(),
            }
            return;
        }
    };
    let wrap = own < level;
    if wrap {
        out.push('(');
    }
    match f {
        Formula::Or(l, r) => {
            render_prec(l, LVL_OR, out);
            out.push_str(" | ");
            render_prec(r, LVL_AND, out);
        }
        Formula::And(l, r) => {
            render_prec(l, LVL_AND, out);
            out.push_str(" & ");
            render_prec(r, LVL_CHOP, out);
        }
        Formula::Chop(l, b, r) => {
            render_prec(l, LVL_CHOP, out);
            if b.is_zero() {
                out.push_str(" ; ");
            } else {
                out.push_str(" ;");
                let _ = fmt::Write::write_fmt(out, format_args!("{b}"));
                out.push(' ');
            }
            render_prec(r, LVL_UNARY, out);
        }
        Formula::Neg(inner) => {
            out.push('!');
            render_prec(inner, LVL_UNARY, out);
        }
        Formula::Next(b, inner) => {
            out.push('X');
            let _ = fmt::Write::write_fmt(out, format_args!("{b}"));
            out.push(' ');
            render_prec(inner, LVL_UNARY, out);
        }
        _ => unreachable!(),
    }
    if wrap {
        out.push(')');
    }
}

/// Render a query so that parsing the output returns an equal query.
pub fn render_query(q: &ProbQuery) -> String {
    format!(
        "Pr{}{} [ {} ]",
        q.comparator,
        ratio_text(&q.threshold),
        render(&q.body)
    )
}
