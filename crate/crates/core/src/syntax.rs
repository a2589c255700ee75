//! Concrete syntax for formulas.
//!
//! ```text
//! fml   := imp
//! imp   := or ("->" imp)?
//! or    := and ("|" and)*
//! and   := unary ("&" unary)*
//! unary := "~" unary | "[" INT "]" unary | "<" INT ">" unary | atom
//! atom  := "F" | "p" | "p" INT | "(" fml ")"
//! ```
//!
//! `p` is the reserved variable (index 0), `pK` is source variable `K >= 1`.
//! Rendering never introduces `~` or `<i>`: those are parsed into their
//! definitions, so `render` prints the underlying `->`/`[i]` structure with the
//! fewest parentheses the precedences allow.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::ParseError;
use crate::formula::{Formula, FormulaStore, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Arrow,
    Or,
    And,
    Not,
    LBrack,
    RBrack,
    LAngle,
    RAngle,
    LParen,
    RParen,
    False,
    Var(u32),
    Int(u32),
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, pos: usize, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn digits(&mut self) -> Result<Option<u32>, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Ok(None);
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        text.parse()
            .map(Some)
            .map_err(|_| self.err(start, "integer too large"))
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        self.pos += 1;
        let tok = match c {
            b'-' if self.src.get(self.pos) == Some(&b'>') => {
                self.pos += 1;
                Tok::Arrow
            }
            b'|' => Tok::Or,
            b'&' => Tok::And,
            b'~' => Tok::Not,
            b'[' => Tok::LBrack,
            b']' => Tok::RBrack,
            b'<' => Tok::LAngle,
            b'>' => Tok::RAngle,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'F' => Tok::False,
            b'p' => match self.digits()? {
                None => Tok::Var(0),
                Some(0) => return Err(self.err(start, "`p0` is not a variable; write `p`")),
                Some(k) => Tok::Var(k),
            },
            b'0'..=b'9' => {
                self.pos -= 1;
                Tok::Int(self.digits()?.expect("at least one digit"))
            }
            _ => {
                let ch = std::str::from_utf8(&self.src[start..])
                    .ok()
                    .and_then(|s| s.chars().next())
                    .unwrap_or('?');
                return Err(self.err(start, format!("unexpected character `{ch}`")));
            }
        };
        Ok((tok, start))
    }
}

struct Parser<'a, 's> {
    lexer: Lexer<'a>,
    peeked: (Tok, usize),
    arity: u32,
    store: &'s mut FormulaStore,
}

impl Parser<'_, '_> {
    fn bump(&mut self) -> Result<(Tok, usize), ParseError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.peeked, next))
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        let (tok, pos) = self.bump()?;
        if tok == want {
            Ok(())
        } else {
            Err(self.lexer.err(pos, format!("expected {what}")))
        }
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.peeked.0 == Tok::Arrow {
            self.bump()?;
            let rhs = self.imp()?;
            return Ok(self.store.imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.and()?;
        while self.peeked.0 == Tok::Or {
            self.bump()?;
            let rhs = self.and()?;
            acc = self.store.or(acc, rhs);
        }
        Ok(acc)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.peeked.0 == Tok::And {
            self.bump()?;
            let rhs = self.unary()?;
            acc = self.store.and(acc, rhs);
        }
        Ok(acc)
    }

    fn modality(&mut self, close: Tok, what: &str) -> Result<u32, ParseError> {
        let (tok, pos) = self.bump()?;
        let Tok::Int(index) = tok else {
            return Err(self.lexer.err(pos, "expected modality index"));
        };
        if index == 0 || index > self.arity {
            return Err(ParseError::ModalityOutOfRange {
                pos,
                index,
                arity: self.arity,
            });
        }
        self.expect(close, what)?;
        Ok(index)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peeked.0 {
            Tok::Not => {
                self.bump()?;
                let f = self.unary()?;
                Ok(self.store.not(f))
            }
            Tok::LBrack => {
                self.bump()?;
                let i = self.modality(Tok::RBrack, "`]`")?;
                let f = self.unary()?;
                Ok(self.store.boxed(i, f))
            }
            Tok::LAngle => {
                self.bump()?;
                let i = self.modality(Tok::RAngle, "`>`")?;
                let f = self.unary()?;
                Ok(self.store.dia(i, f))
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let (tok, pos) = self.bump()?;
        match tok {
            Tok::False => Ok(self.store.bottom()),
            Tok::Var(k) => Ok(self.store.var(k)),
            Tok::LParen => {
                let f = self.imp()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::End => Err(self.lexer.err(pos, "unexpected end of input")),
            _ => Err(self.lexer.err(pos, "expected a formula")),
        }
    }
}

/// Parses `text` into `store`, rejecting modalities outside `1..=arity`.
pub fn parse(store: &mut FormulaStore, text: &str, arity: u32) -> Result<Formula, ParseError> {
    assert!(arity >= 1, "arity must be at least 1");
    let mut lexer = Lexer {
        src: text.as_bytes(),
        pos: 0,
    };
    let peeked = lexer.next()?;
    let mut parser = Parser {
        lexer,
        peeked,
        arity,
        store,
    };
    let f = parser.imp()?;
    let (tok, pos) = parser.peeked;
    if tok != Tok::End {
        return Err(parser.lexer.err(pos, "trailing input"));
    }
    Ok(f)
}

const PREC_IMP: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;

/// Prints `f` in the concrete syntax.
pub fn render(store: &FormulaStore, f: Formula) -> String {
    render_with(store, f, &HashMap::new())
}

/// Like [`render`], but any node found in `names` is printed as its name.
/// Names are treated as atoms.
pub fn render_with(store: &FormulaStore, f: Formula, names: &HashMap<Formula, String>) -> String {
    let mut out = String::new();
    write_formula(store, f, names, 0, &mut out);
    out
}

fn write_formula(
    store: &FormulaStore,
    f: Formula,
    names: &HashMap<Formula, String>,
    ctx: u8,
    out: &mut String,
) {
    if let Some(name) = names.get(&f) {
        out.push_str(name);
        return;
    }
    let (prec, lhs_prec, rhs_prec, op) = match store.node(f) {
        Node::Bottom => {
            out.push('F');
            return;
        }
        Node::Var(0) => {
            out.push('p');
            return;
        }
        Node::Var(k) => {
            let _ = write!(out, "p{k}");
            return;
        }
        Node::Box(i, body) => {
            let _ = write!(out, "[{i}]");
            write_formula(store, body, names, PREC_UNARY, out);
            return;
        }
        Node::Imp(..) => (PREC_IMP, PREC_OR, PREC_IMP, " -> "),
        Node::Or(..) => (PREC_OR, PREC_OR, PREC_AND, " | "),
        Node::And(..) => (PREC_AND, PREC_AND, PREC_UNARY, " & "),
    };
    let (Node::Imp(l, r) | Node::Or(l, r) | Node::And(l, r)) = store.node(f) else {
        unreachable!()
    };
    let wrap = prec < ctx;
    if wrap {
        out.push('(');
    }
    write_formula(store, l, names, lhs_prec, out);
    out.push_str(op);
    write_formula(store, r, names, rhs_prec, out);
    if wrap {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let mut s = FormulaStore::new();
        let f = parse(&mut s, "p1 -> [1]p1", 2).unwrap();
        let p1 = s.var(1);
        let b = s.boxed(1, p1);
        assert_eq!(f, s.imp(p1, b));

        let f = parse(&mut s, "~p", 1).unwrap();
        let p = s.p();
        let bot = s.bottom();
        assert_eq!(f, s.imp(p, bot));

        let f = parse(&mut s, "<2>F", 2).unwrap();
        let nb = s.not(bot);
        let b = s.boxed(2, nb);
        assert_eq!(f, s.not(b));
    }

    #[test]
    fn render_examples() {
        let mut s = FormulaStore::new();
        let p1 = s.var(1);
        let b = s.boxed(1, p1);
        assert_eq!(render(&s, b), "[1]p1");
        let p2 = s.var(2);
        let n2 = s.not(p2);
        let f = s.imp(p1, n2);
        assert_eq!(render(&s, f), "p1 -> p2 -> F");
        let p = s.p();
        let pp = s.and(p, p);
        assert_eq!(render(&s, pp), "p & p");
    }

    #[test]
    fn precedence_and_associativity() {
        let mut s = FormulaStore::new();
        let f = parse(&mut s, "p1 & p2 | p3 -> p1 -> p2", 1).unwrap();
        assert_eq!(render(&s, f), "p1 & p2 | p3 -> p1 -> p2");
        let g = parse(&mut s, "(p1 -> p2) -> p3", 1).unwrap();
        assert_eq!(render(&s, g), "(p1 -> p2) -> p3");
        let h = parse(&mut s, "p1 & (p2 & p3)", 1).unwrap();
        assert_eq!(render(&s, h), "p1 & (p2 & p3)");
        let k = parse(&mut s, "[1](p1 | p2) & ~[2]p", 2).unwrap();
        assert_eq!(render(&s, k), "[1](p1 | p2) & ([2]p -> F)");
    }

    #[test]
    fn errors_carry_positions() {
        let mut s = FormulaStore::new();
        assert_eq!(
            parse(&mut s, "[3]p", 2),
            Err(ParseError::ModalityOutOfRange {
                pos: 1,
                index: 3,
                arity: 2
            })
        );
        assert!(matches!(
            parse(&mut s, "[0]p", 2),
            Err(ParseError::ModalityOutOfRange { index: 0, .. })
        ));
        assert!(matches!(
            parse(&mut s, "p1 &", 2),
            Err(ParseError::Syntax { pos: 4, .. })
        ));
        assert!(matches!(
            parse(&mut s, "p1 p2", 2),
            Err(ParseError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(
            parse(&mut s, "q", 2),
            Err(ParseError::Syntax { pos: 0, .. })
        ));
        assert!(parse(&mut s, "(p1", 2).is_err());
        assert!(parse(&mut s, "p0", 2).is_err());
    }

    #[test]
    fn names_are_atoms() {
        let mut s = FormulaStore::new();
        let f = parse(&mut s, "[1](p1 -> p2) & p3", 2).unwrap();
        let inner = parse(&mut s, "p1 -> p2", 2).unwrap();
        let names = HashMap::from([(inner, "$X".to_string())]);
        assert_eq!(render_with(&s, f, &names), "[1]$X & p3");
    }
}
