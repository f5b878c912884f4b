//! Recursive-descent parser for the scalar expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := number | identifier | identifier '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use std::collections::BTreeSet;
use std::fmt;

use super::lexer::{tokenize, Token, TokenKind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Function {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Function {
    pub const ALL: [Function; 7] = [
        Function::Sin,
        Function::Cos,
        Function::Tan,
        Function::Exp,
        Function::Log,
        Function::Sqrt,
        Function::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Tan => "tan",
            Function::Exp => "exp",
            Function::Log => "log",
            Function::Sqrt => "sqrt",
            Function::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Function> {
        Function::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprNode {
    Constant(f64),
    Variable(String),
    Unary(UnaryOp, Box<ExprNode>),
    Binary(BinaryOp, Box<ExprNode>, Box<ExprNode>),
    Call(Function, Vec<ExprNode>),
}

impl ExprNode {
    pub fn binary(op: BinaryOp, l: ExprNode, r: ExprNode) -> Self {
        ExprNode::Binary(op, Box::new(l), Box::new(r))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: ExprNode) -> Self {
        ExprNode::Unary(UnaryOp::Neg, Box::new(e))
    }

    pub fn var(name: &str) -> Self {
        ExprNode::Variable(name.to_string())
    }
}

/// Fully parenthesized rendering; parsing it back reproduces the tree.
impl fmt::Display for ExprNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprNode::Constant(c) => write!(f, "{c:?}"),
            ExprNode::Variable(v) => f.write_str(v),
            ExprNode::Unary(UnaryOp::Neg, c) => write!(f, "(-{c})"),
            ExprNode::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            ExprNode::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

struct Parser<'t, 'a> {
    tokens: &'t [Token<'a>],
    pos: usize,
    end_offset: usize,
}

impl<'t, 'a> Parser<'t, 'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end_offset, |t| t.position)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn eat_operator(&mut self, ops: &[&str]) -> Option<&'a str> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Operator && ops.contains(&t.text) => {
                self.pos += 1;
                Some(self.tokens[self.pos - 1].text)
            }
            _ => None,
        }
    }

    fn eat(&mut self, kind: TokenKind) -> bool {
        if self.peek().is_some_and(|t| t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<ExprNode> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_operator(&["+", "-"]) {
            let rhs = self.term()?;
            let op = if op == "+" {
                BinaryOp::Add
            } else {
                BinaryOp::Sub
            };
            lhs = ExprNode::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<ExprNode> {
        let mut lhs = self.factor()?;
        while let Some(op) = self.eat_operator(&["*", "/"]) {
            let rhs = self.factor()?;
            let op = if op == "*" {
                BinaryOp::Mul
            } else {
                BinaryOp::Div
            };
            lhs = ExprNode::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<ExprNode> {
        if self.eat_operator(&["-"]).is_some() {
            return Ok(ExprNode::neg(self.factor()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprNode> {
        let base = self.atom()?;
        if self.eat_operator(&["^"]).is_some() {
            let exponent = self.factor()?;
            return Ok(ExprNode::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprNode> {
        let Some(&tok) = self.peek() else {
            return self.error("unexpected end of input");
        };
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                match tok.text.parse::<f64>() {
                    Ok(v) => Ok(ExprNode::Constant(v)),
                    Err(_) => Err(Error::Parse {
                        offset: tok.position,
                        message: format!("malformed number {:?}", tok.text),
                    }),
                }
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if !self.eat(TokenKind::LeftParen) {
                    return Ok(ExprNode::Variable(tok.text.to_string()));
                }
                let Some(func) = Function::from_name(tok.text) else {
                    return Err(Error::Parse {
                        offset: tok.position,
                        message: format!("unknown function `{}`", tok.text),
                    });
                };
                let mut args = vec![self.expr()?];
                while self.eat(TokenKind::Comma) {
                    args.push(self.expr()?);
                }
                if !self.eat(TokenKind::RightParen) {
                    return self.error("expected `)` to close argument list");
                }
                if args.len() != func.arity() {
                    return Err(Error::Parse {
                        offset: tok.position,
                        message: format!(
                            "`{}` takes {} argument(s), got {}",
                            func.name(),
                            func.arity(),
                            args.len()
                        ),
                    });
                }
                Ok(ExprNode::Call(func, args))
            }
            TokenKind::LeftParen => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(TokenKind::RightParen) {
                    return self.error("unbalanced parentheses: expected `)`");
                }
                Ok(inner)
            }
            _ => self.error(format!("unexpected token {:?}", tok.text)),
        }
    }
}

/// Parses a complete token stream.
pub fn parse(tokens: &[Token<'_>]) -> Result<ExprNode> {
    let end_offset = tokens.last().map_or(0, |t| t.position + t.text.len());
    let mut p = Parser {
        tokens,
        pos: 0,
        end_offset,
    };
    if tokens.is_empty() {
        return p.error("empty expression");
    }
    let e = p.expr()?;
    if p.pos != tokens.len() {
        return p.error(format!("unexpected token {:?}", tokens[p.pos].text));
    }
    Ok(e)
}

/// Tokenizes and parses `text`.
pub fn parse_str(text: &str) -> Result<ExprNode> {
    parse(&tokenize(text)?)
}

/// Names of all variables referenced by `e`.
pub fn free_variables(e: &ExprNode) -> BTreeSet<String> {
    fn walk(e: &ExprNode, out: &mut BTreeSet<String>) {
        match e {
            ExprNode::Constant(_) => {}
            ExprNode::Variable(v) => {
                out.insert(v.clone());
            }
            ExprNode::Unary(_, c) => walk(c, out),
            ExprNode::Binary(_, l, r) => {
                walk(l, out);
                walk(r, out);
            }
            ExprNode::Call(_, args) => args.iter().for_each(|a| walk(a, out)),
        }
    }
    let mut out = BTreeSet::new();
    walk(e, &mut out);
    out
}
