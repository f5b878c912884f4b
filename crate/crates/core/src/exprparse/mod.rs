//! Scalar expressions for user-supplied potentials.

pub mod eval;
pub mod lexer;
pub mod parser;

pub use eval::{eval_expr, eval_with, expr_scalar_field, ExprField};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{free_variables, parse, parse_str, BinaryOp, ExprNode, Function, UnaryOp};
