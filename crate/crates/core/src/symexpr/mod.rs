//! Complex-valued symbolic expressions: parsing, calculus, simplification,
//! evaluation and sampled comparison.

mod binding;
mod diff;
mod equiv;
mod eval;
mod expr;
mod number;
mod parse;
mod print;
mod simplify;
mod subs;

pub use binding::{Binding, BindingError};
pub use diff::differentiate;
pub use equiv::{equivalent, is_zero_by_sampling, EquivError, EquivOptions, SampleDomain, Verdict, DEFAULT_INTERVAL, DEFAULT_SEED};
pub use eval::{eval, EvalError, Program};
pub use expr::{conj, cos, cot, exp, im, ln, re, sin, sqrt, sum_content, tan, Expr, Func, Node};
pub use number::{format_float_literal, parse_decimal, Number};
pub use parse::{parse, ParseError};
pub use simplify::{factor_terms, simplify, split_complex};
pub use subs::{substitute, substitute_one, substitute_values};

impl Expr {
    pub fn free_symbol_list(&self) -> Vec<String> {
        self.free_symbols().into_iter().collect()
    }
}
