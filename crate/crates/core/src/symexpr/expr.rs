use std::cmp::Ordering;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_traits::{One, ToPrimitive};

use super::number::Number;

/// Elementary functions known to the expression language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Cot,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Conj,
    Re,
    Im,
}

impl Func {
    pub const ALL: [Func; 11] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Cot,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
        Func::Conj,
        Func::Re,
        Func::Im,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Cot => "cot",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Conj => "conj",
            Func::Re => "re",
            Func::Im => "im",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Node kinds of an expression tree.
///
/// `Add` and `Mul` are n-ary, flattened and sorted; `Pole` marks a division by
/// zero produced during construction or substitution.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(Number),
    I,
    Pi,
    Sym(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Expr),
    Func(Func, Expr),
    Pole,
}

#[derive(Debug)]
struct Inner {
    node: Node,
    hash: u64,
}

/// Immutable, canonicalised, complex-valued symbolic expression.
///
/// All constructors go through the canonicalising builders below, so two
/// expressions built from the same algebra compare equal structurally
/// regardless of argument order. Symbols are treated as real-valued.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl Expr {
    fn from_node(node: Node) -> Expr {
        let mut h = DefaultHasher::new();
        hash_node(&node, &mut h);
        Expr(Arc::new(Inner {
            hash: h.finish(),
            node,
        }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    // ---- atoms -------------------------------------------------------------

    pub fn number(n: Number) -> Expr {
        Expr::from_node(Node::Num(n))
    }

    pub fn int(n: i64) -> Expr {
        Expr::number(Number::int(n))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::number(Number::ratio(n, d))
    }

    pub fn float(x: f64) -> Expr {
        Expr::number(Number::Float(x))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn i() -> Expr {
        Expr::from_node(Node::I)
    }

    pub fn pi() -> Expr {
        Expr::from_node(Node::Pi)
    }

    pub fn pole() -> Expr {
        Expr::from_node(Node::Pole)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::from_node(Node::Sym(Arc::from(name)))
    }

    // ---- queries -----------------------------------------------------------

    pub fn as_number(&self) -> Option<&Number> {
        match self.node() {
            Node::Num(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self.node() {
            Node::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_number().is_some_and(Number::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_number().is_some_and(Number::is_one)
    }

    pub fn is_number(&self) -> bool {
        self.as_number().is_some()
    }

    pub fn is_pole(&self) -> bool {
        matches!(self.node(), Node::Pole)
    }

    pub fn contains_pole(&self) -> bool {
        self.is_pole() || self.children().iter().any(Expr::contains_pole)
    }

    pub fn children(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(c) | Node::Mul(c) => c.clone(),
            Node::Pow(b, e) => vec![b.clone(), e.clone()],
            Node::Func(_, a) => vec![a.clone()],
            _ => Vec::new(),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Expr::size).sum::<usize>()
    }

    /// Symbols left unbound in the expression (`i` and `pi` are constants).
    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Sym(s) => {
                out.insert(s.to_string());
            }
            _ => {
                for c in self.children() {
                    c.collect_symbols(out);
                }
            }
        }
    }

    pub fn depends_on(&self, symbol: &str) -> bool {
        match self.node() {
            Node::Sym(s) => &**s == symbol,
            Node::Add(c) | Node::Mul(c) => c.iter().any(|x| x.depends_on(symbol)),
            Node::Pow(b, e) => b.depends_on(symbol) || e.depends_on(symbol),
            Node::Func(_, a) => a.depends_on(symbol),
            _ => false,
        }
    }

    /// Splits a term into its numeric coefficient and the remaining factor.
    pub fn split_coeff(&self) -> (Number, Expr) {
        match self.node() {
            Node::Num(n) => (n.clone(), Expr::one()),
            Node::Mul(fs) => match fs[0].node() {
                Node::Num(n) => {
                    let rest = if fs.len() == 2 {
                        fs[1].clone()
                    } else {
                        Expr::from_node(Node::Mul(fs[1..].to_vec()))
                    };
                    (n.clone(), rest)
                }
                _ => (Number::one(), self.clone()),
            },
            _ => (Number::one(), self.clone()),
        }
    }

    /// `(base, exponent)` view; non-powers have exponent 1.
    pub fn as_base_exp(&self) -> (Expr, Expr) {
        match self.node() {
            Node::Pow(b, e) => (b.clone(), e.clone()),
            _ => (self.clone(), Expr::one()),
        }
    }

    /// Whether a leading minus sign can be pulled out of the expression.
    pub fn has_negative_sign(&self) -> bool {
        match self.node() {
            Node::Num(n) => n.is_negative(),
            Node::Mul(_) => self.split_coeff().0.is_negative(),
            Node::Add(ts) => ts[0].has_negative_sign(),
            _ => false,
        }
    }

    /// Structural real-valuedness, with every symbol taken as real.
    pub fn is_real(&self) -> bool {
        match self.node() {
            Node::Num(_) | Node::Pi | Node::Sym(_) => true,
            Node::I | Node::Pole => false,
            Node::Add(c) | Node::Mul(c) => c.iter().all(Expr::is_real),
            Node::Pow(b, e) => {
                (b.is_real() && e.as_number().is_some_and(Number::is_integer))
                    || (b.is_positive() && e.is_real())
            }
            Node::Func(f, a) => match f {
                Func::Sin | Func::Cos | Func::Tan | Func::Cot | Func::Exp => a.is_real(),
                Func::Ln => a.is_positive(),
                Func::Sqrt => a.is_positive(),
                Func::Abs | Func::Re | Func::Im => true,
                Func::Conj => a.is_real(),
            },
        }
    }

    /// Conservative strict positivity test.
    pub fn is_positive(&self) -> bool {
        match self.node() {
            Node::Num(n) => !n.is_negative() && !n.is_zero(),
            Node::Pi => true,
            Node::Mul(c) => c.iter().all(Expr::is_positive),
            Node::Add(c) => c.iter().all(Expr::is_positive),
            Node::Pow(b, e) => b.is_positive() && e.is_real(),
            Node::Func(Func::Exp, a) => a.is_real(),
            _ => false,
        }
    }

    // ---- canonical builders -----------------------------------------------

    /// Canonical n-ary sum: flattens, folds constants, collects like terms and
    /// distributes a bare numeric coefficient over a sum.
    pub fn add_all<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut constant = Number::zero();
        let mut collected: BTreeMap<Expr, Number> = BTreeMap::new();
        let mut queue: Vec<Expr> = terms.into_iter().collect();
        queue.reverse();
        while let Some(t) = queue.pop() {
            match t.node() {
                Node::Pole => return Expr::pole(),
                Node::Num(n) => constant = constant.add(n),
                Node::Add(children) => {
                    for c in children.iter().rev() {
                        queue.push(c.clone());
                    }
                }
                _ => {
                    let (c, rest) = t.split_coeff();
                    if let Node::Add(inner) = rest.node() {
                        for term in inner.iter().rev() {
                            queue.push(Expr::mul_all([Expr::number(c.clone()), term.clone()]));
                        }
                        continue;
                    }
                    collected
                        .entry(rest)
                        .and_modify(|acc| *acc = acc.add(&c))
                        .or_insert(c);
                }
            }
        }
        let mut out = Vec::with_capacity(collected.len() + 1);
        if !constant.is_zero() {
            out.push(Expr::number(constant.clone()));
        }
        for (rest, c) in collected {
            if c.is_zero() {
                continue;
            }
            out.push(with_coeff(c, rest));
        }
        match out.len() {
            0 => Expr::number(if constant.is_exact() {
                Number::zero()
            } else {
                constant
            }),
            1 => out.pop().unwrap(),
            _ => Expr::from_node(Node::Add(out)),
        }
    }

    /// Canonical n-ary product: flattens, folds constants, merges equal bases
    /// by adding exponents and normalises sum factors to monic form.
    pub fn mul_all<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut pending: Vec<Expr> = factors.into_iter().collect();
        for _ in 0..8 {
            let mut coeff = Number::one();
            let mut bases: BTreeMap<Expr, Vec<Expr>> = BTreeMap::new();
            let mut queue = std::mem::take(&mut pending);
            queue.reverse();
            while let Some(f) = queue.pop() {
                match f.node() {
                    Node::Pole => return Expr::pole(),
                    Node::Num(n) => coeff = coeff.mul(n),
                    Node::Mul(children) => {
                        for c in children.iter().rev() {
                            queue.push(c.clone());
                        }
                    }
                    _ => {
                        let (b, e) = f.as_base_exp();
                        bases.entry(b).or_default().push(e);
                    }
                }
            }
            if coeff.is_zero() {
                return Expr::zero();
            }
            let mut factors = Vec::with_capacity(bases.len());
            let mut unstable = false;
            for (b, es) in bases {
                let e = Expr::add_all(es);
                let p = Expr::pow(&b, &e);
                match p.node() {
                    Node::Num(_) | Node::Mul(_) | Node::Pole => unstable = true,
                    Node::Pow(pb, _) if *pb != b => unstable = true,
                    _ => {}
                }
                if let Node::Add(_) = p.node() {
                    let (c, monic) = sum_content(&p);
                    if !c.is_one() {
                        coeff = coeff.mul(&c);
                        factors.push(monic);
                        continue;
                    }
                }
                factors.push(p);
            }
            if unstable {
                pending = factors;
                pending.push(Expr::number(coeff));
                continue;
            }
            factors.sort();
            if factors.is_empty() {
                return Expr::number(coeff);
            }
            if factors.len() == 1 {
                if coeff.is_one() {
                    return factors.pop().unwrap();
                }
                if let Node::Add(ts) = factors[0].node() {
                    let c = Expr::number(coeff);
                    return Expr::add_all(ts.iter().map(|t| Expr::mul_all([c.clone(), t.clone()])));
                }
            }
            if !coeff.is_one() {
                factors.insert(0, Expr::number(coeff));
            }
            return Expr::from_node(Node::Mul(factors));
        }
        // The merge loop settles within a couple of rounds for every rewrite
        // above; fall back to an unsorted product if it did not.
        Expr::from_node(Node::Mul(pending))
    }

    pub fn pow(base: &Expr, exp: &Expr) -> Expr {
        if base.is_pole() || exp.is_pole() {
            return Expr::pole();
        }
        if let Some(n) = exp.as_number() {
            if n.is_zero() {
                return Expr::one();
            }
            if n.is_one() {
                return base.clone();
            }
        }
        match base.node() {
            Node::Num(b) => {
                if b.is_one() {
                    return Expr::one();
                }
                if let Some(n) = exp.as_number() {
                    if b.is_zero() {
                        return if n.is_negative() { Expr::pole() } else { Expr::zero() };
                    }
                    if let Some(k) = n.as_i64() {
                        return match b.powi(k) {
                            Some(v) => Expr::number(v),
                            None => Expr::pole(),
                        };
                    }
                    if let Number::Float(x) = b {
                        if *x > 0.0 {
                            return Expr::float(x.powf(n.to_f64()));
                        }
                    }
                    if let (Some(q), Number::Rational(_)) = (n.as_rational(), b) {
                        if !b.is_negative() {
                            if let Some(den) = q.denom().to_u32() {
                                if let Some(root) = b.exact_root(den) {
                                    let p = q.numer().to_i64().unwrap_or(1);
                                    if let Some(v) = root.powi(p) {
                                        return Expr::number(v);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Node::I => {
                if let Some(k) = exp.as_number().and_then(Number::as_i64) {
                    return match k.rem_euclid(4) {
                        0 => Expr::one(),
                        1 => Expr::i(),
                        2 => Expr::int(-1),
                        _ => Expr::mul_all([Expr::int(-1), Expr::i()]),
                    };
                }
            }
            Node::Pow(b2, e2) => {
                if exp.as_number().is_some_and(Number::is_integer) {
                    return Expr::pow(b2, &Expr::mul_all([e2.clone(), exp.clone()]));
                }
            }
            Node::Mul(fs) => {
                if exp.as_number().is_some_and(Number::is_integer) {
                    return Expr::mul_all(fs.iter().map(|f| Expr::pow(f, exp)));
                }
            }
            Node::Add(_) => {
                if let Some(k) = exp.as_number().and_then(Number::as_i64) {
                    let (c, monic) = sum_content(base);
                    if !c.is_one() {
                        let c_pow = match c.powi(k) {
                            Some(v) => Expr::number(v),
                            None => return Expr::pole(),
                        };
                        return Expr::mul_all([c_pow, Expr::from_node(Node::Pow(monic, exp.clone()))]);
                    }
                }
            }
            _ => {}
        }
        Expr::from_node(Node::Pow(base.clone(), exp.clone()))
    }

    pub fn powi(&self, k: i64) -> Expr {
        Expr::pow(self, &Expr::int(k))
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    /// Function application with exact special values and sign symmetry.
    pub fn apply(f: Func, arg: &Expr) -> Expr {
        if arg.is_pole() {
            return Expr::pole();
        }
        match f {
            Func::Sqrt => return Expr::pow(arg, &Expr::rational(1, 2)),
            Func::Exp => {
                if arg.is_zero() {
                    return Expr::one();
                }
                if let Node::Func(Func::Ln, inner) = arg.node() {
                    return inner.clone();
                }
                if let Some(Number::Float(x)) = arg.as_number() {
                    return Expr::float(x.exp());
                }
            }
            Func::Ln => {
                if arg.is_one() {
                    return Expr::zero();
                }
                if arg.is_zero() {
                    return Expr::pole();
                }
                if let Some(Number::Float(x)) = arg.as_number() {
                    if *x > 0.0 {
                        return Expr::float(x.ln());
                    }
                }
            }
            Func::Sin | Func::Cos | Func::Tan | Func::Cot => {
                if let Some(v) = trig_special(f, arg) {
                    return v;
                }
                if let Some(Number::Float(x)) = arg.as_number() {
                    let v = match f {
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                        Func::Tan => x.tan(),
                        _ => {
                            if x.sin() == 0.0 {
                                return Expr::pole();
                            }
                            x.cos() / x.sin()
                        }
                    };
                    return Expr::float(v);
                }
                if arg.has_negative_sign() {
                    let pos = arg.neg();
                    let inner = Expr::apply(f, &pos);
                    return if f == Func::Cos { inner } else { inner.neg() };
                }
            }
            Func::Abs => {
                if let Some(n) = arg.as_number() {
                    return Expr::number(n.abs());
                }
                match arg.node() {
                    Node::I => return Expr::one(),
                    Node::Pi => return Expr::pi(),
                    Node::Func(Func::Abs, _) => return arg.clone(),
                    _ if arg.is_positive() => return arg.clone(),
                    _ => {}
                }
            }
            Func::Conj => {
                if arg.is_real() {
                    return arg.clone();
                }
                if let Node::I = arg.node() {
                    return Expr::i().neg();
                }
            }
            Func::Re => {
                if arg.is_real() {
                    return arg.clone();
                }
                if let Node::I = arg.node() {
                    return Expr::zero();
                }
            }
            Func::Im => {
                if arg.is_real() {
                    return Expr::zero();
                }
                if let Node::I = arg.node() {
                    return Expr::one();
                }
            }
        }
        Expr::from_node(Node::Func(f, arg.clone()))
    }

    pub fn neg(&self) -> Expr {
        Expr::mul_all([Expr::int(-1), self.clone()])
    }

    /// Rebuilds this node over new children through the canonical builders.
    pub fn rebuild(&self, children: Vec<Expr>) -> Expr {
        match self.node() {
            Node::Add(_) => Expr::add_all(children),
            Node::Mul(_) => Expr::mul_all(children),
            Node::Pow(_, _) => Expr::pow(&children[0], &children[1]),
            Node::Func(f, _) => Expr::apply(*f, &children[0]),
            _ => self.clone(),
        }
    }

    /// Bottom-up rewrite with `f` applied to every rebuilt node.
    pub fn map_bottom_up(&self, f: &mut dyn FnMut(Expr) -> Expr) -> Expr {
        let kids = self.children();
        let node = if kids.is_empty() {
            self.clone()
        } else {
            let new_kids: Vec<Expr> = kids.iter().map(|k| k.map_bottom_up(f)).collect();
            if new_kids.iter().zip(&kids).all(|(a, b)| a.ptr_eq(b)) {
                self.clone()
            } else {
                self.rebuild(new_kids)
            }
        };
        f(node)
    }
}

fn with_coeff(c: Number, rest: Expr) -> Expr {
    if c.is_one() {
        return rest;
    }
    let mut fs = vec![Expr::number(c)];
    match rest.node() {
        Node::Mul(children) => fs.extend(children.iter().cloned()),
        _ => fs.push(rest),
    }
    Expr::from_node(Node::Mul(fs))
}

/// Splits a sum into `content * monic` where the monic sum's leading term has
/// coefficient one.
pub fn sum_content(sum: &Expr) -> (Number, Expr) {
    let Node::Add(terms) = sum.node() else {
        return (Number::one(), sum.clone());
    };
    let lead = terms[0].split_coeff().0;
    if lead.is_one() || lead.is_zero() {
        return (Number::one(), sum.clone());
    }
    let inv = Expr::number(lead.recip().expect("nonzero leading coefficient"));
    let monic = Expr::add_all(terms.iter().map(|t| Expr::mul_all([inv.clone(), t.clone()])));
    (lead, monic)
}

/// Exact values of trig functions at rational multiples of pi with
/// denominator 1, 2, 3, 4 or 6.
fn trig_special(f: Func, arg: &Expr) -> Option<Expr> {
    let q = pi_multiple(arg)?;
    let twelve = (q * num_rational::BigRational::from_integer(12.into())).to_integer();
    let q12 = twelve.to_i64()?.rem_euclid(24);
    let (s, c) = unit_circle(q12)?;
    let res = match f {
        Func::Sin => s,
        Func::Cos => c,
        Func::Tan => {
            if c.is_zero() {
                return Some(Expr::pole());
            }
            Expr::mul_all([s, c.recip()])
        }
        Func::Cot => {
            if s.is_zero() {
                return Some(Expr::pole());
            }
            Expr::mul_all([c, s.recip()])
        }
        _ => return None,
    };
    Some(res)
}

fn pi_multiple(arg: &Expr) -> Option<num_rational::BigRational> {
    use num_rational::BigRational;
    match arg.node() {
        Node::Num(n) if n.is_exact() && n.is_zero() => Some(BigRational::from_integer(0.into())),
        Node::Pi => Some(BigRational::one()),
        Node::Mul(fs) if fs.len() == 2 => match (fs[0].node(), fs[1].node()) {
            (Node::Num(Number::Rational(r)), Node::Pi) => {
                let twelve = r * BigRational::from_integer(12.into());
                if twelve.is_integer() {
                    Some(r.clone())
                } else {
                    None
                }
            }
            _ => None,
        },
        _ => None,
    }
}

/// `(sin, cos)` at `k * pi / 12` for the angles with closed forms.
fn unit_circle(k: i64) -> Option<(Expr, Expr)> {
    let sqrt = |n: i64| Expr::pow(&Expr::int(n), &Expr::rational(1, 2));
    let half = |e: Expr| Expr::mul_all([Expr::rational(1, 2), e]);
    // first quadrant values by twelfths
    let first = |k: i64| -> Option<(Expr, Expr)> {
        Some(match k {
            0 => (Expr::zero(), Expr::one()),
            2 => (Expr::rational(1, 2), half(sqrt(3))),
            3 => (half(sqrt(2)), half(sqrt(2))),
            4 => (half(sqrt(3)), Expr::rational(1, 2)),
            6 => (Expr::one(), Expr::zero()),
            _ => return None,
        })
    };
    let (quadrant, r) = (k / 6, k % 6);
    let (s, c) = first(r)?;
    Some(match quadrant {
        0 => (s, c),
        1 => (c, s.neg()),
        2 => (s.neg(), c.neg()),
        _ => (c.neg(), s),
    })
}

fn rank(node: &Node) -> u8 {
    match node {
        Node::Num(_) => 0,
        Node::I => 1,
        Node::Pi => 2,
        Node::Sym(_) => 3,
        Node::Func(..) => 4,
        Node::Pow(..) => 5,
        Node::Mul(_) => 6,
        Node::Add(_) => 7,
        Node::Pole => 8,
    }
}

fn hash_node<H: Hasher>(node: &Node, h: &mut H) {
    rank(node).hash(h);
    match node {
        Node::Num(n) => n.hash(h),
        Node::Sym(s) => s.hash(h),
        Node::Add(c) | Node::Mul(c) => {
            for x in c {
                x.structural_hash().hash(h);
            }
        }
        Node::Pow(b, e) => {
            b.structural_hash().hash(h);
            e.structural_hash().hash(h);
        }
        Node::Func(f, a) => {
            f.hash(h);
            a.structural_hash().hash(h);
        }
        Node::I | Node::Pi | Node::Pole => {}
    }
}

fn cmp_exponent(a: Option<&Expr>, b: Option<&Expr>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (Some(x), None) => x.cmp(&Expr::one()),
        (None, Some(y)) => Expr::one().cmp(y),
        (Some(x), Some(y)) => x.cmp(y),
    }
}

impl Ord for Expr {
    /// Canonical order: numbers, `i`, `pi`, symbols, functions, then
    /// composites; powers sort next to their base.
    fn cmp(&self, other: &Self) -> Ordering {
        if self.ptr_eq(other) {
            return Ordering::Equal;
        }
        let (a, b) = (self.node(), other.node());
        if matches!(a, Node::Pow(..)) || matches!(b, Node::Pow(..)) {
            let (ba, ea) = match a {
                Node::Pow(x, e) => (x, Some(e)),
                _ => (self, None),
            };
            let (bb, eb) = match b {
                Node::Pow(x, e) => (x, Some(e)),
                _ => (other, None),
            };
            return ba.cmp(bb).then_with(|| cmp_exponent(ea, eb));
        }
        rank(a).cmp(&rank(b)).then_with(|| match (a, b) {
            (Node::Num(x), Node::Num(y)) => x.total_cmp(y),
            (Node::Sym(x), Node::Sym(y)) => x.cmp(y),
            (Node::Func(f, x), Node::Func(g, y)) => f.cmp(g).then_with(|| x.cmp(y)),
            (Node::Add(x), Node::Add(y)) | (Node::Mul(x), Node::Mul(y)) => {
                for (p, q) in x.iter().zip(y) {
                    let o = p.cmp(q);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                x.len().cmp(&y.len())
            }
            _ => Ordering::Equal,
        })
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.ptr_eq(other) || (self.0.hash == other.0.hash && self.0.node == other.0.node)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<&str> for Expr {
    fn from(s: &str) -> Self {
        Expr::sym(s)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $body(&self, &rhs)
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $body(&self, rhs)
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $body(self, rhs)
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $body(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a: &Expr, b: &Expr| Expr::add_all([a.clone(), b.clone()]));
binop!(Sub, sub, |a: &Expr, b: &Expr| Expr::add_all([a.clone(), b.neg()]));
binop!(Mul, mul, |a: &Expr, b: &Expr| Expr::mul_all([a.clone(), b.clone()]));
binop!(Div, div, |a: &Expr, b: &Expr| Expr::mul_all([a.clone(), b.recip()]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

pub fn sin(x: &Expr) -> Expr {
    Expr::apply(Func::Sin, x)
}

pub fn cos(x: &Expr) -> Expr {
    Expr::apply(Func::Cos, x)
}

pub fn tan(x: &Expr) -> Expr {
    Expr::apply(Func::Tan, x)
}

pub fn cot(x: &Expr) -> Expr {
    Expr::apply(Func::Cot, x)
}

pub fn exp(x: &Expr) -> Expr {
    Expr::apply(Func::Exp, x)
}

pub fn ln(x: &Expr) -> Expr {
    Expr::apply(Func::Ln, x)
}

pub fn sqrt(x: &Expr) -> Expr {
    Expr::apply(Func::Sqrt, x)
}

pub fn re(x: &Expr) -> Expr {
    Expr::apply(Func::Re, x)
}

pub fn im(x: &Expr) -> Expr {
    Expr::apply(Func::Im, x)
}

pub fn conj(x: &Expr) -> Expr {
    Expr::apply(Func::Conj, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: &str) -> Expr {
        Expr::sym(n)
    }

    #[test]
    fn sums_flatten_and_collect() {
        let x = s("x");
        let e = &x + &x + Expr::int(1) + (Expr::int(2) * &x);
        let Node::Add(ts) = e.node() else { panic!("{e:?}") };
        assert_eq!(ts.len(), 2);
        assert_eq!(&x - &x, Expr::zero());
        assert_eq!(&x * Expr::one() + Expr::zero(), x);
    }

    #[test]
    fn order_insensitive() {
        let (x, y, z) = (s("x"), s("y"), s("z"));
        assert_eq!(&x + &y + &z, &z + &x + &y);
        assert_eq!(&x * &y * &z, &z * (&y * &x));
    }

    #[test]
    fn product_merges_bases() {
        let x = s("x");
        assert_eq!(&x * &x, x.powi(2));
        assert_eq!(x.powi(3) / x.powi(3), Expr::one());
        assert_eq!(Expr::zero() * &x, Expr::zero());
    }

    #[test]
    fn imaginary_unit_folds() {
        assert_eq!(Expr::i() * Expr::i(), Expr::int(-1));
        assert_eq!(Expr::i().powi(4), Expr::one());
    }

    #[test]
    fn special_angles() {
        let p = Expr::pi();
        assert_eq!(cos(&(Expr::rational(1, 2) * &p)), Expr::zero());
        assert_eq!(sin(&(Expr::rational(1, 2) * &p)), Expr::one());
        assert_eq!(cot(&(Expr::rational(1, 4) * &p)), Expr::one());
        assert!(cot(&Expr::zero()).is_pole());
    }

    #[test]
    fn sign_symmetry() {
        let x = s("x");
        assert_eq!(cos(&x.neg()), cos(&x));
        assert_eq!(sin(&x.neg()), sin(&x).neg());
    }

    #[test]
    fn sum_factors_are_monic() {
        let (a, r) = (s("a0"), s("r"));
        let f1 = (Expr::int(2) * &a - &r).powi(-2);
        let f2 = (&a - Expr::rational(1, 2) * &r).powi(-2);
        assert_eq!(f1 * Expr::int(4), f2);
    }

    #[test]
    fn coefficient_distributes_over_bare_sum() {
        let (x, y) = (s("x"), s("y"));
        let e = Expr::int(2) * (&x + &y);
        assert_eq!(e, Expr::int(2) * &x + Expr::int(2) * &y);
        assert_eq!(Expr::one() - (Expr::one() - &x), x);
    }

    #[test]
    fn division_by_zero_is_pole() {
        assert!(Expr::zero().recip().is_pole());
        assert!((s("x") + Expr::zero().recip()).is_pole());
    }

    #[test]
    fn sqrt_is_half_power() {
        assert_eq!(sqrt(&Expr::int(4)), Expr::int(2));
        assert_eq!(sqrt(&s("x")).powi(2), s("x"));
    }
}
