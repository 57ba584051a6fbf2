//! Skeletal trees, contexts and the structured-string syntax.
//!
//! A skeletal tree keeps the leaves of a derivation tree and erases every
//! internal label to the single symbol `?`. In text the internal symbol is
//! never written: `((a b) c)` is a binary node whose left child is the
//! binary node `(a b)`. A context is a tree with exactly one hole, spelled
//! `<>`.
//!
//! Trees are immutable and reference counted, so cloning is cheap and values
//! can be shared across threads. Each node caches its node count and its
//! rendered text; equality, hashing and the canonical order (node count,
//! then text) are all answered from that cache.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

pub type Symbol = Arc<str>;

pub const HOLE: &str = "<>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced parentheses at column {0}")]
    Unbalanced(usize),
    #[error("unknown token `{token}` at column {column}")]
    UnknownToken { token: String, column: usize },
    #[error("node with {arity} children at column {column}, arity not in the alphabet")]
    BadArity { arity: usize, column: usize },
    #[error("more than one hole")]
    MultipleHoles,
    #[error("empty group at column {0}")]
    EmptyGroup(usize),
    #[error("unexpected `{token}` after the tree at column {column}")]
    TrailingInput { token: String, column: usize },
    #[error("expected a tree, found a context")]
    ExpectedTree,
    #[error("expected a context, found a tree")]
    ExpectedContext,
    #[error("unknown terminal `{0}`")]
    UnknownTerminal(String),
    #[error("arity {0} is not in the alphabet")]
    UnknownArity(usize),
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_')
}

/// Terminal names plus the ranks at which the internal symbol exists.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RankedAlphabet {
    terminals: Vec<Symbol>,
    arities: Vec<usize>,
}

impl RankedAlphabet {
    pub fn new<I, S, A>(terminals: I, arities: A) -> Result<Self, TreeError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
        A: IntoIterator<Item = usize>,
    {
        let mut names = BTreeSet::new();
        for t in terminals {
            let t = t.as_ref();
            if !is_name(t) {
                return Err(TreeError::InvalidAlphabet(format!("bad terminal name `{t}`")));
            }
            if !names.insert(t.to_string()) {
                return Err(TreeError::InvalidAlphabet(format!("duplicate terminal `{t}`")));
            }
        }
        if names.is_empty() {
            return Err(TreeError::InvalidAlphabet("no terminals".into()));
        }
        let arities: BTreeSet<usize> = arities.into_iter().collect();
        if arities.is_empty() {
            return Err(TreeError::InvalidAlphabet("no arities".into()));
        }
        if arities.contains(&0) {
            return Err(TreeError::InvalidAlphabet("arity 0 is reserved for terminals".into()));
        }
        Ok(RankedAlphabet {
            terminals: names.into_iter().map(Symbol::from).collect(),
            arities: arities.into_iter().collect(),
        })
    }

    pub fn terminals(&self) -> &[Symbol] {
        &self.terminals
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    /// Highest rank `p`.
    pub fn max_arity(&self) -> usize {
        *self.arities.last().expect("nonempty")
    }

    /// `|Σ₀|` plus one internal symbol per rank.
    pub fn symbol_count(&self) -> usize {
        self.terminals.len() + self.arities.len()
    }

    pub fn terminal_index(&self, name: &str) -> Option<usize> {
        self.terminals.binary_search_by(|t| t.as_ref().cmp(name)).ok()
    }

    pub fn symbol(&self, name: &str) -> Option<&Symbol> {
        self.terminal_index(name).map(|i| &self.terminals[i])
    }

    pub fn has_arity(&self, k: usize) -> bool {
        self.arities.binary_search(&k).is_ok()
    }

    /// Checks that every leaf and every internal node of `t` is allowed.
    pub fn validate(&self, t: &SkeletalTree) -> Result<(), TreeError> {
        validate_node(self, &t.0)
    }

    pub fn validate_context(&self, c: &Context) -> Result<(), TreeError> {
        validate_node(self, &c.0)
    }

    pub fn leaves(&self) -> Vec<SkeletalTree> {
        self.terminals.iter().map(|s| SkeletalTree::leaf(s.clone())).collect()
    }
}

fn validate_node(alphabet: &RankedAlphabet, node: &Node) -> Result<(), TreeError> {
    match &node.kind {
        Kind::Leaf(s) => {
            if alphabet.terminal_index(s).is_none() {
                return Err(TreeError::UnknownTerminal(s.to_string()));
            }
        }
        Kind::Hole => {}
        Kind::Internal(children) => {
            if !alphabet.has_arity(children.len()) {
                return Err(TreeError::UnknownArity(children.len()));
            }
            for c in children {
                validate_node(alphabet, c)?;
            }
        }
    }
    Ok(())
}

#[derive(Debug)]
enum Kind {
    Leaf(Symbol),
    Hole,
    Internal(Vec<Arc<Node>>),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    size: usize,
    holes: usize,
    text: String,
}

impl Node {
    fn leaf(symbol: Symbol) -> Arc<Node> {
        Arc::new(Node {
            text: symbol.to_string(),
            kind: Kind::Leaf(symbol),
            size: 1,
            holes: 0,
        })
    }

    fn hole() -> Arc<Node> {
        Arc::new(Node { kind: Kind::Hole, size: 1, holes: 1, text: HOLE.to_string() })
    }

    fn internal(children: Vec<Arc<Node>>) -> Arc<Node> {
        assert!(!children.is_empty(), "internal node needs children");
        let size = 1 + children.iter().map(|c| c.size).sum::<usize>();
        let holes = children.iter().map(|c| c.holes).sum();
        let mut text = String::with_capacity(size * 3);
        text.push('(');
        for (i, c) in children.iter().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            text.push_str(&c.text);
        }
        text.push(')');
        Arc::new(Node { kind: Kind::Internal(children), size, holes, text })
    }

    fn plug(node: &Arc<Node>, filler: &Arc<Node>) -> Arc<Node> {
        match &node.kind {
            Kind::Hole => filler.clone(),
            Kind::Leaf(_) => node.clone(),
            Kind::Internal(children) => {
                if node.holes == 0 {
                    return node.clone();
                }
                let children = children
                    .iter()
                    .map(|c| if c.holes > 0 { Node::plug(c, filler) } else { c.clone() })
                    .collect();
                Node::internal(children)
            }
        }
    }

    fn cmp_canonical(&self, other: &Node) -> Ordering {
        self.size.cmp(&other.size).then_with(|| self.text.cmp(&other.text))
    }
}

macro_rules! node_wrapper_impls {
    ($ty:ident) => {
        impl PartialEq for $ty {
            fn eq(&self, other: &Self) -> bool {
                Arc::ptr_eq(&self.0, &other.0) || self.0.text == other.0.text
            }
        }
        impl Eq for $ty {}
        impl Hash for $ty {
            fn hash<H: Hasher>(&self, state: &mut H) {
                self.0.text.hash(state);
            }
        }
        impl PartialOrd for $ty {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        /// Canonical order: node count, then rendered text.
        impl Ord for $ty {
            fn cmp(&self, other: &Self) -> Ordering {
                self.0.cmp_canonical(&other.0)
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0.text)
            }
        }
        impl fmt::Debug for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($ty), self.0.text)
            }
        }
        impl $ty {
            /// Number of nodes, counting the hole of a context.
            pub fn size(&self) -> usize {
                self.0.size
            }

            /// The structured-string rendering.
            pub fn as_str(&self) -> &str {
                &self.0.text
            }

            pub fn arity(&self) -> usize {
                match &self.0.kind {
                    Kind::Internal(c) => c.len(),
                    _ => 0,
                }
            }
        }
    };
}

/// A ranked tree over a skeletal alphabet.
#[derive(Clone)]
pub struct SkeletalTree(Arc<Node>);

node_wrapper_impls!(SkeletalTree);

impl SkeletalTree {
    pub fn leaf(symbol: impl Into<Symbol>) -> Self {
        SkeletalTree(Node::leaf(symbol.into()))
    }

    /// Panics on an empty child list.
    pub fn internal(children: Vec<SkeletalTree>) -> Self {
        SkeletalTree(Node::internal(children.into_iter().map(|c| c.0).collect()))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.0.kind, Kind::Leaf(_))
    }

    /// The terminal of a leaf.
    pub fn label(&self) -> Option<&Symbol> {
        match &self.0.kind {
            Kind::Leaf(s) => Some(s),
            _ => None,
        }
    }

    pub fn child(&self, i: usize) -> Option<SkeletalTree> {
        match &self.0.kind {
            Kind::Internal(c) => c.get(i).cloned().map(SkeletalTree),
            _ => None,
        }
    }

    pub fn children(&self) -> impl ExactSizeIterator<Item = SkeletalTree> + '_ {
        let slice: &[Arc<Node>] = match &self.0.kind {
            Kind::Internal(c) => c,
            _ => &[],
        };
        slice.iter().cloned().map(SkeletalTree)
    }

    pub fn leaf_count(&self) -> usize {
        if self.is_leaf() {
            1
        } else {
            self.children().map(|c| c.leaf_count()).sum()
        }
    }
}

/// A tree with exactly one hole `<>`.
#[derive(Clone)]
pub struct Context(Arc<Node>);

node_wrapper_impls!(Context);

impl Context {
    /// The empty context `<>`.
    pub fn hole() -> Self {
        Context(Node::hole())
    }

    pub fn is_hole(&self) -> bool {
        matches!(self.0.kind, Kind::Hole)
    }

    /// A depth-one context: `siblings` in order with the hole inserted at
    /// `position`.
    pub fn with_hole_at(siblings: Vec<SkeletalTree>, position: usize) -> Self {
        assert!(position <= siblings.len());
        let mut children: Vec<Arc<Node>> = siblings.into_iter().map(|s| s.0).collect();
        children.insert(position, Node::hole());
        Context(Node::internal(children))
    }
}

/// `c⟦t⟧`: the hole of `c` replaced by `t`.
pub fn compose(c: &Context, t: &SkeletalTree) -> SkeletalTree {
    SkeletalTree(Node::plug(&c.0, &t.0))
}

/// The hole of `outer` replaced by `inner`.
pub fn compose_contexts(outer: &Context, inner: &Context) -> Context {
    Context(Node::plug(&outer.0, &inner.0))
}

/// Result of parsing a structured string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Structured {
    Tree(SkeletalTree),
    Context(Context),
}

impl Structured {
    pub fn as_str(&self) -> &str {
        match self {
            Structured::Tree(t) => t.as_str(),
            Structured::Context(c) => c.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open(usize),
    Close(usize),
    Word(&'a str, usize),
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    let column = |byte: usize| text[..byte].chars().count() + 1;
    while let Some(&(i, ch)) = chars.peek() {
        match ch {
            '(' => {
                out.push(Token::Open(column(i)));
                chars.next();
            }
            ')' => {
                out.push(Token::Close(column(i)));
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let start = i;
                let mut end = i;
                while let Some(&(j, c)) = chars.peek() {
                    if c == '(' || c == ')' || c.is_whitespace() {
                        break;
                    }
                    end = j + c.len_utf8();
                    chars.next();
                }
                out.push(Token::Word(&text[start..end], column(start)));
            }
        }
    }
    out
}

struct Parser<'a, 'b> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    alphabet: &'b RankedAlphabet,
    glued: bool,
    holes: usize,
}

impl<'a, 'b> Parser<'a, 'b> {
    /// Expands one word token into one or more items.
    fn word_items(&mut self, word: &str, column: usize) -> Result<Vec<Arc<Node>>, TreeError> {
        if word == HOLE {
            self.holes += 1;
            return Ok(vec![Node::hole()]);
        }
        if let Some(sym) = self.alphabet.symbol(word) {
            return Ok(vec![Node::leaf(sym.clone())]);
        }
        let unknown = || TreeError::UnknownToken { token: word.to_string(), column };
        if !self.glued {
            return Err(unknown());
        }
        // Every terminal is a single character, so a glued word splits
        // unambiguously.
        let mut items = Vec::new();
        let mut rest = word;
        while !rest.is_empty() {
            if let Some(r) = rest.strip_prefix(HOLE) {
                self.holes += 1;
                items.push(Node::hole());
                rest = r;
                continue;
            }
            let ch = rest.chars().next().expect("nonempty");
            let (piece, r) = rest.split_at(ch.len_utf8());
            let sym = self.alphabet.symbol(piece).ok_or_else(unknown)?;
            items.push(Node::leaf(sym.clone()));
            rest = r;
        }
        Ok(items)
    }

    fn items(&mut self) -> Result<Vec<Arc<Node>>, TreeError> {
        match self.tokens.get(self.pos).cloned() {
            None => Err(TreeError::EmptyInput),
            Some(Token::Close(col)) => Err(TreeError::Unbalanced(col)),
            Some(Token::Word(w, col)) => {
                self.pos += 1;
                self.word_items(w, col)
            }
            Some(Token::Open(col)) => {
                self.pos += 1;
                let mut children = Vec::new();
                loop {
                    match self.tokens.get(self.pos) {
                        None => return Err(TreeError::Unbalanced(col)),
                        Some(Token::Close(_)) => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => children.extend(self.items()?),
                    }
                }
                if children.is_empty() {
                    return Err(TreeError::EmptyGroup(col));
                }
                if !self.alphabet.has_arity(children.len()) {
                    return Err(TreeError::BadArity { arity: children.len(), column: col });
                }
                Ok(vec![Node::internal(children)])
            }
        }
    }
}

/// Parses a structured string into a tree, or a context when `<>` occurs.
///
/// Tokens are separated by whitespace or parentheses. When every terminal
/// name is one character long, glued tokens such as `((ab)c)` are also
/// accepted.
pub fn parse_structured(text: &str, alphabet: &RankedAlphabet) -> Result<Structured, TreeError> {
    let glued = alphabet.terminals().iter().all(|t| t.chars().count() == 1);
    let mut parser = Parser { tokens: tokenize(text), pos: 0, alphabet, glued, holes: 0 };
    let mut items = parser.items()?;
    if let Some(tok) = parser.tokens.get(parser.pos) {
        return Err(match *tok {
            Token::Close(col) => TreeError::Unbalanced(col),
            Token::Open(col) => TreeError::TrailingInput { token: "(".into(), column: col },
            Token::Word(w, col) => TreeError::TrailingInput { token: w.into(), column: col },
        });
    }
    if items.len() != 1 {
        let token = items[1].text.clone();
        return Err(TreeError::TrailingInput { token, column: 1 });
    }
    let node = items.pop().expect("one item");
    match parser.holes {
        0 => Ok(Structured::Tree(SkeletalTree(node))),
        1 => Ok(Structured::Context(Context(node))),
        _ => Err(TreeError::MultipleHoles),
    }
}

pub fn parse_tree(text: &str, alphabet: &RankedAlphabet) -> Result<SkeletalTree, TreeError> {
    match parse_structured(text, alphabet)? {
        Structured::Tree(t) => Ok(t),
        Structured::Context(_) => Err(TreeError::ExpectedTree),
    }
}

pub fn parse_context(text: &str, alphabet: &RankedAlphabet) -> Result<Context, TreeError> {
    match parse_structured(text, alphabet)? {
        Structured::Context(c) => Ok(c),
        Structured::Tree(_) => Err(TreeError::ExpectedContext),
    }
}

/// All distinct subtrees of `t`, including `t`.
pub fn subtrees(t: &SkeletalTree) -> BTreeSet<SkeletalTree> {
    fn walk(t: &SkeletalTree, out: &mut BTreeSet<SkeletalTree>) {
        if out.insert(t.clone()) {
            for c in t.children() {
                walk(&c, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(t, &mut out);
    out
}

/// Calls `f` with every tuple in `pool^k`, first position most significant.
fn for_each_tuple<T: Clone>(pool: &[T], k: usize, mut f: impl FnMut(&[T])) {
    if k == 0 {
        f(&[]);
        return;
    }
    if pool.is_empty() {
        return;
    }
    let mut idx = vec![0usize; k];
    let mut buf: Vec<T> = vec![pool[0].clone(); k];
    loop {
        f(&buf);
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < pool.len() {
                buf[pos] = pool[idx[pos]].clone();
                break;
            }
            idx[pos] = 0;
            buf[pos] = pool[0].clone();
        }
    }
}

/// `Σ(T)`: every internal node of an allowed arity whose children come
/// from `trees`.
pub fn one_step_extensions(
    trees: &BTreeSet<SkeletalTree>,
    alphabet: &RankedAlphabet,
) -> BTreeSet<SkeletalTree> {
    let pool: Vec<SkeletalTree> = trees.iter().cloned().collect();
    let mut out = BTreeSet::new();
    for &k in alphabet.arities() {
        for_each_tuple(&pool, k, |children| {
            out.insert(SkeletalTree::internal(children.to_vec()));
        });
    }
    out
}

/// `Σ(T, t)`: members of `Σ(T ∪ {t})` with at least one child equal to `t`.
pub fn extensions_containing(
    trees: &BTreeSet<SkeletalTree>,
    t: &SkeletalTree,
    alphabet: &RankedAlphabet,
) -> BTreeSet<SkeletalTree> {
    let mut pool = trees.clone();
    pool.insert(t.clone());
    one_step_extensions(&pool, alphabet)
        .into_iter()
        .filter(|e| e.children().any(|c| &c == t))
        .collect()
}

/// `Σ(T, ◇)`: depth-one contexts whose non-hole children come from `trees`.
pub fn context_extensions(
    trees: &BTreeSet<SkeletalTree>,
    alphabet: &RankedAlphabet,
) -> BTreeSet<Context> {
    let pool: Vec<SkeletalTree> = trees.iter().cloned().collect();
    let mut out = BTreeSet::new();
    for &k in alphabet.arities() {
        for hole in 0..k {
            for_each_tuple(&pool, k - 1, |siblings| {
                out.insert(Context::with_hole_at(siblings.to_vec(), hole));
            });
        }
    }
    out
}

/// Lazily enumerates all trees with at most `max_nodes` nodes in canonical
/// order.
pub struct TreeEnumerator {
    alphabet: RankedAlphabet,
    max_nodes: usize,
    buckets: Vec<Vec<SkeletalTree>>,
    size: usize,
    index: usize,
}

impl TreeEnumerator {
    fn bucket(&mut self, size: usize) {
        while self.buckets.len() <= size {
            let s = self.buckets.len();
            let mut bucket = Vec::new();
            if s == 1 {
                bucket = self.alphabet.leaves();
            } else if s > 1 {
                for &k in self.alphabet.arities() {
                    if k > s - 1 {
                        continue;
                    }
                    let mut parts = vec![0usize; k];
                    compositions(s - 1, k, &mut parts, 0, &mut |parts| {
                        let mut acc: Vec<Vec<SkeletalTree>> = vec![Vec::new()];
                        for &p in parts {
                            let mut next = Vec::with_capacity(acc.len() * self.buckets[p].len());
                            for prefix in &acc {
                                for t in &self.buckets[p] {
                                    let mut v = prefix.clone();
                                    v.push(t.clone());
                                    next.push(v);
                                }
                            }
                            acc = next;
                        }
                        bucket.extend(acc.into_iter().map(SkeletalTree::internal));
                    });
                }
                bucket.sort();
            }
            self.buckets.push(bucket);
        }
    }
}

fn compositions(
    total: usize,
    k: usize,
    parts: &mut Vec<usize>,
    at: usize,
    f: &mut dyn FnMut(&[usize]),
) {
    if at + 1 == k {
        if total >= 1 {
            parts[at] = total;
            f(parts);
        }
        return;
    }
    let remaining = k - at - 1;
    if total < remaining + 1 {
        return;
    }
    for first in 1..=(total - remaining) {
        parts[at] = first;
        compositions(total - first, k, parts, at + 1, f);
    }
}

impl Iterator for TreeEnumerator {
    type Item = SkeletalTree;

    fn next(&mut self) -> Option<SkeletalTree> {
        loop {
            if self.size > self.max_nodes {
                return None;
            }
            self.bucket(self.size);
            if let Some(t) = self.buckets[self.size].get(self.index) {
                self.index += 1;
                return Some(t.clone());
            }
            self.size += 1;
            self.index = 0;
        }
    }
}

/// All trees with node count at most `max_nodes`, in canonical order.
pub fn enumerate_trees(alphabet: &RankedAlphabet, max_nodes: usize) -> TreeEnumerator {
    TreeEnumerator {
        alphabet: alphabet.clone(),
        max_nodes,
        buckets: vec![Vec::new()],
        size: 1,
        index: 0,
    }
}
