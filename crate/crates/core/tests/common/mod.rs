//! Fixtures and brute-force reference implementations shared by the
//! integration tests. Nothing here calls the library's own evaluators.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use supcfg::grammar::Sym;
use supcfg::{parse_grammar, parse_mta, Mta, RankedAlphabet, Rational, SkeletalTree, Wcfg};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn grammar(name: &str) -> Wcfg {
    parse_grammar(&fixture_text(name)).unwrap()
}

pub fn automaton(name: &str) -> Mta {
    parse_mta(&fixture_text(name)).unwrap()
}

pub fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

/// All trees with at most `max_nodes` nodes, built by recursive
/// construction and sorted by (node count, text).
pub fn all_trees(alphabet: &RankedAlphabet, max_nodes: usize) -> Vec<SkeletalTree> {
    let mut by_size: Vec<Vec<SkeletalTree>> = vec![Vec::new(); max_nodes + 1];
    for n in 1..=max_nodes {
        let mut bucket = Vec::new();
        if n == 1 {
            bucket.extend(alphabet.terminals().iter().map(|t| SkeletalTree::leaf(t.clone())));
        }
        for &k in alphabet.arities() {
            // Children sizes must add up to n - 1.
            fn go(
                by_size: &[Vec<SkeletalTree>],
                remaining: usize,
                slots: usize,
                prefix: &mut Vec<SkeletalTree>,
                out: &mut Vec<SkeletalTree>,
            ) {
                if slots == 0 {
                    if remaining == 0 {
                        out.push(SkeletalTree::internal(prefix.clone()));
                    }
                    return;
                }
                for size in 1..=remaining {
                    for t in &by_size[size] {
                        prefix.push(t.clone());
                        go(by_size, remaining - size, slots - 1, prefix, out);
                        prefix.pop();
                    }
                }
            }
            if n > k {
                go(&by_size, n - 1, k, &mut Vec::new(), &mut bucket);
            }
        }
        bucket.sort_by(|a, b| a.as_str().cmp(b.as_str()));
        by_size[n] = bucket;
    }
    by_size.into_iter().flatten().collect()
}

/// Tree weight by summing over every assignment of nonterminals to nodes.
pub fn brute_force_weight(g: &Wcfg, t: &SkeletalTree) -> Rational {
    let mut nodes = Vec::new();
    flatten(t, &mut nodes);
    let v = g.nonterminals().len();
    let internal: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].1.is_some()).collect();
    let leaves: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].1.is_none()).collect();
    let mut total = Rational::zero();
    // Internal nodes always get a nonterminal; a leaf either is a terminal
    // matched by its parent rule (`None`) or is derived by a leaf rule.
    let leaf_choices = v + 1;
    let count = v.pow(internal.len() as u32) * leaf_choices.pow(leaves.len() as u32);
    let mut labels: Vec<Option<usize>> = vec![None; nodes.len()];
    for code in 0..count {
        let mut c = code;
        for &i in &internal {
            labels[i] = Some(c % v);
            c /= v;
        }
        for &i in &leaves {
            let choice = c % leaf_choices;
            c /= leaf_choices;
            labels[i] = (choice > 0).then(|| choice - 1);
        }
        if nodes[0].1.is_none() && labels[0].is_none() {
            continue;
        }
        let mut product = g.root_weight(labels[0].unwrap());
        for (i, (label, children)) in nodes.iter().enumerate() {
            let Some(n) = labels[i] else { continue };
            let rhs: Vec<Sym> = match children {
                None => vec![Sym::T(g.terminal_index(label).unwrap())],
                Some(ch) => ch
                    .iter()
                    .map(|&c| match labels[c] {
                        Some(m) => Sym::N(m),
                        None => Sym::T(g.terminal_index(&nodes[c].0).unwrap()),
                    })
                    .collect(),
            };
            let w = g
                .rules()
                .iter()
                .find(|r| r.lhs == n && r.rhs == rhs)
                .map(|r| r.weight.clone())
                .unwrap_or_else(Rational::zero);
            product = product * w;
            if product.is_zero() {
                break;
            }
        }
        total = total + product;
    }
    total
}

// (leaf label or "", child node indices for internal nodes)
fn flatten(t: &SkeletalTree, out: &mut Vec<(String, Option<Vec<usize>>)>) -> usize {
    let me = out.len();
    match t.label() {
        Some(l) => out.push((l.to_string(), None)),
        None => {
            out.push((String::new(), Some(Vec::new())));
            let ids: Vec<usize> = t.children().map(|c| flatten(&c, out)).collect();
            out[me].1 = Some(ids);
        }
    }
    me
}

/// `μ(t)` through the dense `d × d^k` matrix times the Kronecker product of
/// the children's vectors.
pub fn dense_mu(a: &Mta, t: &SkeletalTree) -> Vec<Rational> {
    if let Some(l) = t.label() {
        return a.leaf(l).unwrap().to_vec();
    }
    let d = a.dim();
    let map = a.transition(t.arity()).unwrap();
    let mut dense = vec![vec![Rational::zero(); d.pow(t.arity() as u32)]; d];
    for (i, tuple, c) in map.entries() {
        dense[i][map.column_index(tuple)] = c.clone();
    }
    let mut kron = vec![Rational::one()];
    for child in t.children() {
        let v = dense_mu(a, &child);
        kron = kron.iter().flat_map(|x| v.iter().map(move |y| x * y)).collect();
    }
    dense
        .iter()
        .map(|row| row.iter().zip(&kron).map(|(m, x)| m * x).sum())
        .collect()
}

pub fn dense_value(a: &Mta, t: &SkeletalTree) -> Rational {
    a.lambda().iter().zip(dense_mu(a, t)).map(|(l, m)| l * &m).sum()
}

/// A nonnegative sparse automaton over `{a, b}` with binary nodes. Weights
/// are small fractions; at least one λ entry and one leaf entry per terminal
/// are nonzero.
pub fn random_pmta(seed: u64, max_dim: usize) -> Mta {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = RankedAlphabet::new(["a", "b"], [2]).unwrap();
    let d = rng.gen_range(1..=max_dim);
    let mut a = Mta::new(alphabet, d);
    let weight = |rng: &mut ChaCha8Rng| Rational::new(rng.gen_range(1..=4), rng.gen_range(1..=4));
    let root = rng.gen_range(0..d);
    a.set_lambda(root, weight(&mut rng)).unwrap();
    for i in 0..d {
        if rng.gen_bool(0.3) {
            a.set_lambda(i, weight(&mut rng)).unwrap();
        }
    }
    for t in ["a", "b"] {
        let i = rng.gen_range(0..d);
        a.set_leaf(t, i, weight(&mut rng)).unwrap();
        for i in 0..d {
            if rng.gen_bool(0.2) {
                a.set_leaf(t, i, weight(&mut rng)).unwrap();
            }
        }
    }
    for target in 0..d {
        for j1 in 0..d {
            for j2 in 0..d {
                if rng.gen_bool(0.3) {
                    a.set_entry(target, &[j1, j2], weight(&mut rng)).unwrap();
                }
            }
        }
    }
    a
}

/// A random invertible probabilistic grammar with binary rules. Leaves `a`
/// and `c` come from leaf rules and `b` only appears inside binary rules, so
/// no leaf has two readings; every right-hand side has a single owner.
pub fn random_invertible_pcfg(seed: u64) -> Wcfg {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=3);
    let names: Vec<String> = (1..=n).map(|i| format!("X{i}")).collect();
    let mut symbols: Vec<String> = names.clone();
    symbols.push("b".to_string());
    let mut owned: BTreeMap<usize, Vec<(Vec<String>, u32)>> = BTreeMap::new();
    owned.entry(0).or_default().push((vec!["a".into()], rng.gen_range(1..=3)));
    owned.entry(rng.gen_range(0..n)).or_default().push((vec!["c".into()], rng.gen_range(1..=3)));
    for x in &symbols {
        for y in &symbols {
            if rng.gen_bool(0.3) {
                let owner = rng.gen_range(0..n);
                owned.entry(owner).or_default().push((vec![x.clone(), y.clone()], rng.gen_range(1..=3)));
            }
        }
    }
    let mut text = String::from("start X1\n");
    for (i, name) in names.iter().enumerate() {
        let rules = owned.entry(i).or_default();
        if rules.is_empty() {
            // A nonterminal without rules would not sum to one.
            continue;
        }
        let total: u32 = rules.iter().map(|r| r.1).sum();
        for (rhs, w) in rules.iter() {
            text.push_str(&format!("{name} -> {} [{w}/{total}]\n", rhs.join(" ")));
        }
    }
    let g = parse_grammar(&text).unwrap();
    if g.check_invertible().is_some() || !g.check_probabilistic().is_probabilistic() {
        return random_invertible_pcfg(seed.wrapping_mul(6364136223846793005).wrapping_add(1));
    }
    g
}

/// Tree weight by a bottom-up inside pass: one vector of weights over
/// nonterminals per node, summing over every rule that fits the node.
/// Polynomial where [`brute_force_weight`] is exponential.
pub fn inside_weight(g: &Wcfg, t: &SkeletalTree) -> Rational {
    let inside = inside_vector(g, t);
    g.roots().iter().map(|(&n, w)| w * &inside[n]).sum()
}

fn inside_vector(g: &Wcfg, t: &SkeletalTree) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); g.nonterminals().len()];
    let children: Vec<SkeletalTree> = t.children().collect();
    let below: Vec<Vec<Rational>> = children.iter().map(|c| inside_vector(g, c)).collect();
    for r in g.rules() {
        let term = |s: &Sym| match s {
            Sym::T(i) => Some(g.terminals()[*i].as_str()),
            Sym::N(_) => None,
        };
        let w = if r.rhs.len() == 1 && !matches!(r.rhs[0], Sym::N(_)) {
            // A leaf rule derives the leaf itself.
            if t.label().map(|l| l.as_ref()) != term(&r.rhs[0]) {
                continue;
            }
            r.weight.clone()
        } else {
            if r.rhs.len() != children.len() || t.is_leaf() {
                continue;
            }
            let mut w = r.weight.clone();
            for (i, s) in r.rhs.iter().enumerate() {
                w = match s {
                    Sym::N(m) => w * below[i][*m].clone(),
                    Sym::T(_) if children[i].label().map(|l| l.as_ref()) == term(s) => w,
                    Sym::T(_) => Rational::zero(),
                };
            }
            w
        };
        out[r.lhs] = out[r.lhs].clone() + w;
    }
    out
}
