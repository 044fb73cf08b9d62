//! Newick serialization of dendrograms, plus a small reader used to check
//! round trips.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::hierarchy::{Dendrogram, UltrametricMatrix};

fn needs_quoting(name: &str) -> bool {
    name.is_empty()
        || name
            .chars()
            .any(|c| c.is_whitespace() || "()[]':;,_".contains(c))
}

fn write_name(out: &mut String, name: &str) {
    if needs_quoting(name) {
        out.push('\'');
        out.push_str(&name.replace('\'', "''"));
        out.push('\'');
    } else {
        out.push_str(name);
    }
}

/// Rooted Newick string. A child's branch length is its parent's merge
/// height minus its own (zero for leaves); the root carries no length.
pub fn export_newick(dendro: &Dendrogram) -> String {
    let n = dendro.n();
    let mut out = String::new();
    if n == 0 {
        out.push(';');
        return out;
    }
    let root = if n == 1 { 0 } else { 2 * n - 2 };
    write_node(dendro, root, None, &mut out);
    out.push(';');
    out
}

fn write_node(dendro: &Dendrogram, id: usize, parent_height: Option<f64>, out: &mut String) {
    let n = dendro.n();
    if id < n {
        write_name(out, &dendro.symbols()[id]);
    } else {
        let m = dendro.merges()[id - n];
        out.push('(');
        write_node(dendro, m.left, Some(m.height), out);
        out.push(',');
        write_node(dendro, m.right, Some(m.height), out);
        out.push(')');
    }
    if let Some(h) = parent_height {
        let _ = write!(out, ":{}", h - dendro.height_of(id));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewickNode {
    pub name: Option<String>,
    pub length: Option<f64>,
    pub children: Vec<NewickNode>,
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Newick {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) -> Result<()> {
        loop {
            match self.src.get(self.pos) {
                Some(c) if c.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => match self.src[self.pos..].iter().position(|&c| c == b']') {
                    Some(k) => self.pos += k + 1,
                    None => return Err(self.err("unterminated comment")),
                },
                _ => return Ok(()),
            }
        }
    }

    fn peek(&mut self) -> Result<Option<u8>> {
        self.skip_ws()?;
        Ok(self.src.get(self.pos).copied())
    }

    fn name(&mut self) -> Result<Option<String>> {
        match self.peek()? {
            Some(b'\'') => {
                self.pos += 1;
                let mut s = Vec::new();
                loop {
                    match self.src.get(self.pos) {
                        None => return Err(self.err("unterminated quoted name")),
                        Some(b'\'') if self.src.get(self.pos + 1) == Some(&b'\'') => {
                            s.push(b'\'');
                            self.pos += 2;
                        }
                        Some(b'\'') => {
                            self.pos += 1;
                            break;
                        }
                        Some(&c) => {
                            s.push(c);
                            self.pos += 1;
                        }
                    }
                }
                String::from_utf8(s).map(Some).map_err(|_| self.err("invalid UTF-8"))
            }
            _ => {
                let start = self.pos;
                while let Some(&c) = self.src.get(self.pos) {
                    if c.is_ascii_whitespace() || b"()[]':;,".contains(&c) {
                        break;
                    }
                    self.pos += 1;
                }
                if start == self.pos {
                    return Ok(None);
                }
                let s = std::str::from_utf8(&self.src[start..self.pos])
                    .map_err(|_| self.err("invalid UTF-8"))?;
                Ok(Some(s.replace('_', " ")))
            }
        }
    }

    fn length(&mut self) -> Result<Option<f64>> {
        if self.peek()? != Some(b':') {
            return Ok(None);
        }
        self.pos += 1;
        self.skip_ws()?;
        let start = self.pos;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() || b"+-.eE".contains(&c) {
                self.pos += 1;
            } else {
                break;
            }
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        s.parse()
            .map(Some)
            .map_err(|_| self.err(format!("bad branch length {s:?}")))
    }

    fn node(&mut self) -> Result<NewickNode> {
        let mut children = Vec::new();
        if self.peek()? == Some(b'(') {
            self.pos += 1;
            loop {
                children.push(self.node()?);
                match self.peek()? {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected ',' or ')'")),
                }
            }
        }
        let name = self.name()?;
        let length = self.length()?;
        Ok(NewickNode {
            name,
            length,
            children,
        })
    }
}

/// Parses a single Newick tree terminated by `;`.
///
/// Unquoted underscores are read as spaces, as the format prescribes.
pub fn parse_newick(text: &str) -> Result<NewickNode> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let root = p.node()?;
    if p.peek()? != Some(b';') {
        return Err(p.err("expected ';'"));
    }
    p.pos += 1;
    if p.peek()?.is_some() {
        return Err(p.err("trailing input after ';'"));
    }
    Ok(root)
}

impl NewickNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn leaf_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_leaves(0.0, &mut |name, _| out.push(name.to_string()));
        out
    }

    fn collect_leaves(&self, depth: f64, f: &mut impl FnMut(&str, f64)) {
        if self.is_leaf() {
            f(self.name.as_deref().unwrap_or(""), depth);
        }
        for c in &self.children {
            c.collect_leaves(depth + c.length.unwrap_or(0.0), f);
        }
    }

    /// Half the path length between every pair of leaves, in `order`.
    /// On an ultrametric tree this is the height of the pair's lowest
    /// common ancestor.
    pub fn cophenetic(&self, order: &[String]) -> Result<UltrametricMatrix> {
        let index: HashMap<&str, usize> = order
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let n = order.len();
        let mut values = vec![f64::NAN; n * n];
        for i in 0..n {
            values[i * n + i] = 0.0;
        }
        // Returns (leaf index, depth) pairs under `node`.
        fn visit(
            node: &NewickNode,
            depth: f64,
            index: &HashMap<&str, usize>,
            n: usize,
            values: &mut [f64],
        ) -> Result<Vec<(usize, f64)>> {
            if node.is_leaf() {
                let name = node.name.as_deref().unwrap_or("");
                let &i = index
                    .get(name)
                    .ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
                return Ok(vec![(i, depth)]);
            }
            let mut groups = Vec::with_capacity(node.children.len());
            for c in &node.children {
                groups.push(visit(c, depth + c.length.unwrap_or(0.0), index, n, values)?);
            }
            for (x, gx) in groups.iter().enumerate() {
                for gy in &groups[x + 1..] {
                    for &(a, da) in gx {
                        for &(b, db) in gy {
                            let h = ((da - depth) + (db - depth)) / 2.0;
                            values[a * n + b] = h;
                            values[b * n + a] = h;
                        }
                    }
                }
            }
            Ok(groups.into_iter().flatten().collect())
        }
        let leaves = visit(self, 0.0, &index, n, &mut values)?;
        if leaves.len() != n {
            return Err(Error::Shape(format!("{} leaves for {n} symbols", leaves.len())));
        }
        UltrametricMatrix::new(order.to_vec(), values)
    }
}
