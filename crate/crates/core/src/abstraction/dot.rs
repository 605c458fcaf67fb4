//! Graphviz rendering: record nodes split into state and output, secret
//! states filled, initial states marked by sourceless arrows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{format_vector, FiniteSystem};

fn escape(s: &str) -> String {
    s.chars()
        .flat_map(|c| match c {
            '{' | '}' | '|' | '<' | '>' | '"' | '\\' => vec!['\\', c],
            _ => vec![c],
        })
        .collect()
}

/// DOT source for `sys`. `names` overrides the state labels (default: the payload).
pub fn to_dot(sys: &FiniteSystem, names: Option<&[String]>) -> String {
    let mut s = String::from("digraph abstraction {\n  rankdir=LR;\n  node [shape=Mrecord];\n");
    for x in 0..sys.len() {
        let name = names.and_then(|n| n.get(x).cloned()).unwrap_or_else(|| sys.state_label(x));
        let style = if sys.is_secret(x) { ", style=filled, fillcolor=\"#e06666\"" } else { "" };
        let _ =
            writeln!(s, "  s{x} [label=\"{{{}|{}}}\"{style}];", escape(&name), escape(&format_vector(&sys.outputs[x])));
    }
    for &x in &sys.initial {
        let _ = writeln!(s, "  init{x} [shape=point, style=invis];\n  init{x} -> s{x};");
    }
    let labelled = sys.label_count() > 1;
    for (x, row) in sys.transitions.iter().enumerate() {
        let mut edges: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (l, succ) in row.iter().enumerate() {
            for &y in succ {
                edges.entry(y).or_default().push(l);
            }
        }
        for (y, labels) in edges {
            if labelled {
                let l: Vec<String> = labels.iter().map(usize::to_string).collect();
                let _ = writeln!(s, "  s{x} -> s{y} [label=\"{}\"];", l.join(","));
            } else {
                let _ = writeln!(s, "  s{x} -> s{y};");
            }
        }
    }
    s.push_str("}\n");
    s
}

pub fn export_dot(sys: &FiniteSystem, path: impl AsRef<Path>, names: Option<&[String]>) -> std::io::Result<()> {
    std::fs::write(path, to_dot(sys, names))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filled_and_initial_markers() {
        let t = FiniteSystem::explicit(
            vec![vec![0.0], vec![0.4]],
            vec![0, 1],
            vec![1],
            vec![vec![vec![0]], vec![vec![0, 1]]],
        )
        .unwrap();
        let d = to_dot(&t, Some(&["a".into(), "A".into()]));
        assert_eq!(d.matches("style=filled").count(), 1);
        assert_eq!(d.matches("shape=point").count(), 2);
        assert!(d.contains("s1 [label=\"{A|0.4}\""));
        assert!(d.contains("s1 -> s1;"));
        let none = FiniteSystem::explicit(vec![vec![0.0]], vec![0], vec![], vec![vec![vec![0]]]).unwrap();
        assert_eq!(to_dot(&none, None).matches("style=filled").count(), 0);
    }
}
