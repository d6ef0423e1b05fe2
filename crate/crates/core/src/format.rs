//! The `.hg` text format.
//!
//! ```text
//! # optional comment lines
//! r n m
//! v_1 v_2 ... v_r      (m lines, strictly increasing ids)
//! ```
//!
//! Every line, including the last, ends in a newline.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;

pub fn to_hg(h: &Hypergraph) -> String {
    let mut out = String::with_capacity(16 + h.edge_count() * h.r() * 3);
    writeln!(out, "{} {} {}", h.r(), h.n(), h.edge_count()).unwrap();
    for e in h.edges() {
        let mut first = true;
        for v in e {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn parse_fields(line: &str, lineno: usize) -> Result<Vec<usize>> {
    line.split(' ')
        .map(|tok| {
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("expected a non-negative integer, found {tok:?}"),
            })
        })
        .collect()
}

pub fn parse_hg(text: &str) -> Result<Hypergraph> {
    if !text.ends_with('\n') {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            msg: "missing trailing newline".into(),
        });
    }
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let head = parse_fields(header, hline)?;
    let [r, n, m] = head[..] else {
        return Err(Error::Parse {
            line: hline,
            msg: "header must be `r n m`".into(),
        });
    };
    if r < 2 || n < r {
        return Err(Error::Parse {
            line: hline,
            msg: format!("need r >= 2 and n >= r, got r = {r}, n = {n}"),
        });
    }
    let mut flat = Vec::with_capacity(m.saturating_mul(r).min(1 << 24));
    let mut prev: Option<Vec<usize>> = None;
    let mut unsorted = false;
    let mut count = 0;
    for (lineno, line) in lines {
        let e = parse_fields(line, lineno)?;
        if e.len() != r {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected {r} vertex ids, found {}", e.len()),
            });
        }
        if e.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse {
                line: lineno,
                msg: "vertex ids must be strictly increasing".into(),
            });
        }
        if e[r - 1] >= n {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("vertex {} out of range for n = {n}", e[r - 1]),
            });
        }
        if let Some(p) = &prev {
            match p.cmp(&e) {
                std::cmp::Ordering::Equal => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "duplicate edge".into(),
                    })
                }
                std::cmp::Ordering::Greater => unsorted = true,
                std::cmp::Ordering::Less => {}
            }
        }
        flat.extend_from_slice(&e);
        prev = Some(e);
        count += 1;
    }
    if count != m {
        return Err(Error::Parse {
            line: hline,
            msg: format!("header announces {m} edges, found {count}"),
        });
    }
    if unsorted {
        // edge order in the file is free; duplicates are caught here
        return Hypergraph::new(n, r, flat.chunks_exact(r));
    }
    Hypergraph::from_sorted_flat(n, r, flat)
}

pub fn read_hg(path: &Path) -> Result<Hypergraph> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_hg(&text)
}

pub fn write_hg(path: &Path, h: &Hypergraph) -> std::io::Result<()> {
    std::fs::write(path, to_hg(h))
}
