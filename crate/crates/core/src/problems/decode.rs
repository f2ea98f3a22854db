use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Shape of the lifted binary vector for each reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemKind {
    Mrf { n_nodes: usize, n_states: usize },
    Matching { n1: usize, n2: usize },
    Clustering { n: usize, k: usize },
}

impl ProblemKind {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Mrf { n_nodes, n_states } => n_nodes * n_states,
            Self::Matching { n1, n2 } => n1 * n2,
            Self::Clustering { n, k } => n * k,
        }
    }
}

/// Zero-based labels recovered from a binary solution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoded {
    /// State per node.
    Labels(Vec<usize>),
    /// Matched `(i, a)` pairs, sorted by `i`.
    Pairs(Vec<(usize, usize)>),
    /// Cluster per instance.
    Clusters(Vec<usize>),
}

fn infeasible(msg: String) -> Error {
    Error::InvalidInstance(format!("solution is infeasible: {msg}"))
}

/// For each of `n` items, the unique block `b < blocks` with `x[b·n + i] = 1`.
fn one_hot_columns(x: &[u8], n: usize, blocks: usize, what: &str) -> Result<Vec<usize>> {
    (0..n)
        .map(|i| {
            let on: Vec<usize> = (0..blocks).filter(|&b| x[b * n + i] == 1).collect();
            match on.as_slice() {
                [b] => Ok(*b),
                _ => Err(infeasible(format!(
                    "{what} {i} has {} active indicators",
                    on.len()
                ))),
            }
        })
        .collect()
}

pub fn decode_solution(kind: ProblemKind, x: &[u8]) -> Result<Decoded> {
    check_len("decoded solution", kind.dim(), x.len())?;
    if let Some(i) = x.iter().position(|&v| v > 1) {
        return Err(infeasible(format!("entry {i} is not binary")));
    }
    match kind {
        ProblemKind::Mrf { n_nodes, n_states } => {
            one_hot_columns(x, n_nodes, n_states, "node").map(Decoded::Labels)
        }
        ProblemKind::Matching { n1, n2 } => {
            let mut pairs = Vec::new();
            let mut used = vec![false; n2];
            for i in 0..n1 {
                let on: Vec<usize> = (0..n2).filter(|&a| x[a * n1 + i] == 1).collect();
                match on.as_slice() {
                    [] => {}
                    [a] if !used[*a] => {
                        used[*a] = true;
                        pairs.push((i, *a));
                    }
                    [a] => {
                        return Err(infeasible(format!(
                            "node {a} of the second graph matched twice"
                        )))
                    }
                    _ => {
                        return Err(infeasible(format!(
                            "node {i} of the first graph matched {} times",
                            on.len()
                        )))
                    }
                }
            }
            Ok(Decoded::Pairs(pairs))
        }
        ProblemKind::Clustering { n, k } => {
            let labels = one_hot_columns(x, n, k, "instance")?;
            if k == 0 || n % k != 0 {
                return Err(Error::InvalidInstance(format!(
                    "K = {k} must divide N = {n}"
                )));
            }
            for c in 0..k {
                let size = labels.iter().filter(|&&l| l == c).count();
                if size != n / k {
                    return Err(infeasible(format!(
                        "cluster {c} has {size} members, expected {}",
                        n / k
                    )));
                }
            }
            Ok(Decoded::Clusters(labels))
        }
    }
}

/// Inverse of [`decode_solution`].
pub fn encode_solution(kind: ProblemKind, decoded: &Decoded) -> Result<Vec<u8>> {
    let mut x = vec![0u8; kind.dim()];
    match (kind, decoded) {
        (ProblemKind::Mrf { n_nodes: n, .. }, Decoded::Labels(l))
        | (ProblemKind::Clustering { n, .. }, Decoded::Clusters(l)) => {
            check_len("labels", n, l.len())?;
            for (i, &s) in l.iter().enumerate() {
                x[s * n + i] = 1;
            }
        }
        (ProblemKind::Matching { n1, .. }, Decoded::Pairs(pairs)) => {
            for &(i, a) in pairs {
                x[a * n1 + i] = 1;
            }
        }
        _ => {
            return Err(Error::InvalidInstance(
                "decoded output does not match problem kind".into(),
            ))
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mrf_labels() {
        let kind = ProblemKind::Mrf {
            n_nodes: 2,
            n_states: 2,
        };
        assert_eq!(
            decode_solution(kind, &[1, 0, 0, 1]).unwrap(),
            Decoded::Labels(vec![0, 1])
        );
        assert!(decode_solution(kind, &[1, 0, 1, 1]).is_err());
        assert!(decode_solution(kind, &[0, 0, 0, 1]).is_err());
    }

    #[test]
    fn matching_pairs() {
        let kind = ProblemKind::Matching { n1: 2, n2: 2 };
        assert_eq!(
            decode_solution(kind, &[1, 0, 0, 1]).unwrap(),
            Decoded::Pairs(vec![(0, 0), (1, 1)])
        );
        assert_eq!(
            decode_solution(kind, &[0, 0, 0, 0]).unwrap(),
            Decoded::Pairs(vec![])
        );
        assert!(decode_solution(kind, &[1, 1, 0, 0]).is_err());
        assert!(decode_solution(kind, &[1, 0, 1, 0]).is_err());
    }

    #[test]
    fn clustering_ids() {
        let kind = ProblemKind::Clustering { n: 2, k: 2 };
        assert_eq!(
            decode_solution(kind, &[1, 0, 0, 1]).unwrap(),
            Decoded::Clusters(vec![0, 1])
        );
        assert!(decode_solution(kind, &[1, 1, 0, 0]).is_err());
    }

    #[test]
    fn round_trips() {
        let cases = [
            (
                ProblemKind::Mrf {
                    n_nodes: 3,
                    n_states: 2,
                },
                Decoded::Labels(vec![1, 0, 1]),
            ),
            (
                ProblemKind::Matching { n1: 3, n2: 2 },
                Decoded::Pairs(vec![(0, 1), (2, 0)]),
            ),
            (
                ProblemKind::Clustering { n: 4, k: 2 },
                Decoded::Clusters(vec![1, 0, 0, 1]),
            ),
        ];
        for (kind, d) in cases {
            let x = encode_solution(kind, &d).unwrap();
            assert_eq!(decode_solution(kind, &x).unwrap(), d);
        }
    }
}
