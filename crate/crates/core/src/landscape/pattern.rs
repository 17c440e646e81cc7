use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decisions::MAX_TASKS;
use crate::error::{Error, Result};

/// Built-in interdependence structures plus file-loaded matrices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternKind {
    /// Fully interdependent blocks aligned with the sequential allocation.
    Modular,
    /// Symmetric ring: task `i` depends on `i-1` and `i+1` (mod N).
    NonModular,
    /// Matrix read from a pattern file.
    Custom(String),
}

impl PatternKind {
    pub fn label(&self) -> &str {
        match self {
            PatternKind::Modular => "modular",
            PatternKind::NonModular => "non-modular",
            PatternKind::Custom(_) => "custom",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternKind::Custom(path) => write!(f, "custom:{path}"),
            other => f.write_str(other.label()),
        }
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "modular" => Ok(PatternKind::Modular),
            "non-modular" => Ok(PatternKind::NonModular),
            _ => match s.strip_prefix("custom:") {
                Some(path) if !path.is_empty() => Ok(PatternKind::Custom(path.to_string())),
                _ => Err(Error::Config(format!(
                    "pattern must be one of {{modular, non-modular, custom:<path>}}, got `{s}`"
                ))),
            },
        }
    }
}

/// Which decisions feed each performance contribution.
///
/// Row `i` lists the decisions that contribution `i` depends on. The diagonal
/// is always set.
#[derive(Clone, PartialEq, Eq)]
pub struct InteractionPattern {
    n_tasks: usize,
    depends: Vec<bool>,
    // off-diagonal dependencies of each row, ascending
    rows: Vec<Vec<usize>>,
    // tasks whose contribution reads decision j (including j itself)
    readers: Vec<Vec<usize>>,
}

impl InteractionPattern {
    /// Builds a pattern from a row-major boolean matrix, forcing the diagonal.
    pub fn from_matrix(n_tasks: usize, matrix: &[bool]) -> Result<Self> {
        if n_tasks == 0 {
            return Err(Error::MalformedPattern("pattern has no tasks".into()));
        }
        if n_tasks > MAX_TASKS {
            return Err(Error::TooManyTasks {
                n_tasks,
                limit: MAX_TASKS,
            });
        }
        if matrix.len() != n_tasks * n_tasks {
            return Err(Error::MalformedPattern(format!(
                "expected {} entries for a {n_tasks}x{n_tasks} matrix, got {}",
                n_tasks * n_tasks,
                matrix.len()
            )));
        }
        let mut depends = matrix.to_vec();
        for i in 0..n_tasks {
            depends[i * n_tasks + i] = true;
        }
        let rows: Vec<Vec<usize>> = (0..n_tasks)
            .map(|i| {
                (0..n_tasks)
                    .filter(|&j| j != i && depends[i * n_tasks + j])
                    .collect()
            })
            .collect();
        let readers = (0..n_tasks)
            .map(|j| {
                (0..n_tasks)
                    .filter(|&i| depends[i * n_tasks + j])
                    .collect()
            })
            .collect();
        Ok(InteractionPattern {
            n_tasks,
            depends,
            rows,
            readers,
        })
    }

    /// Aligned diagonal blocks of `n_tasks / n_agents` fully interdependent tasks.
    pub fn modular(n_tasks: usize, n_agents: usize) -> Result<Self> {
        let block = block_size(n_tasks, n_agents)?;
        let mut m = vec![false; n_tasks * n_tasks];
        for i in 0..n_tasks {
            for j in 0..n_tasks {
                m[i * n_tasks + j] = i / block == j / block;
            }
        }
        Self::from_matrix(n_tasks, &m)
    }

    /// Symmetric ring: each task depends on its two neighbours mod N.
    pub fn ring(n_tasks: usize) -> Result<Self> {
        let mut m = vec![false; n_tasks * n_tasks];
        for i in 0..n_tasks {
            m[i * n_tasks + (i + 1) % n_tasks] = true;
            m[i * n_tasks + (i + n_tasks - 1) % n_tasks] = true;
        }
        Self::from_matrix(n_tasks, &m)
    }

    /// Parses the plain-text pattern format: `N`, then N rows of N `0`/`1`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedPattern("empty pattern file".into()))?;
        let n: usize = header.parse().map_err(|_| {
            Error::MalformedPattern(format!("first line must be the task count, got `{header}`"))
        })?;
        let mut matrix = Vec::with_capacity(n * n);
        let mut row_count = 0;
        for line in lines {
            row_count += 1;
            if row_count > n {
                return Err(Error::MalformedPattern(format!(
                    "more than {n} rows in a {n}x{n} pattern"
                )));
            }
            let cells: Vec<&str> = line.split_whitespace().collect();
            if cells.len() != n {
                return Err(Error::MalformedPattern(format!(
                    "row {row_count} has {} entries, expected {n}",
                    cells.len()
                )));
            }
            for cell in cells {
                matrix.push(match cell {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(Error::MalformedPattern(format!(
                            "row {row_count}: `{other}` is not 0 or 1"
                        )))
                    }
                });
            }
        }
        if row_count != n {
            return Err(Error::MalformedPattern(format!(
                "{row_count} rows in a {n}x{n} pattern"
            )));
        }
        Self::from_matrix(n, &matrix)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Renders the pattern in the same format [`parse`](Self::parse) accepts.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n_tasks);
        for i in 0..self.n_tasks {
            let row: Vec<&str> = (0..self.n_tasks)
                .map(|j| if self.depends(i, j) { "1" } else { "0" })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn depends(&self, i: usize, j: usize) -> bool {
        self.depends[i * self.n_tasks + j]
    }

    /// Off-diagonal dependencies of contribution `i`, ascending.
    pub fn dependencies(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    /// Contributions that read decision `j`.
    pub fn readers(&self, j: usize) -> &[usize] {
        &self.readers[j]
    }

    /// Number of off-diagonal dependencies of row `i` (its K).
    pub fn k(&self, i: usize) -> usize {
        self.rows[i].len()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n_tasks).all(|i| (0..self.n_tasks).all(|j| self.depends(i, j) == self.depends(j, i)))
    }
}

impl fmt::Debug for InteractionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InteractionPattern")
            .field("n_tasks", &self.n_tasks)
            .field("rows", &self.rows)
            .finish()
    }
}

fn block_size(n_tasks: usize, n_agents: usize) -> Result<usize> {
    if n_agents == 0 || n_tasks == 0 || !n_tasks.is_multiple_of(n_agents) {
        return Err(Error::Divisibility { n_tasks, n_agents });
    }
    Ok(n_tasks / n_agents)
}

/// Builds the pattern named by `kind`. Custom paths are read from disk.
pub fn build_pattern(kind: &PatternKind, n_tasks: usize, n_agents: usize) -> Result<InteractionPattern> {
    match kind {
        PatternKind::Modular => InteractionPattern::modular(n_tasks, n_agents),
        PatternKind::NonModular => {
            block_size(n_tasks, n_agents)?;
            InteractionPattern::ring(n_tasks)
        }
        PatternKind::Custom(path) => {
            let pattern = InteractionPattern::load(Path::new(path))?;
            if pattern.n_tasks() != n_tasks {
                return Err(Error::MalformedPattern(format!(
                    "{path} describes {} tasks, scenario has {n_tasks}",
                    pattern.n_tasks()
                )));
            }
            Ok(pattern)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modular_15_5_has_aligned_blocks() {
        let p = build_pattern(&PatternKind::Modular, 15, 5).unwrap();
        for i in 0..15 {
            assert_eq!(p.k(i), 2);
            for j in 0..15 {
                assert_eq!(p.depends(i, j), i / 3 == j / 3, "({i},{j})");
            }
        }
    }

    #[test]
    fn ring_15_5_is_symmetric_and_crosses_blocks() {
        let p = build_pattern(&PatternKind::NonModular, 15, 5).unwrap();
        assert!(p.is_symmetric());
        for i in 0..15 {
            assert_eq!(p.k(i), 2);
            let mut expected = vec![(i + 14) % 15, (i + 1) % 15];
            expected.sort();
            assert_eq!(p.dependencies(i), expected.as_slice());
        }
        // every boundary between 3-task blocks is crossed
        for b in (3..15).step_by(3) {
            assert!(p.depends(b - 1, b) && p.depends(b, b - 1));
        }
        assert!(p.depends(14, 0));
    }

    #[test]
    fn divisibility_is_enforced() {
        assert!(matches!(
            build_pattern(&PatternKind::Modular, 15, 4),
            Err(Error::Divisibility { n_tasks: 15, n_agents: 4 })
        ));
        assert!(build_pattern(&PatternKind::NonModular, 15, 4).is_err());
    }

    #[test]
    fn parse_forces_diagonal() {
        let p = InteractionPattern::parse("3\n0 1 0\n0 0 0\n1 0 0\n").unwrap();
        assert!(p.depends(0, 0) && p.depends(1, 1) && p.depends(2, 2));
        assert_eq!(p.dependencies(0), &[1]);
        assert_eq!(p.dependencies(1), &[] as &[usize]);
        assert_eq!(p.readers(0), &[0, 2]);
    }

    #[test]
    fn parse_rejects_malformed_matrices() {
        for bad in [
            "",
            "x\n",
            "2\n1 0\n",
            "2\n1 0\n0 1\n1 1\n",
            "2\n1 0 1\n0 1\n",
            "2\n1 2\n0 1\n",
            "2\n1 true\n0 1\n",
        ] {
            assert!(
                matches!(InteractionPattern::parse(bad), Err(Error::MalformedPattern(_))),
                "accepted {bad:?}"
            );
        }
    }

    #[test]
    fn text_round_trip() {
        let p = InteractionPattern::ring(6).unwrap();
        assert_eq!(InteractionPattern::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("modular".parse::<PatternKind>().unwrap(), PatternKind::Modular);
        assert_eq!(
            "custom:/tmp/p.txt".parse::<PatternKind>().unwrap(),
            PatternKind::Custom("/tmp/p.txt".into())
        );
        assert!("custom:".parse::<PatternKind>().is_err());
        assert!("ring".parse::<PatternKind>().is_err());
    }
}
