use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::prover::Status;
use super::EvalError;

/// One line of a results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub theorem: String,
    pub method: String,
    pub status: Status,
    pub seconds: f64,
    pub used: Vec<String>,
}

impl ResultRow {
    /// `theorem TAB method TAB status TAB seconds TAB used names`, no newline.
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{}\t{}\t{}\t{:.3}\t{}",
            self.theorem,
            self.method,
            self.status,
            self.seconds,
            self.used.join(" ")
        );
        s
    }

    pub fn parse_line(line: &str, number: usize) -> Result<Self, EvalError> {
        let bad = |msg: &str| EvalError::Results {
            line: number,
            message: msg.to_string(),
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad("expected 5 tab-separated fields"));
        }
        let status = fields[2].parse().map_err(|e: String| bad(&e))?;
        let seconds: f64 = fields[3].parse().map_err(|_| bad("seconds is not a number"))?;
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(bad("empty theorem or method name"));
        }
        Ok(Self {
            theorem: fields[0].to_string(),
            method: fields[1].to_string(),
            status,
            seconds,
            used: fields[4].split_whitespace().map(str::to_string).collect(),
        })
    }
}

/// Per (theorem, method) outcomes of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ResultRow>,
}

impl EvalReport {
    pub fn new(rows: Vec<ResultRow>) -> Self {
        Self { rows }
    }

    /// Reads a results file; blank lines are skipped. A later row for the
    /// same (theorem, method) pair replaces an earlier one.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut rows: Vec<ResultRow> = Vec::new();
        let mut index: BTreeMap<(String, String), usize> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row = ResultRow::parse_line(line, i + 1)?;
            match index.get(&(row.theorem.clone(), row.method.clone())) {
                Some(&k) => rows[k] = row,
                None => {
                    index.insert((row.theorem.clone(), row.method.clone()), rows.len());
                    rows.push(row);
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            s.push_str(&r.to_line());
            s.push('\n');
        }
        s
    }

    /// Methods in order of first appearance.
    pub fn methods(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert(r.method.clone()))
            .map(|r| r.method.clone())
            .collect()
    }

    pub fn problems(&self) -> BTreeSet<&str> {
        self.rows.iter().map(|r| r.theorem.as_str()).collect()
    }

    pub fn solved_by_method(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for r in &self.rows {
            let entry = out.entry(r.method.as_str()).or_default();
            if r.status == Status::Solved {
                entry.insert(r.theorem.as_str());
            }
        }
        out
    }

    pub fn attempted_by_method(&self) -> BTreeMap<&str, usize> {
        let mut out: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &self.rows {
            *out.entry(r.method.as_str()).or_default() += 1;
        }
        out
    }

    pub fn union_solved(&self) -> BTreeSet<&str> {
        self.rows
            .iter()
            .filter(|r| r.status == Status::Solved)
            .map(|r| r.theorem.as_str())
            .collect()
    }
}

/// For every method, how many of its solved problems had exactly `k` solvers.
fn shares(report: &EvalReport) -> BTreeMap<&str, BTreeMap<usize, u64>> {
    let solved = report.solved_by_method();
    let mut solvers: BTreeMap<&str, usize> = BTreeMap::new();
    for set in solved.values() {
        for &p in set {
            *solvers.entry(p).or_default() += 1;
        }
    }
    solved
        .iter()
        .map(|(&m, set)| {
            let mut by_k: BTreeMap<usize, u64> = BTreeMap::new();
            for p in set {
                *by_k.entry(solvers[p]).or_default() += 1;
            }
            (m, by_k)
        })
        .collect()
}

/// Sum over solved problems of one over the number of methods solving it.
pub fn sotac(report: &EvalReport) -> BTreeMap<String, f64> {
    shares(report)
        .into_iter()
        .map(|(m, by_k)| {
            let v = by_k.iter().map(|(&k, &c)| c as f64 / k as f64).sum();
            (m.to_string(), v)
        })
        .collect()
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// SOTAC as exact fractions over a common denominator, or `None` if the
/// denominator overflows.
pub fn sotac_exact(report: &EvalReport) -> Option<(u128, BTreeMap<String, u128>)> {
    let table = shares(report);
    let max_k = table.values().flat_map(|m| m.keys()).copied().max().unwrap_or(1);
    let mut lcm: u128 = 1;
    for k in 1..=max_k as u128 {
        lcm = lcm.checked_mul(k / gcd(lcm, k))?;
    }
    let mut out = BTreeMap::new();
    for (m, by_k) in table {
        let mut num: u128 = 0;
        for (k, c) in by_k {
            num = num.checked_add((lcm / k as u128).checked_mul(u128::from(c))?)?;
        }
        out.insert(m.to_string(), num);
    }
    Some((lcm, out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub attempted: usize,
    pub solved: usize,
    pub percent: f64,
    pub sotac: f64,
}

/// One row per method, most solved first, ties by name.
pub fn summary(report: &EvalReport) -> Vec<SummaryRow> {
    let solved = report.solved_by_method();
    let attempted = report.attempted_by_method();
    let sotac = sotac(report);
    let mut rows: Vec<SummaryRow> = attempted
        .iter()
        .map(|(&m, &a)| {
            let s = solved.get(m).map_or(0, BTreeSet::len);
            SummaryRow {
                method: m.to_string(),
                attempted: a,
                solved: s,
                percent: percent(s, a),
                sotac: sotac.get(m).copied().unwrap_or(0.0),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.solved.cmp(&a.solved).then_with(|| a.method.cmp(&b.method)));
    rows
}

pub fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 * 100.0 / whole as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverStep {
    pub method: String,
    pub added: usize,
    pub cumulative: usize,
    pub percent: f64,
}

/// Greedy covering sequence: repeatedly the method adding the most newly
/// solved problems (ties: larger standalone total, then smaller name),
/// until no method adds anything.
pub fn greedy_cover(report: &EvalReport) -> Vec<CoverStep> {
    let solved = report.solved_by_method();
    let problems = report.problems().len();
    let mut covered: BTreeSet<&str> = BTreeSet::new();
    let mut remaining: Vec<(&str, &BTreeSet<&str>)> = solved.iter().map(|(&m, s)| (m, s)).collect();
    let mut steps = Vec::new();
    loop {
        let best = remaining
            .iter()
            .enumerate()
            .map(|(i, &(m, s))| (i, m, s.len(), s.iter().filter(|p| !covered.contains(*p)).count()))
            .max_by(|a, b| {
                a.3.cmp(&b.3)
                    .then(a.2.cmp(&b.2))
                    .then_with(|| b.1.cmp(a.1))
            });
        let Some((i, m, _, added)) = best else { break };
        if added == 0 {
            break;
        }
        covered.extend(remaining[i].1.iter().copied());
        remaining.remove(i);
        steps.push(CoverStep {
            method: m.to_string(),
            added,
            cumulative: covered.len(),
            percent: percent(covered.len(), problems),
        });
    }
    steps
}
